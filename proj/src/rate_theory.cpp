#include "oversmooth/rate_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "oversmooth/error.hpp"
#include "oversmooth/parallel.hpp"
#include "oversmooth/rng.hpp"

namespace oversmooth {

const char* to_string(RateMethod m) {
  switch (m) {
    case RateMethod::kQrProduct: return "qr_product";
    case RateMethod::kClosedFormDeterministic: return "closed_form_deterministic";
    case RateMethod::kClosedFormGaussianMc: return "closed_form_gaussian_mc";
    case RateMethod::kClosedFormSimdiagMc: return "closed_form_simdiag_mc";
    case RateMethod::kBoundInterval: return "bound_interval";
    case RateMethod::kSpectral: return "spectral";
    case RateMethod::kRatio: return "ratio";
  }
  return "spectral";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Welford {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double variance() const {
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }
  double std_error() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

Eigen::VectorXcd random_unit(std::size_t d, std::uint64_t seed,
                             std::uint64_t replica, std::uint64_t restart) {
  CounterRng rng(seed, StreamDomain::kStartVector, replica, restart);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = Complex(normal(rng), normal(rng));
  return v.normalized();
}

// Mean tail log-growth of one replica of v <- (identity ? v : 0) + beta W v.
double replica_exponent(const WeightEnsemble& stream, Complex beta,
                        bool identity_term, std::size_t steps,
                        std::uint64_t replica) {
  constexpr int kRestarts = 4;
  const std::size_t burn = steps / 10;
  for (int restart = 0; restart < kRestarts; ++restart) {
    Eigen::VectorXcd v = random_unit(stream.dim(), stream.seed(), replica,
                                     static_cast<std::uint64_t>(restart));
    double acc = 0.0;
    bool collapsed = false;
    for (std::size_t s = 0; s < steps; ++s) {
      const Eigen::MatrixXd w = stream.sample(replica, s);
      Eigen::VectorXcd next = beta * (w.cast<Complex>() * v);
      if (identity_term) next += v;
      const double norm = next.norm();
      if (norm == 0.0 || !std::isfinite(norm)) {
        collapsed = true;
        break;
      }
      if (s >= burn) acc += std::log(norm);
      v = next / norm;
    }
    if (!collapsed) return acc / static_cast<double>(steps - burn);
  }
  throw Error(ErrorCode::kDegenerateProduct,
              "replica " + std::to_string(replica) +
                  " collapsed to the zero vector on every restart");
}

RateEstimate replicate(const WeightEnsemble& ens, Complex beta,
                       bool identity_term, std::size_t steps,
                       std::size_t replicas) {
  if (steps < 1000) {
    throw Error(ErrorCode::kInvalidArgument, "lyapunov_qr needs T >= 1000");
  }
  if (replicas < 3) {
    throw Error(ErrorCode::kInvalidArgument, "lyapunov_qr needs >= 3 replicas");
  }
  const WeightEnsemble stream =
      ens.with_seed(stream_key(ens.seed(), StreamDomain::kLyapunov, 0, 0));
  std::vector<double> exponents(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    exponents[r] = replica_exponent(stream, beta, identity_term, steps, r);
  });
  Welford acc;
  for (double e : exponents) acc.add(e);
  return RateEstimate::from_log(acc.mean, acc.std_error(),
                                RateMethod::kQrProduct, steps);
}

}  // namespace

RateEstimate RateEstimate::from_log(double log_value, double log_std_err,
                                    RateMethod method, std::size_t effort) {
  RateEstimate r;
  r.log_value = log_value;
  r.value = log_value == kNegInf ? 0.0 : std::exp(log_value);
  r.method = method;
  r.effort = effort;
  r.log_std_err = log_std_err;
  r.std_err = r.value * log_std_err;
  return r;
}

RateEstimate lyapunov_qr(const WeightEnsemble& ens, Complex beta,
                         std::size_t steps, std::size_t replicas) {
  if (beta == Complex(0.0, 0.0)) {
    if (steps < 1000 || replicas < 3) {
      throw Error(ErrorCode::kInvalidArgument, "lyapunov_qr effort too small");
    }
    return RateEstimate::from_log(0.0, 0.0, RateMethod::kQrProduct, steps);
  }
  return replicate(ens, beta, true, steps, replicas);
}

RateEstimate lyapunov_product(const WeightEnsemble& ens, std::size_t steps,
                              std::size_t replicas) {
  try {
    return replicate(ens, Complex(1.0, 0.0), false, steps, replicas);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateProduct) throw;
    return RateEstimate::from_log(kNegInf, 0.0, RateMethod::kQrProduct, steps);
  }
}

RateEstimate deterministic_rate(const Eigen::MatrixXd& w, Complex beta) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "eigensolver failed on W");
  }
  double rho = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    rho = std::max(rho, std::abs(1.0 + beta * es.eigenvalues()[i]));
  }
  RateEstimate r = RateEstimate::from_log(rho == 0.0 ? kNegInf : std::log(rho),
                                          0.0,
                                          RateMethod::kClosedFormDeterministic, 0);
  r.value = rho;
  return r;
}

RateEstimate gaussian_rate_mc(double tau, std::size_t d, double beta,
                              std::size_t n_samples, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorCode::kInvalidDim, "d must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be > 0");
  if (n_samples < 100000) {
    throw Error(ErrorCode::kInvalidArgument, "need n_samples >= 1e5");
  }
  if (beta == 0.0) {
    return RateEstimate::from_log(0.0, 0.0, RateMethod::kClosedFormGaussianMc,
                                  n_samples);
  }
  CounterRng rng(seed, StreamDomain::kGaussianMc, 0, 0);
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(d > 1 ? static_cast<double>(d - 1) : 1.0);
  const double bt = beta * tau;
  Welford acc;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double xi = normal(rng);
    const double c = d > 1 ? chi2(rng) : 0.0;
    const double lead = 1.0 + bt * xi;
    acc.add(0.5 * std::log(lead * lead + bt * bt * c));
  }
  return RateEstimate::from_log(acc.mean, acc.std_error(),
                                RateMethod::kClosedFormGaussianMc, n_samples);
}

RateEstimate simdiag_rate_mc(const WeightEnsemble& ens, Complex beta,
                             std::size_t n_samples, std::uint64_t seed) {
  const auto* sd = std::get_if<SimDiag>(&ens.family());
  if (!sd) throw Error(ErrorCode::kInvalidArgument, "simdiag_rate_mc needs SimDiag");
  if (beta == Complex(0.0, 0.0)) {
    return RateEstimate::from_log(0.0, 0.0, RateMethod::kClosedFormSimdiagMc,
                                  n_samples);
  }
  bool any_mc = false;
  for (const auto& s : sd->supports) any_mc |= s.law == ScalarLaw::kUniform;
  if (any_mc && n_samples < 100000) {
    throw Error(ErrorCode::kInvalidArgument, "need n_samples >= 1e5");
  }
  double best = kNegInf;
  double best_err = 0.0;
  for (std::size_t i = 0; i < sd->supports.size(); ++i) {
    const auto& s = sd->supports[i];
    double mean = 0.0, err = 0.0;
    if (s.law == ScalarLaw::kTwoPoint) {
      const double up = std::abs(1.0 + beta * s.r);
      const double down = std::abs(1.0 - beta * s.r);
      mean = (up == 0.0 || down == 0.0)
                 ? kNegInf
                 : 0.5 * (std::log(up) + std::log(down));
    } else {
      CounterRng rng(seed, StreamDomain::kSimDiagMc, i, 0);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      Welford acc;
      for (std::size_t k = 0; k < n_samples; ++k) {
        acc.add(std::log(std::abs(1.0 + beta * (s.r * unit(rng)))));
      }
      mean = acc.mean;
      err = acc.std_error();
    }
    if (mean > best || (i == 0 && mean == kNegInf)) {
      best = mean;
      best_err = err;
    }
  }
  return RateEstimate::from_log(best, best_err, RateMethod::kClosedFormSimdiagMc,
                                n_samples);
}

RateEstimate bounded_rate_interval(double r_w, double beta_mag) {
  if (!(r_w > 0.0) || beta_mag < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "need r_W > 0 and |beta| >= 0");
  }
  const double x = beta_mag * r_w;
  if (x > 1.0) {
    throw Error(ErrorCode::kStepTooLarge,
                "|beta| r_W = " + std::to_string(x) + " exceeds 1");
  }
  RateEstimate r = RateEstimate::from_log(x == 1.0 ? kNegInf : std::log1p(-x),
                                          0.0, RateMethod::kBoundInterval, 0);
  r.value = 1.0 - x;
  r.interval = std::make_pair(1.0 - x, 1.0 + x);
  return r;
}

double bounded_ratio_lower_bound(const TransitionMatrix& tm, double alpha,
                                 double r_w) {
  const double x = alpha * r_w;
  if (x > 1.0) {
    throw Error(ErrorCode::kStepTooLarge, "alpha r_W exceeds 1");
  }
  return (1.0 - x * smallest_nonperron_magnitude(tm)) / (1.0 + x);
}

RateEstimate predict_nrs_rate(const TransitionMatrix& tm) {
  const double v = second_magnitude(tm);
  RateEstimate r = RateEstimate::from_log(v == 0.0 ? kNegInf : std::log(v), 0.0,
                                          RateMethod::kSpectral, 0);
  r.value = v;
  return r;
}

namespace {

struct Cluster {
  Complex lambda;
  std::size_t multiplicity = 0;
  bool perron = false;
};

std::vector<Cluster> distinct_eigenvalues(const TransitionMatrix& tm) {
  const auto& spec = tm.spectrum();
  std::size_t perron = 0;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    if (std::abs(spec[i] - 1.0) < std::abs(spec[perron] - 1.0)) perron = i;
  }
  std::vector<Cluster> out;
  out.push_back({spec[perron], 1, true});
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (i == perron) continue;
    Complex lam = spec[i];
    if (std::abs(lam.imag()) < 1e-12) lam.imag(0.0);
    bool merged = false;
    for (std::size_t c = 1; c < out.size(); ++c) {
      if (std::abs(out[c].lambda - lam) <= 1e-8 * std::max(1.0, std::abs(lam))) {
        ++out[c].multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({lam, 1, false});
  }
  return out;
}

}  // namespace

ResidualPrediction predict_rs_rate(const TransitionMatrix& tm,
                                   const WeightEnsemble& ens, double alpha,
                                   const RateEffort& effort) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 0");
  second_magnitude(tm);  // NotPrimitive check
  if (!tm.spectrum_complete()) {
    throw Error(ErrorCode::kInvalidArgument,
                "residual prediction needs the full spectrum of P");
  }

  const bool deterministic = std::holds_alternative<Deterministic>(ens.family());
  auto evaluate = [&](Complex lam) -> RateEstimate {
    const Complex beta = alpha * lam;
    if (const auto* det = std::get_if<Deterministic>(&ens.family())) {
      return deterministic_rate(det->w, beta);
    }
    if (const auto* g = std::get_if<Ginibre>(&ens.family());
        g && beta.imag() == 0.0) {
      return gaussian_rate_mc(g->tau, ens.dim(), beta.real(), effort.mc_samples,
                              effort.seed);
    }
    if (std::holds_alternative<SimDiag>(ens.family())) {
      return simdiag_rate_mc(ens, beta, effort.mc_samples, effort.seed);
    }
    return lyapunov_qr(ens.with_seed(mix64(ens.seed() ^ effort.seed)), beta,
                       effort.qr_steps, effort.qr_replicas);
  };

  ResidualPrediction out;
  const auto clusters = distinct_eigenvalues(tm);
  // Conjugate pairs are evaluated once per member; the member with positive
  // imaginary part carries the cluster.
  std::vector<Cluster> work;
  for (const auto& c : clusters) {
    if (c.lambda.imag() < 0.0) continue;
    work.push_back(c);
  }
  std::vector<EigenvalueRate> rates(work.size());
  std::vector<RateEstimate> conj_rates(work.size());
  for (std::size_t k = 0; k < work.size(); ++k) {
    rates[k] = {work[k].lambda, work[k].multiplicity, work[k].perron,
                evaluate(work[k].lambda)};
    if (work[k].lambda.imag() > 0.0) {
      conj_rates[k] = evaluate(std::conj(work[k].lambda));
      const double gap = std::abs(rates[k].rate.log_value - conj_rates[k].log_value);
      const double band = 3.0 * std::hypot(rates[k].rate.log_std_err,
                                           conj_rates[k].log_std_err);
      if (gap > band + 1e-12) {
        out.conjugate_symmetry_ok = false;
        out.diagnostic += "R(alpha lambda) != R(alpha conj(lambda)) at lambda=" +
                          std::to_string(work[k].lambda.real()) + "+" +
                          std::to_string(work[k].lambda.imag()) + "i; ";
      }
    }
  }
  for (std::size_t k = 0; k < work.size(); ++k) {
    out.per_eigenvalue.push_back(rates[k]);
    if (work[k].lambda.imag() > 0.0) {
      EigenvalueRate c = rates[k];
      c.lambda = std::conj(c.lambda);
      c.rate = conj_rates[k];
      out.per_eigenvalue.push_back(c);
    }
  }

  std::size_t num_k = out.per_eigenvalue.size(), den_k = 0;
  for (std::size_t k = 0; k < out.per_eigenvalue.size(); ++k) {
    const auto& e = out.per_eigenvalue[k];
    if (e.rate.log_value > out.per_eigenvalue[den_k].rate.log_value) den_k = k;
    if (!e.perron &&
        (num_k == out.per_eigenvalue.size() ||
         e.rate.log_value > out.per_eigenvalue[num_k].rate.log_value)) {
      num_k = k;
    }
  }
  const RateMethod method = RateMethod::kRatio;
  const std::size_t effort_used = out.per_eigenvalue.front().rate.effort;
  if (num_k == out.per_eigenvalue.size()) {
    // n = 1: no non-Perron eigenvalue.
    out.applicable = false;
    out.diagnostic += "spec(P) \\ {1} is empty; ";
    out.ratio = RateEstimate::from_log(kNegInf, 0.0, method, effort_used);
    return out;
  }
  const auto& den = out.per_eigenvalue[den_k].rate;
  const auto& num = out.per_eigenvalue[num_k].rate;
  if (den.log_value == kNegInf) {
    out.applicable = false;
    out.diagnostic += "max R(alpha lambda) estimates to 0; ratio undefined; ";
    out.ratio = RateEstimate::from_log(kNegInf, 0.0, method, effort_used);
    out.ratio.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double log_ratio = num.log_value == kNegInf ? kNegInf
                                                    : num.log_value - den.log_value;
  const double log_err =
      num_k == den_k ? 0.0 : std::hypot(num.log_std_err, den.log_std_err);
  out.ratio = RateEstimate::from_log(num_k == den_k ? 0.0 : log_ratio, log_err,
                                     method, effort_used);
  out.equality = deterministic || tm.certified_diagonalizable();
  return out;
}

ShiftedLogMoments shifted_log_moments(const std::vector<double>& a, double b,
                                      std::size_t n_samples,
                                      std::uint64_t seed) {
  if (b < 0.0) throw Error(ErrorCode::kInvalidArgument, "b must be >= 0");
  if (n_samples < 2) throw Error(ErrorCode::kInvalidArgument, "need samples");
  std::vector<Welford> single(a.size());
  std::vector<Welford> diff(a.size() > 0 ? a.size() - 1 : 0);
  CounterRng rng(seed, StreamDomain::kGaussianMc, 1, 0);
  std::normal_distribution<double> normal;
  std::vector<double> vals(a.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double xi = normal(rng);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double s = a[k] + xi;
      vals[k] = std::log(s * s + b);
      single[k].add(vals[k]);
    }
    for (std::size_t k = 0; k + 1 < a.size(); ++k) diff[k].add(vals[k + 1] - vals[k]);
  }
  ShiftedLogMoments out;
  for (const auto& w : single) {
    out.mean.push_back(w.mean);
    out.std_err.push_back(w.std_error());
  }
  for (const auto& w : diff) out.diff_std_err.push_back(w.std_error());
  return out;
}

}  // namespace oversmooth
