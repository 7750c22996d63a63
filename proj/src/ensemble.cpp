#include "oversmooth/ensemble.hpp"

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "oversmooth/error.hpp"
#include "oversmooth/rng.hpp"

namespace oversmooth {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::MatrixXd gaussian_matrix(std::size_t d, double tau, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, tau);
  Eigen::MatrixXd m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = normal(rng);
  }
  return m;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " must be positive and finite");
  }
}

}  // namespace

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()[0];
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

WeightEnsemble WeightEnsemble::deterministic(Eigen::MatrixXd w) {
  if (w.rows() != w.cols() || w.rows() == 0) {
    throw Error(ErrorCode::kInvalidDim, "deterministic W must be square, d >= 1");
  }
  const auto d = static_cast<std::size_t>(w.rows());
  return WeightEnsemble(d, Deterministic{std::move(w)}, 0);
}

WeightEnsemble WeightEnsemble::ginibre(std::size_t d, double tau,
                                       std::uint64_t seed) {
  if (d == 0) throw Error(ErrorCode::kInvalidDim, "d must be >= 1");
  require_positive(tau, "tau");
  return WeightEnsemble(d, Ginibre{tau}, seed);
}

WeightEnsemble WeightEnsemble::bounded(std::size_t d, double r_w,
                                       std::uint64_t seed) {
  if (d == 0) throw Error(ErrorCode::kInvalidDim, "d must be >= 1");
  require_positive(r_w, "r_W");
  return WeightEnsemble(d, BoundedUniformNorm{r_w}, seed);
}

WeightEnsemble WeightEnsemble::simdiag(std::vector<ScalarSupport> supports,
                                       std::uint64_t seed) {
  const std::size_t d = supports.size();
  if (d == 0) throw Error(ErrorCode::kInvalidDim, "d must be >= 1");
  Eigen::MatrixXd q;
  for (std::uint64_t attempt = 0;; ++attempt) {
    CounterRng rng(seed, StreamDomain::kBasis, 0, attempt);
    q = gaussian_matrix(d, 1.0, rng);
    if (condition_number(q) < 50.0) break;
  }
  return simdiag(std::move(q), std::move(supports), seed);
}

WeightEnsemble WeightEnsemble::simdiag(Eigen::MatrixXd q,
                                       std::vector<ScalarSupport> supports,
                                       std::uint64_t seed) {
  const std::size_t d = supports.size();
  if (d == 0 || q.rows() != static_cast<Eigen::Index>(d) || q.cols() != q.rows()) {
    throw Error(ErrorCode::kInvalidDim, "Q must be d x d with d = #supports");
  }
  for (const auto& s : supports) require_positive(s.r, "support radius");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kInvalidArgument, "Q must be invertible");
  }
  Eigen::MatrixXd q_inv = lu.inverse();
  return WeightEnsemble(d, SimDiag{std::move(q), std::move(q_inv), std::move(supports)},
                        seed);
}

WeightEnsemble WeightEnsemble::xavier(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw Error(ErrorCode::kInvalidDim, "d must be >= 1");
  return WeightEnsemble(d, XavierUniform{d, d}, seed);
}

WeightEnsemble WeightEnsemble::with_seed(std::uint64_t seed) const {
  WeightEnsemble copy = *this;
  copy.seed_ = seed;
  return copy;
}

std::string WeightEnsemble::family_name() const {
  return std::visit(Overloaded{
                        [](const Deterministic&) { return "deterministic"; },
                        [](const Ginibre&) { return "ginibre"; },
                        [](const BoundedUniformNorm&) { return "bounded"; },
                        [](const SimDiag&) { return "simdiag"; },
                        [](const XavierUniform&) { return "xavier"; },
                    },
                    family_);
}

Eigen::VectorXd WeightEnsemble::sample_diagonal(std::uint64_t trial,
                                                std::uint64_t t) const {
  const auto* sd = std::get_if<SimDiag>(&family_);
  if (!sd) {
    throw Error(ErrorCode::kInvalidArgument, "sample_diagonal needs SimDiag");
  }
  CounterRng rng(seed_, StreamDomain::kWeights, trial, t);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd w(d_);
  for (std::size_t i = 0; i < d_; ++i) {
    const auto& s = sd->supports[i];
    if (s.law == ScalarLaw::kUniform) {
      w[i] = s.r * unit(rng);
    } else {
      w[i] = (rng() >> 63) ? s.r : -s.r;
    }
  }
  return w;
}

Eigen::MatrixXd WeightEnsemble::sample(std::uint64_t trial,
                                       std::uint64_t t) const {
  return std::visit(
      Overloaded{
          [](const Deterministic& f) -> Eigen::MatrixXd { return f.w; },
          [&](const Ginibre& f) -> Eigen::MatrixXd {
            CounterRng rng(seed_, StreamDomain::kWeights, trial, t);
            return gaussian_matrix(d_, f.tau, rng);
          },
          [&](const BoundedUniformNorm& f) -> Eigen::MatrixXd {
            CounterRng rng(seed_, StreamDomain::kWeights, trial, t);
            Eigen::MatrixXd g = gaussian_matrix(d_, 1.0, rng);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double u = 1.0 - unit(rng);  // (0, 1]
            const double norm = operator_norm(g);
            if (norm == 0.0) return g;
            return g * (f.r_w * u / norm);
          },
          [&](const SimDiag& f) -> Eigen::MatrixXd {
            const Eigen::VectorXd w = sample_diagonal(trial, t);
            return f.q_inv * w.asDiagonal() * f.q;
          },
          [&](const XavierUniform& f) -> Eigen::MatrixXd {
            CounterRng rng(seed_, StreamDomain::kWeights, trial, t);
            const double a =
                std::sqrt(6.0 / static_cast<double>(f.fan_in + f.fan_out));
            std::uniform_real_distribution<double> unif(-a, a);
            Eigen::MatrixXd m(d_, d_);
            for (std::size_t i = 0; i < d_; ++i) {
              for (std::size_t j = 0; j < d_; ++j) m(i, j) = unif(rng);
            }
            return m;
          },
      },
      family_);
}

Eigen::MatrixXd sample(const WeightEnsemble& ens, std::uint64_t trial,
                       std::uint64_t t) {
  return ens.sample(trial, t);
}

IntegrabilityEstimate log_norm_integrability_check(const WeightEnsemble& ens,
                                                   std::size_t n_samples,
                                                   std::uint64_t batch) {
  if (n_samples < 1000) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 1000 samples");
  }
  // Welford accumulation keeps the variance stable for long runs.
  const WeightEnsemble stream = ens.with_seed(mix64(ens.seed() ^ (batch + 1)));
  const auto trial = static_cast<std::uint64_t>(StreamDomain::kIntegrability);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Eigen::MatrixXd w = stream.sample(trial, i);
    const double x = std::max(std::log(operator_norm(w)), 0.0);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  IntegrabilityEstimate out;
  out.estimate = mean;
  out.finite = std::isfinite(mean);
  out.std_err = std::sqrt(m2 / static_cast<double>(n_samples - 1) /
                         static_cast<double>(n_samples));
  return out;
}

}  // namespace oversmooth
