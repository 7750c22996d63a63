#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oversmooth/error.hpp"
#include "oversmooth/io.hpp"
#include "oversmooth/rate_theory.hpp"

using namespace oversmooth;

namespace {

Eigen::MatrixXd gaussian(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(d, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return x;
}

// Top two distinct values of |1 + beta mu| over spec(W), by the oracle solver.
std::pair<double, double> top_two(const Eigen::MatrixXd& w, Complex beta) {
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(w.cast<Complex>()).eigenvalues();
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < ev.size(); ++i) mags.push_back(std::abs(1.0 + beta * ev[i]));
  std::sort(mags.rbegin(), mags.rend());
  return {mags[0], mags[1]};
}

double combined(const RateEstimate& a, const RateEstimate& b) {
  return std::hypot(a.std_err, b.std_err);
}

const RateEffort kFast = RateEffort::fast();

}  // namespace

TEST_CASE("deterministic rate examples") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK(deterministic_rate(id, -1.0 / 3.0).value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(deterministic_rate(Eigen::MatrixXd::Zero(3, 3), Complex(0.7, -0.2)).value == 1.0);
  Eigen::MatrixXd rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK(deterministic_rate(rot, 1.0).value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(deterministic_rate(rot, 1.0).method == RateMethod::kClosedFormDeterministic);
}

TEST_CASE("lyapunov_qr: beta = 0 gives exactly 1; effort checks") {
  const auto g = WeightEnsemble::ginibre(4, 1.0, 1);
  const auto r = lyapunov_qr(g, 0.0, 1000, 3);
  CHECK(r.value == 1.0);
  CHECK(r.std_err == 0.0);
  CHECK_THROWS_AS(lyapunov_qr(g, 0.1, 999, 3), Error);
  CHECK_THROWS_AS(lyapunov_qr(g, 0.1, 1000, 2), Error);
}

TEST_CASE("lyapunov_qr on deterministic W matches the spectral radius of I + beta W") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int cases = 0;
  while (cases < 50) {
    const Eigen::MatrixXd w = gaussian(4, rng);
    const Complex beta = cases % 3 == 0 ? Complex(unif(rng), unif(rng)) : Complex(unif(rng), 0.0);
    const auto [first, second] = top_two(w, beta);
    if (first - second < 0.05 || first < 1e-3) continue;
    ++cases;
    const auto det = WeightEnsemble::deterministic(w);
    const auto qr = lyapunov_qr(det, beta, 1000, 3);
    CHECK(qr.value == doctest::Approx(first).epsilon(1e-3));
    CHECK(deterministic_rate(w, beta).value == doctest::Approx(first).epsilon(1e-12));
  }
}

TEST_CASE("lyapunov_qr agrees with the Gaussian closed form (d = 8, tau = 1, beta = 0.1)") {
  const auto g = WeightEnsemble::ginibre(8, 1.0, 5);
  const auto qr = lyapunov_qr(g, 0.1, 20000, 4);
  const auto mc = gaussian_rate_mc(1.0, 8, 0.1, 200000, 5);
  CHECK(std::abs(qr.value - mc.value) <= std::max(0.02 * mc.value, 3.0 * combined(qr, mc)));
  CHECK(std::abs(qr.value / mc.value - 1.0) < 0.02);
}

TEST_CASE("conjugation symmetry of lyapunov_qr for a real ensemble") {
  const auto g = WeightEnsemble::ginibre(4, 1.0, 9);
  const Complex beta(-0.2, 0.15);
  const auto a = lyapunov_qr(g, beta, 5000, 4);
  const auto b = lyapunov_qr(g.with_seed(10), std::conj(beta), 5000, 4);
  CHECK(std::abs(a.value - b.value) <= 3.0 * combined(a, b));
}

TEST_CASE("gaussian_rate_mc: beta = 0, d = 1 and evenness in beta") {
  const auto zero = gaussian_rate_mc(1.0, 8, 0.0, 100000, 1);
  CHECK(zero.value == 1.0);
  CHECK(zero.std_err == 0.0);

  const double beta = 0.3, tau = 1.2;
  const auto one = gaussian_rate_mc(tau, 1, beta, 1000000, 2);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  double sum = 0.0, sq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double v = std::log(std::abs(1.0 + beta * tau * normal(rng)));
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double err = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(one.log_value - mean) <= 3.0 * std::hypot(err, one.log_std_err));

  for (double b : {0.05, 0.3, 1.0}) {
    const auto pos = gaussian_rate_mc(1.0, 8, b, 200000, 4);
    const auto neg = gaussian_rate_mc(1.0, 8, -b, 200000, 5);
    CHECK(std::abs(pos.value - neg.value) <= 3.0 * combined(pos, neg));
  }
  CHECK_THROWS_AS(gaussian_rate_mc(1.0, 0, 0.1, 100000, 1), Error);
  CHECK_THROWS_AS(gaussian_rate_mc(1.0, 4, 0.1, 99999, 1), Error);
}

TEST_CASE("gaussian_rate_mc: R(beta)/beta decreases across five points") {
  const std::vector<double> betas{0.05, 0.1, 0.2, 0.3, 0.5};
  std::vector<RateEstimate> est;
  for (double b : betas) est.push_back(gaussian_rate_mc(1.0, 8, b, 200000, 7));
  for (std::size_t k = 0; k + 1 < betas.size(); ++k) {
    const double lhs = est[k].value / betas[k];
    const double rhs = est[k + 1].value / betas[k + 1];
    const double band = 3.0 * std::hypot(est[k].std_err / betas[k], est[k + 1].std_err / betas[k + 1]);
    CHECK(lhs - rhs > band);
  }
}

TEST_CASE("simdiag_rate_mc: two-point closed form, beta = 0, uniform vs quadrature oracle") {
  const double r = 0.8;
  const auto two = WeightEnsemble::simdiag(std::vector<ScalarSupport>(3, {ScalarLaw::kTwoPoint, r}), 1);
  for (double beta : {0.1, -0.5, 1.0}) {
    const auto est = simdiag_rate_mc(two, beta, 100000, 1);
    CHECK(est.log_value == doctest::Approx(0.5 * std::log(1.0 - beta * beta * r * r)).epsilon(1e-14));
    CHECK(est.std_err == 0.0);
  }
  CHECK(simdiag_rate_mc(two, 0.0, 100000, 1).value == 1.0);
  const auto singular = simdiag_rate_mc(two, 1.0 / r, 100000, 1);
  CHECK(singular.value == 0.0);
  CHECK(std::isinf(singular.log_value));

  const auto uni = WeightEnsemble::simdiag(std::vector<ScalarSupport>(2, {ScalarLaw::kUniform, 1.0}), 2);
  const auto est = simdiag_rate_mc(uni, 0.5, 1000000, 3);
  CHECK(std::abs(est.log_value - oracle::uniform_log_moment(0.5)) <= 3.0 * est.log_std_err);
}

TEST_CASE("bounded interval and ratio bound") {
  const auto zero = bounded_rate_interval(1.0, 0.0);
  CHECK(zero.interval->first == 1.0);
  CHECK(zero.interval->second == 1.0);
  const auto half = bounded_rate_interval(1.0, 0.5);
  CHECK(half.interval->first == 0.5);
  CHECK(half.interval->second == 1.5);
  try {
    bounded_rate_interval(2.0, 0.6);
    FAIL("expected StepTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStepTooLarge);
  }
  const auto k4 = build_transition(complete_graph(4), Normalization::kRowNormalized);
  CHECK(bounded_ratio_lower_bound(k4, 0.5, 1.0) == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("bounded family: QR estimates fall inside the interval") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double rw = 0.2 + 2.0 * unif(rng);
    const double mag = unif(rng) / rw;
    const Complex beta = std::polar(mag, rep % 2 ? 0.0 : 2.0 * M_PI * unif(rng));
    const auto ens = WeightEnsemble::bounded(4, rw, rng());
    const auto qr = lyapunov_qr(ens, beta, 1000, 3);
    const auto iv = bounded_rate_interval(rw, mag);
    CHECK(qr.value >= iv.interval->first - 3.0 * qr.std_err);
    CHECK(qr.value <= iv.interval->second + 3.0 * qr.std_err);
  }
}

TEST_CASE("lyapunov_product is a diagnostic and reports collapse as 0") {
  const auto zero = WeightEnsemble::deterministic(Eigen::MatrixXd::Zero(2, 2));
  CHECK(lyapunov_product(zero, 1000, 3).value == 0.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2) * 0.5;
  w(1, 1) = 2.0;
  CHECK(lyapunov_product(WeightEnsemble::deterministic(w), 1000, 3).value ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("non-residual prediction is the second magnitude") {
  const auto k4 = build_transition(complete_graph(4), Normalization::kRowNormalized);
  CHECK(predict_nrs_rate(k4).value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto c5 = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const double want = oracle::second_magnitude(oracle::circulant_spectrum(oracle::circulant_row(5, {1})));
  CHECK(predict_nrs_rate(c5).value == doctest::Approx(want).epsilon(1e-12));
  const auto c4 = build_transition(cycle_graph(4), Normalization::kRowNormalized);
  CHECK_THROWS_AS(predict_nrs_rate(c4), Error);
  CHECK_THROWS_AS(predict_rs_rate(c4, WeightEnsemble::ginibre(2, 1.0, 1), 0.1, kFast), Error);
}

TEST_CASE("residual prediction with deterministic weights") {
  const auto k4 = build_transition(complete_graph(4), Normalization::kRowNormalized);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);

  const auto zero = predict_rs_rate(k4, WeightEnsemble::deterministic(Eigen::MatrixXd::Zero(3, 3)), 0.3);
  CHECK(zero.ratio.value == 1.0);

  const auto eq = predict_rs_rate(k4, WeightEnsemble::deterministic(id), 1.0);
  CHECK(eq.ratio.value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(eq.equality);

  // Strict improvement when 1 + lambda0 (2 alpha + 1) > 0.
  const auto strict = predict_rs_rate(k4, WeightEnsemble::deterministic(id), 0.5);
  CHECK(strict.ratio.value > 1.0 / 3.0);
  CHECK(strict.ratio.value == doctest::Approx((5.0 / 6.0) / 1.5).epsilon(1e-12));

  const auto neg = predict_rs_rate(k4, WeightEnsemble::deterministic(-id), 0.5);
  CHECK(neg.ratio.value == 1.0);
  CHECK(neg.ratio.log_value == 0.0);
}

TEST_CASE("residual prediction: symmetric two-point SimDiag gives exactly 1") {
  for (const Graph& g : {complete_graph(4), cycle_graph(5), with_pendant(complete_graph(4))}) {
    const auto tm = build_transition(g, Normalization::kRowNormalized);
    const auto ens = WeightEnsemble::simdiag(std::vector<ScalarSupport>(4, {ScalarLaw::kTwoPoint, 0.5}), 1);
    const auto p = predict_rs_rate(tm, ens, 0.5, kFast);
    CHECK(p.ratio.value == 1.0);
    CHECK(p.applicable);
  }
}

TEST_CASE("Gaussian residual prediction strictly beats the non-residual rate") {
  for (const Graph& g : {complete_graph(4), cycle_graph(5)}) {
    const auto tm = build_transition(g, Normalization::kRowNormalized);
    const double lam2 = second_magnitude(tm);
    for (double alpha : {0.05, 0.1, 0.5, 1.0}) {
      for (double tau : {0.5, 1.0, 2.0}) {
        const auto p = predict_rs_rate(tm, WeightEnsemble::ginibre(8, tau, 3), alpha, kFast);
        CHECK(p.equality);
        CHECK(p.conjugate_symmetry_ok);
        CHECK(p.ratio.method == RateMethod::kRatio);
        CHECK(p.ratio.value - lam2 >= 3.0 * p.ratio.std_err);
        CHECK(p.ratio.value > lam2);
      }
    }
  }
}

TEST_CASE("complex spectrum goes through the QR estimator with conjugate checks") {
  // Directed 3-cycle with a self-loop mass: primitive with complex eigenvalues.
  Eigen::MatrixXd p(3, 3);
  p << 0.2, 0.8, 0.0, 0.0, 0.2, 0.8, 0.8, 0.0, 0.2;
  const auto tm = TransitionMatrix::from_dense(p);
  REQUIRE(tm.is_primitive());
  RateEffort effort = kFast;
  effort.qr_steps = 4000;
  const auto pr = predict_rs_rate(tm, WeightEnsemble::ginibre(3, 1.0, 2), 0.5, effort);
  CHECK(pr.conjugate_symmetry_ok);
  std::size_t complex_count = 0;
  for (const auto& e : pr.per_eigenvalue) {
    complex_count += e.lambda.imag() != 0.0;
    if (e.lambda.imag() != 0.0) CHECK(e.rate.method == RateMethod::kQrProduct);
  }
  CHECK(complex_count == 2);
  CHECK(pr.ratio.value > 0.0);
  CHECK(pr.ratio.value <= 1.0 + 1e-12);
}

TEST_CASE("f(a) = E log((a + xi)^2 + b) increases on the grid") {
  const std::vector<double> a{0.1, 0.5, 1.0, 2.0, 3.0};
  for (double b : {0.0, 0.5, 2.0}) {
    const auto m = shifted_log_moments(a, b, 200000, 11);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) {
      CHECK(m.mean[k + 1] - m.mean[k] >= 3.0 * m.diff_std_err[k]);
    }
  }
}
