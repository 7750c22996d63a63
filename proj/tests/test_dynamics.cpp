#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "oversmooth/dynamics.hpp"
#include "oversmooth/error.hpp"
#include "oversmooth/io.hpp"

using namespace oversmooth;

namespace {

Eigen::MatrixXd gaussian(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(d, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return x;
}

// Direct unrenormalized propagation.
Eigen::MatrixXd naive(Eigen::MatrixXd x, const Eigen::MatrixXd& p, const WeightEnsemble& ens,
                      const Propagation& mode, std::size_t steps, std::uint64_t trial) {
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::MatrixXd w = ens.sample(trial, t);
    x = mode.kind == PropagationKind::kNrs ? Eigen::MatrixXd(w * x * p.transpose())
                                           : Eigen::MatrixXd(x + mode.alpha * w * x * p.transpose());
  }
  return x;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

}  // namespace

TEST_CASE("mu examples") {
  Eigen::MatrixXd same(2, 3);
  same << 1, 1, 1, -2, -2, -2;
  CHECK(mu(same) == 0.0);
  Eigen::MatrixXd pm(1, 2);
  pm << 1, -1;
  CHECK(mu(pm) == doctest::Approx(1.0));
  Eigen::MatrixXd e(1, 3);
  e << 1, 0, 0;
  CHECK(mu(e) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(mu(Eigen::MatrixXd::Zero(2, 2)), Error);
}

TEST_CASE("mu is scale invariant and lies in [0, 1]") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd x = gaussian(1 + rng() % 5, 2 + rng() % 9, rng);
    const double m = mu(x);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
    CHECK(m == doctest::Approx(oracle::mu(x)).epsilon(1e-12));
    for (double c : {1e-8, 1.0, 1e8, -3.0}) CHECK(mu(c * x) == doctest::Approx(m).epsilon(1e-12));
  }
}

TEST_CASE("mu_general against a rank-one projection oracle") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng() % 8;
    const Eigen::MatrixXd x = gaussian(3, n, rng);
    CHECK(mu_general(x, Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)))) ==
          doctest::Approx(mu(x)).epsilon(1e-12));
    Eigen::VectorXd pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = unif(rng);
    pi.normalize();
    const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - pi * pi.transpose();
    const double want = (x * proj).squaredNorm() / x.squaredNorm();
    const double got = mu_general(x, pi);
    CHECK(std::abs(got - want) < 1e-12);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    const Eigen::MatrixXd rank1 = x.col(0) * pi.transpose();
    CHECK(mu_general(rank1, pi) < 1e-28);
  }
}

TEST_CASE("nrs with W = I keeps constant features on K4") {
  const auto tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  Eigen::MatrixXd x(2, 4);
  x << 1, 1, 1, 1, 3, 3, 3, 3;
  FeatureState s = FeatureState::from_features(x, tm);
  s = step_nrs(s, tm, Eigen::MatrixXd::Identity(2, 2), Activation::identity());
  CHECK(rel(s.true_features(), x) < 1e-14);
  CHECK(s.mu() == 0.0);
  CHECK(s.step() == 1);
}

TEST_CASE("one step is linear in the input") {
  std::mt19937_64 rng(3);
  const auto tm = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const Eigen::MatrixXd x = gaussian(3, 5, rng);
  const Eigen::MatrixXd w = gaussian(3, 3, rng);
  for (double c : {1e-6, 2.5, 1e6}) {
    const auto a = step_nrs(FeatureState::from_features(c * x, tm), tm, w, Activation::identity());
    const auto b = step_nrs(FeatureState::from_features(x, tm), tm, w, Activation::identity());
    CHECK(rel(a.true_features(), c * b.true_features()) < 1e-13);
    const auto ra = step_rs(FeatureState::from_features(c * x, tm), tm, w, 0.3, Activation::identity());
    const auto rb = step_rs(FeatureState::from_features(x, tm), tm, w, 0.3, Activation::identity());
    CHECK(rel(ra.true_features(), c * rb.true_features()) < 1e-13);
  }
}

TEST_CASE("C5 with W = (2): log_frob matches the direct computation for 20 steps") {
  std::mt19937_64 rng(4);
  const auto tm = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const Eigen::MatrixXd p = oracle::row_normalized(cycle_graph(5));
  Eigen::MatrixXd x = gaussian(1, 5, rng);
  FeatureState s = FeatureState::from_features(x, tm);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1, 1, 2.0);
  for (int t = 0; t < 20; ++t) {
    const double before = std::log(x.norm());
    x = w * x * p.transpose();
    const double prev = s.log_frob();
    s = step_nrs(s, tm, w, Activation::identity());
    CHECK(std::abs((s.log_frob() - prev) - (std::log(x.norm()) - before)) < 1e-10);
    CHECK(std::abs(s.log_frob() - std::log(x.norm())) < 1e-10);
  }
}

TEST_CASE("rs step with W = I equals x (I + alpha P)^T") {
  std::mt19937_64 rng(5);
  const Graph g = with_pendant(complete_graph(4));
  const auto tm = build_transition(g, Normalization::kRowNormalized);
  const Eigen::MatrixXd p = oracle::row_normalized(g);
  const Eigen::MatrixXd x = gaussian(2, 5, rng);
  for (double alpha : {1e-4, 0.1, 1.0}) {
    const auto s = step_rs(FeatureState::from_features(x, tm), tm, Eigen::MatrixXd::Identity(2, 2),
                           alpha, Activation::identity());
    const Eigen::MatrixXd want = x * (Eigen::MatrixXd::Identity(5, 5) + alpha * p).transpose();
    CHECK(rel(s.true_features(), want) < 1e-12);
  }
}

TEST_CASE("renormalized and naive trajectories agree for 30 steps") {
  std::mt19937_64 rng(6);
  const std::vector<Graph> graphs{complete_graph(4), cycle_graph(5), with_pendant(complete_graph(4)),
                                  erdos_renyi_patched(20, 0.2, 3)};
  for (int rep = 0; rep < 20; ++rep) {
    const Graph& g = graphs[rep % graphs.size()];
    const auto kind = rep % 3 == 2 ? Normalization::kSymNormalized : Normalization::kRowNormalized;
    const auto tm = build_transition(g, kind);
    const std::size_t d = 2 + rng() % 4;
    const WeightEnsemble ens = rep % 2 ? WeightEnsemble::ginibre(d, 1.5, rng())
                                       : WeightEnsemble::xavier(d, rng());
    const Propagation mode = rep % 4 < 2 ? Propagation::nrs() : Propagation::rs(0.3);
    const Eigen::MatrixXd x0 = gaussian(d, g.num_vertices(), rng);
    const Eigen::MatrixXd want = naive(x0, tm.dense(), ens, mode, 30, 9);
    FeatureState s = FeatureState::from_features(x0, tm);
    for (std::size_t t = 0; t < 30; ++t) {
      const Eigen::MatrixXd w = ens.sample(9, t);
      s = mode.kind == PropagationKind::kNrs ? step_nrs(s, tm, w, Activation::identity())
                                             : step_rs(s, tm, w, mode.alpha, Activation::identity());
      const double n = s.representative().norm();
      CHECK(n >= 1e-3);
      CHECK(n <= 1e3);
    }
    CHECK(rel(s.true_features(), want) < 1e-9);
    CHECK(s.mu() == doctest::Approx(mu_general(want, tm.perron_right())).epsilon(1e-8));
  }
}

TEST_CASE("nonlinear activations act on the true features") {
  std::mt19937_64 rng(7);
  const auto tm = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const Eigen::MatrixXd p = tm.dense();
  const Eigen::MatrixXd x = gaussian(3, 5, rng);
  const Eigen::MatrixXd w = gaussian(3, 3, rng);
  const auto relu = [](const Eigen::MatrixXd& m) { return Eigen::MatrixXd(m.cwiseMax(0.0)); };
  const auto leaky = [](const Eigen::MatrixXd& m) {
    return Eigen::MatrixXd(m.unaryExpr([](double v) { return v >= 0 ? v : 0.8 * v; }));
  };
  auto s = step_nrs(FeatureState::from_features(x, tm), tm, w, Activation::relu());
  CHECK(rel(s.true_features(), w * relu(x) * p.transpose()) < 1e-12);
  s = step_rs(FeatureState::from_features(x, tm), tm, w, 0.1, Activation::leaky_relu(0.8));
  CHECK(rel(s.true_features(), x + 0.1 * w * leaky(x) * p.transpose()) < 1e-12);
  CHECK(parse_activation("leaky_relu", 0.8).slope == 0.8);
  CHECK_THROWS_AS(parse_activation("tanh"), Error);
}

TEST_CASE("step errors") {
  const auto tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  CHECK_THROWS_AS(FeatureState::from_features(Eigen::MatrixXd::Zero(2, 4), tm), Error);
  CHECK_THROWS_AS(FeatureState::from_features(Eigen::MatrixXd::Ones(2, 3), tm), Error);
  const auto s = FeatureState::from_features(Eigen::MatrixXd::Ones(2, 4), tm);
  CHECK_THROWS_AS(step_nrs(s, tm, Eigen::MatrixXd::Identity(3, 3), Activation::identity()), Error);
  CHECK_THROWS_AS(step_rs(s, tm, Eigen::MatrixXd::Identity(3, 3), 0.1, Activation::identity()), Error);
}

TEST_CASE("trajectories: W = 0 residual keeps mu constant; constant start stays at 0") {
  std::mt19937_64 rng(8);
  const auto tm = build_transition(with_pendant(complete_graph(4)), Normalization::kRowNormalized);
  const Eigen::MatrixXd x0 = gaussian(3, 5, rng);
  const auto zero = WeightEnsemble::deterministic(Eigen::MatrixXd::Zero(3, 3));
  const auto tr = run_trajectory(x0, tm, zero, Propagation::rs(0.1), Activation::identity(), 100, 0);
  REQUIRE(tr.records.size() == 101);
  for (const auto& r : tr.records) CHECK(r.mu == tr.records.front().mu);

  Eigen::MatrixXd c(3, 5);
  for (int i = 0; i < 5; ++i) c.col(i) = x0.col(0);
  const auto g = WeightEnsemble::ginibre(3, 1.0, 1);
  for (Propagation mode : {Propagation::nrs(), Propagation::rs(0.2)}) {
    const auto t2 = run_trajectory(c, tm, g, mode, Activation::identity(), 50, 0);
    REQUIRE(t2.records.size() == 51);
    for (const auto& r : t2.records) CHECK(r.mu == 0.0);
    CHECK_FALSE(t2.truncated);
  }
}

TEST_CASE("K4 Ginibre nrs trajectory decays with slope 2 log(1/3)") {
  const auto tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  const auto ens = WeightEnsemble::ginibre(4, 1.0, 3);
  const auto tr = run_trajectory(initial_features(4, 4, 3, 0), tm, ens, Propagation::nrs(),
                                 Activation::identity(), 500, 0);
  CHECK(tr.truncated);  // mu reaches 1e-300 long before t = 500
  const auto& r = tr.records;
  REQUIRE(r.size() > 200);
  for (const auto& rec : r) CHECK(rec.mu > 0.0);
  // Least squares over the second half.
  const std::size_t lo = r.size() / 2;
  double tb = 0, yb = 0;
  for (std::size_t k = lo; k < r.size(); ++k) {
    tb += double(r[k].t);
    yb += std::log(r[k].mu);
  }
  tb /= double(r.size() - lo);
  yb /= double(r.size() - lo);
  double stt = 0, sty = 0;
  for (std::size_t k = lo; k < r.size(); ++k) {
    stt += (r[k].t - tb) * (r[k].t - tb);
    sty += (r[k].t - tb) * (std::log(r[k].mu) - yb);
  }
  CHECK(sty / stt == doctest::Approx(2.0 * std::log(1.0 / 3.0)).epsilon(1e-3));
}

TEST_CASE("trace identities and truncation") {
  const auto tm = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const auto ens = WeightEnsemble::ginibre(3, 2.0, 5);
  const auto tr = run_trajectory(initial_features(3, 5, 5, 1), tm, ens, Propagation::nrs(),
                                 Activation::identity(), 2500, 1);
  CHECK(tr.truncated);
  CHECK(tr.records.size() < 2501);
  for (const auto& r : tr.records) {
    CHECK(r.mu >= SimilarityTrace::kUnderflowFloor);
    CHECK(r.mu <= 1.0);
    CHECK(std::abs(r.log_mu_tilde - (std::log(r.mu) + 2.0 * r.log_frob)) <=
          1e-12 * std::max(1.0, std::abs(r.log_mu_tilde)));
  }
  CHECK(tr.records.back().log_frob > 100.0);  // far beyond double range un-renormalized
}

TEST_CASE("trace CSV round trip and parse errors") {
  const auto tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  const auto tr = run_trajectory(initial_features(2, 4, 1, 0), tm, WeightEnsemble::ginibre(2, 1.0, 1),
                                 Propagation::rs(0.1), Activation::identity(), 40, 0);
  std::stringstream ss;
  write_trace_csv(ss, tr);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.records.size() == tr.records.size());
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    CHECK(back.records[k].t == tr.records[k].t);
    CHECK(back.records[k].mu == tr.records[k].mu);
    CHECK(back.records[k].log_mu_tilde == tr.records[k].log_mu_tilde);
    CHECK(back.records[k].log_frob == tr.records[k].log_frob);
  }
  std::stringstream bad("t,mu,log_mu_tilde,log_frob\n0,1,0,0\n1,x,0,0\n");
  try {
    read_trace_csv(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("run_trajectory argument checks") {
  const auto tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  const auto ens = WeightEnsemble::ginibre(2, 1.0, 1);
  const Eigen::MatrixXd x0 = initial_features(2, 4, 1, 0);
  CHECK_THROWS_AS(run_trajectory(x0, tm, ens, Propagation::nrs(), Activation::identity(), 0, 0), Error);
  CHECK_THROWS_AS(run_trajectory(x0, tm, ens, Propagation::rs(0.0), Activation::identity(), 5, 0), Error);
  CHECK_THROWS_AS(run_trajectory(initial_features(3, 4, 1, 0), tm, ens, Propagation::nrs(),
                                 Activation::identity(), 5, 0), Error);
  CHECK(initial_features(2, 4, 1, 0) == initial_features(2, 4, 1, 0));
  CHECK(initial_features(2, 4, 1, 0) != initial_features(2, 4, 1, 1));
}
