#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oversmooth/error.hpp"
#include "oversmooth/io.hpp"
#include "oversmooth/transition.hpp"

using namespace oversmooth;

namespace {

// Sorted copy for multiset comparison.
std::vector<Complex> sorted(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

void check_same_spectrum(const std::vector<Complex>& a, const std::vector<Complex>& b,
                         double tol) {
  REQUIRE(a.size() == b.size());
  const auto sa = sorted(a), sb = sorted(b);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(std::abs(sa[i] - sb[i]) < tol);
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kConfig;
}

}  // namespace

TEST_CASE("K4 row-normalized: P = (J - I)/3 and spectrum {1, -1/3 x3}") {
  const TransitionMatrix tm = build_transition(complete_graph(4), Normalization::kRowNormalized);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(tm.dense()(i, j) == doctest::Approx(i == j ? 0.0 : 1.0 / 3));
  check_same_spectrum(tm.spectrum(), oracle::circulant_spectrum(oracle::circulant_row(4, {1, 2})), 1e-12);
  CHECK(second_magnitude(tm) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(second_eigenvalues(tm).tied.size() == 3);
  CHECK(tm.primitivity().exponent == 2);
}

TEST_CASE("C5: spectrum cos(2 pi k / 5), primitive with exponent 4") {
  const TransitionMatrix tm = build_transition(cycle_graph(5), Normalization::kRowNormalized);
  const auto want = oracle::circulant_spectrum(oracle::circulant_row(5, {1}));
  check_same_spectrum(tm.spectrum(), want, 1e-12);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(std::abs(want[k] - std::cos(2 * M_PI * k / 5)) < 1e-12);
  }
  CHECK(tm.is_primitive());
  CHECK(tm.primitivity().exponent == 4);
  CHECK(tm.primitivity().exponent == oracle::primitivity_exponent(tm.dense()));
  // Largest non-Perron magnitude is |cos(4 pi / 5)|.
  CHECK(second_magnitude(tm) == doctest::Approx(oracle::second_magnitude(want)).epsilon(1e-12));
  CHECK(second_magnitude(tm) == doctest::Approx(std::cos(M_PI / 5)).epsilon(1e-12));
}

TEST_CASE("P2 and C4 are refuted as bipartite") {
  for (const Graph& g : {Graph(2, {{0, 1}}), cycle_graph(4)}) {
    const TransitionMatrix tm = build_transition(g, Normalization::kRowNormalized);
    CHECK_FALSE(tm.is_primitive());
    CHECK(tm.primitivity().refutation == "bipartite");
    CHECK(code_of([&] { second_magnitude(tm); }) == ErrorCode::kNotPrimitive);
  }
  const TransitionMatrix p2 = build_transition(Graph(2, {{0, 1}}), Normalization::kRowNormalized);
  check_same_spectrum(p2.spectrum(), {1.0, -1.0}, 1e-12);
}

TEST_CASE("isolated vertex is rejected") {
  CHECK(code_of([] { build_transition(Graph(3, {{0, 1}}), Normalization::kRowNormalized); }) ==
        ErrorCode::kIsolatedVertex);
}

TEST_CASE("disconnected pattern is reducible") {
  Graph g(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const TransitionMatrix tm = build_transition(g, Normalization::kRowNormalized);
  CHECK(tm.primitivity().refutation == "reducible");
}

TEST_CASE("custom matrix with period 3 is refuted") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;
  const TransitionMatrix tm = TransitionMatrix::from_dense(p);
  CHECK(tm.primitivity().refutation == "periodic (period 3)");
  CHECK(tm.primitivity().period == 3);
}

TEST_CASE("invariants on random primitive graphs") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + rng() % 30;
    Graph g = oracle::random_connected(n, 0.1, rng);
    // Hang a triangle off a random vertex to force an odd cycle.
    const Vertex a = Vertex(rng() % n);
    Graph h(n + 2, g.edges());
    h.add_edge(a, Vertex(n));
    h.add_edge(a, Vertex(n + 1));
    h.add_edge(Vertex(n), Vertex(n + 1));
    const TransitionMatrix tm = build_transition(h, Normalization::kRowNormalized);
    REQUIRE(tm.is_primitive());
    CHECK(tm.primitivity().exponent == oracle::primitivity_exponent(tm.dense()));

    for (Eigen::Index i = 0; i < tm.dense().rows(); ++i) {
      CHECK(std::abs(tm.dense().row(i).sum() - 1.0) < 1e-12);
    }
    const auto& spec = tm.spectrum();
    std::size_t near_one = 0;
    for (auto z : spec) near_one += std::abs(z) >= 1.0 - 1e-9;
    CHECK(near_one == 1);
    CHECK(std::abs(spec.front() - 1.0) < 1e-9);
    CHECK(second_magnitude(tm) < 1.0);

    // Independent spectral checks: trace identities.
    Complex s1 = 0.0, s2 = 0.0;
    for (auto z : spec) {
      s1 += z;
      s2 += z * z;
    }
    CHECK(std::abs(s1.real() - tm.dense().trace()) < 1e-9);
    CHECK(std::abs(s2.real() - (tm.dense() * tm.dense()).trace()) < 1e-9);

    const Eigen::VectorXd& l = tm.perron_left();
    CHECK((l.array() > 0).all());
    CHECK(std::abs(l.norm() - 1.0) < 1e-12);
    CHECK((l.transpose() * tm.dense() - l.transpose()).norm() < 1e-10);
    const Eigen::VectorXd& r = tm.perron_right();
    CHECK((r.array() > 0).all());
    CHECK((tm.dense() * r - r).norm() < 1e-10);
  }
}

TEST_CASE("primitivity agrees with the spectral test on trees and odd-cycle graphs") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + rng() % 25;
    const bool tree = rep % 2 == 0;
    Graph g = tree ? oracle::random_tree(n, rng) : oracle::random_connected(n, 0.15, rng);
    if (!tree) {
      Graph h(n + 2, g.edges());
      h.add_edge(0, Vertex(n));
      h.add_edge(0, Vertex(n + 1));
      h.add_edge(Vertex(n), Vertex(n + 1));
      g = h;
    }
    const TransitionMatrix tm = build_transition(g, Normalization::kRowNormalized);
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(oracle::row_normalized(g)).eigenvalues();
    std::size_t on_circle = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) on_circle += std::abs(ev[i]) > 1.0 - 1e-9;
    CHECK(tm.is_primitive() == (on_circle == 1));
    CHECK(tm.is_primitive() == !tree);
  }
}

TEST_CASE("row and sym normalizations share a spectrum on regular graphs") {
  for (const Graph& g : {complete_graph(6), cycle_graph(9), complete_graph(3)}) {
    const auto row = build_transition(g, Normalization::kRowNormalized);
    const auto sym = build_transition(g, Normalization::kSymNormalized);
    check_same_spectrum(row.spectrum(), sym.spectrum(), 1e-9);
  }
}

TEST_CASE("row and sym normalizations are similar on irregular graphs too") {
  const Graph g = with_pendant(complete_graph(4));
  const auto row = build_transition(g, Normalization::kRowNormalized);
  const auto sym = build_transition(g, Normalization::kSymNormalized);
  check_same_spectrum(row.spectrum(), sym.spectrum(), 1e-9);
  CHECK(second_magnitude(row) == doctest::Approx(second_magnitude(sym)).epsilon(1e-12));
  for (auto z : row.spectrum()) CHECK(std::abs(z.imag()) < 1e-9);
}

TEST_CASE("symmetric path above the Schur limit matches the circulant oracle") {
  const std::size_t n = 1201;
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (std::size_t o : {1, 2, 7}) g.add_edge(u, Vertex((u + o) % n));
  const auto tm = build_transition(g, Normalization::kRowNormalized);
  CHECK(tm.spectrum_complete());
  const auto want = oracle::circulant_spectrum(oracle::circulant_row(n, {1, 2, 7}));
  CHECK(second_magnitude(tm) == doctest::Approx(oracle::second_magnitude(want)).epsilon(1e-10));
}

TEST_CASE("leading-pair path above the full-spectrum limit matches the circulant oracle") {
  const std::size_t n = 3301;
  Graph g(n);
  const std::vector<std::size_t> offsets{1, 3, 40, 211, 1000};
  for (Vertex u = 0; u < n; ++u)
    for (auto o : offsets) g.add_edge(u, Vertex((u + o) % n));
  const auto tm = build_transition(g, Normalization::kRowNormalized);
  CHECK_FALSE(tm.spectrum_complete());
  const auto want = oracle::circulant_spectrum(oracle::circulant_row(n, offsets));
  CHECK(second_magnitude(tm) == doctest::Approx(oracle::second_magnitude(want)).epsilon(1e-7));
}

TEST_CASE("custom matrix keeps Perron vectors of both sides") {
  Eigen::MatrixXd p(3, 3);
  p << 0.2, 0.5, 0.3, 0.6, 0.0, 0.4, 0.1, 0.9, 0.0;
  const TransitionMatrix tm = TransitionMatrix::from_dense(p);
  CHECK(tm.kind() == Normalization::kCustom);
  CHECK(tm.is_primitive());
  CHECK((p * tm.perron_right() - tm.perron_right()).norm() < 1e-10);
  CHECK((tm.perron_left().transpose() * p - tm.perron_left().transpose()).norm() < 1e-10);
  CHECK(tm.certified_diagonalizable());
  Eigen::MatrixXd neg = p;
  neg(0, 0) = -0.1;
  CHECK_THROWS_AS(TransitionMatrix::from_dense(neg), Error);
}
