#include "oversmooth/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "oversmooth/error.hpp"

namespace oversmooth {

const char* to_string(Normalization kind) {
  switch (kind) {
    case Normalization::kRowNormalized: return "row_normalized";
    case Normalization::kSymNormalized: return "sym_normalized";
    case Normalization::kCustom: return "custom";
  }
  return "custom";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "row" || text == "row_normalized") return Normalization::kRowNormalized;
  if (text == "sym" || text == "sym_normalized") return Normalization::kSymNormalized;
  throw Error(ErrorCode::kConfig, "unknown normalization '" + text + "'");
}

namespace {

// Exact powering is O(n * k * E); past this size only the cheap certificate
// (strong connectivity + period) is produced.
constexpr std::size_t kExactExponentLimit = 5000;

bool pattern_is_symmetric(const std::vector<std::vector<Vertex>>& out) {
  for (std::size_t u = 0; u < out.size(); ++u) {
    for (Vertex v : out[u]) {
      if (!std::binary_search(out[v].begin(), out[v].end(),
                              static_cast<Vertex>(u))) {
        return false;
      }
    }
  }
  return true;
}

std::vector<bool> reach_from_zero(const std::vector<std::vector<Vertex>>& adj) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (Vertex v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

std::size_t exact_exponent(const std::vector<std::vector<Vertex>>& out,
                           std::size_t bound) {
  const std::size_t n = out.size();
  std::size_t worst = 0;
  std::vector<char> cur(n), next(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(cur.begin(), cur.end(), 0);
    cur[s] = 1;
    std::size_t k = 0;
    std::size_t filled = 1;
    while (filled < n || k == 0) {
      std::fill(next.begin(), next.end(), 0);
      filled = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (!cur[u]) continue;
        for (Vertex v : out[u]) {
          if (!next[v]) {
            next[v] = 1;
            ++filled;
          }
        }
      }
      std::swap(cur, next);
      ++k;
      if (k > bound) return bound;  // unreachable for a primitive pattern
    }
    worst = std::max(worst, k);
  }
  return worst;
}

bool magnitude_order(const Complex& a, const Complex& b) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

// Lanczos with full reorthogonalization on the symmetric operator S with its
// known top eigenvector `top` deflated. Returns the extreme Ritz value of
// largest magnitude.
double deflated_lanczos_extreme(const SparseRowMatrix& S,
                                const Eigen::VectorXd& top) {
  const Eigen::Index n = S.rows();
  const Eigen::Index max_steps = std::min<Eigen::Index>(n - 1, 600);
  std::mt19937_64 gen(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = normal(gen);
  q -= top * top.dot(q);
  q.normalize();

  Eigen::MatrixXd basis(n, max_steps);
  std::vector<double> alpha, beta;
  double previous = std::numeric_limits<double>::quiet_NaN();
  double current = 0.0;
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    basis.col(j) = q;
    Eigen::VectorXd w = S * q;
    w -= top * top.dot(w);
    const double a = q.dot(w);
    alpha.push_back(a);
    // Two passes of Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      w -= top * top.dot(w);
    }
    const double b = w.norm();
    const bool last = (j + 1 == max_steps) || b < 1e-13;
    if ((j + 1) % 20 == 0 || last) {
      const Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        tri(i, i) = alpha[i];
        if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      current = std::abs(ev[0]) > std::abs(ev[m - 1]) ? ev[0] : ev[m - 1];
      if (std::abs(current - previous) < 1e-13) break;
      previous = current;
    }
    if (last) break;
    beta.push_back(b);
    q = w / b;
  }
  return current;
}

}  // namespace

PrimitivityCertificate check_primitivity(
    const std::vector<std::vector<Vertex>>& out) {
  PrimitivityCertificate cert;
  const std::size_t n = out.size();
  if (n == 0) {
    cert.refutation = "reducible";
    return cert;
  }
  std::vector<std::vector<Vertex>> in(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (Vertex v : out[u]) in[v].push_back(static_cast<Vertex>(u));
  }
  const auto fwd = reach_from_zero(out);
  const auto bwd = reach_from_zero(in);
  for (std::size_t v = 0; v < n; ++v) {
    if (!fwd[v] || !bwd[v]) {
      cert.refutation = "reducible";
      return cert;
    }
  }

  // Period = gcd over edges u->v of level(u) + 1 - level(v).
  std::vector<long> level(n, -1);
  std::queue<std::size_t> bfs;
  level[0] = 0;
  bfs.push(0);
  while (!bfs.empty()) {
    const std::size_t u = bfs.front();
    bfs.pop();
    for (Vertex v : out[u]) {
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        bfs.push(v);
      }
    }
  }
  std::size_t period = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (Vertex v : out[u]) {
      const long diff = std::labs(level[u] + 1 - level[v]);
      period = std::gcd(period, static_cast<std::size_t>(diff));
    }
  }
  cert.period = period;
  if (period == 0) {
    cert.refutation = "reducible";  // no cycles at all
    return cert;
  }
  if (period != 1) {
    if (period == 2 && pattern_is_symmetric(out)) {
      cert.refutation = "bipartite";
    } else {
      cert.refutation = "periodic (period " + std::to_string(period) + ")";
    }
    return cert;
  }

  cert.primitive = true;
  const std::size_t wielandt = n * n - 2 * n + 2;
  if (n <= kExactExponentLimit) {
    cert.exponent = exact_exponent(out, wielandt);
    cert.exponent_exact = true;
  } else {
    cert.exponent = wielandt;
    cert.exponent_exact = false;
  }
  return cert;
}

const Eigen::MatrixXd& TransitionMatrix::dense() const {
  if (!has_dense()) {
    throw Error(ErrorCode::kInvalidArgument,
                "dense storage not kept for n=" + std::to_string(n_));
  }
  return dense_;
}

std::vector<std::vector<Vertex>> TransitionMatrix::out_neighbors() const {
  std::vector<std::vector<Vertex>> out(n_);
  for (Eigen::Index i = 0; i < sparse_.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(sparse_, i); it; ++it) {
      if (it.value() > 0.0) out[i].push_back(static_cast<Vertex>(it.col()));
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

TransitionMatrix TransitionMatrix::from_graph(const Graph& g,
                                              Normalization kind) {
  if (kind == Normalization::kCustom) {
    throw Error(ErrorCode::kInvalidArgument,
                "custom kind needs an explicit matrix (from_dense)");
  }
  const std::size_t n = g.num_vertices();
  if (n == 0) throw Error(ErrorCode::kEmptyGraph, "graph has no vertices");
  const auto deg = g.degrees();
  for (std::size_t v = 0; v < n; ++v) {
    if (deg[v] == 0) {
      throw Error(ErrorCode::kIsolatedVertex,
                  "vertex " + std::to_string(v) + " has degree 0");
    }
  }

  TransitionMatrix tm;
  tm.n_ = n;
  tm.kind_ = kind;
  tm.sqrt_degree_.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    tm.sqrt_degree_[v] = std::sqrt(static_cast<double>(deg[v]));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.num_edges());
  auto weight = [&](std::size_t i, std::size_t j) {
    if (kind == Normalization::kRowNormalized) {
      return 1.0 / static_cast<double>(deg[i]);
    }
    return 1.0 / (tm.sqrt_degree_[i] * tm.sqrt_degree_[j]);
  };
  for (const auto& [u, v] : g.edges()) {
    triplets.emplace_back(u, v, weight(u, v));
    if (u != v) triplets.emplace_back(v, u, weight(v, u));
  }
  tm.sparse_.resize(n, n);
  tm.sparse_.setFromTriplets(triplets.begin(), triplets.end());
  tm.sparse_.makeCompressed();
  if (n <= kDenseLimit) tm.dense_ = Eigen::MatrixXd(tm.sparse_);

  // P = D^{-1/2} S D^{1/2} with S symmetric, so P is diagonalized by
  // D^{-1/2} V (V orthogonal): cond = sqrt(d_max / d_min).
  const auto [dmin, dmax] = std::minmax_element(deg.begin(), deg.end());
  tm.eigvec_condition_ =
      kind == Normalization::kRowNormalized
          ? std::sqrt(static_cast<double>(*dmax) / static_cast<double>(*dmin))
          : 1.0;

  // Row kind: l = d, r = 1. Sym kind: l = r = sqrt(d).
  Eigen::VectorXd left(n);
  for (std::size_t v = 0; v < n; ++v) {
    left[v] = kind == Normalization::kRowNormalized
                  ? static_cast<double>(deg[v])
                  : tm.sqrt_degree_[v];
  }
  tm.perron_left_ = left.normalized();
  tm.perron_right_ = kind == Normalization::kRowNormalized
                         ? Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)))
                         : tm.perron_left_;
  tm.finish();
  return tm;
}

TransitionMatrix TransitionMatrix::from_dense(const Eigen::MatrixXd& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "custom P must be square, n >= 1");
  }
  if ((entries.array() < 0.0).any() || !entries.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "custom P must have finite nonnegative entries");
  }
  if (static_cast<std::size_t>(entries.rows()) > kSchurLimit) {
    throw Error(ErrorCode::kInvalidArgument,
                "custom P larger than " + std::to_string(kSchurLimit) +
                    " is not supported");
  }
  TransitionMatrix tm;
  tm.n_ = static_cast<std::size_t>(entries.rows());
  tm.kind_ = Normalization::kCustom;
  tm.dense_ = entries;
  tm.sparse_ = entries.sparseView();
  tm.sparse_.makeCompressed();
  tm.finish();
  return tm;
}

void TransitionMatrix::finish() {
  certificate_ = check_primitivity(out_neighbors());

  if (kind_ == Normalization::kCustom || n_ <= kSchurLimit) {
    const bool want_vectors = kind_ == Normalization::kCustom;
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense_, want_vectors);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::kInvalidArgument, "Schur iteration did not converge");
    }
    const auto& ev = es.eigenvalues();
    spectrum_.assign(ev.data(), ev.data() + ev.size());
    if (want_vectors) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
      const auto& s = svd.singularValues();
      const double smin = s[s.size() - 1];
      eigvec_condition_ = smin > 0.0 ? s[0] / smin
                                     : std::numeric_limits<double>::infinity();
    }
  } else if (n_ <= kFullSpectrumLimit) {
    // Graph kinds: P is similar to the symmetric S = D^{-1/2} A D^{-1/2}.
    Eigen::MatrixXd S = dense_;
    if (kind_ == Normalization::kRowNormalized) {
      S = sqrt_degree_.asDiagonal() * S * sqrt_degree_.cwiseInverse().asDiagonal();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    spectrum_.clear();
    for (Eigen::Index i = 0; i < ev.size(); ++i) spectrum_.emplace_back(ev[i], 0.0);
  } else {
    SparseRowMatrix S = sparse_;
    if (kind_ == Normalization::kRowNormalized) {
      S = sqrt_degree_.asDiagonal() * sparse_ * sqrt_degree_.cwiseInverse().asDiagonal();
    }
    const Eigen::VectorXd top = sqrt_degree_.normalized();
    spectrum_ = {Complex(1.0, 0.0),
                 Complex(deflated_lanczos_extreme(S, top), 0.0)};
    spectrum_complete_ = false;
  }
  std::sort(spectrum_.begin(), spectrum_.end(), magnitude_order);

  if (kind_ == Normalization::kCustom) {
    // Inverse iteration just above the Perron root, for both sides.
    perron_root_ = std::abs(spectrum_.front());
    const double shift = perron_root_ * (1.0 + 1e-10) + 1e-14;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_, n_);
    auto inverse_iteration = [&](const Eigen::MatrixXd& m) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m - shift * eye);
      Eigen::VectorXd v = Eigen::VectorXd::Ones(n_).normalized();
      for (int it = 0; it < 6; ++it) v = lu.solve(v).normalized();
      return v.sum() < 0 ? Eigen::VectorXd(-v) : v;
    };
    perron_left_ = inverse_iteration(dense_.transpose());
    perron_right_ = inverse_iteration(dense_);
  }
}

TransitionMatrix build_transition(const Graph& g, Normalization kind) {
  return TransitionMatrix::from_graph(g, kind);
}

namespace {

std::size_t perron_index(const TransitionMatrix& tm) {
  if (!tm.is_primitive()) {
    throw Error(ErrorCode::kNotPrimitive,
                "not primitive: " + tm.primitivity().refutation);
  }
  const auto& spec = tm.spectrum();
  std::size_t best = 0;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    if (std::abs(spec[i] - 1.0) < std::abs(spec[best] - 1.0)) best = i;
  }
  if (std::abs(spec[best] - 1.0) >= 1e-9) {
    throw Error(ErrorCode::kNotPrimitive,
                "no eigenvalue within 1e-9 of 1 (closest: " +
                    std::to_string(std::abs(spec[best])) + ")");
  }
  return best;
}

}  // namespace

SecondEigenvalues second_eigenvalues(const TransitionMatrix& tm) {
  const std::size_t skip = perron_index(tm);
  const auto& spec = tm.spectrum();
  SecondEigenvalues out;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (i != skip) out.magnitude = std::max(out.magnitude, std::abs(spec[i]));
  }
  const double tie = 1e-12 * std::max(1.0, out.magnitude);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (i != skip && std::abs(spec[i]) >= out.magnitude - tie) {
      out.tied.push_back(spec[i]);
    }
  }
  return out;
}

double second_magnitude(const TransitionMatrix& tm) {
  return second_eigenvalues(tm).magnitude;
}

double smallest_nonperron_magnitude(const TransitionMatrix& tm) {
  if (!tm.spectrum_complete()) {
    throw Error(ErrorCode::kInvalidArgument,
                "smallest magnitude needs the full spectrum");
  }
  const std::size_t skip = perron_index(tm);
  const auto& spec = tm.spectrum();
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (i != skip) out = std::min(out, std::abs(spec[i]));
  }
  return spec.size() == 1 ? 0.0 : out;
}

}  // namespace oversmooth
