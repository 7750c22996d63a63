#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "oversmooth/graph.hpp"

namespace oversmooth {

enum class Normalization {
  kRowNormalized,  // D^{-1} A
  kSymNormalized,  // D^{-1/2} A D^{-1/2}
  kCustom,
};

const char* to_string(Normalization kind);
Normalization parse_normalization(const std::string& text);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Complex = std::complex<double>;

struct PrimitivityCertificate {
  bool primitive = false;
  // Smallest k with P^k entrywise positive. When `exponent_exact` is false
  // the graph was too large for exact powering and `exponent` holds the
  // Wielandt bound n^2 - 2n + 2 instead.
  std::size_t exponent = 0;
  bool exponent_exact = true;
  // gcd of closed-walk lengths; 0 when the pattern is reducible.
  std::size_t period = 0;
  // Empty when primitive; otherwise "reducible", "bipartite" or
  // "periodic (period p)".
  std::string refutation;
};

// Certificate from the zero pattern alone (boolean reachability, no floats).
// `out_neighbors[i]` lists j with P_ij > 0.
PrimitivityCertificate check_primitivity(
    const std::vector<std::vector<Vertex>>& out_neighbors);

// Aggregation matrix P with its spectrum, Perron left vector and primitivity
// certificate. Immutable after construction; safe to share across threads.
class TransitionMatrix {
 public:
  // Dense storage is kept up to this size.
  static constexpr std::size_t kDenseLimit = 5000;
  // Full spectrum via the nonsymmetric real Schur solver up to this size.
  static constexpr std::size_t kSchurLimit = 1000;
  // Full spectrum via the symmetric similar matrix up to this size (graph
  // kinds only); above it only the two leading magnitudes are computed.
  static constexpr std::size_t kFullSpectrumLimit = 3000;

  // Throws kIsolatedVertex if some degree is zero.
  static TransitionMatrix from_graph(const Graph& g, Normalization kind);
  // Custom nonnegative matrix. Throws kInvalidArgument on negative entries
  // or a non-square input.
  static TransitionMatrix from_dense(const Eigen::MatrixXd& entries);

  std::size_t size() const { return n_; }
  Normalization kind() const { return kind_; }

  const SparseRowMatrix& sparse() const { return sparse_; }
  bool has_dense() const { return dense_.size() > 0; }
  const Eigen::MatrixXd& dense() const;

  // Eigenvalues sorted by magnitude, descending (ties: real part, then
  // imaginary part, descending). Only the two leading magnitudes are present
  // when `spectrum_complete()` is false.
  const std::vector<Complex>& spectrum() const { return spectrum_; }
  bool spectrum_complete() const { return spectrum_complete_; }

  // Perron root (1 for the graph kinds).
  double perron_root() const { return perron_root_; }
  // Positive right eigenvector P r = r, unit 2-norm. This is the pi_1 of the
  // modified similarity measure; 1/sqrt(n) for row-stochastic P.
  const Eigen::VectorXd& perron_right() const { return perron_right_; }
  // Positive left eigenvector l^T P = l^T, unit 2-norm.
  const Eigen::VectorXd& perron_left() const { return perron_left_; }

  const PrimitivityCertificate& primitivity() const { return certificate_; }
  bool is_primitive() const { return certificate_.primitive; }

  // Condition number of the eigenvector matrix; infinity when the solver
  // found a defective matrix.
  double eigenvector_condition() const { return eigvec_condition_; }
  bool certified_diagonalizable() const { return eigvec_condition_ < 1e8; }

  std::vector<std::vector<Vertex>> out_neighbors() const;

 private:
  TransitionMatrix() = default;
  void finish();

  std::size_t n_ = 0;
  Normalization kind_ = Normalization::kCustom;
  SparseRowMatrix sparse_;
  Eigen::MatrixXd dense_;
  // D^{1/2} for graph kinds (used by the symmetric path); empty for custom.
  Eigen::VectorXd sqrt_degree_;
  std::vector<Complex> spectrum_;
  bool spectrum_complete_ = true;
  double perron_root_ = 1.0;
  Eigen::VectorXd perron_right_;
  Eigen::VectorXd perron_left_;
  PrimitivityCertificate certificate_;
  double eigvec_condition_ = 0.0;
};

TransitionMatrix build_transition(const Graph& g, Normalization kind);

struct SecondEigenvalues {
  double magnitude = 0.0;
  // Every eigenvalue (other than the removed Perron root) attaining it.
  std::vector<Complex> tied;
};

// max |lambda| over spec(P) without one copy of the eigenvalue closest to 1.
// Throws kNotPrimitive unless the certificate says primitive.
SecondEigenvalues second_eigenvalues(const TransitionMatrix& tm);
double second_magnitude(const TransitionMatrix& tm);
// min |lambda| over spec(P) without the Perron root; needs a full spectrum.
double smallest_nonperron_magnitude(const TransitionMatrix& tm);

}  // namespace oversmooth
