#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oversmooth/ensemble.hpp"
#include "oversmooth/transition.hpp"

namespace oversmooth {

enum class ActivationKind { kIdentity, kRelu, kLeakyRelu };

struct Activation {
  ActivationKind kind = ActivationKind::kIdentity;
  double slope = 0.8;  // leaky_relu negative slope

  static Activation identity() { return {}; }
  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double slope) {
    return {ActivationKind::kLeakyRelu, slope};
  }
  bool is_identity() const { return kind == ActivationKind::kIdentity; }
};

std::string to_string(const Activation& a);
Activation parse_activation(const std::string& name, double slope = 0.8);

enum class PropagationKind { kNrs, kRs };

struct Propagation {
  PropagationKind kind = PropagationKind::kNrs;
  double alpha = 0.1;  // only used by rs

  static Propagation nrs() { return {PropagationKind::kNrs, 0.0}; }
  static Propagation rs(double alpha) { return {PropagationKind::kRs, alpha}; }
};

std::string to_string(const Propagation& p);

// Def. of the normalized vertex similarity: sum_i |x_i - xbar|^2 / sum_i
// |x_i|^2, columns are vertices. Throws kZeroInput for x == 0.
double mu(const Eigen::MatrixXd& x);
// |x - x pi pi^T|_F^2 / |x|_F^2 for a positive unit vector pi.
double mu_general(const Eigen::MatrixXd& x, const Eigen::VectorXd& pi);

// Vertex features x in R^{d x n}, held in split form
//
//   x = exp(a) * m r^T + exp(b) * y,    y l = 0,
//
// where r / l are the right / left Perron vectors of P. Both parts are kept
// at unit norm and their scales live in a and b, so neither the overall
// growth nor the decay of the disagreement part under- or overflows, and the
// disagreement never cancels against the consensus part.
class FeatureState {
 public:
  // Throws kZeroInput for x == 0 and kDimensionMismatch if x has the wrong
  // number of columns.
  static FeatureState from_features(const Eigen::MatrixXd& x,
                                    const TransitionMatrix& tm);

  std::size_t dim() const { return static_cast<std::size_t>(consensus_.size()); }
  std::size_t num_vertices() const { return static_cast<std::size_t>(right_.size()); }
  std::size_t step() const { return t_; }

  // Unit-Frobenius representative; true features = exp(log_scale()) * it.
  Eigen::MatrixXd representative() const;
  double log_scale() const { return log_frob(); }
  // exp(log_scale) * representative; overflows for long runs.
  Eigen::MatrixXd true_features() const;

  double log_mu() const;
  double mu() const;
  // log |x_true|_F.
  double log_frob() const;
  bool disagreement_is_zero() const { return deviation_log_ == -kInf; }

 private:
  friend FeatureState step_nrs(const FeatureState&, const TransitionMatrix&,
                               const Eigen::MatrixXd&, const Activation&);
  friend FeatureState step_rs(const FeatureState&, const TransitionMatrix&,
                              const Eigen::MatrixXd&, double, const Activation&);
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  static FeatureState split(const Eigen::MatrixXd& x, double log_scale,
                            const TransitionMatrix& tm, std::size_t t);
  void renormalize();
  double log_numerator() const;
  double log_denominator() const;

  Eigen::VectorXd consensus_;   // m
  double consensus_log_ = 0.0;  // a
  Eigen::MatrixXd deviation_;   // y
  double deviation_log_ = 0.0;  // b
  Eigen::VectorXd right_;       // r, unit
  std::size_t t_ = 0;
};

// x <- W sigma(x) P^T. Throws kDimensionMismatch.
FeatureState step_nrs(const FeatureState& s, const TransitionMatrix& tm,
                      const Eigen::MatrixXd& w, const Activation& act);
// x <- x + alpha W sigma(x) P^T. Throws kDimensionMismatch.
FeatureState step_rs(const FeatureState& s, const TransitionMatrix& tm,
                     const Eigen::MatrixXd& w, double alpha,
                     const Activation& act);

struct TraceRecord {
  std::size_t t = 0;
  double mu = 0.0;
  double log_mu_tilde = 0.0;  // log of the unnormalized measure
  double log_frob = 0.0;      // log |x_true|_F
};

struct SimilarityTrace {
  std::vector<TraceRecord> records;
  // Set when mu dropped below kUnderflowFloor; the trace stops at the last
  // step above it.
  bool truncated = false;
  static constexpr double kUnderflowFloor = 1e-300;
};

// i.i.d. standard normal d x n start, keyed by (seed, trial).
Eigen::MatrixXd initial_features(std::size_t d, std::size_t n,
                                 std::uint64_t seed, std::uint64_t trial);

// T steps with W^{(t)} = ens.sample(trial, t); T + 1 records unless
// truncated. Throws kInvalidArgument for T == 0 or alpha <= 0 in rs mode.
SimilarityTrace run_trajectory(const Eigen::MatrixXd& x0,
                               const TransitionMatrix& tm,
                               const WeightEnsemble& ens,
                               const Propagation& mode, const Activation& act,
                               std::size_t steps, std::uint64_t trial);

// CSV with header `t,mu,log_mu_tilde,log_frob`, 17 significant digits.
void write_trace_csv(std::ostream& out, const SimilarityTrace& trace);
SimilarityTrace read_trace_csv(std::istream& in);

}  // namespace oversmooth
