#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace oversmooth {

// Point mass at a fixed W.
struct Deterministic {
  Eigen::MatrixXd w;
};

// Entries i.i.d. N(0, tau^2).
struct Ginibre {
  double tau = 1.0;
};

// Ginibre(1) rescaled to operator norm exactly r_w * u, u ~ Uniform(0, 1].
struct BoundedUniformNorm {
  double r_w = 1.0;
};

enum class ScalarLaw { kUniform, kTwoPoint };

// Uniform(-r, r) or the two-point law on {-r, +r}.
struct ScalarSupport {
  ScalarLaw law = ScalarLaw::kUniform;
  double r = 1.0;
};

// W = Q^{-1} diag(w) Q with w_i drawn independently from supports[i].
struct SimDiag {
  Eigen::MatrixXd q;
  Eigen::MatrixXd q_inv;
  std::vector<ScalarSupport> supports;
};

// Entries i.i.d. Uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
struct XavierUniform {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

using EnsembleFamily =
    std::variant<Deterministic, Ginibre, BoundedUniformNorm, SimDiag,
                 XavierUniform>;

// Seeded sampler over d x d real matrices. Immutable; sample() is a pure
// function of (seed, trial, t) and may be called from any thread.
class WeightEnsemble {
 public:
  static WeightEnsemble deterministic(Eigen::MatrixXd w);
  static WeightEnsemble ginibre(std::size_t d, double tau, std::uint64_t seed);
  static WeightEnsemble bounded(std::size_t d, double r_w, std::uint64_t seed);
  // Default Q: seeded Gaussian matrix redrawn until its condition number is
  // below 50.
  static WeightEnsemble simdiag(std::vector<ScalarSupport> supports,
                                std::uint64_t seed);
  static WeightEnsemble simdiag(Eigen::MatrixXd q,
                                std::vector<ScalarSupport> supports,
                                std::uint64_t seed);
  static WeightEnsemble xavier(std::size_t d, std::uint64_t seed);

  std::size_t dim() const { return d_; }
  const EnsembleFamily& family() const { return family_; }
  std::uint64_t seed() const { return seed_; }
  WeightEnsemble with_seed(std::uint64_t seed) const;

  // W^{(t)} for the given trial.
  Eigen::MatrixXd sample(std::uint64_t trial, std::uint64_t t) const;
  // The diagonal draw w behind a SimDiag sample (same stream as sample()).
  Eigen::VectorXd sample_diagonal(std::uint64_t trial, std::uint64_t t) const;

  // Short family name: deterministic, ginibre, bounded, simdiag, xavier.
  std::string family_name() const;

 private:
  WeightEnsemble(std::size_t d, EnsembleFamily family, std::uint64_t seed)
      : d_(d), family_(std::move(family)), seed_(seed) {}

  std::size_t d_ = 0;
  EnsembleFamily family_;
  std::uint64_t seed_ = 0;
};

Eigen::MatrixXd sample(const WeightEnsemble& ens, std::uint64_t trial,
                       std::uint64_t t);

double operator_norm(const Eigen::MatrixXd& m);
double condition_number(const Eigen::MatrixXd& m);

struct IntegrabilityEstimate {
  bool finite = true;
  double estimate = 0.0;  // E[max(log ||W||_2, 0)]
  double std_err = 0.0;
};

// Monte Carlo guardrail for the log-norm moment condition. `batch` selects a
// disjoint block of samples. Throws kInvalidArgument for n_samples < 1000.
IntegrabilityEstimate log_norm_integrability_check(const WeightEnsemble& ens,
                                                   std::size_t n_samples,
                                                   std::uint64_t batch = 0);

}  // namespace oversmooth
