#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oversmooth/ensemble.hpp"
#include "oversmooth/transition.hpp"

namespace oversmooth {

enum class RateMethod {
  kQrProduct,
  kClosedFormDeterministic,
  kClosedFormGaussianMc,
  kClosedFormSimdiagMc,
  kBoundInterval,
  kSpectral,
  kRatio,
};

const char* to_string(RateMethod m);

// Point estimate of an asymptotic exponential rate.
struct RateEstimate {
  double value = 1.0;      // exp(log_value); 0 when log_value = -inf
  double log_value = 0.0;
  RateMethod method = RateMethod::kSpectral;
  std::size_t effort = 0;  // steps per replica or MC samples
  double std_err = 0.0;    // on `value`
  double log_std_err = 0.0;  // on `log_value`
  std::optional<std::pair<double, double>> interval;

  static RateEstimate from_log(double log_value, double log_std_err,
                               RateMethod method, std::size_t effort);
};

// log R(beta, P_W): top Lyapunov exponent of prod (I + beta W^{(s)}), by
// iterating a random complex unit vector with per-step renormalization and
// averaging log-norm increments after a 10% burn-in. Replicas run in
// parallel with fixed per-replica streams. Requires steps >= 1000 and
// replicas >= 3; throws kDegenerateProduct if every restart of a replica
// collapses to the zero vector.
RateEstimate lyapunov_qr(const WeightEnsemble& ens, Complex beta,
                         std::size_t steps, std::size_t replicas);

// R(P_W) of prod W^{(s)} (no identity term). Diagnostic only: a collapse to
// zero is reported as value 0 instead of an error.
RateEstimate lyapunov_product(const WeightEnsemble& ens, std::size_t steps,
                              std::size_t replicas);

// rho(I + beta W) = max over spec(W) of |1 + beta mu|.
RateEstimate deterministic_rate(const Eigen::MatrixXd& w, Complex beta);

// exp((1/2) E log((1 + beta tau xi)^2 + beta^2 tau^2 chi^2_{d-1})).
// Same seed gives common random numbers across beta. Requires
// n_samples >= 1e5; throws kInvalidDim for d < 1.
RateEstimate gaussian_rate_mc(double tau, std::size_t d, double beta,
                              std::size_t n_samples, std::uint64_t seed);

// max_i exp(E log|1 + beta w_i|) for a SimDiag ensemble; two-point laws use
// the exact two-atom mean, uniform laws use Monte Carlo (n_samples >= 1e5).
// An atom at -1/beta gives log_value = -inf.
RateEstimate simdiag_rate_mc(const WeightEnsemble& ens, Complex beta,
                             std::size_t n_samples, std::uint64_t seed);

// [1 - |beta| r_W, 1 + |beta| r_W]; throws kStepTooLarge if |beta| r_W > 1.
RateEstimate bounded_rate_interval(double r_w, double beta_mag);

// (1 - alpha r_W min|lambda|) / (1 + alpha r_W), min over spec(P) \ {1}.
double bounded_ratio_lower_bound(const TransitionMatrix& tm, double alpha,
                                 double r_w);

// Non-residual prediction: second_magnitude(P). Throws kNotPrimitive.
RateEstimate predict_nrs_rate(const TransitionMatrix& tm);

struct RateEffort {
  std::size_t qr_steps = 100000;
  std::size_t qr_replicas = 8;
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 1;

  static RateEffort fast() { return {20000, 4, 200000, 1}; }
};

struct EigenvalueRate {
  Complex lambda;
  std::size_t multiplicity = 1;
  bool perron = false;
  RateEstimate rate;  // R(alpha lambda, P_W)
};

struct ResidualPrediction {
  RateEstimate ratio;
  // True when the ratio is the limit itself (P certified diagonalizable, or
  // W deterministic); otherwise it is only a lower bound.
  bool equality = false;
  // False when R(alpha lambda) estimates to 0 for every lambda.
  bool applicable = true;
  bool conjugate_symmetry_ok = true;
  std::string diagnostic;
  std::vector<EigenvalueRate> per_eigenvalue;
};

// Residual prediction: max_{spec \ 1} R(alpha lambda) / max_{spec} R(alpha
// lambda), using the ensemble's closed form where one exists. Complex
// eigenvalues are evaluated together with their conjugates.
ResidualPrediction predict_rs_rate(const TransitionMatrix& tm,
                                   const WeightEnsemble& ens, double alpha,
                                   const RateEffort& effort = {});

struct ShiftedLogMoments {
  std::vector<double> mean;         // f(a_k)
  std::vector<double> std_err;      // of each f(a_k)
  std::vector<double> diff_std_err; // of f(a_{k+1}) - f(a_k), paired
};

// f(a) = E log((a + xi)^2 + b) on a grid of a with common random numbers.
ShiftedLogMoments shifted_log_moments(const std::vector<double>& a, double b,
                                      std::size_t n_samples,
                                      std::uint64_t seed);

}  // namespace oversmooth
