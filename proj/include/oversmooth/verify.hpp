#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oversmooth/config.hpp"
#include "oversmooth/dynamics.hpp"
#include "oversmooth/rate_theory.hpp"

namespace oversmooth {

struct WindowPolicy {
  double tail_fraction = 0.5;
  std::optional<std::pair<std::size_t, std::size_t>> range;  // [t_lo, t_hi]

  static WindowPolicy tail(double f) { return {f, std::nullopt}; }
  static WindowPolicy between(std::size_t lo, std::size_t hi) {
    return {0.0, std::make_pair(lo, hi)};
  }
};

struct FitResult {
  double rate = 1.0;   // exp(slope / 2)
  double slope = 0.0;  // of log mu per step
  std::size_t t_lo = 0;
  std::size_t t_hi = 0;
  double r_squared = 1.0;
  bool truncated = false;
};

inline constexpr std::size_t kMinFitSteps = 200;
inline constexpr std::size_t kMinWindow = 50;

// Least-squares slope of log mu(t) against t over the window; the tail
// policy takes the last fraction of the usable (positive, un-truncated)
// records. Throws kAllTruncated when no usable step remains and
// kWindowTooShort below 200 usable steps or a window under 50 steps.
FitResult fit_rate(const SimilarityTrace& trace,
                   const WindowPolicy& policy = WindowPolicy::tail(0.5));

enum class Check { kMatch, kBound };
enum class Verdict { kMatch, kBoundSatisfied, kViolation };

const char* to_string(Check c);
const char* to_string(Verdict v);

struct Scenario {
  std::string id;
  ExperimentConfig config;
  // kMatch scenarios compare against the prediction; residual scenarios
  // whose ratio is only a lower bound are scored as kBound automatically.
  Check check = Check::kMatch;
  double tolerance = 2e-2;
  // Assert the spectrum of P is real to 1e-9.
  bool require_real_spectrum = false;
};

const std::vector<Scenario>& scenario_catalog();
// Throws kConfig for an unknown id.
const Scenario& find_scenario(const std::string& id);
// Shorter runs and cheaper prediction effort.
Scenario fast_variant(const Scenario& s);

struct Empirical {
  double rate_mean_geo = 1.0;
  double rate_std = 0.0;
  std::size_t t_lo = 0;
  std::size_t t_hi = 0;
  double r_squared = 1.0;  // smallest over trials
  std::size_t truncated_trials = 0;
  std::vector<double> per_trial;
};

struct VerificationReport {
  Scenario scenario;
  RateEffort effort;
  RateEstimate predicted;
  bool equality = true;
  Check scored_as = Check::kMatch;
  Empirical empirical;
  Verdict verdict = Verdict::kMatch;
  std::string diagnostic;
};

// Runs the scenario's trials, fits each, computes the prediction and scores
// it. A scenario graph that is not primitive raises kConfig.
VerificationReport verify_scenario(const Scenario& s, const RateEffort& effort);

// Traces for each trial of a config; trials run in parallel.
std::vector<SimilarityTrace> run_trials(const ExperimentConfig& c);

nlohmann::json to_json(const VerificationReport& r);
// Rebuilds the scenario and effort embedded in a report.
std::pair<Scenario, RateEffort> scenario_from_report(const nlohmann::json& j);

// Pretty JSON with a trailing newline; keys sorted, no timestamps.
std::string report_text(const VerificationReport& r);

// Writes <dir>/<id>.json per report and <dir>/index.json.
void write_reports(const std::string& dir,
                   const std::vector<VerificationReport>& reports);

}  // namespace oversmooth
