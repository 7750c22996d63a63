#include "oversmooth/verify.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>

#include "oversmooth/error.hpp"
#include "oversmooth/parallel.hpp"

namespace oversmooth {

const char* to_string(Check c) {
  return c == Check::kMatch ? "match" : "bound";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kMatch: return "match";
    case Verdict::kBoundSatisfied: return "bound_satisfied";
    case Verdict::kViolation: return "violation";
  }
  return "violation";
}

FitResult fit_rate(const SimilarityTrace& trace, const WindowPolicy& policy) {
  std::size_t usable = 0;
  while (usable < trace.records.size() && trace.records[usable].mu > 0.0) ++usable;
  const bool truncated = trace.truncated || usable < trace.records.size();
  if (usable <= 1 && truncated) {
    throw Error(ErrorCode::kAllTruncated, "no usable step before truncation");
  }
  const std::size_t first = trace.records.empty() ? 0 : trace.records.front().t;
  const std::size_t steps = usable == 0 ? 0 : usable - 1;
  if (steps < kMinFitSteps) {
    throw Error(ErrorCode::kWindowTooShort,
                std::to_string(steps) + " usable steps, need " +
                    std::to_string(kMinFitSteps));
  }
  std::size_t lo = 0, hi = steps;  // offsets into records
  if (policy.range) {
    if (policy.range->first < first || policy.range->second > first + steps ||
        policy.range->second <= policy.range->first) {
      throw Error(ErrorCode::kWindowTooShort, "window outside the usable trace");
    }
    lo = policy.range->first - first;
    hi = policy.range->second - first;
  } else {
    if (!(policy.tail_fraction > 0.0 && policy.tail_fraction <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "tail fraction must be in (0, 1]");
    }
    lo = steps - static_cast<std::size_t>(std::floor(policy.tail_fraction * steps));
  }
  if (hi - lo < kMinWindow) {
    throw Error(ErrorCode::kWindowTooShort,
                "window of " + std::to_string(hi - lo) + " steps, need " +
                    std::to_string(kMinWindow));
  }
  const std::size_t m = hi - lo + 1;
  // Values are taken relative to the window start so a flat trace gives an
  // exactly zero slope.
  const double t0 = static_cast<double>(trace.records[lo].t);
  const double y0 = std::log(trace.records[lo].mu);
  std::vector<double> ts, ys;
  for (std::size_t k = lo; k <= hi; ++k) {
    ts.push_back(static_cast<double>(trace.records[k].t) - t0);
    ys.push_back(std::log(trace.records[k].mu) - y0);
  }
  double tbar = 0.0, ybar = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    tbar += ts[k];
    ybar += ys[k];
  }
  tbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double dt = ts[k] - tbar;
    const double dy = ys[k] - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  FitResult out;
  out.slope = sty / stt;
  out.rate = std::exp(out.slope / 2.0);
  out.t_lo = trace.records[lo].t;
  out.t_hi = trace.records[hi].t;
  out.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 1.0;
  out.truncated = truncated;
  return out;
}

namespace {

Scenario make(const std::string& id, const std::string& graph,
              const std::string& ensemble, Propagation mode,
              std::size_t steps, Check check = Check::kMatch) {
  Scenario s;
  s.id = id;
  s.check = check;
  auto& c = s.config;
  c.graph = graph;
  c.ensemble = ensemble;
  c.dim = 8;
  c.mode = mode;
  c.steps = steps;
  c.trials = 8;
  c.seed = 1;
  c.out = "reports";
  return s;
}

std::vector<Scenario> build_catalog() {
  const auto nrs = Propagation::nrs();
  std::vector<Scenario> v;
  v.push_back(make("nrs-K4-ginibre", "complete:4", "ginibre:1", nrs, 2000));
  v.push_back(make("nrs-K4-identity", "complete:4", "deterministic:identity", nrs, 2000));
  v.push_back(make("nrs-K4-simdiag", "complete:4", "simdiag-uniform:1", nrs, 2000));
  v.push_back(make("nrs-C5-ginibre", "cycle:5", "ginibre:1", nrs, 2000));
  v.push_back(make("nrs-K4pendant-ginibre", "pendant:complete:4", "ginibre:1", nrs, 2000));
  v.back().require_real_spectrum = true;
  v.push_back(make("nrs-er100-ginibre", "er:100:0.08:7", "ginibre:1", nrs, 2000));
  v.push_back(make("nrs-sbm-ginibre", "sbm:50,50:0.3:0.02:11", "ginibre:1", nrs, 2000));
  v.push_back(make("rs-K4-identity", "complete:4", "deterministic:identity",
                   Propagation::rs(1.0), 2000));
  v.push_back(make("rs-K4-negidentity", "complete:4", "deterministic:negidentity",
                   Propagation::rs(0.5), 2000));
  v.push_back(make("rs-K4-W0", "complete:4", "deterministic:zero",
                   Propagation::rs(0.1), 1000));
  v.push_back(make("rs-K4-ginibre", "complete:4", "ginibre:1", Propagation::rs(0.5), 2000));
  v.push_back(make("rs-C5-ginibre", "cycle:5", "ginibre:1", Propagation::rs(0.5), 2000));
  v.push_back(make("rs-K4-bounded", "complete:4", "bounded:1", Propagation::rs(0.5),
                   2000, Check::kBound));
  v.push_back(make("rs-K4-simdiag-symmetric", "complete:4", "simdiag-twopoint:1",
                   Propagation::rs(0.5), 5000));
  return v;
}

double bound_radius(const std::string& ensemble) {
  return std::stod(ensemble.substr(ensemble.find(':') + 1));
}

}  // namespace

const std::vector<Scenario>& scenario_catalog() {
  static const std::vector<Scenario> catalog = build_catalog();
  return catalog;
}

const Scenario& find_scenario(const std::string& id) {
  for (const auto& s : scenario_catalog()) {
    if (s.id == id) return s;
  }
  throw Error(ErrorCode::kConfig, "unknown scenario '" + id + "'");
}

Scenario fast_variant(const Scenario& s) {
  Scenario f = s;
  f.config.steps = std::max<std::size_t>(s.config.steps / 2, 600);
  f.config.trials = std::min<std::size_t>(s.config.trials, 4);
  return f;
}

std::vector<SimilarityTrace> run_trials(const ExperimentConfig& c) {
  validate(c);
  const Graph g = load_graph(c);
  const TransitionMatrix tm = build_transition(g, c.kind);
  const WeightEnsemble ens = make_ensemble(c.ensemble, c.dim, c.seed);
  std::vector<SimilarityTrace> traces(c.trials);
  parallel_for(c.trials, [&](std::size_t i) {
    const Eigen::MatrixXd x0 = initial_features(c.dim, tm.size(), c.seed, i);
    traces[i] = run_trajectory(x0, tm, ens, c.mode, c.activation, c.steps, i);
  });
  return traces;
}

VerificationReport verify_scenario(const Scenario& s, const RateEffort& effort) {
  const ExperimentConfig& c = s.config;
  validate(c);
  const Graph g = load_graph(c);
  const TransitionMatrix tm = build_transition(g, c.kind);
  if (!tm.is_primitive()) {
    throw Error(ErrorCode::kConfig, "scenario " + s.id + ": graph is not primitive (" +
                                        tm.primitivity().refutation + ")");
  }
  VerificationReport r;
  r.scenario = s;
  r.effort = effort;
  r.scored_as = s.check;

  if (s.require_real_spectrum) {
    double worst = 0.0;
    for (const auto& lam : tm.spectrum()) worst = std::max(worst, std::abs(lam.imag()));
    if (worst >= 1e-9) {
      r.diagnostic += "spectrum has imaginary part " + std::to_string(worst) + "; ";
    }
  }

  if (c.mode.kind == PropagationKind::kNrs) {
    r.predicted = predict_nrs_rate(tm);
  } else if (s.check == Check::kBound) {
    const double rw = bound_radius(c.ensemble);
    const double lb = bounded_ratio_lower_bound(tm, c.mode.alpha, rw);
    r.predicted = RateEstimate::from_log(std::log(lb), 0.0, RateMethod::kBoundInterval, 0);
    r.predicted.value = lb;
    r.predicted.interval = std::make_pair(lb, 1.0);
    r.equality = false;
  } else {
    const WeightEnsemble ens = make_ensemble(c.ensemble, c.dim, c.seed);
    const ResidualPrediction p = predict_rs_rate(tm, ens, c.mode.alpha, effort);
    if (!p.applicable) {
      throw Error(ErrorCode::kConfig, "scenario " + s.id + ": " + p.diagnostic);
    }
    r.predicted = p.ratio;
    r.equality = p.equality;
    r.diagnostic += p.diagnostic;
    if (!p.equality) r.scored_as = Check::kBound;
  }

  const auto traces = run_trials(c);
  auto& e = r.empirical;
  double sum_log = 0.0;
  e.t_lo = static_cast<std::size_t>(-1);
  for (const auto& tr : traces) {
    const FitResult fit = fit_rate(tr);
    e.per_trial.push_back(fit.rate);
    sum_log += std::log(fit.rate);
    e.t_lo = std::min(e.t_lo, fit.t_lo);
    e.t_hi = std::max(e.t_hi, fit.t_hi);
    e.r_squared = std::min(e.r_squared, fit.r_squared);
    if (fit.truncated) ++e.truncated_trials;
  }
  const double n = static_cast<double>(traces.size());
  e.rate_mean_geo = std::exp(sum_log / n);
  if (traces.size() > 1) {
    double mean = 0.0, ss = 0.0;
    for (double x : e.per_trial) mean += x / n;
    for (double x : e.per_trial) ss += (x - mean) * (x - mean);
    e.rate_std = std::sqrt(ss / (n - 1.0));
  }

  const double emp = e.rate_mean_geo;
  if (r.scored_as == Check::kMatch) {
    r.verdict = std::abs(emp - r.predicted.value) <= s.tolerance ? Verdict::kMatch
                                                                 : Verdict::kViolation;
  } else {
    const double floor = r.predicted.value - 3.0 * r.predicted.std_err;
    r.verdict = emp >= floor - s.tolerance ? Verdict::kBoundSatisfied : Verdict::kViolation;
  }
  if (s.require_real_spectrum && !r.diagnostic.empty() &&
      r.diagnostic.find("imaginary") != std::string::npos) {
    r.verdict = Verdict::kViolation;
  }
  return r;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario.id;
  nlohmann::json cfg = to_json(r.scenario.config);
  cfg["check"] = to_string(r.scenario.check);
  cfg["tolerance"] = r.scenario.tolerance;
  cfg["require_real_spectrum"] = r.scenario.require_real_spectrum;
  cfg["effort"] = {{"qr_steps", r.effort.qr_steps},
                   {"qr_replicas", r.effort.qr_replicas},
                   {"mc_samples", r.effort.mc_samples},
                   {"seed", r.effort.seed}};
  j["config"] = cfg;
  nlohmann::json pred = {{"value", r.predicted.value},
                         {"stderr", r.predicted.std_err},
                         {"method", to_string(r.predicted.method)},
                         {"equality", r.equality},
                         {"scored_as", to_string(r.scored_as)}};
  if (r.predicted.interval) {
    pred["interval"] = {r.predicted.interval->first, r.predicted.interval->second};
  }
  j["predicted"] = pred;
  const auto& e = r.empirical;
  j["empirical"] = {{"rate_mean_geo", e.rate_mean_geo},
                    {"rate_std", e.rate_std},
                    {"window", {e.t_lo, e.t_hi}},
                    {"r_squared", e.r_squared},
                    {"truncated_trials", e.truncated_trials},
                    {"per_trial", e.per_trial}};
  j["verdict"] = to_string(r.verdict);
  std::vector<std::size_t> trial_ids(r.scenario.config.trials);
  for (std::size_t i = 0; i < trial_ids.size(); ++i) trial_ids[i] = i;
  j["seeds"] = {{"root", r.scenario.config.seed},
                {"trials", trial_ids},
                {"rate", r.effort.seed}};
  j["versions"] = {{"oversmooth", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  j["diagnostic"] = r.diagnostic;
  return j;
}

std::pair<Scenario, RateEffort> scenario_from_report(const nlohmann::json& j) {
  Scenario s;
  RateEffort effort;
  try {
    s.id = j.at("scenario").get<std::string>();
    const auto& cfg = j.at("config");
    s.config = config_from_json(cfg);
    const auto check = cfg.at("check").get<std::string>();
    if (check != "match" && check != "bound") {
      throw Error(ErrorCode::kConfig, "unknown check '" + check + "'");
    }
    s.check = check == "match" ? Check::kMatch : Check::kBound;
    s.tolerance = cfg.at("tolerance").get<double>();
    s.require_real_spectrum = cfg.at("require_real_spectrum").get<bool>();
    const auto& ef = cfg.at("effort");
    effort.qr_steps = ef.at("qr_steps").get<std::size_t>();
    effort.qr_replicas = ef.at("qr_replicas").get<std::size_t>();
    effort.mc_samples = ef.at("mc_samples").get<std::size_t>();
    effort.seed = ef.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("report JSON: ") + e.what());
  }
  return {s, effort};
}

std::string report_text(const VerificationReport& r) {
  return to_json(r).dump(2) + "\n";
}

void write_reports(const std::string& dir,
                   const std::vector<VerificationReport>& reports) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
  nlohmann::json index = nlohmann::json::array();
  for (const auto& r : reports) {
    const std::string file = r.scenario.id + ".json";
    std::ofstream out(fs::path(dir) / file, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + file);
    out << report_text(r);
    index.push_back({{"scenario", r.scenario.id},
                     {"verdict", to_string(r.verdict)},
                     {"file", file}});
  }
  std::ofstream out(fs::path(dir) / "index.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write index.json");
  out << nlohmann::json{{"reports", index}, {"version", kVersion}}.dump(2) << "\n";
}

}  // namespace oversmooth
