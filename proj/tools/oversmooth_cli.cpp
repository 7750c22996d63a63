#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oversmooth/config.hpp"
#include "oversmooth/error.hpp"
#include "oversmooth/io.hpp"
#include "oversmooth/rate_theory.hpp"
#include "oversmooth/svg.hpp"
#include "oversmooth/verify.hpp"

namespace fs = std::filesystem;
using namespace oversmooth;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitMath = 2;
constexpr int kExitViolation = 3;

struct GraphArgs {
  std::size_t complete = 0;
  std::size_t cycle = 0;
  std::string edges;
  std::string spec;
  bool lcc = false;
  std::string kind = "row";

  void attach(CLI::App* app) {
    auto* g = app->add_option_group("graph");
    g->add_option("--complete", complete, "complete graph K_n");
    g->add_option("--cycle", cycle, "cycle graph C_n");
    g->add_option("--edges", edges, "edge-list file");
    g->add_option("--graph", spec,
                  "generator spec (complete:N, cycle:N, er:N:P:SEED, "
                  "sbm:S1,S2:PIN:POUT:SEED, pendant:SPEC)");
    g->require_option(0, 1);
    app->add_flag("--lcc", lcc, "restrict to the largest connected component");
    app->add_option("--kind", kind, "row or sym normalization")
        ->check(CLI::IsMember({"row", "sym"}));
  }
  bool given() const {
    return complete || cycle || !edges.empty() || !spec.empty();
  }
  // Overrides the graph fields of `c` when a graph flag was given.
  void apply(ExperimentConfig& c, const CLI::App* app) const {
    if (complete) c.graph = "complete:" + std::to_string(complete);
    if (cycle) c.graph = "cycle:" + std::to_string(cycle);
    if (!spec.empty()) c.graph = spec;
    if (given()) c.edges = edges;
    if (app->count("--lcc")) c.lcc = lcc;
    if (app->count("--kind")) c.kind = parse_normalization(kind);
  }
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("OVERSMOOTH_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && end != env) return v;
    throw Error(ErrorCode::kConfig, "OVERSMOOTH_SEED is not an unsigned integer");
  }
  return 1;
}

std::string complex_text(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.10g%+.10gi", z.real(), z.imag());
  return buf;
}

json estimate_json(const RateEstimate& r) {
  json j = {{"value", r.value},
            {"log_value", r.log_value},
            {"stderr", r.std_err},
            {"method", to_string(r.method)},
            {"effort", r.effort}};
  if (r.interval) j["interval"] = {r.interval->first, r.interval->second};
  return j;
}

// ---- spectrum ----

struct SpectrumCmd {
  GraphArgs graph;
  bool as_json = false;
  std::size_t show = 10;
};

int run_spectrum(const SpectrumCmd& cmd, const CLI::App* app) {
  if (!cmd.graph.given()) throw Error(ErrorCode::kConfig, "spectrum needs a graph");
  ExperimentConfig c;
  cmd.graph.apply(c, app);
  Graph g = c.edges.empty() ? generate(c.graph) : load_edge_list(c.edges).graph;
  json out;
  out["input_vertices"] = g.num_vertices();
  out["input_edges"] = g.num_edges();
  if (c.lcc) {
    g = largest_connected_component(g).graph;
    out["lcc_vertices"] = g.num_vertices();
    out["lcc_edges"] = g.num_edges();
  }
  const TransitionMatrix tm = build_transition(g, c.kind);
  const auto& cert = tm.primitivity();
  out["kind"] = to_string(c.kind);
  out["primitive"] = cert.primitive;
  if (!cert.primitive) {
    out["refutation"] = cert.refutation;
    if (cmd.as_json) std::cout << out.dump(2) << "\n";
    std::cerr << "not primitive: " << cert.refutation << "\n";
    return kExitMath;
  }
  out["exponent"] = cert.exponent;
  out["exponent_exact"] = cert.exponent_exact;
  const SecondEigenvalues second = second_eigenvalues(tm);
  out["lambda2"] = second.magnitude;
  json tied = json::array();
  for (const auto& z : second.tied) tied.push_back({z.real(), z.imag()});
  out["lambda2_tied"] = tied;
  out["spectrum_complete"] = tm.spectrum_complete();
  json head = json::array();
  for (std::size_t i = 0; i < std::min(cmd.show, tm.spectrum().size()); ++i) {
    head.push_back({tm.spectrum()[i].real(), tm.spectrum()[i].imag()});
  }
  out["leading_eigenvalues"] = head;
  if (cmd.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::printf("vertices %zu, edges %zu", g.num_vertices(), g.num_edges());
  if (c.lcc) {
    std::printf(" (largest component of %zu vertices, %zu edges)",
                out["input_vertices"].get<std::size_t>(),
                out["input_edges"].get<std::size_t>());
  }
  std::printf("\nkind %s\nprimitive, exponent %s%zu\n", to_string(c.kind),
              cert.exponent_exact ? "" : "<= ", cert.exponent);
  std::printf("lambda2 = %.12g (%zu tied)\n", second.magnitude, second.tied.size());
  std::printf("leading eigenvalues:");
  for (std::size_t i = 0; i < std::min(cmd.show, tm.spectrum().size()); ++i) {
    std::printf(" %s", complex_text(tm.spectrum()[i]).c_str());
  }
  std::printf("\n");
  return 0;
}

// ---- simulate ----

struct RunArgs {
  std::string ensemble;
  std::size_t dim = 0;
  std::string mode;
  double alpha = 0.0;
  std::string activation;
  double slope = 0.8;
  std::size_t steps = 0;
  std::size_t trials = 0;

  void attach(CLI::App* app) {
    app->add_option("--ensemble", ensemble, "weight ensemble spec");
    app->add_option("--dim", dim, "feature dimension d");
    app->add_option("--mode", mode, "nrs or rs")->check(CLI::IsMember({"nrs", "rs"}));
    app->add_option("--alpha", alpha, "residual step size");
    app->add_option("--activation", activation, "identity, relu or leaky_relu")
        ->check(CLI::IsMember({"identity", "relu", "leaky_relu"}));
    app->add_option("--slope", slope, "leaky_relu negative slope");
    app->add_option("--steps,-T", steps, "layers T");
    app->add_option("--trials", trials, "independent trials");
  }
  void apply(ExperimentConfig& c, const CLI::App* app) const {
    if (app->count("--ensemble")) c.ensemble = ensemble;
    if (app->count("--dim")) c.dim = dim;
    const double a = app->count("--alpha") ? alpha : c.mode.alpha > 0 ? c.mode.alpha : 0.1;
    if (app->count("--mode")) {
      c.mode = mode == "nrs" ? Propagation::nrs() : Propagation::rs(a);
    } else if (c.mode.kind == PropagationKind::kRs) {
      c.mode.alpha = a;
    }
    if (app->count("--activation")) {
      c.activation = parse_activation(activation, app->count("--slope") ? slope : 0.8);
    } else if (app->count("--slope")) {
      c.activation.slope = slope;
    }
    if (app->count("--steps")) c.steps = steps;
    if (app->count("--trials")) c.trials = trials;
  }
};

struct SimulateCmd {
  GraphArgs graph;
  RunArgs run;
};

int run_simulate(const SimulateCmd& cmd, ExperimentConfig c, const CLI::App* app) {
  cmd.graph.apply(c, app);
  cmd.run.apply(c, app);
  validate(c);
  const auto traces = run_trials(c);
  fs::create_directories(c.out);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
    std::ofstream out(fs::path(c.out) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + name);
    write_trace_csv(out, traces[i]);
  }
  const std::string title = c.graph + ", " + c.ensemble + ", " + to_string(c.mode);
  std::ofstream(fs::path(c.out) / "mu.svg", std::ios::binary) << emit_svg(traces, title);
  std::ofstream(fs::path(c.out) / "config.json", std::ios::binary)
      << to_json(c).dump(2) << "\n";
  std::size_t truncated = 0;
  for (const auto& tr : traces) truncated += tr.truncated;
  std::printf("wrote %zu traces, mu.svg and config.json to %s", traces.size(), c.out.c_str());
  if (truncated) std::printf(" (%zu truncated at mu < 1e-300)", truncated);
  std::printf("\n");
  return 0;
}

// ---- rate ----

struct RateCmd {
  std::string deterministic;
  double ginibre = 0.0;
  double bounded = 0.0;
  double simdiag_uniform = 0.0;
  double simdiag_twopoint = 0.0;
  bool xavier = false;
  std::size_t dim = 32;
  std::vector<double> beta;
  std::string method = "auto";
  bool ratio = false;
  double alpha = 0.1;
  GraphArgs graph;
  bool fast = false;
  std::size_t qr_steps = 0;
  std::size_t replicas = 0;
  std::size_t samples = 0;
};

std::string rate_ensemble_spec(const RateCmd& cmd, const CLI::App* app) {
  if (app->count("--deterministic")) return "deterministic:" + cmd.deterministic;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  if (app->count("--ginibre")) return "ginibre:" + num(cmd.ginibre);
  if (app->count("--bounded")) return "bounded:" + num(cmd.bounded);
  if (app->count("--simdiag-uniform")) return "simdiag-uniform:" + num(cmd.simdiag_uniform);
  if (app->count("--simdiag-twopoint")) return "simdiag-twopoint:" + num(cmd.simdiag_twopoint);
  if (cmd.xavier) return "xavier";
  throw Error(ErrorCode::kConfig, "rate needs an ensemble flag");
}

int run_rate(const RateCmd& cmd, std::uint64_t seed, const CLI::App* app) {
  RateEffort effort = cmd.fast ? RateEffort::fast() : RateEffort{};
  effort.seed = seed;
  if (cmd.qr_steps) effort.qr_steps = cmd.qr_steps;
  if (cmd.replicas) effort.qr_replicas = cmd.replicas;
  if (cmd.samples) effort.mc_samples = cmd.samples;
  const std::string spec = rate_ensemble_spec(cmd, app);
  const WeightEnsemble ens = make_ensemble(spec, cmd.dim, seed);
  json out = {{"ensemble", spec}, {"dim", cmd.dim}, {"seed", seed}};

  if (cmd.ratio) {
    if (!cmd.graph.given()) throw Error(ErrorCode::kConfig, "--ratio needs a graph");
    if (!(cmd.alpha > 0.0)) throw Error(ErrorCode::kConfig, "alpha must be > 0");
    ExperimentConfig c;
    cmd.graph.apply(c, app);
    const TransitionMatrix tm = build_transition(load_graph(c), c.kind);
    const ResidualPrediction p = predict_rs_rate(tm, ens, cmd.alpha, effort);
    out["alpha"] = cmd.alpha;
    out["ratio"] = estimate_json(p.ratio);
    out["equality"] = p.equality;
    out["applicable"] = p.applicable;
    out["conjugate_symmetry_ok"] = p.conjugate_symmetry_ok;
    out["lambda2"] = second_magnitude(tm);
    out["diagnostic"] = p.diagnostic;
    json per = json::array();
    for (const auto& e : p.per_eigenvalue) {
      per.push_back({{"lambda", {e.lambda.real(), e.lambda.imag()}},
                     {"multiplicity", e.multiplicity},
                     {"perron", e.perron},
                     {"rate", estimate_json(e.rate)}});
    }
    out["per_eigenvalue"] = per;
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (cmd.beta.size() != 2) throw Error(ErrorCode::kConfig, "--beta takes re,im");
  const Complex beta(cmd.beta[0], cmd.beta[1]);
  out["beta"] = cmd.beta;
  RateEstimate est;
  const bool qr = cmd.method == "qr";
  if (const auto* det = std::get_if<Deterministic>(&ens.family()); det && !qr) {
    est = deterministic_rate(det->w, beta);
  } else if (const auto* g = std::get_if<Ginibre>(&ens.family());
             g && !qr && beta.imag() == 0.0) {
    est = gaussian_rate_mc(g->tau, cmd.dim, beta.real(), effort.mc_samples, seed);
  } else if (std::holds_alternative<SimDiag>(ens.family()) && !qr) {
    est = simdiag_rate_mc(ens, beta, effort.mc_samples, seed);
  } else {
    est = lyapunov_qr(ens, beta, effort.qr_steps, effort.qr_replicas);
  }
  out["rate"] = estimate_json(est);
  if (const auto* b = std::get_if<BoundedUniformNorm>(&ens.family())) {
    out["bound"] = estimate_json(bounded_rate_interval(b->r_w, std::abs(beta)));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---- verify ----

struct VerifyCmd {
  std::vector<std::string> scenarios;
  bool all = false;
  bool fast = false;
  bool list = false;
  std::string out = "reports";
  std::string replay;
};

int run_verify(const VerifyCmd& cmd, std::uint64_t seed, bool seed_given) {
  if (cmd.list) {
    for (const auto& s : scenario_catalog()) std::printf("%s\n", s.id.c_str());
    return 0;
  }
  std::vector<std::pair<Scenario, RateEffort>> jobs;
  if (!cmd.replay.empty()) {
    std::ifstream in(cmd.replay);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + cmd.replay);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, std::string("report JSON: ") + e.what());
    }
    jobs.push_back(scenario_from_report(j));
  } else {
    std::vector<Scenario> chosen;
    if (cmd.all) chosen = scenario_catalog();
    for (const auto& id : cmd.scenarios) chosen.push_back(find_scenario(id));
    if (chosen.empty()) throw Error(ErrorCode::kConfig, "give --scenario, --all or --replay");
    for (auto s : chosen) {
      if (cmd.fast) s = fast_variant(s);
      if (seed_given) s.config.seed = seed;
      RateEffort effort = cmd.fast ? RateEffort::fast() : RateEffort{};
      effort.seed = s.config.seed;
      jobs.emplace_back(s, effort);
    }
  }
  std::vector<VerificationReport> reports;
  bool violation = false;
  for (const auto& [s, effort] : jobs) {
    reports.push_back(verify_scenario(s, effort));
    const auto& r = reports.back();
    std::printf("%-26s predicted %.6f  empirical %.6f  %s\n", s.id.c_str(),
                r.predicted.value, r.empirical.rate_mean_geo, to_string(r.verdict));
    violation |= r.verdict == Verdict::kViolation;
  }
  write_reports(cmd.out, reports);
  return violation ? kExitViolation : 0;
}

// ---- report ----

struct ReportCmd {
  std::string traces;
  std::string out;
  std::string title = "vertex similarity";
};

int run_report(const ReportCmd& cmd) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cmd.traces)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kConfig, "no CSV traces in " + cmd.traces);
  std::vector<SimilarityTrace> traces;
  for (const auto& f : files) {
    std::ifstream in(f);
    traces.push_back(read_trace_csv(in));
  }
  const std::string target = cmd.out.empty() ? (fs::path(cmd.traces) / "mu.svg").string() : cmd.out;
  std::ofstream(target, std::ios::binary) << emit_svg(traces, cmd.title);
  double sum_log = 0.0;
  std::size_t fitted = 0;
  for (const auto& tr : traces) {
    try {
      sum_log += std::log(fit_rate(tr).rate);
      ++fitted;
    } catch (const Error&) {
    }
  }
  std::printf("%zu traces -> %s", traces.size(), target.c_str());
  if (fitted) std::printf("; geometric-mean fitted rate %.6f over %zu", std::exp(sum_log / fitted), fitted);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oversmoothing-rate laboratory for deep linear GNN dynamics"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir;
  app.add_option("--seed", seed, "root seed (default: $OVERSMOOTH_SEED or 1)");
  app.add_option("--config", config_path, "INI experiment config; flags win")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");

  SpectrumCmd spectrum;
  auto* sp = app.add_subcommand("spectrum", "second eigenvalue, spectrum and primitivity of P");
  spectrum.graph.attach(sp);
  sp->add_flag("--json", spectrum.as_json, "print JSON");
  sp->add_option("--show", spectrum.show, "number of leading eigenvalues shown");

  SimulateCmd simulate;
  auto* sim = app.add_subcommand("simulate", "write per-trial mu traces and a plot");
  simulate.graph.attach(sim);
  simulate.run.attach(sim);

  RateCmd rate;
  auto* rt = app.add_subcommand("rate", "Lyapunov rates R(beta) or the residual ratio");
  auto* ens = rt->add_option_group("ensemble");
  ens->add_option("--deterministic", rate.deterministic, "identity, zero, negidentity, scaled:C");
  ens->add_option("--ginibre", rate.ginibre, "Ginibre with entry std tau");
  ens->add_option("--bounded", rate.bounded, "bounded operator norm r_W");
  ens->add_option("--simdiag-uniform", rate.simdiag_uniform, "simultaneously diagonalizable, Uniform(-r, r)");
  ens->add_option("--simdiag-twopoint", rate.simdiag_twopoint, "simultaneously diagonalizable, +-r");
  ens->add_flag("--xavier", rate.xavier, "Xavier uniform");
  ens->require_option(1);
  rt->add_option("--dim", rate.dim, "dimension d");
  rt->add_option("--beta", rate.beta, "complex beta as re,im")->delimiter(',')->expected(2);
  rt->add_option("--method", rate.method, "auto or qr")->check(CLI::IsMember({"auto", "qr"}));
  rt->add_flag("--ratio", rate.ratio, "residual ratio for a graph");
  rt->add_option("--alpha", rate.alpha, "residual step size (with --ratio)");
  rate.graph.attach(rt);
  rt->add_flag("--fast", rate.fast, "reduced effort");
  rt->add_option("--qr-steps", rate.qr_steps, "QR product length");
  rt->add_option("--replicas", rate.replicas, "QR replicas");
  rt->add_option("--samples", rate.samples, "Monte Carlo samples");

  VerifyCmd verify;
  auto* vf = app.add_subcommand("verify", "run verification scenarios");
  vf->add_option("--scenario", verify.scenarios, "scenario id (repeatable)");
  vf->add_flag("--all", verify.all, "every catalog scenario");
  vf->add_flag("--fast", verify.fast, "shorter runs");
  vf->add_flag("--list", verify.list, "list scenario ids");
  vf->add_option("--replay", verify.replay, "re-run from a report JSON");

  ReportCmd report;
  auto* rp = app.add_subcommand("report", "plot a directory of CSV traces");
  rp->add_option("--traces", report.traces, "directory with trace CSVs")->required();
  rp->add_option("--svg", report.out, "output SVG path");
  rp->add_option("--title", report.title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const bool seed_given = app.count("--seed") > 0;
    if (!seed_given) seed = default_seed();
    ExperimentConfig base;
    if (!config_path.empty()) base = load_ini(config_path);
    if (seed_given || config_path.empty()) base.seed = seed;
    if (!out_dir.empty()) base.out = out_dir;

    if (*sp) return run_spectrum(spectrum, sp);
    if (*sim) return run_simulate(simulate, base, sim);
    if (*rt) return run_rate(rate, base.seed, rt);
    if (*vf) {
      verify.out = out_dir.empty() ? "reports" : out_dir;
      return run_verify(verify, base.seed, seed_given || std::getenv("OVERSMOOTH_SEED"));
    }
    if (*rp) return run_report(report);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return is_math_precondition(e.code()) ? kExitMath : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
