#include "oversmooth/config.hpp"

#include <charconv>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "oversmooth/error.hpp"
#include "oversmooth/io.hpp"

namespace oversmooth {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    bad("bad number '" + s + "' in " + what);
  }
  return v;
}

std::string mode_name(const Propagation& p) {
  return p.kind == PropagationKind::kNrs ? "nrs" : "rs";
}

Propagation parse_mode(const std::string& name, double alpha) {
  if (name == "nrs") return Propagation::nrs();
  if (name == "rs") return Propagation::rs(alpha);
  bad("unknown mode '" + name + "'");
}

}  // namespace

WeightEnsemble make_ensemble(const std::string& spec, std::size_t d,
                             std::uint64_t seed) {
  if (d == 0) bad("ensemble dimension must be >= 1");
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  const auto dd = static_cast<Eigen::Index>(d);
  if (head == "deterministic") {
    if (arg == "identity") return WeightEnsemble::deterministic(Eigen::MatrixXd::Identity(dd, dd));
    if (arg == "zero") return WeightEnsemble::deterministic(Eigen::MatrixXd::Zero(dd, dd));
    if (arg == "negidentity") return WeightEnsemble::deterministic(-Eigen::MatrixXd::Identity(dd, dd));
    if (arg.rfind("scaled:", 0) == 0) {
      const double c = to_double(arg.substr(7), spec);
      return WeightEnsemble::deterministic(c * Eigen::MatrixXd::Identity(dd, dd));
    }
    bad("unknown deterministic matrix '" + arg + "'");
  }
  if (head == "xavier" && arg.empty()) return WeightEnsemble::xavier(d, seed);
  if (arg.empty()) bad("bad ensemble spec '" + spec + "'");
  const double v = to_double(arg, spec);
  if (!(v > 0.0)) bad("ensemble parameter must be > 0 in '" + spec + "'");
  if (head == "ginibre") return WeightEnsemble::ginibre(d, v, seed);
  if (head == "bounded") return WeightEnsemble::bounded(d, v, seed);
  if (head == "simdiag-uniform" || head == "simdiag-twopoint") {
    const ScalarLaw law = head == "simdiag-uniform" ? ScalarLaw::kUniform : ScalarLaw::kTwoPoint;
    return WeightEnsemble::simdiag(std::vector<ScalarSupport>(d, {law, v}), seed);
  }
  bad("bad ensemble spec '" + spec + "'");
}

void validate(const ExperimentConfig& c) {
  if (c.mode.kind == PropagationKind::kRs && !(c.mode.alpha > 0.0)) {
    bad("alpha must be > 0 in rs mode");
  }
  if (c.steps == 0) bad("T must be >= 1");
  if (c.trials == 0) bad("trials must be >= 1");
  if (c.dim == 0) bad("d must be >= 1");
  if (c.activation.kind == ActivationKind::kLeakyRelu && !(c.activation.slope >= 0.0)) {
    bad("leaky_relu slope must be >= 0");
  }
}

Graph load_graph(const ExperimentConfig& c) {
  Graph g = c.edges.empty() ? generate(c.graph) : load_edge_list(c.edges).graph;
  if (c.lcc) g = largest_connected_component(g).graph;
  return g;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["graph"] = c.graph;
  j["edges"] = c.edges;
  j["lcc"] = c.lcc;
  j["kind"] = to_string(c.kind);
  j["ensemble"] = c.ensemble;
  j["dim"] = c.dim;
  j["mode"] = mode_name(c.mode);
  j["alpha"] = c.mode.alpha;
  j["activation"] = to_string(c.activation);
  j["slope"] = c.activation.slope;
  j["steps"] = c.steps;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["out"] = c.out;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.graph = j.at("graph").get<std::string>();
    c.edges = j.at("edges").get<std::string>();
    c.lcc = j.at("lcc").get<bool>();
    c.kind = parse_normalization(j.at("kind").get<std::string>());
    c.ensemble = j.at("ensemble").get<std::string>();
    c.dim = j.at("dim").get<std::size_t>();
    c.mode = parse_mode(j.at("mode").get<std::string>(), j.at("alpha").get<double>());
    c.activation = parse_activation(j.at("activation").get<std::string>(),
                                    j.at("slope").get<double>());
    c.steps = j.at("steps").get<std::size_t>();
    c.trials = j.at("trials").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.out = j.at("out").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("config JSON: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_ini(const std::string& path, const ExperimentConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    bad(e.what());
  }
  ExperimentConfig c = base;
  const auto field = [&]<typename T>(const char* key, T& slot) {
    const auto raw = tree.get_optional<std::string>(key);
    if (!raw) return;
    const auto value = tree.get_optional<T>(key);
    if (!value) bad(std::string("config ") + path + ": bad value '" + *raw + "' for " + key);
    slot = *value;
  };
  try {
    field("graph.source", c.graph);
    field("graph.edges", c.edges);
    field("graph.lcc", c.lcc);
    std::string kind(to_string(c.kind));
    field("graph.kind", kind);
    c.kind = parse_normalization(kind);
    field("ensemble.spec", c.ensemble);
    field("ensemble.dim", c.dim);
    double alpha = c.mode.kind == PropagationKind::kRs ? c.mode.alpha : 0.1;
    std::string mode = mode_name(c.mode);
    field("dynamics.alpha", alpha);
    field("dynamics.mode", mode);
    c.mode = parse_mode(mode, alpha);
    std::string activation = to_string(c.activation);
    double slope = c.activation.slope;
    field("dynamics.activation", activation);
    field("dynamics.slope", slope);
    c.activation = parse_activation(activation, slope);
    field("dynamics.steps", c.steps);
    field("run.trials", c.trials);
    field("run.seed", c.seed);
    field("run.out", c.out);
  } catch (const pt::ptree_error& e) {
    bad(std::string("config ") + path + ": " + e.what());
  } catch (const Error& e) {
    bad(std::string("config ") + path + ": " + e.what());
  }
  validate(c);
  return c;
}

}  // namespace oversmooth
