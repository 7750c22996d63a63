#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "oversmooth/dynamics.hpp"
#include "oversmooth/ensemble.hpp"
#include "oversmooth/graph.hpp"
#include "oversmooth/transition.hpp"

namespace oversmooth {

inline constexpr const char* kVersion = "0.1.0";

// Ensemble spec strings:
//   deterministic:identity | deterministic:zero | deterministic:negidentity |
//   deterministic:scaled:C | ginibre:TAU | bounded:R | simdiag-uniform:R |
//   simdiag-twopoint:R | xavier
// Throws kConfig on a malformed spec.
WeightEnsemble make_ensemble(const std::string& spec, std::size_t d,
                             std::uint64_t seed);

struct ExperimentConfig {
  std::string graph = "complete:4";  // generator spec, ignored if edges set
  std::string edges;                 // edge-list path
  bool lcc = false;
  Normalization kind = Normalization::kRowNormalized;
  std::string ensemble = "ginibre:1";
  std::size_t dim = 32;
  Propagation mode = Propagation::rs(0.1);
  Activation activation = Activation::identity();
  std::size_t steps = 1000;
  std::size_t trials = 15;
  std::uint64_t seed = 1;
  std::string out = "out";
};

// Throws kConfig when alpha <= 0 in rs mode, T or trials is 0, or d is 0.
void validate(const ExperimentConfig& c);

Graph load_graph(const ExperimentConfig& c);

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

// INI sections [graph] (source, edges, lcc, kind), [ensemble] (spec, dim),
// [dynamics] (mode, alpha, activation, slope, steps), [run] (trials, seed,
// out). Keys not present keep the values of `base`. Throws kConfig.
ExperimentConfig load_ini(const std::string& path,
                          const ExperimentConfig& base = {});

}  // namespace oversmooth
