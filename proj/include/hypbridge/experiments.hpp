#pragma once

// Named numerical experiments and their configuration. A config is one JSON
// object:
//   { "experiment": "cir-rate", "params": {...}, "seed": 1,
//     "n_paths": 200000, "h": 2e-4, "output_dir": "out" }
// Missing params, n_paths and h take the experiment defaults.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypbridge/report.hpp"
#include "json.hpp"

namespace hypbridge::experiments {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::optional<std::size_t> n_paths;
  std::optional<double> h;
  std::string output_dir = "out";
  int threads = 0;  // 0: HYPBRIDGE_THREADS or the hardware concurrency
};

struct ExperimentInfo {
  std::string name;
  std::string anchor;
  std::string description;
  std::size_t default_paths;  // 0 when the experiment draws no paths
  double default_h;           // 0 when the experiment does not discretize time
};

const std::vector<ExperimentInfo>& registry();
const ExperimentInfo* find_experiment(const std::string& name);

// Structural parse; throws ConfigError on a malformed document.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::json to_json(const ExperimentConfig& config);

// Empty iff run() accepts the config.
std::vector<std::string> validate(const ExperimentConfig& config);

// Runs a config; throws ConfigError if validate() reports anything and lets
// NumericFailure from the numerical core propagate.
report::ReportBundle run(const ExperimentConfig& config);

}  // namespace hypbridge::experiments
