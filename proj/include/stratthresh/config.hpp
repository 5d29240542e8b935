#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratthresh/errors.hpp"
#include "stratthresh/fairness.hpp"

namespace stratthresh {

// A validation error whose message starts with the offending field path,
// e.g. "scenario.groups[0].alpha: must lie in (0, 1)".
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : ValidationError(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Reads one JSON object field by field and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& object, std::string path);

  bool has(const std::string& key) const;
  std::string field(const std::string& key) const;
  const std::string& path() const { return path_; }

  const nlohmann::json& required(const std::string& key);
  std::optional<nlohmann::json> optional(const std::string& key);

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::size_t count(const std::string& key, std::size_t fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  // A list of numbers, or {"start", "stop", "step"} expanded inclusively.
  std::vector<double> grid(const std::string& key);
  std::vector<double> grid(const std::string& key, std::vector<double> fallback);

  // Throws ConfigError naming the first key that was never read.
  void finish() const;

 private:
  const nlohmann::json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

struct ExperimentConfig {
  std::string task;
  std::vector<NamedModel> groups;  // empty when the task needs no scenario
  FairnessMetric metric = FairnessMetric::EqOpt;
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path base_dir = ".";  // input paths resolve against this
};

inline constexpr double kDefaultCostStd = 0.5;

// Distribution spec: {"family": "gaussian", "mean", "std"},
// {"family": "beta", "a", "b"} or {"family": "grid", "path"}.
FeatureDistribution parse_distribution(const nlohmann::json& spec, const std::string& path,
                                       const std::filesystem::path& base_dir);
// Gaussian (mean defaults to 0, std to kDefaultCostStd) or grid.
CostDiffDistribution parse_cost_diff(const nlohmann::json& spec, const std::string& path,
                                     const std::filesystem::path& base_dir);

ExperimentConfig parse_config(const nlohmann::json& document,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

// The config's two groups; ConfigError unless exactly two are present.
GroupScenario two_group_scenario(const ExperimentConfig& config);

nlohmann::json distribution_to_json(const FeatureDistribution& dist);
// A "scenario" object in the config schema. Grid laws cannot be inlined and
// are rejected.
nlohmann::json scenario_to_json(const std::vector<NamedModel>& groups, FairnessMetric metric);

}  // namespace stratthresh
