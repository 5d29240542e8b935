#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stratthresh/best_response.hpp"

namespace stratthresh {

struct SimulationOptions {
  // Every manipulator is caught, and agents know it (they respond with eps = 1).
  bool auditing_everyone = false;
  // Unqualified agents cannot manipulate; all of them improve.
  bool manipulation_disabled = false;
  // Agents keep their initial features (the non-strategic world).
  bool no_response = false;
  // Keep per-agent records (features, labels, actions).
  bool retain_agents = false;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

enum class Action : std::uint8_t { None, Manipulate, Improve };

struct AgentRecord {
  double initial_x;
  double x;
  bool initially_qualified;
  bool qualified;  // after the round
  Action action;
  bool caught;
  bool accepted;
};

struct SimulationResult {
  std::size_t n = 0;
  std::size_t unqualified = 0;
  std::size_t manipulators = 0;
  std::size_t caught = 0;
  std::size_t accepted = 0;
  std::size_t qualified_after = 0;
  std::size_t reward_plus = 0;   // accepted and qualified
  std::size_t reward_minus = 0;  // accepted and unqualified
  double u = 1.0;
  std::vector<AgentRecord> agents;  // only with retain_agents

  double manipulation_rate() const;  // among unqualified
  double mean_utility() const;
  double utility_standard_error() const;
  double qualification_rate() const;  // after the round
  double caught_among_unqualified() const;
  double caught_among_all() const;
  double acceptance_rate() const;

  std::vector<double> initial_features() const;
  std::vector<double> final_features() const;
};

// Plays one round of the game for n agents. Agents are split into fixed-size
// shards whose random streams derive from (seed, shard index), so the result
// depends only on the inputs, never on the thread count.
SimulationResult simulate(const PopulationModel& model, double theta, std::size_t n,
                          std::uint64_t seed, const SimulationOptions& options = {});

// Piecewise-linear cdf through the sorted samples at levels (i-1)/(n-1).
FeatureDistribution empirical_cdf(std::span<const double> samples);

// CSV `x,label,action,caught,accepted`; action 0 none, 1 manipulate, 2 improve.
void dump_agents_csv(const SimulationResult& result, const std::filesystem::path& path);

}  // namespace stratthresh
