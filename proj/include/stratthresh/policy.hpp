#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stratthresh/best_response.hpp"

namespace stratthresh {

// Multipliers on the three objective-difference terms. Normalized so that
// (1, 1, 1) is the original strategic objective and (0, 0, 0) the
// non-strategic one. Stored values multiply u (1 - alpha) phi_i.
struct PreferenceWeights {
  double k1 = 1.0;
  double k2 = 1.0;
  double k3 = 1.0;

  static constexpr PreferenceWeights original() { return {1.0, 1.0, 1.0}; }
  static constexpr PreferenceWeights nonstrategic() { return {0.0, 0.0, 0.0}; }
};

void validate(const PreferenceWeights& k);

enum class Weight { K1, K2, K3 };
Weight parse_weight(const std::string& name);
std::string to_string(Weight w);
PreferenceWeights with_weight(PreferenceWeights base, Weight which, double value);

struct Decomposition {
  double phi1;  // gain from successful improvement
  double phi2;  // loss from failed improvement
  double phi3;  // loss from undetected manipulation
};

// Expected utility when agents are assumed not to respond.
double nonstrategic_utility(const PopulationModel& model, double theta);

// Expected utility under the agents' best response. This is the utility the
// decision-maker actually receives at theta, whatever objective chose theta.
double strategic_utility(const PopulationModel& model, double theta);

// strategic - nonstrategic = u (1 - alpha) (phi1 - phi2 - phi3).
Decomposition decomposition(const PopulationModel& model, double theta);

double adjusted_objective(const PopulationModel& model, double theta, const PreferenceWeights& k);

struct OptimizationResult {
  double theta_star = 0.0;
  double objective_value = 0.0;
  double actual_utility = 0.0;
  bool at_boundary = false;
  std::size_t evaluations = 0;
};

struct OptimizeOptions {
  std::size_t grid_points = 4000;
  double tolerance = 1e-6;
};

// Root of pdf_1/pdf_0 = (1-alpha)/alpha, or the better bound when the root is
// outside theta_bounds.
OptimizationResult optimize_nonstrategic(const PopulationModel& model);

// Global maximum of the adjusted objective over theta_bounds: dense grid, then
// golden-section refinement inside the winning cell. Ties go to the smallest theta.
OptimizationResult optimize(const PopulationModel& model, const PreferenceWeights& k,
                            const OptimizeOptions& options = {});

struct ThresholdComparison {
  double theta_star;       // strategic optimum
  double theta_hat;        // non-strategic optimum
  bool strategic_lower;    // theta_star < theta_hat
  double min_manipulation; // min of P_M over the search grid
  bool hypothesis_met;     // min_manipulation <= 0.5
};

ThresholdComparison compare_strategic_nonstrategic(const PopulationModel& model);

struct SweepRecord {
  double k;
  double theta_star;
  double actual_utility;
  double p_manip;
};

// One record per grid value; the other two weights stay at 1.
std::vector<SweepRecord> sweep_weights(const PopulationModel& model, Weight which,
                                       std::span<const double> grid);

// Header `k,theta_star,actual_utility,p_manip`.
std::string sweep_csv(std::span<const SweepRecord> records);
std::vector<SweepRecord> parse_sweep_csv(const std::string& text);

}  // namespace stratthresh
