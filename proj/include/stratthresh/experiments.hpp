#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stratthresh/fairness.hpp"

namespace stratthresh {

// Two groups sharing P1 = N(1,1), P0 = N(0,1), P_I = N(0.5,1) and a zero-mean
// Gaussian cost difference; they differ only in alpha.
GroupScenario gaussian_scenario(double q, double eps, double alpha_a, double alpha_b,
                                double cost_std);

struct TableRow {
  std::string label;  // nonstrategic | original | adjusted
  double theta_a, theta_b;
  double util_a, util_b;
  double pm_a, pm_b;
  double unfairness;
};

struct ThresholdTable {
  std::string name;
  AdjustmentPlan plan;
  Weight weight_a, weight_b;  // weights raised in the adjusted row
  double k;
  std::array<TableRow, 3> rows;
};

// Non-strategic optimum, original strategic optimum, and the optimum with
// each group's planned weight raised to k. Without a guaranteed plan both
// groups fall back to k1. Utilities are the strategic utility actually
// realized at each threshold.
ThresholdTable threshold_table(const std::string& name, const GroupScenario& scenario, double k);

// The three two-group Gaussian settings: (q, eps, alpha_a, alpha_b) =
// (0.5, 0.5, 0.2, 0.25), (0.25, 0.25, 0.4, 0.6), (0.2, 0.2, 0.3, 0.35).
std::vector<ThresholdTable> reproduce_gaussian_tables(double cost_std = 0.25, double k = 1.25);

// Header `row,theta_a,theta_b,util_a,util_b,pm_a,pm_b,unfairness`.
std::string table_csv(const ThresholdTable& table);
std::vector<TableRow> parse_table_csv(const std::string& text);

enum class NoisyParam { Q, Eps };
NoisyParam parse_noisy_param(const std::string& name);
std::string to_string(NoisyParam param);

struct NoiseSweepOptions {
  NoisyParam param = NoisyParam::Q;
  double noise_std = 0.1;
  std::size_t rounds = 10;
  std::uint64_t seed = 0;
  std::vector<double> weight_grid{1.0, 1.25};
};

struct MeanStd {
  double mean;
  double std;  // population standard deviation across rounds
};

struct NoiseSweepRecord {
  double k;
  MeanStd theta_a, theta_b;
  MeanStd util_a, util_b;
  MeanStd pm_a, pm_b;
  MeanStd unfairness;
};

// Each round draws one zero-mean Gaussian perturbation per group for the
// chosen parameter, clamps it into [0, 1], and lets the decision-maker optimize
// against the perturbed model. Thresholds are then scored on the true model.
// The planned weights come from the noiseless scenario.
std::vector<NoiseSweepRecord> noise_sweep(const GroupScenario& scenario, const AdjustmentPlan& plan,
                                          const NoiseSweepOptions& options);

std::string noise_sweep_csv(std::span<const NoiseSweepRecord> records);
std::vector<NoiseSweepRecord> parse_noise_sweep_csv(const std::string& text);

}  // namespace stratthresh
