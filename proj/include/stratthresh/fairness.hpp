#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratthresh/best_response.hpp"
#include "stratthresh/policy.hpp"

namespace stratthresh {

enum class FairnessMetric { EqOpt, DP };
FairnessMetric parse_metric(const std::string& name);
std::string to_string(FairnessMetric metric);

struct NamedModel {
  std::string name;
  PopulationModel model;
};

struct GroupScenario {
  NamedModel group_a;
  NamedModel group_b;
  FairnessMetric metric = FairnessMetric::EqOpt;
};

void validate(const GroupScenario& scenario);

enum class GroupId { A, B };

// EqOpt: the qualified feature law. DP: the pre-response population law
// alpha * p1 + (1 - alpha) * p0.
FeatureDistribution fairness_reference(const PopulationModel& model, FairnessMetric metric);

// |P_a(x >= theta_a) - P_b(x >= theta_b)| under each group's reference law.
double unfairness(const GroupScenario& scenario, double theta_a, double theta_b);

struct AdvantagedGroup {
  GroupId group;
  bool tie;
  double tail_a;  // reference acceptance mass at group a's non-strategic optimum
  double tail_b;
};

AdvantagedGroup advantaged_group(const GroupScenario& scenario);

struct GroupConditions {
  ResponseRegime regime;
  double theta_star;
  double theta_hat;
  bool c1_i;   // q + eps >= 1
  bool c1_ii;  // pdf_1/pdf_I at theta_star <= (1-q)/(1-q-eps)
  bool c2_i;   // q + eps < 1 and alpha < 0.5
  bool c2_ii;  // ratio above the bound and P_M(theta_hat) > F_C(0)

  bool condition1() const { return c1_i || c1_ii; }
  bool condition2() const { return c2_i && c2_ii; }
};

struct ConditionReport {
  GroupConditions a;
  GroupConditions b;
  GroupId advantaged;
  std::optional<int> scenario;  // 1, 2 or 3 when a guaranteed adjustment exists
};

ConditionReport check_incentive_conditions(const GroupScenario& scenario);

struct AdjustmentPlan {
  std::optional<int> scenario;
  std::optional<Weight> weight_a;
  std::optional<Weight> weight_b;

  bool guaranteed() const { return scenario.has_value(); }
};

// Scenario 1: raise k1 for both. Scenario 2: raise k2 for both. Scenario 3:
// k1 for the advantaged group, k2 for the disadvantaged one. Otherwise no plan.
AdjustmentPlan plan_adjustment(const ConditionReport& report);
AdjustmentPlan plan_adjustment(const GroupScenario& scenario);

struct FairnessSweepRow {
  double k;
  double theta_a, theta_b;
  double util_a, util_b;
  double pm_a, pm_b;
  double unfairness;
};

// Both groups optimized independently with their planned weight set to each
// grid value; the remaining weights stay at 1.
std::vector<FairnessSweepRow> fairness_sweep(const GroupScenario& scenario,
                                             const AdjustmentPlan& plan,
                                             std::span<const double> grid);

// Header `k,theta_a,theta_b,util_a,util_b,pm_a,pm_b,unfairness`.
std::string fairness_sweep_csv(std::span<const FairnessSweepRow> rows);
std::vector<FairnessSweepRow> parse_fairness_sweep_csv(const std::string& text);

}  // namespace stratthresh
