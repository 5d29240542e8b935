#include "stratthresh/fairness.hpp"

#include <cmath>

#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

FairnessMetric parse_metric(const std::string& name) {
  if (name == "eqopt" || name == "EqOpt") return FairnessMetric::EqOpt;
  if (name == "dp" || name == "DP") return FairnessMetric::DP;
  throw ValidationError("unknown fairness metric '" + name + "' (expected eqopt or dp)");
}

std::string to_string(FairnessMetric metric) {
  return metric == FairnessMetric::EqOpt ? "eqopt" : "dp";
}

void validate(const GroupScenario& s) {
  try {
    validate(s.group_a.model);
  } catch (const ValidationError& e) {
    throw ValidationError("group '" + s.group_a.name + "': " + e.what());
  }
  try {
    validate(s.group_b.model);
  } catch (const ValidationError& e) {
    throw ValidationError("group '" + s.group_b.name + "': " + e.what());
  }
  if (s.group_a.model.u != s.group_b.model.u)
    throw ValidationError("u: both groups must share the same unit utility");
}

FeatureDistribution fairness_reference(const PopulationModel& m, FairnessMetric metric) {
  if (metric == FairnessMetric::EqOpt) return m.p1;
  return FeatureDistribution::mixture(m.alpha, m.p1, m.p0);
}

namespace {

double tail(const PopulationModel& m, FairnessMetric metric, double theta) {
  if (metric == FairnessMetric::EqOpt) return 1.0 - m.p1.cdf(theta);
  return 1.0 - (m.alpha * m.p1.cdf(theta) + (1.0 - m.alpha) * m.p0.cdf(theta));
}

GroupConditions conditions_for(const PopulationModel& m) {
  GroupConditions c{};
  c.regime = response_regime(m);
  c.theta_star = optimize(m, PreferenceWeights::original()).theta_star;
  c.theta_hat = optimize_nonstrategic(m).theta_star;
  c.c1_i = m.q + m.eps >= 1.0;
  if (!c.c1_i) {
    const double log_ratio = m.p1.log_pdf(c.theta_star) - m.p_improved.log_pdf(c.theta_star);
    const double log_bound = std::log((1.0 - m.q) / (1.0 - m.q - m.eps));
    c.c1_ii = log_ratio <= log_bound;
    c.c2_i = m.alpha < 0.5;
    c.c2_ii = log_ratio > log_bound &&
              manipulation_probability(m, c.theta_hat) > m.cost_diff.cdf(0.0);
  }
  return c;
}

}  // namespace

double unfairness(const GroupScenario& s, double theta_a, double theta_b) {
  return std::abs(tail(s.group_a.model, s.metric, theta_a) - tail(s.group_b.model, s.metric, theta_b));
}

AdvantagedGroup advantaged_group(const GroupScenario& s) {
  const double ta = tail(s.group_a.model, s.metric, optimize_nonstrategic(s.group_a.model).theta_star);
  const double tb = tail(s.group_b.model, s.metric, optimize_nonstrategic(s.group_b.model).theta_star);
  const bool tie = std::abs(ta - tb) <= 1e-12;
  return {tie || ta > tb ? GroupId::A : GroupId::B, tie, ta, tb};
}

ConditionReport check_incentive_conditions(const GroupScenario& s) {
  ConditionReport r{conditions_for(s.group_a.model), conditions_for(s.group_b.model),
                    advantaged_group(s).group, std::nullopt};
  const GroupConditions& adv = r.advantaged == GroupId::A ? r.a : r.b;
  const GroupConditions& dis = r.advantaged == GroupId::A ? r.b : r.a;
  if (r.a.condition1() && r.b.condition1()) r.scenario = 1;
  else if (r.a.condition2() && r.b.condition2()) r.scenario = 2;
  else if (adv.condition1() && dis.condition2()) r.scenario = 3;
  return r;
}

AdjustmentPlan plan_adjustment(const ConditionReport& r) {
  AdjustmentPlan p;
  if (!r.scenario) return p;
  p.scenario = r.scenario;
  switch (*r.scenario) {
    case 1:
      p.weight_a = p.weight_b = Weight::K1;
      break;
    case 2:
      p.weight_a = p.weight_b = Weight::K2;
      break;
    case 3:
      p.weight_a = r.advantaged == GroupId::A ? Weight::K1 : Weight::K2;
      p.weight_b = r.advantaged == GroupId::A ? Weight::K2 : Weight::K1;
      break;
    default:
      throw std::logic_error("plan_adjustment: unknown scenario");
  }
  return p;
}

AdjustmentPlan plan_adjustment(const GroupScenario& s) {
  return plan_adjustment(check_incentive_conditions(s));
}

std::vector<FairnessSweepRow> fairness_sweep(const GroupScenario& s, const AdjustmentPlan& plan,
                                             std::span<const double> grid) {
  if (!plan.weight_a || !plan.weight_b)
    throw ValidationError("fairness_sweep: plan names no weight to adjust");
  if (grid.empty()) throw ValidationError("fairness_sweep: grid must not be empty");
  const auto sweep_a = sweep_weights(s.group_a.model, *plan.weight_a, grid);
  const auto sweep_b = sweep_weights(s.group_b.model, *plan.weight_b, grid);
  std::vector<FairnessSweepRow> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& ra = sweep_a[i];
    const auto& rb = sweep_b[i];
    out.push_back({grid[i], ra.theta_star, rb.theta_star, ra.actual_utility, rb.actual_utility,
                   ra.p_manip, rb.p_manip, unfairness(s, ra.theta_star, rb.theta_star)});
  }
  return out;
}

std::string fairness_sweep_csv(std::span<const FairnessSweepRow> rows) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rows)
    out.push_back({r.k, r.theta_a, r.theta_b, r.util_a, r.util_b, r.pm_a, r.pm_b, r.unfairness});
  return render_csv({"k", "theta_a", "theta_b", "util_a", "util_b", "pm_a", "pm_b", "unfairness"}, out);
}

std::vector<FairnessSweepRow> parse_fairness_sweep_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  require_header(t, {"k", "theta_a", "theta_b", "util_a", "util_b", "pm_a", "pm_b", "unfairness"});
  std::vector<FairnessSweepRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({t.number(r, 0), t.number(r, 1), t.number(r, 2), t.number(r, 3), t.number(r, 4),
                   t.number(r, 5), t.number(r, 6), t.number(r, 7)});
  return out;
}

}  // namespace stratthresh
