#include "stratthresh/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

GroupScenario gaussian_scenario(double q, double eps, double alpha_a, double alpha_b, double cost_std) {
  auto group = [&](const std::string& name, double alpha) {
    return NamedModel{name, PopulationModel{alpha, FeatureDistribution::gaussian(1.0, 1.0),
                                            FeatureDistribution::gaussian(0.0, 1.0),
                                            FeatureDistribution::gaussian(0.5, 1.0),
                                            CostDiffDistribution::gaussian(0.0, cost_std), q, eps}};
  };
  return {group("a", alpha_a), group("b", alpha_b), FairnessMetric::EqOpt};
}

namespace {

TableRow score_row(const std::string& label, const GroupScenario& s, double theta_a, double theta_b) {
  const auto& a = s.group_a.model;
  const auto& b = s.group_b.model;
  return {label,
          theta_a,
          theta_b,
          strategic_utility(a, theta_a),
          strategic_utility(b, theta_b),
          manipulation_probability(a, theta_a),
          manipulation_probability(b, theta_b),
          unfairness(s, theta_a, theta_b)};
}

}  // namespace

ThresholdTable threshold_table(const std::string& name, const GroupScenario& s, double k) {
  validate(s);
  ThresholdTable t{name, plan_adjustment(s), Weight::K1, Weight::K1, k, {}};
  if (t.plan.guaranteed()) {
    t.weight_a = *t.plan.weight_a;
    t.weight_b = *t.plan.weight_b;
  }
  const auto& a = s.group_a.model;
  const auto& b = s.group_b.model;
  t.rows[0] = score_row("nonstrategic", s, optimize_nonstrategic(a).theta_star,
                        optimize_nonstrategic(b).theta_star);
  t.rows[1] = score_row("original", s, optimize(a, PreferenceWeights::original()).theta_star,
                        optimize(b, PreferenceWeights::original()).theta_star);
  t.rows[2] = score_row("adjusted", s,
                        optimize(a, with_weight(PreferenceWeights::original(), t.weight_a, k)).theta_star,
                        optimize(b, with_weight(PreferenceWeights::original(), t.weight_b, k)).theta_star);
  return t;
}

std::vector<ThresholdTable> reproduce_gaussian_tables(double cost_std, double k) {
  struct Setting {
    const char* name;
    double q, eps, alpha_a, alpha_b;
  };
  constexpr Setting settings[] = {{"q0.5_eps0.5", 0.5, 0.5, 0.2, 0.25},
                                  {"q0.25_eps0.25", 0.25, 0.25, 0.4, 0.6},
                                  {"q0.2_eps0.2", 0.2, 0.2, 0.3, 0.35}};
  std::vector<ThresholdTable> out;
  for (const auto& st : settings)
    out.push_back(threshold_table(st.name, gaussian_scenario(st.q, st.eps, st.alpha_a, st.alpha_b, cost_std), k));
  return out;
}

std::string table_csv(const ThresholdTable& t) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : t.rows) {
    std::vector<std::string> row{r.label};
    for (double v : {r.theta_a, r.theta_b, r.util_a, r.util_b, r.pm_a, r.pm_b, r.unfairness})
      row.push_back(format_number(v));
    rows.push_back(std::move(row));
  }
  return render_csv({"row", "theta_a", "theta_b", "util_a", "util_b", "pm_a", "pm_b", "unfairness"}, rows);
}

std::vector<TableRow> parse_table_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  require_header(t, {"row", "theta_a", "theta_b", "util_a", "util_b", "pm_a", "pm_b", "unfairness"});
  std::vector<TableRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({t.rows[r][0], t.number(r, 1), t.number(r, 2), t.number(r, 3), t.number(r, 4),
                   t.number(r, 5), t.number(r, 6), t.number(r, 7)});
  return out;
}

NoisyParam parse_noisy_param(const std::string& name) {
  if (name == "q") return NoisyParam::Q;
  if (name == "eps") return NoisyParam::Eps;
  throw ValidationError("unknown noisy parameter '" + name + "' (expected q or eps)");
}

std::string to_string(NoisyParam p) { return p == NoisyParam::Q ? "q" : "eps"; }

namespace {

PopulationModel perturbed(const PopulationModel& m, NoisyParam param, double delta) {
  PopulationModel out = m;
  double& target = param == NoisyParam::Q ? out.q : out.eps;
  target = std::clamp(target + delta, 0.0, 1.0);
  return out;
}

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  MeanStd get() const {
    const double mean = sum / static_cast<double>(n);
    return {mean, std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean))};
  }
};

}  // namespace

std::vector<NoiseSweepRecord> noise_sweep(const GroupScenario& s, const AdjustmentPlan& plan,
                                          const NoiseSweepOptions& o) {
  validate(s);
  if (o.rounds < 1) throw ValidationError("noise_sweep: rounds must be >= 1");
  if (!(o.noise_std >= 0.0) || !std::isfinite(o.noise_std))
    throw ValidationError("noise_sweep: noise_std must be finite and >= 0");
  if (o.weight_grid.empty()) throw ValidationError("noise_sweep: weight grid must not be empty");
  const Weight wa = plan.weight_a.value_or(Weight::K1);
  const Weight wb = plan.weight_b.value_or(Weight::K1);

  constexpr std::size_t kFields = 7;
  std::vector<std::array<Accumulator, kFields>> acc(o.weight_grid.size());
  for (std::size_t round = 0; round < o.rounds; ++round) {
    Rng rng = make_stream(o.seed, round);
    double delta_a = 0.0, delta_b = 0.0;
    if (o.noise_std > 0.0) {
      const auto noise = FeatureDistribution::gaussian(0.0, o.noise_std);
      delta_a = noise.draw(rng);
      delta_b = noise.draw(rng);
    }
    const PopulationModel seen_a = perturbed(s.group_a.model, o.param, delta_a);
    const PopulationModel seen_b = perturbed(s.group_b.model, o.param, delta_b);
    for (std::size_t i = 0; i < o.weight_grid.size(); ++i) {
      const double k = o.weight_grid[i];
      const double ta = optimize(seen_a, with_weight(PreferenceWeights::original(), wa, k)).theta_star;
      const double tb = optimize(seen_b, with_weight(PreferenceWeights::original(), wb, k)).theta_star;
      const TableRow r = score_row("", s, ta, tb);
      const double values[kFields] = {r.theta_a, r.theta_b, r.util_a, r.util_b, r.pm_a, r.pm_b, r.unfairness};
      for (std::size_t f = 0; f < kFields; ++f) acc[i][f].add(values[f]);
    }
  }

  std::vector<NoiseSweepRecord> out;
  for (std::size_t i = 0; i < o.weight_grid.size(); ++i) {
    const auto& a = acc[i];
    out.push_back({o.weight_grid[i], a[0].get(), a[1].get(), a[2].get(), a[3].get(), a[4].get(), a[5].get(),
                   a[6].get()});
  }
  return out;
}

namespace {

const std::vector<std::string> kNoiseHeader{
    "k",          "theta_a_mean", "theta_a_std", "theta_b_mean", "theta_b_std", "util_a_mean",
    "util_a_std", "util_b_mean",  "util_b_std",  "pm_a_mean",    "pm_a_std",    "pm_b_mean",
    "pm_b_std",   "unfairness_mean", "unfairness_std"};

}  // namespace

std::string noise_sweep_csv(std::span<const NoiseSweepRecord> records) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : records) {
    std::vector<double> row{r.k};
    for (const MeanStd& m : {r.theta_a, r.theta_b, r.util_a, r.util_b, r.pm_a, r.pm_b, r.unfairness}) {
      row.push_back(m.mean);
      row.push_back(m.std);
    }
    rows.push_back(std::move(row));
  }
  return render_csv(kNoiseHeader, rows);
}

std::vector<NoiseSweepRecord> parse_noise_sweep_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  require_header(t, kNoiseHeader);
  std::vector<NoiseSweepRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto ms = [&](std::size_t c) { return MeanStd{t.number(r, c), t.number(r, c + 1)}; };
    out.push_back({t.number(r, 0), ms(1), ms(3), ms(5), ms(7), ms(9), ms(11), ms(13)});
  }
  return out;
}

}  // namespace stratthresh
