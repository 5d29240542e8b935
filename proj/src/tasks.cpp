#include "stratthresh/tasks.hpp"

#include <cstdio>

#include "stratthresh/csv.hpp"
#include "stratthresh/estimation.hpp"
#include "stratthresh/experiments.hpp"
#include "stratthresh/fico.hpp"

namespace stratthresh {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::filesystem::path input_path(const ExperimentConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : c.base_dir / path;
}

const NamedModel& pick_group(const ExperimentConfig& c, ObjectReader& r) {
  if (c.groups.empty()) throw ConfigError("scenario", "this task needs a scenario with at least one group");
  if (!r.has("group")) return c.groups.front();
  const std::string name = r.string("group");
  for (const auto& g : c.groups)
    if (g.name == name) return g;
  throw ConfigError(r.field("group"), "no group named '" + name + "'");
}

template <class Parse>
auto parse_field(ObjectReader& r, const std::string& key, Parse parse) {
  const std::string value = r.string(key);
  try {
    return parse(value);
  } catch (const ValidationError& e) {
    throw ConfigError(r.field(key), e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

TaskOutcome optimize_task(const ExperimentConfig& c, ObjectReader& r) {
  PreferenceWeights k;
  if (const auto w = r.optional("weights")) {
    ObjectReader wr(*w, r.field("weights"));
    k = {wr.number("k1", 1.0), wr.number("k2", 1.0), wr.number("k3", 1.0)};
    wr.finish();
    try {
      validate(k);
    } catch (const ValidationError& e) {
      throw ConfigError(r.field("weights"), e.what());
    }
  }
  const std::filesystem::path out = r.string("output");
  r.finish();
  if (c.groups.empty()) throw ConfigError("scenario", "optimize needs a scenario");

  json doc{{"weights", {{"k1", k.k1}, {"k2", k.k2}, {"k3", k.k3}}}, {"groups", json::array()}};
  std::string summary = "optimize:";
  for (const auto& g : c.groups) {
    const auto res = optimize(g.model, k);
    const auto ns = optimize_nonstrategic(g.model);
    const auto regime = response_regime(g.model);
    const double pm = manipulation_probability(g.model, res.theta_star);
    doc["groups"].push_back(
        {{"name", g.name},
         {"theta_star", res.theta_star},
         {"objective", res.objective_value},
         {"actual_utility", res.actual_utility},
         {"p_manip", pm},
         {"at_boundary", res.at_boundary},
         {"theta_hat", ns.theta_star},
         {"nonstrategic_utility", ns.objective_value},
         {"regime", regime.kind == ResponseRegime::Kind::MonotoneIncreasing ? "monotone" : "single-peaked"},
         {"theta_max", regime.kind == ResponseRegime::Kind::SinglePeaked ? json(regime.theta_max) : json()}});
    summary += " " + g.name + " theta*=" + fixed(res.theta_star) + " U=" + fixed(res.actual_utility) +
               " P_M=" + fixed(pm) + ";";
  }
  write_json(out, doc);
  return {summary + " -> " + out.string(), {out}};
}

TaskOutcome sweep_task(const ExperimentConfig& c, ObjectReader& r) {
  const NamedModel& g = pick_group(c, r);
  const Weight w = parse_field(r, "weight", parse_weight);
  const auto grid = r.grid("grid");
  const std::filesystem::path out = r.string("output");
  r.finish();
  const auto records = sweep_weights(g.model, w, grid);
  write_file_atomic(out, sweep_csv(records));
  return {"sweep: group " + g.name + " " + to_string(w) + " over " + std::to_string(grid.size()) +
              " points, theta* " + fixed(records.front().theta_star) + " -> " + fixed(records.back().theta_star) +
              " -> " + out.string(),
          {out}};
}

json conditions_json(const GroupConditions& g) {
  return {{"theta_star", g.theta_star}, {"theta_hat", g.theta_hat},   {"c1_i", g.c1_i},
          {"c1_ii", g.c1_ii},           {"c2_i", g.c2_i},             {"c2_ii", g.c2_ii},
          {"condition1", g.condition1()}, {"condition2", g.condition2()}};
}

TaskOutcome fairness_task(const ExperimentConfig& c, ObjectReader& r) {
  const GroupScenario s = two_group_scenario(c);
  const auto grid = r.grid("grid", {1.0, 1.25, 1.5, 1.75, 2.0});
  std::optional<Weight> wa, wb;
  if (r.has("weight_a")) wa = parse_field(r, "weight_a", parse_weight);
  if (r.has("weight_b")) wb = parse_field(r, "weight_b", parse_weight);
  if (wa.has_value() != wb.has_value())
    throw ConfigError(r.field(wa ? "weight_b" : "weight_a"), "weight_a and weight_b must be given together");
  const std::filesystem::path dir = r.string("output");
  r.finish();

  const auto report = check_incentive_conditions(s);
  AdjustmentPlan plan = plan_adjustment(report);
  const auto adv = advantaged_group(s);
  json doc{{"metric", to_string(s.metric)},
           {"advantaged", adv.group == GroupId::A ? s.group_a.name : s.group_b.name},
           {"advantaged_tie", adv.tie},
           {"groups",
            {{s.group_a.name, conditions_json(report.a)}, {s.group_b.name, conditions_json(report.b)}}},
           {"scenario", report.scenario ? json(*report.scenario) : json()},
           {"guaranteed", plan.guaranteed()}};
  if (wa) {
    plan.weight_a = wa;
    plan.weight_b = wb;
  }
  if (plan.weight_a) {
    doc["weight_a"] = to_string(*plan.weight_a);
    doc["weight_b"] = to_string(*plan.weight_b);
  }
  TaskOutcome outcome;
  const auto conditions_path = dir / "conditions.json";
  write_json(conditions_path, doc);
  outcome.outputs.push_back(conditions_path);
  outcome.summary = "fairness: scenario " + (report.scenario ? std::to_string(*report.scenario) : "none");
  if (plan.weight_a) {
    const auto rows = fairness_sweep(s, plan, grid);
    const auto sweep_path = dir / "fairness_sweep.csv";
    write_file_atomic(sweep_path, fairness_sweep_csv(rows));
    outcome.outputs.push_back(sweep_path);
    outcome.summary += ", unfairness " + fixed(rows.front().unfairness) + " -> " + fixed(rows.back().unfairness);
  } else {
    outcome.summary += ", no guaranteed adjustment (set weight_a/weight_b to sweep anyway)";
  }
  outcome.summary += " -> " + dir.string();
  return outcome;
}

TaskOutcome estimate_task(const ExperimentConfig& c, ObjectReader& r) {
  const NamedModel& g = pick_group(c, r);
  const std::size_t n = r.count("sample_size", 100000);
  if (n < 2) throw ConfigError(r.field("sample_size"), "must be >= 2");
  const std::uint64_t seed = r.count("seed", 0);
  const auto probes = r.grid("probes", default_probe_thetas(g.model));
  if (probes.size() < 3) throw ConfigError(r.field("probes"), "need at least 3 probe thresholds");
  PipelineOptions opt;
  if (r.has("p0_family")) opt.p0_family = parse_field(r, "p0_family", parse_family);
  if (r.has("p_improved_family")) opt.p_improved_family = parse_field(r, "p_improved_family", parse_family);
  const std::filesystem::path out = r.string("output");
  const std::string probe_csv = r.string("probe_csv", "");
  r.finish();

  const auto report = run_estimation_pipeline(g.model, n, seed, probes, opt);
  TaskOutcome outcome;
  write_json(out, to_json(report));
  outcome.outputs.push_back(out);
  if (!probe_csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : report.probes)
      rows.push_back({p.outcome.theta, p.outcome.qualification_rate, p.outcome.caught_fraction,
                      p.estimate.p_manip.value, p.estimate.eps.value});
    write_file_atomic(probe_csv,
                      render_csv({"theta", "qualification_rate", "caught_fraction", "p_manip", "eps"}, rows));
    outcome.outputs.emplace_back(probe_csv);
  }
  outcome.summary = "estimate: group " + g.name + " q=" + fixed(report.q.value) + " eps=" +
                    fixed(report.eps.eps.value) + " cost N(" + fixed(report.cost_diff.mean) + ", " +
                    fixed(report.cost_diff.std) + ") -> " + out.string();
  return outcome;
}

TaskOutcome tables_task(const ExperimentConfig&, ObjectReader& r) {
  const double cost_std = r.number("cost_std", 0.25);
  if (!(cost_std > 0.0)) throw ConfigError(r.field("cost_std"), "must be > 0");
  const double k = r.number("k", 1.25);
  if (!(k >= 0.0)) throw ConfigError(r.field("k"), "must be >= 0");
  const std::filesystem::path dir = r.string("output");
  r.finish();
  TaskOutcome outcome{"reproduce-tables:", {}};
  for (const auto& t : reproduce_gaussian_tables(cost_std, k)) {
    const auto path = dir / (t.name + ".csv");
    write_file_atomic(path, table_csv(t));
    outcome.outputs.push_back(path);
    outcome.summary += " " + t.name + " unfairness " + fixed(t.rows[0].unfairness, 3) + "/" +
                       fixed(t.rows[1].unfairness, 3) + "/" + fixed(t.rows[2].unfairness, 3) + ";";
  }
  outcome.summary += " -> " + dir.string();
  return outcome;
}

TaskOutcome noise_task(const ExperimentConfig& c, ObjectReader& r) {
  const GroupScenario s = two_group_scenario(c);
  NoiseSweepOptions o;
  o.param = parse_field(r, "param", parse_noisy_param);
  o.noise_std = r.number("noise_std", o.noise_std);
  if (!(o.noise_std >= 0.0)) throw ConfigError(r.field("noise_std"), "must be >= 0");
  o.rounds = r.count("rounds", o.rounds);
  if (o.rounds < 1) throw ConfigError(r.field("rounds"), "must be >= 1");
  o.seed = r.count("seed", 0);
  o.weight_grid = r.grid("grid", o.weight_grid);
  const std::filesystem::path out = r.string("output");
  r.finish();
  const auto records = noise_sweep(s, plan_adjustment(s), o);
  write_file_atomic(out, noise_sweep_csv(records));
  return {"noise-sweep: " + to_string(o.param) + " std " + fixed(o.noise_std, 3) + ", " +
              std::to_string(o.rounds) + " rounds, mean unfairness " + fixed(records.front().unfairness.mean) +
              " -> " + fixed(records.back().unfairness.mean) + " -> " + out.string(),
          {out}};
}

TaskOutcome fico_task(const ExperimentConfig& c, ObjectReader& r) {
  const auto records = input_path(c, r.string("records"));
  const auto alphas = input_path(c, r.string("alpha"));
  FicoBehavior b;
  b.q = r.number("q", b.q);
  b.eps = r.number("eps", b.eps);
  b.cost_mean = r.number("cost_mean", b.cost_mean);
  b.cost_std = r.number("cost_std", b.cost_std);
  b.u = r.number("u", b.u);
  if (r.has("metric")) b.metric = parse_field(r, "metric", parse_metric);
  const double k = r.number("k", 1.5);
  const std::filesystem::path out = r.string("output");
  const std::string table = r.string("table_output", "");
  r.finish();

  const FicoInput input = read_fico(records, alphas);
  const GroupScenario s = ingest_fico(input, b);
  json doc{{"scenario", scenario_to_json({s.group_a, s.group_b}, s.metric)}};
  TaskOutcome outcome;
  write_json(out, doc);
  outcome.outputs.push_back(out);
  outcome.summary = "ingest-fico: " + s.group_a.name + " alpha " + fixed(s.group_a.model.alpha, 3) + ", " +
                    s.group_b.name + " alpha " + fixed(s.group_b.model.alpha, 3);
  if (!table.empty()) {
    const auto t = threshold_table("fico", s, k);
    write_file_atomic(table, table_csv(t));
    outcome.outputs.emplace_back(table);
    outcome.summary += ", unfairness " + fixed(t.rows[0].unfairness, 3) + "/" + fixed(t.rows[1].unfairness, 3) +
                       "/" + fixed(t.rows[2].unfairness, 3);
  }
  outcome.summary += " -> " + out.string();
  return outcome;
}

}  // namespace

TaskOutcome run_task(const ExperimentConfig& c) {
  ObjectReader r(c.params, "params");
  if (c.task == "optimize") return optimize_task(c, r);
  if (c.task == "sweep") return sweep_task(c, r);
  if (c.task == "fairness") return fairness_task(c, r);
  if (c.task == "estimate") return estimate_task(c, r);
  if (c.task == "reproduce-tables") return tables_task(c, r);
  if (c.task == "noise-sweep") return noise_task(c, r);
  if (c.task == "ingest-fico") return fico_task(c, r);
  std::string known;
  for (const auto& t : kTaskNames) known += (known.empty() ? "" : ", ") + t;
  throw ConfigError("task", "unknown task '" + c.task + "' (expected one of " + known + ")");
}

TaskOutcome run_config_file(const std::filesystem::path& path) { return run_task(load_config(path)); }

}  // namespace stratthresh
