#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratthresh/config.hpp"
#include "stratthresh/errors.hpp"
#include "stratthresh/fico.hpp"
#include "stratthresh/tasks.hpp"

namespace st = stratthresh;
using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitIllPosed = 3;

// "1,1.25,1.5" or "start:stop:step".
json parse_grid_flag(const std::string& text, const std::string& flag) {
  auto to_number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw st::ConfigError(flag, "'" + s + "' is not a number");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw st::ConfigError(flag, "expected start:stop:step");
    return {{"start", to_number(parts[0])}, {"stop", to_number(parts[1])}, {"step", to_number(parts[2])}};
  }
  json out = json::array();
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_number(p));
  return out;
}

// Flags of one task subcommand; each set flag overrides the matching param.
struct TaskCommand {
  std::string task;
  std::string config;
  std::map<std::string, std::string> strings;
  std::map<std::string, double> numbers;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::string> grids;
  CLI::App* app = nullptr;

  void add_string(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { strings[key] = v; }, help);
  }
  void add_number(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<double>(flag, [this, key](double v) { numbers[key] = v; }, help);
  }
  void add_count(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::size_t>(flag, [this, key](std::size_t v) { counts[key] = v; }, help);
  }
  void add_grid(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { grids[key] = v; }, help);
  }

  st::ExperimentConfig build() const {
    st::ExperimentConfig c;
    if (!config.empty()) c = st::load_config(config);
    c.task = task;
    for (const auto& [k, v] : strings) c.params[k] = v;
    for (const auto& [k, v] : numbers) c.params[k] = v;
    for (const auto& [k, v] : counts) c.params[k] = v;
    for (const auto& [k, v] : grids) c.params[k] = parse_grid_flag(v, "--" + k);
    if (numbers.count("k1") || numbers.count("k2") || numbers.count("k3")) {
      json w = c.params.value("weights", json::object());
      for (const char* k : {"k1", "k2", "k3"})
        if (c.params.contains(k)) {
          w[k] = c.params[k];
          c.params.erase(k);
        }
      c.params["weights"] = w;
    }
    return c;
  }
};

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return EXIT_SUCCESS;
  } catch (const st::IllPosedError& e) {
    std::cerr << "ill-posed: " << e.what() << "\n";
    return kExitIllPosed;
  } catch (const st::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const st::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}

void print(const st::TaskOutcome& outcome) { std::cout << outcome.summary << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold policies against imitative strategic agents"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the task named in a JSON config");
  run->add_option("config", run_config, "Config file")->required();

  std::vector<std::unique_ptr<TaskCommand>> commands;
  auto task = [&](const std::string& name, const std::string& help, bool needs_config) {
    auto cmd = std::make_unique<TaskCommand>();
    cmd->task = name;
    cmd->app = app.add_subcommand(name, help);
    auto* opt = cmd->app->add_option("-c,--config", cmd->config, "Config file (scenario and params)");
    if (needs_config) opt->required();
    cmd->add_string("-o,--output", "output", "Output file or directory");
    commands.push_back(std::move(cmd));
    return commands.back().get();
  };

  auto* optimize = task("optimize", "Optimal thresholds for each group", true);
  optimize->add_number("--k1", "k1", "Weight on the improvement-reward term");
  optimize->add_number("--k2", "k2", "Weight on the failed-improvement term");
  optimize->add_number("--k3", "k3", "Weight on the manipulation term");

  auto* sweep = task("sweep", "Optimal threshold as one preference weight varies", true);
  sweep->add_string("--group", "group", "Group name (default: first)");
  sweep->add_string("--weight", "weight", "k1, k2 or k3");
  sweep->add_grid("--grid", "grid", "Values as a,b,c or start:stop:step");

  auto* fairness = task("fairness", "Incentive conditions and two-group fairness sweep", true);
  fairness->add_grid("--grid", "grid", "Values as a,b,c or start:stop:step");
  fairness->add_string("--weight-a", "weight_a", "Override the planned weight of group a");
  fairness->add_string("--weight-b", "weight_b", "Override the planned weight of group b");

  auto* estimate = task("estimate", "Recover model parameters from simulated interventions", true);
  estimate->add_string("--group", "group", "Group name (default: first)");
  estimate->add_count("--sample-size", "sample_size", "Agents per intervention");
  estimate->add_count("--seed", "seed", "Random seed");
  estimate->add_grid("--probes", "probes", "Probe thresholds as a,b,c or start:stop:step");
  estimate->add_string("--probe-csv", "probe_csv", "Also write per-probe outcomes here");

  auto* tables = task("reproduce-tables", "Three two-group Gaussian comparison tables", false);
  tables->add_number("--cost-std", "cost_std", "Std of the cost difference (default 0.25)");
  tables->add_number("--k", "k", "Adjusted-row weight (default 1.25)");

  auto* noise = task("noise-sweep", "Preference sweep with a noisy q or eps", true);
  noise->add_string("--param", "param", "q or eps");
  noise->add_number("--noise-std", "noise_std", "Std of the perturbation");
  noise->add_count("--rounds", "rounds", "Number of rounds");
  noise->add_count("--seed", "seed", "Random seed");
  noise->add_grid("--grid", "grid", "Values as a,b,c or start:stop:step");

  auto* fico = task("ingest-fico", "Fit Beta laws to a score table and build a scenario", false);
  fico->add_string("--records", "records", "CSV score,group,cdf,p_qualified");
  fico->add_string("--alpha", "alpha", "CSV group,alpha");
  fico->add_number("--q", "q", "Improvement success probability");
  fico->add_number("--eps", "eps", "Detection probability");
  fico->add_number("--cost-std", "cost_std", "Std of the cost difference");
  fico->add_number("--k", "k", "Adjusted-row weight for --table-output (default 1.5)");
  fico->add_string("--table-output", "table_output", "Also write the comparison table here");

  std::string synth_records, synth_alpha;
  std::size_t synth_buckets = 100;
  auto* synth = app.add_subcommand("synth-fico", "Write the synthetic credit-score fixture");
  synth->add_option("--records", synth_records, "Output CSV score,group,cdf,p_qualified")->required();
  synth->add_option("--alpha", synth_alpha, "Output CSV group,alpha")->required();
  synth->add_option("--buckets", synth_buckets, "Score buckets per group");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  if (run->parsed()) return guarded([&] { print(st::run_config_file(run_config)); });
  if (synth->parsed())
    return guarded([&] {
      st::write_fico(st::synthesize_fico_input(st::fico_like_fixture(), synth_buckets), synth_records,
                     synth_alpha);
      std::cout << "synth-fico: " << synth_buckets << " buckets per group -> " << synth_records << ", "
                << synth_alpha << "\n";
    });
  for (const auto& cmd : commands)
    if (cmd->app->parsed()) return guarded([&] { print(st::run_task(cmd->build())); });
  return kExitInvalid;
}
