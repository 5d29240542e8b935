#include "stratthresh/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

namespace {

constexpr std::size_t kShardSize = 1 << 14;

SimulationResult run_shard(const PopulationModel& m, double theta, std::size_t count, Rng rng,
                           const SimulationOptions& opt) {
  SimulationResult r;
  r.n = count;
  r.u = m.u;
  if (opt.retain_agents) r.agents.reserve(count);

  const double eps_seen = opt.auditing_everyone ? 1.0 : m.eps;
  const double gap = net_gap(m.p1, m.p_improved, m.q, eps_seen, theta);

  for (std::size_t i = 0; i < count; ++i) {
    AgentRecord a{};
    a.initially_qualified = uniform_open(rng) < m.alpha;
    a.qualified = a.initially_qualified;
    a.action = Action::None;
    a.initial_x = a.initially_qualified ? m.p1.draw(rng) : m.p0.draw(rng);
    a.x = a.initial_x;

    if (!a.initially_qualified) {
      ++r.unqualified;
      // Draws happen unconditionally so the stream layout is option independent.
      const double cost = m.cost_diff.draw(rng);
      const double detect = uniform_open(rng);
      const double success = uniform_open(rng);
      const double x_qualified = m.p1.draw(rng);
      const double x_improved = m.p_improved.draw(rng);

      if (!opt.no_response) {
        // Strict inequality: indifferent agents improve.
        const bool manipulate = !opt.manipulation_disabled && gap > cost;
        if (manipulate) {
          a.action = Action::Manipulate;
          ++r.manipulators;
          a.x = x_qualified;
          a.caught = opt.auditing_everyone || detect < m.eps;
        } else {
          a.action = Action::Improve;
          if (success < m.q) {
            a.qualified = true;
            a.x = x_qualified;
          } else {
            a.x = x_improved;
          }
        }
      }
    }

    a.accepted = !a.caught && a.x >= theta;
    if (a.caught) ++r.caught;
    if (a.qualified) ++r.qualified_after;
    if (a.accepted) {
      ++r.accepted;
      if (a.qualified) ++r.reward_plus;
      else ++r.reward_minus;
    }
    if (opt.retain_agents) r.agents.push_back(a);
  }
  return r;
}

void merge(SimulationResult& into, SimulationResult&& part) {
  into.n += part.n;
  into.unqualified += part.unqualified;
  into.manipulators += part.manipulators;
  into.caught += part.caught;
  into.accepted += part.accepted;
  into.qualified_after += part.qualified_after;
  into.reward_plus += part.reward_plus;
  into.reward_minus += part.reward_minus;
  into.agents.insert(into.agents.end(), part.agents.begin(), part.agents.end());
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double SimulationResult::manipulation_rate() const { return ratio(manipulators, unqualified); }

double SimulationResult::mean_utility() const {
  return u * (static_cast<double>(reward_plus) - static_cast<double>(reward_minus)) /
         static_cast<double>(n);
}

double SimulationResult::utility_standard_error() const {
  const double mean = mean_utility();
  const double second = u * u * static_cast<double>(reward_plus + reward_minus) / static_cast<double>(n);
  return std::sqrt(std::max(0.0, second - mean * mean) / static_cast<double>(n));
}

double SimulationResult::qualification_rate() const { return ratio(qualified_after, n); }
double SimulationResult::caught_among_unqualified() const { return ratio(caught, unqualified); }
double SimulationResult::caught_among_all() const { return ratio(caught, n); }
double SimulationResult::acceptance_rate() const { return ratio(accepted, n); }

std::vector<double> SimulationResult::initial_features() const {
  std::vector<double> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.initial_x);
  return out;
}

std::vector<double> SimulationResult::final_features() const {
  std::vector<double> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.x);
  return out;
}

SimulationResult simulate(const PopulationModel& m, double theta, std::size_t n, std::uint64_t seed,
                          const SimulationOptions& opt) {
  if (n == 0) throw ValidationError("simulate: n must be >= 1");
  if (!std::isfinite(theta)) throw DomainError("simulate: theta must be finite");

  const std::size_t shards = (n + kShardSize - 1) / kShardSize;
  std::vector<SimulationResult> parts(shards);
  auto work = [&](std::size_t s) {
    const std::size_t begin = s * kShardSize;
    const std::size_t count = std::min(kShardSize, n - begin);
    parts[s] = run_shard(m, theta, count, make_stream(seed, s), opt);
  };

  std::size_t threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, shards);
  if (threads <= 1) {
    for (std::size_t s = 0; s < shards; ++s) work(s);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < shards; s += threads) work(s);
      });
  }

  SimulationResult out;
  out.u = m.u;
  for (auto& p : parts) merge(out, std::move(p));
  return out;
}

FeatureDistribution empirical_cdf(std::span<const double> samples) {
  if (samples.size() < 2) throw ValidationError("empirical_cdf: need at least 2 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double denom = static_cast<double>(sorted.size() - 1);
  std::vector<double> xs, cdf;
  xs.reserve(sorted.size());
  cdf.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double level = static_cast<double>(i) / denom;
    if (!xs.empty() && sorted[i] == xs.back()) {
      cdf.back() = level;  // ties collapse to the right-continuous value
      continue;
    }
    xs.push_back(sorted[i]);
    cdf.push_back(level);
  }
  if (xs.size() < 2) throw ValidationError("empirical_cdf: samples are all identical");
  return FeatureDistribution::grid(std::move(xs), std::move(cdf));
}

void dump_agents_csv(const SimulationResult& r, const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(r.agents.size());
  for (const auto& a : r.agents)
    rows.push_back({a.x, a.qualified ? 1.0 : 0.0, static_cast<double>(a.action), a.caught ? 1.0 : 0.0,
                    a.accepted ? 1.0 : 0.0});
  write_file_atomic(path, render_csv({"x", "label", "action", "caught", "accepted"}, rows));
}

}  // namespace stratthresh
