#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"
#include "stratthresh/experiments.hpp"
#include "stratthresh/policy.hpp"
#include "stratthresh/simulation.hpp"

using namespace stratthresh;
using doctest::Approx;
using fixtures::gaussian_model;

namespace {

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

void check_against_analytic(const PopulationModel& m, double theta, std::uint64_t seed) {
  const std::size_t n = 100000;
  const auto r = simulate(m, theta, n, seed);
  const double pm = manipulation_probability(m, theta);
  CHECK(std::abs(r.manipulation_rate() - pm) <= 3.0 * binomial_se(pm, r.unqualified) + 1e-12);
  CHECK(std::abs(r.mean_utility() - strategic_utility(m, theta)) <= 3.0 * r.utility_standard_error());
  const double qual = m.alpha + (1.0 - m.alpha) * (1.0 - pm) * m.q;
  CHECK(std::abs(r.qualification_rate() - qual) <= 3.0 * binomial_se(qual, n) + 1e-12);
}

}  // namespace

TEST_CASE("accept-everyone limit") {
  const auto m = gaussian_model(0.4, 0.0, 0.0);
  const auto r = simulate(m, -40.0, 100000, 1);
  CHECK(r.acceptance_rate() == Approx(1.0));
  CHECK(std::abs(r.mean_utility() - (2 * 0.4 - 1.0)) <= 3.0 * r.utility_standard_error() + 1e-12);
}

TEST_CASE("empirical rates match the analytic model") {
  SUBCASE("two-group Gaussian settings at each group's strategic optimum") {
    std::uint64_t seed = 40;
    for (const auto& s : {gaussian_scenario(0.5, 0.5, 0.2, 0.25, 0.25), gaussian_scenario(0.25, 0.25, 0.4, 0.6, 0.25),
                          gaussian_scenario(0.2, 0.2, 0.3, 0.35, 0.25)}) {
      for (const auto* g : {&s.group_a.model, &s.group_b.model}) {
        check_against_analytic(*g, optimize(*g, PreferenceWeights::original()).theta_star, ++seed);
        check_against_analytic(*g, optimize_nonstrategic(*g).theta_star, ++seed);
      }
    }
  }
  SUBCASE("twenty random configurations") {
    std::mt19937_64 rng(99);
    for (int c = 0; c < 20; ++c) {
      CAPTURE(c);
      const auto m = fixtures::random_model(rng);
      const auto b = m.bounds();
      check_against_analytic(m, std::uniform_real_distribution<double>(b.lo + 1.0, b.hi - 1.0)(rng), 500 + c);
    }
  }
}

TEST_CASE("auditing everyone with manipulation priced out") {
  auto m = gaussian_model(0.4, 0.25, 0.5);
  m.cost_diff = CostDiffDistribution::gaussian(5.0, 0.1);
  SimulationOptions opt;
  opt.auditing_everyone = true;
  const std::size_t n = 100000;
  const auto r = simulate(m, 0.5, n, 3, opt);
  CHECK(r.manipulators == 0);
  const double expected = 0.4 + 0.6 * 0.25;
  CHECK(std::abs(r.qualification_rate() - expected) <= 3.0 * binomial_se(expected, n));
}

TEST_CASE("auditing everyone catches every manipulator") {
  auto m = gaussian_model(0.4, 0.0, 0.0);
  m.cost_diff = CostDiffDistribution::gaussian(-5.0, 0.1);
  SimulationOptions opt;
  opt.auditing_everyone = true;
  const auto r = simulate(m, 0.5, 20000, 3, opt);
  CHECK(r.manipulators == r.unqualified);
  CHECK(r.caught == r.manipulators);
  CHECK(r.reward_minus == 0);
}

TEST_CASE("disabling manipulation makes every unqualified agent improve") {
  SimulationOptions opt;
  opt.manipulation_disabled = true;
  opt.retain_agents = true;
  const auto r = simulate(gaussian_model(0.4, 0.25, 0.25), 0.5, 5000, 8, opt);
  CHECK(r.manipulators == 0);
  for (const auto& a : r.agents)
    if (!a.initially_qualified) CHECK(a.action == Action::Improve);
}

TEST_CASE("ties between the two actions resolve to improvement") {
  // Certain improvement and no detection make the gap exactly zero. A grid
  // law on [0, denorm_min] draws exactly zero about half the time, so those
  // agents are indifferent; the rest strictly prefer improving.
  auto m = gaussian_model(0.4, 1.0, 0.0);
  m.cost_diff = CostDiffDistribution::grid({0.0, std::numeric_limits<double>::denorm_min()}, {0.0, 1.0});
  const auto r = simulate(m, 0.5, 20000, 2);
  CHECK(r.manipulators == 0);
}

TEST_CASE("caught manipulators are rejected") {
  SimulationOptions opt;
  opt.retain_agents = true;
  const auto r = simulate(gaussian_model(0.4, 0.1, 0.5), -1.0, 20000, 6, opt);
  std::size_t caught = 0;
  for (const auto& a : r.agents) {
    if (a.caught) {
      ++caught;
      CHECK(a.action == Action::Manipulate);
      CHECK_FALSE(a.accepted);
    }
  }
  CHECK(caught == r.caught);
  CHECK(caught > 0);
}

TEST_CASE("determinism and thread independence") {
  const auto m = gaussian_model(0.4, 0.25, 0.25);
  SimulationOptions one, many;
  one.threads = 1;
  many.threads = 8;
  one.retain_agents = many.retain_agents = true;
  const auto a = simulate(m, 0.4, 70000, 77, one);
  const auto b = simulate(m, 0.4, 70000, 77, many);
  CHECK(a.manipulators == b.manipulators);
  CHECK(a.accepted == b.accepted);
  CHECK(a.final_features() == b.final_features());
  const auto c = simulate(m, 0.4, 70000, 78, one);
  CHECK(a.final_features() != c.final_features());
}

TEST_CASE("rates stay in range") {
  std::mt19937_64 rng(3);
  for (int c = 0; c < 5; ++c) {
    const auto m = fixtures::random_model(rng);
    const auto r = simulate(m, 0.3, 2000, c);
    for (double v : {r.manipulation_rate(), r.qualification_rate(), r.caught_among_unqualified(),
                     r.caught_among_all(), r.acceptance_rate()}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(std::abs(r.mean_utility()) <= m.u);
    CHECK(r.caught_among_all() <= r.caught_among_unqualified());
  }
}

TEST_CASE("input validation") {
  const auto m = gaussian_model(0.4, 0.25, 0.25);
  CHECK_THROWS_AS(simulate(m, 0.0, 0, 1), ValidationError);
  CHECK_THROWS_AS(simulate(m, std::nan(""), 10, 1), DomainError);
}

TEST_CASE("empirical cdf") {
  SUBCASE("two samples interpolate at the midpoint") {
    const std::vector<double> xs{0.0, 1.0};
    CHECK(empirical_cdf(xs).cdf(0.5) == Approx(0.5));
  }
  SUBCASE("close to the analytic law") {
    const auto d = FeatureDistribution::gaussian(0.0, 1.0);
    const auto xs = sample(d, 100000, 12);
    const auto e = empirical_cdf(xs);
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = -4.0 + 8.0 * i / 2000.0;
      worst = std::max(worst, std::abs(e.cdf(x) - d.cdf(x)));
    }
    CHECK(worst < 1.63 / std::sqrt(1e5));
  }
  SUBCASE("order of the input does not matter") {
    auto xs = sample(FeatureDistribution::beta(2.0, 5.0), 500, 4);
    const auto shuffled = empirical_cdf(xs);
    std::sort(xs.begin(), xs.end());
    const auto sorted = empirical_cdf(xs);
    for (double x = 0.0; x <= 1.0; x += 0.01) CHECK(shuffled.cdf(x) == sorted.cdf(x));
  }
  SUBCASE("fewer than two samples are rejected") {
    const std::vector<double> one{0.3};
    CHECK_THROWS_AS(empirical_cdf(one), ValidationError);
  }
}

TEST_CASE("agent dump CSV") {
  SimulationOptions opt;
  opt.retain_agents = true;
  const auto r = simulate(gaussian_model(0.4, 0.25, 0.25), 0.5, 300, 5, opt);
  const auto path = std::filesystem::temp_directory_path() / "stratthresh_agents.csv";
  dump_agents_csv(r, path);
  const auto t = read_csv(path);
  require_header(t, {"x", "label", "action", "caught", "accepted"});
  CHECK(t.rows.size() == 300);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) accepted += t.number(i, t.column("accepted")) == 1.0;
  CHECK(accepted == r.accepted);
  std::filesystem::remove(path);
}
