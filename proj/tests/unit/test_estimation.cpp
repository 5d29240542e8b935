#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "stratthresh/errors.hpp"
#include "stratthresh/estimation.hpp"
#include "stratthresh/simulation.hpp"

using namespace stratthresh;
using doctest::Approx;
using fixtures::gaussian_model;

namespace {

const std::vector<double> kProbes{-2.0, -1.25, -0.5, 0.25, 1.0, 1.5, 2.0, 2.5};

// Ground truth for the pipeline: alpha 0.4, q 0.25, eps 0.5, cost std 0.25.
PopulationModel truth() { return gaussian_model(0.4, 0.25, 0.5); }

}  // namespace

TEST_CASE("unqualified law from the pre-response mixture") {
  SUBCASE("balanced mixture of N(1,1) and N(0,1)") {
    const auto p1 = FeatureDistribution::gaussian(1.0, 1.0);
    const auto mix = FeatureDistribution::mixture(0.5, p1, FeatureDistribution::gaussian(0.0, 1.0));
    const auto xs = sample(mix, 100000, 31);
    const auto fit = estimate_p0(xs, 0.5, p1, Family::Gaussian);
    CHECK(std::abs(fit.dist.mean()) < 0.05);
    CHECK(std::abs(fit.dist.stddev() - 1.0) < 0.05);
    CHECK_FALSE(fit.poor_fit);
  }
  SUBCASE("almost no qualified agents: a direct fit") {
    const auto p1 = FeatureDistribution::gaussian(1.0, 1.0);
    const auto xs = sample(FeatureDistribution::gaussian(-0.3, 0.8), 100000, 32);
    const auto fit = estimate_p0(xs, 1e-9, p1, Family::Gaussian);
    CHECK(fit.dist.mean() == Approx(-0.3).epsilon(0.05 / 0.3));
    CHECK(fit.dist.stddev() == Approx(0.8).epsilon(0.05 / 0.8));
  }
  SUBCASE("Beta family") {
    const auto p1 = FeatureDistribution::beta(5.0, 2.0);
    const auto mix = FeatureDistribution::mixture(0.3, p1, FeatureDistribution::beta(2.0, 4.0));
    const auto fit = estimate_p0(sample(mix, 100000, 33), 0.3, p1, Family::Beta);
    REQUIRE(fit.dist.is_beta());
    const auto b = std::get<Beta>(fit.dist.variant());
    CHECK(std::abs(b.a - 2.0) < 0.2);
    CHECK(std::abs(b.b - 4.0) < 0.4);
  }
  SUBCASE("a bimodal unknown component is flagged as a poor Gaussian fit") {
    const auto p1 = FeatureDistribution::gaussian(1.0, 1.0);
    const auto bimodal = FeatureDistribution::mixture(0.5, FeatureDistribution::gaussian(-3.0, 0.4),
                                                      FeatureDistribution::gaussian(1.5, 0.4));
    const auto mix = FeatureDistribution::mixture(0.3, p1, bimodal);
    const auto fit = estimate_p0(sample(mix, 100000, 34), 0.3, p1, Family::Gaussian);
    CHECK(fit.poor_fit);
    CHECK(fit.ks > kPoorFitThreshold);
  }
  SUBCASE("a wrong known component yields a decreasing residual") {
    const auto xs = sample(FeatureDistribution::gaussian(0.0, 1.0), 100000, 35);
    CHECK_THROWS_AS(estimate_p0(xs, 0.6, FeatureDistribution::gaussian(-2.0, 0.3), Family::Gaussian),
                    IllPosedError);
  }
}

TEST_CASE("success probability from the audit rate") {
  CHECK(estimate_q(0.65, 0.3).value == Approx(0.5));
  CHECK_FALSE(estimate_q(0.65, 0.3).clamped);
  CHECK(estimate_q(0.3, 0.3).value == 0.0);
  const auto low = estimate_q(0.2, 0.3);
  CHECK(low.value == 0.0);
  CHECK(low.clamped);
  CHECK_THROWS_AS(estimate_q(1.2, 0.3), ValidationError);
  CHECK_THROWS_AS(estimate_q(0.5, 1.0), ValidationError);

  SUBCASE("from a simulated audit") {
    SimulationOptions opt;
    opt.auditing_everyone = true;
    opt.manipulation_disabled = true;
    const auto r = simulate(truth(), 0.0, 100000, 41, opt);
    CHECK(std::abs(estimate_q(r.qualification_rate(), 0.4).value - 0.25) < 0.01);
  }
}

TEST_CASE("failed-improvement law") {
  SUBCASE("from a simulated intervention with manipulation disabled") {
    SimulationOptions opt;
    opt.manipulation_disabled = true;
    opt.retain_agents = true;
    const auto r = simulate(truth(), 0.0, 100000, 42, opt);
    const auto xs = r.final_features();
    const auto fit = estimate_pI(xs, 0.4, 0.25, FeatureDistribution::gaussian(1.0, 1.0), Family::Gaussian);
    CHECK(std::abs(fit.dist.mean() - 0.5) < 0.05);
    CHECK(std::abs(fit.dist.stddev() - 1.0) < 0.05);
  }
  SUBCASE("certain improvement leaves nothing to unmix") {
    const std::vector<double> xs{0.1, 0.2, 0.3, 0.4};
    CHECK_THROWS_AS(estimate_pI(xs, 0.4, 1.0, FeatureDistribution::gaussian(1.0, 1.0), Family::Gaussian),
                    IllPosedError);
    CHECK_THROWS_AS(estimate_pI(xs, 1.0 - 1e-12, 0.2, FeatureDistribution::gaussian(1.0, 1.0), Family::Gaussian),
                    IllPosedError);
  }
}

TEST_CASE("detection probability from one probe") {
  SUBCASE("caught 0.1 with an implied P_M of 0.4 gives 0.25") {
    // alpha_p = 0.4 + 0.6 * (1 - 0.4) * 0.25 = 0.49.
    const auto e = estimate_epsilon(0.49, 0.1, 0.4, 0.25);
    CHECK(e.p_manip.value == Approx(0.4));
    CHECK(e.eps.value == Approx(0.25));
    CHECK_FALSE(e.eps.clamped);
  }
  SUBCASE("nobody caught gives zero") {
    CHECK(estimate_epsilon(0.49, 0.0, 0.4, 0.25).eps.value == 0.0);
  }
  SUBCASE("a rate implying no manipulation is ill-posed") {
    CHECK_THROWS_AS(estimate_epsilon(0.55, 0.1, 0.4, 0.25), IllPosedError);
    CHECK_THROWS_AS(estimate_epsilon(0.49, 0.1, 0.4, 0.0), IllPosedError);
  }
  SUBCASE("out-of-range results are clamped and flagged") {
    const auto e = estimate_epsilon(0.49, 0.6, 0.4, 0.25);
    CHECK(e.eps.value == 1.0);
    CHECK(e.eps.clamped);
  }
}

TEST_CASE("cost-difference law from probes") {
  const auto m = truth();
  const GapParameters gap{m.p1, m.p_improved, m.q, m.eps};
  SUBCASE("noiseless probes are recovered exactly") {
    std::vector<Probe> probes;
    for (double t : kProbes) probes.push_back({t, manipulation_probability(m, t)});
    const auto fit = estimate_cost_diff(gap, probes);
    CHECK(std::abs(fit.mean) < 1e-6);
    CHECK(std::abs(fit.std - 0.25) < 1e-6);
    CHECK(fit.rms_residual < 1e-8);
  }
  SUBCASE("fewer than three probes") {
    const std::vector<Probe> probes{{0.0, 0.3}, {1.0, 0.4}};
    CHECK_THROWS_AS(estimate_cost_diff(gap, probes), ValidationError);
  }
  SUBCASE("identical probe outcomes carry no slope") {
    const std::vector<Probe> probes{{-1.0, 0.4}, {0.0, 0.4}, {1.0, 0.4}, {2.0, 0.4}};
    CHECK_THROWS_AS(estimate_cost_diff(gap, probes), IllPosedError);
  }
}

TEST_CASE("full pipeline") {
  SUBCASE("recovers every parameter at n = 1e5") {
    const auto report = run_estimation_pipeline(truth(), 100000, 7, kProbes);
    REQUIRE(report.errors.has_value());
    const auto& e = *report.errors;
    CHECK(e.q < 0.01);
    CHECK(e.eps < 0.03);
    CHECK(e.p0.location < 0.05);
    CHECK(e.p0.scale < 0.05);
    CHECK(e.p_improved.location < 0.05);
    CHECK(e.p_improved.scale < 0.05);
    CHECK(e.cost_diff.location < 0.05);
    CHECK(e.cost_diff.scale < 0.05);
    CHECK(report.q.value >= 0.0);
    CHECK(report.eps.eps.value <= 1.0);
  }
  SUBCASE("same seed, same report") {
    const auto a = to_json(run_estimation_pipeline(truth(), 20000, 3, kProbes));
    const auto b = to_json(run_estimation_pipeline(truth(), 20000, 3, kProbes));
    CHECK(a == b);
  }
  SUBCASE("tiny samples still yield a well-formed report") {
    const auto report = run_estimation_pipeline(truth(), 100, 5, kProbes);
    const auto j = to_json(report);
    CHECK(j.contains("q"));
    CHECK(j.contains("eps"));
    CHECK(j.contains("cost_diff"));
    CHECK(report.q.value >= 0.0);
    CHECK(report.q.value <= 1.0);
    CHECK(report.eps.eps.value >= 0.0);
    CHECK(report.eps.eps.value <= 1.0);
  }
  SUBCASE("errors shrink with more samples (majority over seeds)") {
    int better = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto small = run_estimation_pipeline(truth(), 10000, seed, kProbes).errors.value();
      const auto large = run_estimation_pipeline(truth(), 1000000, seed, kProbes).errors.value();
      const double es = small.q + small.eps + small.p0.location + small.p_improved.location + small.cost_diff.scale;
      const double el = large.q + large.eps + large.p0.location + large.p_improved.location + large.cost_diff.scale;
      better += el <= es;
    }
    CHECK(better >= 3);
  }
  SUBCASE("fewer than three probes are rejected") {
    const std::vector<double> two{0.0, 1.0};
    CHECK_THROWS_AS(run_estimation_pipeline(truth(), 1000, 1, two), ValidationError);
  }
}

TEST_CASE("default probes sit inside the bounds") {
  const auto m = truth();
  const auto probes = default_probe_thetas(m);
  CHECK(probes.size() == 8);
  for (double t : probes) {
    CHECK(t > m.bounds().lo);
    CHECK(t < m.bounds().hi);
  }
}
