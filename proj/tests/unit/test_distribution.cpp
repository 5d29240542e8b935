#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "stratthresh/distribution.hpp"
#include "stratthresh/errors.hpp"
#include "stratthresh/fico.hpp"

using namespace stratthresh;
using doctest::Approx;

namespace {

double trapezoid(const FeatureDistribution& d, double lo, double hi, std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double sum = 0.5 * (d.pdf(lo) + d.pdf(hi));
  for (std::size_t i = 1; i < n; ++i) sum += d.pdf(lo + h * static_cast<double>(i));
  return sum * h;
}

std::vector<FeatureDistribution> zoo() {
  return {FeatureDistribution::gaussian(0.0, 1.0), FeatureDistribution::gaussian(1.0, 0.3),
          FeatureDistribution::beta(2.0, 5.0), FeatureDistribution::beta(0.7, 0.8),
          FeatureDistribution::mixture(0.4, FeatureDistribution::gaussian(1.0, 1.0),
                                       FeatureDistribution::gaussian(0.0, 1.0))};
}

}  // namespace

TEST_CASE("cdf matches closed forms at symmetric points") {
  CHECK(FeatureDistribution::gaussian(0.0, 1.0).cdf(0.0) == Approx(0.5).epsilon(1e-15));
  CHECK(FeatureDistribution::beta(2.0, 2.0).cdf(0.5) == Approx(0.5).epsilon(1e-15));
  CHECK(FeatureDistribution::gaussian(1.0, 1.0).cdf(0.75) ==
        Approx(fixtures::std_normal_cdf(-0.25)).epsilon(1e-12));
}

TEST_CASE("cdf agrees with a sampled frequency within three binomial standard errors") {
  const auto d = FeatureDistribution::gaussian(1.0, 1.0);
  const std::size_t n = 1'000'000;
  const auto xs = sample(d, n, 11);
  const double freq =
      static_cast<double>(std::count_if(xs.begin(), xs.end(), [](double x) { return x <= 0.75; })) /
      static_cast<double>(n);
  const double p = d.cdf(0.75);
  CHECK(std::abs(freq - p) < 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
}

TEST_CASE("cdf rejects non-finite arguments") {
  const auto d = FeatureDistribution::gaussian(0.0, 1.0);
  CHECK_THROWS_AS(d.cdf(std::nan("")), DomainError);
  CHECK_THROWS_AS(d.pdf(INFINITY), DomainError);
}

TEST_CASE("pdf values") {
  CHECK(FeatureDistribution::gaussian(0.0, 1.0).pdf(0.0) == Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(FeatureDistribution::beta(1.0, 1.0).pdf(0.3) == Approx(1.0).epsilon(1e-14));
  CHECK(FeatureDistribution::beta(2.0, 5.0).pdf(-0.1) == 0.0);

  SUBCASE("unbounded Beta endpoints are signalled, not clipped") {
    CHECK(is_unbounded(FeatureDistribution::beta(0.5, 2.0).pdf(0.0)));
    CHECK(is_unbounded(FeatureDistribution::beta(2.0, 0.5).pdf(1.0)));
    CHECK_FALSE(is_unbounded(FeatureDistribution::beta(2.0, 2.0).pdf(0.0)));
  }
}

TEST_CASE("pdf integrates to one") {
  CHECK(trapezoid(FeatureDistribution::gaussian(0.3, 0.7), -8.0, 8.0, 20000) == Approx(1.0).epsilon(1e-6));
  CHECK(trapezoid(FeatureDistribution::beta(2.0, 5.0), 0.0, 1.0, 20000) == Approx(1.0).epsilon(1e-6));
  CHECK(trapezoid(FeatureDistribution::beta(5.5, 2.0), 0.0, 1.0, 20000) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("empirical grid density reintegrates to one") {
  const auto g = FeatureDistribution::gaussian(0.0, 1.0);
  std::vector<double> xs, cdf;
  for (int i = 0; i <= 400; ++i) {
    const double x = -6.0 + 12.0 * i / 400.0;
    xs.push_back(x);
    cdf.push_back(g.cdf(x));
  }
  cdf.front() = 0.0;
  cdf.back() = 1.0;
  const auto grid = FeatureDistribution::grid(xs, cdf);
  CHECK(trapezoid(grid, -6.0, 6.0, 24000) == Approx(1.0).epsilon(1e-3));
  CHECK(grid.cdf(-7.0) == 0.0);
  CHECK(grid.cdf(7.0) == 1.0);
  CHECK(grid.cdf(0.0) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("empirical grid rejects malformed input") {
  CHECK_THROWS_AS(FeatureDistribution::grid({0.0, 1.0}, {0.6, 0.5}), ValidationError);
  CHECK_THROWS_AS(FeatureDistribution::grid({1.0, 0.0}, {0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(FeatureDistribution::grid({0.0}, {0.0}), ValidationError);
  CHECK_THROWS_AS(FeatureDistribution::grid({0.0, 1.0}, {0.0, 1.5}), ValidationError);
}

TEST_CASE("quantile values") {
  CHECK(FeatureDistribution::gaussian(0.0, 1.0).quantile(0.5) == Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(FeatureDistribution::gaussian(1.0, 1.0).quantile(0.975) == Approx(1.0 + 1.959963984540054).epsilon(1e-12));
  CHECK(FeatureDistribution::beta(2.0, 2.0).quantile(0.5) == Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(FeatureDistribution::gaussian(0.0, 1.0).quantile(0.0), DomainError);
  CHECK_THROWS_AS(FeatureDistribution::gaussian(0.0, 1.0).quantile(1.0), DomainError);
}

TEST_CASE("cdf of quantile is the identity on every family") {
  for (const auto& d : zoo()) {
    CAPTURE(d.describe());
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      CHECK(std::abs(d.cdf(d.quantile(p)) - p) < 1e-9);
    }
  }
}

TEST_CASE("quantile of cdf is the identity at interior points") {
  const auto g = FeatureDistribution::gaussian(1.0, 2.0);
  const auto b = FeatureDistribution::beta(2.0, 5.0);
  for (double x : {-2.0, 0.0, 0.5, 3.0}) CHECK(std::abs(g.quantile(g.cdf(x)) - x) < 1e-9);
  for (double x : {0.05, 0.3, 0.6, 0.9}) CHECK(std::abs(b.quantile(b.cdf(x)) - x) < 1e-9);
}

TEST_CASE("cdf is monotone and bounded") {
  for (const auto& d : zoo()) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = d.cdf(-5.0 + 10.0 * i / 1000.0);
      CHECK(v >= prev);
      CHECK(v <= 1.0);
      prev = v;
    }
  }
}

TEST_CASE("mixture cdf is the weighted sum of its parts") {
  const auto p1 = FeatureDistribution::gaussian(1.0, 1.0), p0 = FeatureDistribution::gaussian(0.0, 1.0);
  const auto mix = FeatureDistribution::mixture(0.4, p1, p0);
  for (int i = 0; i < 100; ++i) {
    const double x = -3.0 + 6.0 * i / 99.0;
    CHECK(mix.cdf(x) == Approx(0.4 * p1.cdf(x) + 0.6 * p0.cdf(x)).epsilon(1e-14));
  }
}

TEST_CASE("monotone likelihood ratio check") {
  SUBCASE("ordered equal-variance Gaussians pass") {
    const auto r = check_mlr(FeatureDistribution::gaussian(1.0, 1.0), FeatureDistribution::gaussian(0.5, 1.0));
    CHECK(r.holds);
    CHECK_FALSE(r.first_violation.has_value());
  }
  SUBCASE("unequal variances with a shared mean fail with a violating point") {
    const auto r = check_mlr(FeatureDistribution::gaussian(0.0, 1.0), FeatureDistribution::gaussian(0.0, 2.0));
    CHECK_FALSE(r.holds);
    REQUIRE(r.first_violation.has_value());
    // The ratio peaks at 0 and falls afterwards.
    CHECK(*r.first_violation >= -0.01);
  }
  SUBCASE("credit-score style Beta laws are ordered") {
    for (const auto& g : fico_like_fixture()) {
      CAPTURE(g.group);
      const auto p1 = FeatureDistribution::beta(g.p1.a, g.p1.b);
      const auto p0 = FeatureDistribution::beta(g.p0.a, g.p0.b);
      const auto pi = FeatureDistribution::beta(0.5 * (g.p1.a + g.p0.a), 0.5 * (g.p1.b + g.p0.b));
      CHECK(check_mlr(p1, pi).holds);
      CHECK(check_mlr(pi, p0).holds);
    }
  }
}

TEST_CASE("Beta fit from cdf points") {
  SUBCASE("recovers Beta(2,5)") {
    const auto d = FeatureDistribution::beta(2.0, 5.0);
    std::vector<CdfPoint> pts;
    for (int i = 1; i <= 50; ++i) {
      const double x = i / 51.0;
      pts.push_back({x, d.cdf(x)});
    }
    const Beta fit = fit_beta(pts);
    CHECK(fit.a == Approx(2.0).epsilon(0.025));
    CHECK(fit.b == Approx(5.0).epsilon(0.01));
  }
  SUBCASE("uniform cdf gives (1,1)") {
    std::vector<CdfPoint> pts;
    for (int i = 1; i <= 20; ++i) pts.push_back({i / 21.0, i / 21.0});
    const Beta fit = fit_beta(pts);
    CHECK(std::abs(fit.a - 1.0) < 0.05);
    CHECK(std::abs(fit.b - 1.0) < 0.05);
  }
  SUBCASE("two points are rejected") {
    const std::vector<CdfPoint> pts{{0.2, 0.1}, {0.8, 0.9}};
    CHECK_THROWS_AS(fit_beta(pts), ValidationError);
  }
  SUBCASE("decreasing cdf values are rejected") {
    const std::vector<CdfPoint> pts{{0.2, 0.3}, {0.5, 0.2}, {0.8, 0.9}};
    CHECK_THROWS_AS(fit_beta(pts), ValidationError);
  }
}

TEST_CASE("sampling") {
  SUBCASE("standard normal mean") {
    const auto xs = sample(FeatureDistribution::gaussian(0.0, 1.0), 100000, 3);
    CHECK(std::abs(std::accumulate(xs.begin(), xs.end(), 0.0) / 1e5) < 0.02);
  }
  SUBCASE("symmetric Beta mean") {
    const auto xs = sample(FeatureDistribution::beta(2.0, 2.0), 100000, 4);
    CHECK(std::abs(std::accumulate(xs.begin(), xs.end(), 0.0) / 1e5 - 0.5) < 0.01);
  }
  SUBCASE("same seed, same sequence; different seed, different sequence") {
    const auto d = FeatureDistribution::beta(2.0, 5.0);
    CHECK(sample(d, 1000, 9) == sample(d, 1000, 9));
    CHECK(sample(d, 1000, 9) != sample(d, 1000, 10));
  }
  SUBCASE("empirical law converges to the analytic cdf") {
    for (const auto& d : zoo()) {
      CAPTURE(d.describe());
      const std::size_t n = 20000;
      CHECK(ks_statistic(sample(d, n, 5), d) < 1.63 / std::sqrt(static_cast<double>(n)));
    }
  }
  SUBCASE("zero count is rejected") {
    CHECK_THROWS_AS(sample(FeatureDistribution::gaussian(0.0, 1.0), 0, 1), ValidationError);
  }
}

TEST_CASE("grid CSV round trip") {
  const auto path = std::filesystem::temp_directory_path() / "stratthresh_grid_roundtrip.csv";
  const EmpiricalGrid grid({-1.0, 0.0, 0.5, 2.0}, {0.0, 0.25, 0.5, 1.0});
  store_grid_csv(grid, path);
  const auto loaded = load_grid_csv(path);
  for (double x : {-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0}) CHECK(loaded.cdf(x) == Approx(grid.cdf(x)));
  std::filesystem::remove(path);
}

TEST_CASE("cost difference law is limited to Gaussian and grid families") {
  CHECK_THROWS_AS(CostDiffDistribution(FeatureDistribution::beta(2.0, 2.0)), ValidationError);
  CHECK(CostDiffDistribution::gaussian(0.0, 0.5).cdf(0.0) == Approx(0.5));
}
