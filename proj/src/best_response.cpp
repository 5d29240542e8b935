#include "stratthresh/best_response.hpp"

#include <algorithm>
#include <string>

#include "stratthresh/errors.hpp"

namespace stratthresh {

ThetaBounds default_theta_bounds(const FeatureDistribution& p1, const FeatureDistribution& p0) {
  return {std::min(p0.quantile(0.001), p1.quantile(0.001)),
          std::max(p0.quantile(0.999), p1.quantile(0.999))};
}

ThetaBounds PopulationModel::bounds() const {
  return theta_bounds.is_set() ? theta_bounds : default_theta_bounds(p1, p0);
}

void validate(const PopulationModel& m) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError(field + ": " + why);
  };
  if (!(m.alpha > 0.0 && m.alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
  if (!(m.q >= 0.0 && m.q <= 1.0)) fail("q", "must lie in [0, 1]");
  if (!(m.eps >= 0.0 && m.eps <= 1.0)) fail("eps", "must lie in [0, 1]");
  if (!(m.u > 0.0) || !std::isfinite(m.u)) fail("u", "must be > 0");
  if (m.theta_bounds.is_set() && !(m.theta_bounds.lo < m.theta_bounds.hi))
    fail("theta_bounds", "lo must be < hi");
  if (!m.theta_bounds.is_set() &&
      (!std::isnan(m.theta_bounds.lo) || !std::isnan(m.theta_bounds.hi)))
    fail("theta_bounds", "must be finite");

  if (const auto r = check_mlr(m.p1, m.p_improved); !r.holds)
    fail("p1/p_improved", "likelihood ratio not strictly increasing near x=" +
                              std::to_string(r.first_violation.value_or(NAN)));
  if (const auto r = check_mlr(m.p_improved, m.p0); !r.holds)
    fail("p_improved/p0", "likelihood ratio not strictly increasing near x=" +
                              std::to_string(r.first_violation.value_or(NAN)));

  const double lo = -m.eps, hi = 1.0 - m.q;
  if (lo < hi) {
    constexpr int kChecks = 201;
    for (int i = 1; i < kChecks; ++i) {
      const double x = lo + (hi - lo) * i / kChecks;
      if (!(m.cost_diff.pdf(x) > 0.0))
        fail("cost_diff", "density must be positive on (-eps, 1-q); zero at " + std::to_string(x));
    }
  }
}

double net_gap(const FeatureDistribution& p1, const FeatureDistribution& p_improved, double q,
               double eps, double theta) {
  const double f1 = p1.cdf(theta);
  return (1.0 - q) * (p_improved.cdf(theta) - f1) - eps * (1.0 - f1);
}

double net_gap(const PopulationModel& m, double theta) {
  return net_gap(m.p1, m.p_improved, m.q, m.eps, theta);
}

ExpectedUtilities expected_utilities(const PopulationModel& m, double theta) {
  const double f1 = m.p1.cdf(theta);
  const double f0 = m.p0.cdf(theta);
  const double fi = m.p_improved.cdf(theta);
  return {f0 - f1 - m.eps * (1.0 - f1), f0 - m.q * f1 - (1.0 - m.q) * fi};
}

double manipulation_probability(const PopulationModel& m, double theta) {
  return m.cost_diff.cdf(net_gap(m, theta));
}

ResponseRegime response_regime(const PopulationModel& m) {
  if (m.q + m.eps >= 1.0) return {};

  // log pdf_1 - log pdf_I is increasing under the MLR assumption.
  const double target = std::log((1.0 - m.q) / (1.0 - m.q - m.eps));
  auto excess = [&](double t) { return m.p1.log_pdf(t) - m.p_improved.log_pdf(t) - target; };

  const ThetaBounds b = m.bounds();
  ResponseRegime r{ResponseRegime::Kind::SinglePeaked};
  if (excess(b.lo) >= 0.0) {
    r.theta_max = b.lo;
    r.clipped = true;
    return r;
  }
  if (excess(b.hi) <= 0.0) {
    r.theta_max = b.hi;
    r.clipped = true;
    return r;
  }
  double lo = b.lo, hi = b.hi;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  r.theta_max = 0.5 * (lo + hi);
  return r;
}

}  // namespace stratthresh
