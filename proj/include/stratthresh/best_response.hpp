#pragma once

#include <cmath>
#include <limits>

#include "stratthresh/distribution.hpp"

namespace stratthresh {

struct ThetaBounds {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();

  bool is_set() const { return std::isfinite(lo) && std::isfinite(hi); }
};

// [min(q_0.001), max(q_0.999)] over the qualified and unqualified laws.
ThetaBounds default_theta_bounds(const FeatureDistribution& p1, const FeatureDistribution& p0);

// One group's population. Unqualified agents always act: they either
// manipulate (copy a draw from p1, caught with probability eps) or improve
// (with probability q become qualified with a p1 feature, else land on
// p_improved).
struct PopulationModel {
  double alpha;                    // qualification rate
  FeatureDistribution p1;          // features of qualified agents
  FeatureDistribution p0;          // features of unqualified agents
  FeatureDistribution p_improved;  // features after a failed improvement
  CostDiffDistribution cost_diff;  // law of C_M - C_I
  double q;                        // improvement success probability
  double eps;                      // manipulation detection probability
  double u = 1.0;                  // decision-maker unit utility
  ThetaBounds theta_bounds{};      // unset means default_theta_bounds(p1, p0)

  ThetaBounds bounds() const;
};

// Throws ValidationError naming the offending field. Includes the monotone
// likelihood ratio ordering p1 > p_improved > p0 and positivity of the cost
// density on (-eps, 1 - q).
void validate(const PopulationModel& model);

// (1-q)(F_I - F_1) - eps (1 - F_1): expected-benefit advantage of manipulating.
double net_gap(const FeatureDistribution& p1, const FeatureDistribution& p_improved, double q,
               double eps, double theta);
double net_gap(const PopulationModel& model, double theta);

struct ExpectedUtilities {
  double manipulate;  // U_M without the -C_M term
  double improve;     // U_I without the -C_I term
};

ExpectedUtilities expected_utilities(const PopulationModel& model, double theta);

// P_M(theta) = F_{C_M - C_I}(net_gap(theta)).
double manipulation_probability(const PopulationModel& model, double theta);

struct ResponseRegime {
  enum class Kind { MonotoneIncreasing, SinglePeaked };
  Kind kind = Kind::MonotoneIncreasing;
  double theta_max = std::numeric_limits<double>::quiet_NaN();
  bool clipped = false;  // the peak equation has no root inside the bounds
};

// Monotone when q + eps >= 1; otherwise the unique peak of P_M, where
// pdf_1 / pdf_I = (1-q) / (1-q-eps).
ResponseRegime response_regime(const PopulationModel& model);

}  // namespace stratthresh
