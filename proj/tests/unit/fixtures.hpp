#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "stratthresh/best_response.hpp"
#include "stratthresh/distribution.hpp"

namespace fixtures {

namespace st = stratthresh;

// P1 = N(1,1), P0 = N(0,1), P_I = N(0.5,1): the two-group Gaussian setting.
inline st::PopulationModel gaussian_model(double alpha, double q, double eps, double cost_std = 0.25) {
  return st::PopulationModel{alpha,
                             st::FeatureDistribution::gaussian(1.0, 1.0),
                             st::FeatureDistribution::gaussian(0.0, 1.0),
                             st::FeatureDistribution::gaussian(0.5, 1.0),
                             st::CostDiffDistribution::gaussian(0.0, cost_std),
                             q,
                             eps};
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// A random valid Gaussian model: equal-variance laws with ordered means keep
// the likelihood-ratio ordering P1 > P_I > P0.
template <class Rng>
st::PopulationModel random_model(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sd = 0.6 + 0.8 * unit(rng);
  const double m0 = -1.0 + 2.0 * unit(rng);
  const double gap = 0.5 + 1.5 * unit(rng);
  const double mi = m0 + gap * (0.2 + 0.6 * unit(rng));
  return st::PopulationModel{0.15 + 0.7 * unit(rng),
                             st::FeatureDistribution::gaussian(m0 + gap, sd),
                             st::FeatureDistribution::gaussian(m0, sd),
                             st::FeatureDistribution::gaussian(mi, sd),
                             st::CostDiffDistribution::gaussian(-0.2 + 0.4 * unit(rng), 0.15 + 0.5 * unit(rng)),
                             unit(rng),
                             unit(rng)};
}

}  // namespace fixtures
