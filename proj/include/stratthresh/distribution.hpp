#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stratthresh/random.hpp"

namespace stratthresh {

class FeatureDistribution;

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

// Beta(a, b) on [0, 1].
struct Beta {
  double a = 1.0;
  double b = 1.0;
};

// Piecewise-linear cdf through (xs[i], cdf[i]). Zero left of xs.front(), one
// right of xs.back(). The density is the central finite difference of the
// cdf at each node, interpolated linearly between nodes.
class EmpiricalGrid {
 public:
  EmpiricalGrid(std::vector<double> xs, std::vector<double> cdf);

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& cdf_values() const { return cdf_; }

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double p) const;

 private:
  std::vector<double> xs_;
  std::vector<double> cdf_;
  std::vector<double> node_pdf_;
};

// weight * first + (1 - weight) * second.
struct Mixture {
  double weight = 0.5;
  std::shared_ptr<const FeatureDistribution> first;
  std::shared_ptr<const FeatureDistribution> second;
};

// One-dimensional continuous law. Immutable after construction; every member
// is safe to call concurrently.
class FeatureDistribution {
 public:
  using Variant = std::variant<Gaussian, Beta, EmpiricalGrid, Mixture>;

  static FeatureDistribution gaussian(double mean, double std);
  static FeatureDistribution beta(double a, double b);
  static FeatureDistribution grid(std::vector<double> xs, std::vector<double> cdf);
  static FeatureDistribution mixture(double weight, FeatureDistribution first,
                                     FeatureDistribution second);

  const Variant& variant() const { return v_; }
  bool is_gaussian() const { return std::holds_alternative<Gaussian>(v_); }
  bool is_beta() const { return std::holds_alternative<Beta>(v_); }

  double cdf(double x) const;
  // +infinity where the density is unbounded (Beta endpoints with a < 1 or b < 1).
  double pdf(double x) const;
  double log_pdf(double x) const;
  double quantile(double p) const;

  double mean() const;
  double stddev() const;

  double draw(Rng& rng) const;

  std::string describe() const;

 private:
  explicit FeatureDistribution(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

// Law of C_M - C_I. Restricted to the Gaussian and EmpiricalGrid families.
class CostDiffDistribution {
 public:
  static CostDiffDistribution gaussian(double mean, double std);
  static CostDiffDistribution grid(std::vector<double> xs, std::vector<double> cdf);
  explicit CostDiffDistribution(FeatureDistribution dist);

  double cdf(double x) const { return dist_.cdf(x); }
  double pdf(double x) const { return dist_.pdf(x); }
  double quantile(double p) const { return dist_.quantile(p); }
  double draw(Rng& rng) const { return dist_.draw(rng); }
  const FeatureDistribution& distribution() const { return dist_; }

 private:
  FeatureDistribution dist_;
};

inline bool is_unbounded(double density) { return density == HUGE_VAL; }

struct MlrCheck {
  bool holds = false;
  std::optional<double> first_violation;
};

// Strict monotone likelihood ratio of numerator/denominator on an evenly
// spaced grid over the intersection of both central 99.8% ranges.
MlrCheck check_mlr(const FeatureDistribution& numerator, const FeatureDistribution& denominator,
                   std::size_t grid_size = 2000);

struct CdfPoint {
  double x;
  double cdf;
};

// Least-squares fit of Beta(a, b) to cdf observations on [0, 1].
Beta fit_beta(std::span<const CdfPoint> points);

std::vector<double> sample(const FeatureDistribution& dist, std::size_t count, std::uint64_t seed);

// Kolmogorov-Smirnov distance between the empirical law of `samples` and `dist`.
double ks_statistic(std::vector<double> samples, const FeatureDistribution& dist);

// CSV with header `x,cdf`.
FeatureDistribution load_grid_csv(const std::filesystem::path& path);
void store_grid_csv(const EmpiricalGrid& grid, const std::filesystem::path& path);

}  // namespace stratthresh
