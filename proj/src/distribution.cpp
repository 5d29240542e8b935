#include "stratthresh/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "stratthresh/csv.hpp"
#include "stratthresh/detail/pattern_search.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

void require_probability_open(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Smallest x with cdf(x) >= p for a continuous, non-decreasing cdf, given a bracket.
template <class Cdf>
double invert_by_bisection(const Cdf& cdf, double p, double lo, double hi) {
  for (int i = 0; i < 400 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------- EmpiricalGrid

EmpiricalGrid::EmpiricalGrid(std::vector<double> xs, std::vector<double> cdf)
    : xs_(std::move(xs)), cdf_(std::move(cdf)) {
  if (xs_.size() != cdf_.size()) throw ValidationError("grid: xs and cdf lengths differ");
  if (xs_.size() < 2) throw ValidationError("grid: need at least two points");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (!std::isfinite(xs_[i]) || !std::isfinite(cdf_[i]))
      throw ValidationError("grid: non-finite value at row " + std::to_string(i));
    if (cdf_[i] < 0.0 || cdf_[i] > 1.0)
      throw ValidationError("grid: cdf outside [0,1] at row " + std::to_string(i));
    if (i > 0 && !(xs_[i] > xs_[i - 1]))
      throw ValidationError("grid: xs not strictly ascending at row " + std::to_string(i));
    if (i > 0 && cdf_[i] < cdf_[i - 1])
      throw ValidationError("grid: cdf decreases at row " + std::to_string(i));
  }
  const std::size_t n = xs_.size();
  node_pdf_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = i == 0 ? 0 : i - 1;
    const std::size_t r = i + 1 == n ? n - 1 : i + 1;
    node_pdf_[i] = (cdf_[r] - cdf_[l]) / (xs_[r] - xs_[l]);
  }
}

double EmpiricalGrid::cdf(double x) const {
  if (x < xs_.front()) return 0.0;
  if (x >= xs_.back()) return 1.0;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
  return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
}

double EmpiricalGrid::pdf(double x) const {
  if (x < xs_.front() || x > xs_.back()) return 0.0;
  if (x == xs_.back()) return node_pdf_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
  return node_pdf_[i - 1] + t * (node_pdf_[i] - node_pdf_[i - 1]);
}

double EmpiricalGrid::quantile(double p) const {
  if (p <= cdf_.front()) return xs_.front();
  if (p > cdf_.back()) return xs_.back();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  const double t = (p - cdf_[i - 1]) / (cdf_[i] - cdf_[i - 1]);
  return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
}

// ---------------------------------------------------------- FeatureDistribution

FeatureDistribution FeatureDistribution::gaussian(double mean, double std) {
  if (!std::isfinite(mean)) throw ValidationError("gaussian: mean must be finite");
  if (!(std > 0.0) || !std::isfinite(std)) throw ValidationError("gaussian: std must be > 0");
  return FeatureDistribution(Gaussian{mean, std});
}

FeatureDistribution FeatureDistribution::beta(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("beta: a must be > 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("beta: b must be > 0");
  return FeatureDistribution(Beta{a, b});
}

FeatureDistribution FeatureDistribution::grid(std::vector<double> xs, std::vector<double> cdf) {
  return FeatureDistribution(EmpiricalGrid(std::move(xs), std::move(cdf)));
}

FeatureDistribution FeatureDistribution::mixture(double weight, FeatureDistribution first,
                                                 FeatureDistribution second) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw ValidationError("mixture: weight must be in [0,1]");
  return FeatureDistribution(
      Mixture{weight, std::make_shared<const FeatureDistribution>(std::move(first)),
              std::make_shared<const FeatureDistribution>(std::move(second))});
}

double FeatureDistribution::cdf(double x) const {
  require_finite(x, "cdf: x");
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return 0.5 * std::erfc(-(x - d.mean) / (d.std * std::numbers::sqrt2));
        } else if constexpr (std::is_same_v<T, Beta>) {
          if (x <= 0.0) return 0.0;
          if (x >= 1.0) return 1.0;
          return boost::math::ibeta(d.a, d.b, x);
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          return d.cdf(x);
        } else {
          return d.weight * d.first->cdf(x) + (1.0 - d.weight) * d.second->cdf(x);
        }
      },
      v_);
}

double FeatureDistribution::pdf(double x) const {
  require_finite(x, "pdf: x");
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          const double z = (x - d.mean) / d.std;
          return std::exp(-0.5 * z * z) / (d.std * std::sqrt(2.0 * std::numbers::pi));
        } else if constexpr (std::is_same_v<T, Beta>) {
          if (x < 0.0 || x > 1.0) return 0.0;
          if (x == 0.0) {
            if (d.a < 1.0) return kInf;
            return d.a == 1.0 ? std::exp(-log_beta_fn(1.0, d.b)) : 0.0;
          }
          if (x == 1.0) {
            if (d.b < 1.0) return kInf;
            return d.b == 1.0 ? std::exp(-log_beta_fn(d.a, 1.0)) : 0.0;
          }
          return boost::math::ibeta_derivative(d.a, d.b, x);
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          return d.pdf(x);
        } else {
          return d.weight * d.first->pdf(x) + (1.0 - d.weight) * d.second->pdf(x);
        }
      },
      v_);
}

double FeatureDistribution::log_pdf(double x) const {
  require_finite(x, "log_pdf: x");
  if (const auto* g = std::get_if<Gaussian>(&v_)) {
    const double z = (x - g->mean) / g->std;
    return -0.5 * z * z - std::log(g->std) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  if (const auto* b = std::get_if<Beta>(&v_)) {
    if (x > 0.0 && x < 1.0)
      return (b->a - 1.0) * std::log(x) + (b->b - 1.0) * std::log1p(-x) - log_beta_fn(b->a, b->b);
  }
  return std::log(pdf(x));
}

double FeatureDistribution::quantile(double p) const {
  require_probability_open(p);
  return std::visit(
      [p, this](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.mean - d.std * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
        } else if constexpr (std::is_same_v<T, Beta>) {
          return boost::math::ibeta_inv(d.a, d.b, p);
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          return d.quantile(p);
        } else {
          const double q1 = d.first->quantile(p);
          const double q2 = d.second->quantile(p);
          return invert_by_bisection([this](double x) { return cdf(x); }, p, std::min(q1, q2),
                                     std::max(q1, q2));
        }
      },
      v_);
}

double FeatureDistribution::mean() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.mean;
        } else if constexpr (std::is_same_v<T, Beta>) {
          return d.a / (d.a + d.b);
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          const auto& xs = d.xs();
          const auto& c = d.cdf_values();
          double m = c.front() * xs.front() + (1.0 - c.back()) * xs.back();
          for (std::size_t i = 1; i < xs.size(); ++i) m += (c[i] - c[i - 1]) * 0.5 * (xs[i] + xs[i - 1]);
          return m;
        } else {
          return d.weight * d.first->mean() + (1.0 - d.weight) * d.second->mean();
        }
      },
      v_);
}

double FeatureDistribution::stddev() const {
  return std::visit(
      [this](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.std;
        } else if constexpr (std::is_same_v<T, Beta>) {
          const double s = d.a + d.b;
          return std::sqrt(d.a * d.b / (s * s * (s + 1.0)));
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          const auto& xs = d.xs();
          const auto& c = d.cdf_values();
          double m2 = c.front() * xs.front() * xs.front() + (1.0 - c.back()) * xs.back() * xs.back();
          for (std::size_t i = 1; i < xs.size(); ++i) {
            const double a = xs[i - 1], b = xs[i];
            m2 += (c[i] - c[i - 1]) * (a * a + a * b + b * b) / 3.0;
          }
          const double m = mean();
          return std::sqrt(std::max(0.0, m2 - m * m));
        } else {
          const double m1 = d.first->mean(), m2 = d.second->mean();
          const double s1 = d.first->stddev(), s2 = d.second->stddev();
          const double w = d.weight;
          const double second_moment = w * (s1 * s1 + m1 * m1) + (1.0 - w) * (s2 * s2 + m2 * m2);
          const double m = w * m1 + (1.0 - w) * m2;
          return std::sqrt(std::max(0.0, second_moment - m * m));
        }
      },
      v_);
}

double FeatureDistribution::draw(Rng& rng) const {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return d.mean + d.std * std::normal_distribution<double>{}(rng);
        } else if constexpr (std::is_same_v<T, Beta>) {
          const double x = std::gamma_distribution<double>{d.a, 1.0}(rng);
          const double y = std::gamma_distribution<double>{d.b, 1.0}(rng);
          return x / (x + y);
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          return d.quantile(uniform_open(rng));
        } else {
          return uniform_open(rng) < d.weight ? d.first->draw(rng) : d.second->draw(rng);
        }
      },
      v_);
}

std::string FeatureDistribution::describe() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          os << "gaussian(mean=" << d.mean << ", std=" << d.std << ")";
        } else if constexpr (std::is_same_v<T, Beta>) {
          os << "beta(a=" << d.a << ", b=" << d.b << ")";
        } else if constexpr (std::is_same_v<T, EmpiricalGrid>) {
          os << "grid(" << d.xs().size() << " points)";
        } else {
          os << "mixture(" << d.weight << " * " << d.first->describe() << " + "
             << (1.0 - d.weight) << " * " << d.second->describe() << ")";
        }
      },
      v_);
  return os.str();
}

// --------------------------------------------------------- CostDiffDistribution

CostDiffDistribution::CostDiffDistribution(FeatureDistribution dist) : dist_(std::move(dist)) {
  if (!dist_.is_gaussian() && !std::holds_alternative<EmpiricalGrid>(dist_.variant()))
    throw ValidationError("cost_diff: only gaussian or grid families are supported");
}

CostDiffDistribution CostDiffDistribution::gaussian(double mean, double std) {
  return CostDiffDistribution(FeatureDistribution::gaussian(mean, std));
}

CostDiffDistribution CostDiffDistribution::grid(std::vector<double> xs, std::vector<double> cdf) {
  return CostDiffDistribution(FeatureDistribution::grid(std::move(xs), std::move(cdf)));
}

// ------------------------------------------------------------------------ MLR

MlrCheck check_mlr(const FeatureDistribution& numerator, const FeatureDistribution& denominator,
                   std::size_t grid_size) {
  if (grid_size < 2) throw ValidationError("check_mlr: grid_size must be >= 2");
  constexpr double kTol = 1e-12;
  const double lo = std::max(numerator.quantile(0.001), denominator.quantile(0.001));
  const double hi = std::min(numerator.quantile(0.999), denominator.quantile(0.999));
  if (!(lo < hi)) throw ValidationError("check_mlr: central ranges do not overlap");

  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  double prev = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = i + 1 == grid_size ? hi : lo + step * static_cast<double>(i);
    const double den = denominator.pdf(x);
    if (!(den > 0.0)) return {false, x};
    const double ratio = numerator.pdf(x) / den;
    if (i > 0 && !(ratio - prev > kTol)) return {false, x};
    prev = ratio;
  }
  return {true, std::nullopt};
}

// ------------------------------------------------------------------- fit_beta

Beta fit_beta(std::span<const CdfPoint> points) {
  if (points.size() < 3) throw ValidationError("fit_beta: need at least 3 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.x >= 0.0 && p.x <= 1.0)) throw ValidationError("fit_beta: x outside [0,1]");
    if (!(p.cdf >= 0.0 && p.cdf <= 1.0)) throw ValidationError("fit_beta: cdf outside [0,1]");
    if (i > 0 && points[i].x < points[i - 1].x) throw ValidationError("fit_beta: x not ascending");
    if (i > 0 && points[i].cdf < points[i - 1].cdf)
      throw ValidationError("fit_beta: cdf values not monotone");
  }

  // Moment-matched start from the piecewise-linear cdf through (0,0), points, (1,1).
  double mean = 0.0, second = 0.0;
  {
    double px = 0.0, pc = 0.0;
    auto add = [&](double x, double c) {
      const double s0 = 1.0 - pc, s1 = 1.0 - c;
      mean += 0.5 * (s0 + s1) * (x - px);
      second += (px * s0 + x * s1) * (x - px);
      px = x;
      pc = c;
    };
    for (const auto& p : points) add(p.x, p.cdf);
    add(1.0, 1.0);
  }
  const double var = second - mean * mean;
  std::vector<std::pair<double, double>> starts{{1.0, 1.0}};
  if (mean > 0.0 && mean < 1.0 && var > 0.0 && var < mean * (1.0 - mean)) {
    const double common = mean * (1.0 - mean) / var - 1.0;
    const double a = mean * common, b = (1.0 - mean) * common;
    starts.insert(starts.begin(), {a, b});
    starts.emplace_back(0.5 * a, 0.5 * b);
    starts.emplace_back(2.0 * a, 2.0 * b);
  }

  auto sse = [&](const std::vector<double>& v) {
    if (std::abs(v[0]) > 8.0 || std::abs(v[1]) > 8.0) return HUGE_VAL;
    const double a = std::exp(v[0]), b = std::exp(v[1]);
    double s = 0.0;
    for (const auto& p : points) {
      const double c = p.x <= 0.0 ? 0.0 : p.x >= 1.0 ? 1.0 : boost::math::ibeta(a, b, p.x);
      s += (c - p.cdf) * (c - p.cdf);
    }
    return s;
  };

  detail::PatternSearchResult best;
  best.value = HUGE_VAL;
  for (const auto& [a, b] : starts) {
    auto r = detail::pattern_search(sse, {std::log(a), std::log(b)}, 0.25, 1e-10);
    if (r.value < best.value) best = std::move(r);
  }
  return Beta{std::exp(best.x[0]), std::exp(best.x[1])};
}

// ------------------------------------------------------------------- sampling

std::vector<double> sample(const FeatureDistribution& dist, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ValidationError("sample: count must be >= 1");
  Rng rng = make_stream(seed, 0);
  std::vector<double> out(count);
  for (auto& x : out) x = dist.draw(rng);
  return out;
}

double ks_statistic(std::vector<double> samples, const FeatureDistribution& dist) {
  if (samples.empty()) throw ValidationError("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = dist.cdf(samples[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

// ------------------------------------------------------------------------ CSV

FeatureDistribution load_grid_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require_header(t, {"x", "cdf"});
  std::vector<double> xs, cdf;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    xs.push_back(t.number(r, 0));
    cdf.push_back(t.number(r, 1));
  }
  return FeatureDistribution::grid(std::move(xs), std::move(cdf));
}

void store_grid_csv(const EmpiricalGrid& grid, const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < grid.xs().size(); ++i) rows.push_back({grid.xs()[i], grid.cdf_values()[i]});
  write_file_atomic(path, render_csv({"x", "cdf"}, rows));
}

}  // namespace stratthresh
