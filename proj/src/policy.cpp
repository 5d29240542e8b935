#include "stratthresh/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

void validate(const PreferenceWeights& k) {
  for (double v : {k.k1, k.k2, k.k3})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("weights must be finite and >= 0");
}

Weight parse_weight(const std::string& name) {
  if (name == "k1") return Weight::K1;
  if (name == "k2") return Weight::K2;
  if (name == "k3") return Weight::K3;
  throw ValidationError("unknown weight '" + name + "' (expected k1, k2 or k3)");
}

std::string to_string(Weight w) {
  switch (w) {
    case Weight::K1: return "k1";
    case Weight::K2: return "k2";
    case Weight::K3: return "k3";
  }
  return "?";
}

PreferenceWeights with_weight(PreferenceWeights base, Weight which, double value) {
  switch (which) {
    case Weight::K1: base.k1 = value; break;
    case Weight::K2: base.k2 = value; break;
    case Weight::K3: base.k3 = value; break;
  }
  return base;
}

double nonstrategic_utility(const PopulationModel& m, double theta) {
  const double f1 = m.p1.cdf(theta);
  const double f0 = m.p0.cdf(theta);
  return m.u * (m.alpha * (1.0 - f1) - (1.0 - m.alpha) * (1.0 - f0));
}

double strategic_utility(const PopulationModel& m, double theta) {
  const double f1 = m.p1.cdf(theta);
  const double fi = m.p_improved.cdf(theta);
  const double pm = manipulation_probability(m, theta);
  const double a = m.alpha;
  const double qualified_mass = a + (1.0 - a) * (1.0 - pm) * m.q;
  const double unqualified_accepted =
      (1.0 - m.eps) * pm * (1.0 - f1) + (1.0 - pm) * (1.0 - m.q) * (1.0 - fi);
  return m.u * qualified_mass * (1.0 - f1) - m.u * (1.0 - a) * unqualified_accepted;
}

Decomposition decomposition(const PopulationModel& m, double theta) {
  const double f1 = m.p1.cdf(theta);
  const double f0 = m.p0.cdf(theta);
  const double fi = m.p_improved.cdf(theta);
  const double pm = manipulation_probability(m, theta);
  return {(1.0 - pm) * m.q * ((1.0 - f0) + (1.0 - f1)),
          (1.0 - pm) * (1.0 - m.q) * (f0 - fi),
          pm * ((1.0 - m.eps) * (1.0 - f1) - (1.0 - f0))};
}

double adjusted_objective(const PopulationModel& m, double theta, const PreferenceWeights& k) {
  const Decomposition d = decomposition(m, theta);
  return nonstrategic_utility(m, theta) +
         m.u * (1.0 - m.alpha) * (k.k1 * d.phi1 - k.k2 * d.phi2 - k.k3 * d.phi3);
}

OptimizationResult optimize_nonstrategic(const PopulationModel& m) {
  const ThetaBounds b = m.bounds();
  const double target = std::log((1.0 - m.alpha) / m.alpha);
  // Increasing in theta under MLR.
  auto excess = [&](double t) { return m.p1.log_pdf(t) - m.p0.log_pdf(t) - target; };

  OptimizationResult r;
  const double elo = excess(b.lo), ehi = excess(b.hi);
  if (elo < 0.0 && ehi > 0.0) {
    double lo = b.lo, hi = b.hi;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (excess(mid) < 0.0) lo = mid;
      else hi = mid;
      ++r.evaluations;
    }
    r.theta_star = 0.5 * (lo + hi);
  } else {
    const double ulo = nonstrategic_utility(m, b.lo), uhi = nonstrategic_utility(m, b.hi);
    r.theta_star = ulo >= uhi ? b.lo : b.hi;
    r.at_boundary = true;
  }
  r.objective_value = nonstrategic_utility(m, r.theta_star);
  r.actual_utility = strategic_utility(m, r.theta_star);
  return r;
}

OptimizationResult optimize(const PopulationModel& m, const PreferenceWeights& k,
                            const OptimizeOptions& opt) {
  validate(k);
  if (opt.grid_points < 3) throw ValidationError("optimize: grid_points must be >= 3");
  const ThetaBounds b = m.bounds();
  const std::size_t n = opt.grid_points;
  const double step = (b.hi - b.lo) / static_cast<double>(n - 1);
  auto at = [&](std::size_t i) { return i + 1 == n ? b.hi : b.lo + step * static_cast<double>(i); };

  OptimizationResult r;
  auto f = [&](double t) {
    ++r.evaluations;
    return adjusted_objective(m, t, k);
  };

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(at(i));
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }

  // Golden-section search in the cell around the grid winner.
  double lo = at(best == 0 ? 0 : best - 1);
  double hi = at(best + 1 == n ? n - 1 : best + 1);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > opt.tolerance) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  double theta = f1 >= f2 ? x1 : x2;
  double value = std::max(f1, f2);
  if (!(value > best_value)) {
    theta = at(best);
    value = best_value;
  }

  r.theta_star = theta;
  r.objective_value = value;
  r.actual_utility = strategic_utility(m, theta);
  r.at_boundary = std::abs(theta - b.lo) <= opt.tolerance || std::abs(theta - b.hi) <= opt.tolerance;
  return r;
}

ThresholdComparison compare_strategic_nonstrategic(const PopulationModel& m) {
  const auto strategic = optimize(m, PreferenceWeights::original());
  const auto nonstrategic = optimize_nonstrategic(m);
  const ThetaBounds b = m.bounds();
  constexpr std::size_t kGrid = 4000;
  double min_pm = 1.0;
  for (std::size_t i = 0; i < kGrid; ++i) {
    const double t = b.lo + (b.hi - b.lo) * static_cast<double>(i) / (kGrid - 1);
    min_pm = std::min(min_pm, manipulation_probability(m, t));
  }
  return {strategic.theta_star, nonstrategic.theta_star,
          strategic.theta_star < nonstrategic.theta_star, min_pm, min_pm <= 0.5};
}

std::vector<SweepRecord> sweep_weights(const PopulationModel& m, Weight which,
                                       std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("sweep: grid must not be empty");
  std::vector<SweepRecord> out;
  out.reserve(grid.size());
  for (double k : grid) {
    if (!(k >= 0.0)) throw ValidationError("sweep: grid values must be >= 0");
    const auto r = optimize(m, with_weight(PreferenceWeights::original(), which, k));
    out.push_back({k, r.theta_star, r.actual_utility, manipulation_probability(m, r.theta_star)});
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRecord> records) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : records) rows.push_back({r.k, r.theta_star, r.actual_utility, r.p_manip});
  return render_csv({"k", "theta_star", "actual_utility", "p_manip"}, rows);
}

std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  require_header(t, {"k", "theta_star", "actual_utility", "p_manip"});
  std::vector<SweepRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({t.number(r, 0), t.number(r, 1), t.number(r, 2), t.number(r, 3)});
  return out;
}

}  // namespace stratthresh
