#include "stratthresh/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "stratthresh/detail/pattern_search.hpp"
#include "stratthresh/errors.hpp"
#include "stratthresh/simulation.hpp"

namespace stratthresh {

namespace {

constexpr std::size_t kUnmixGrid = 200;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double probit(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

UnmixFit fit_gaussian(const std::vector<double>& xs, const std::vector<double>& residual) {
  // Moment initialization from the residual's increments.
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double w = std::max(0.0, residual[i] - residual[i - 1]);
    const double mid = 0.5 * (xs[i] + xs[i - 1]);
    mass += w;
    m1 += w * mid;
    m2 += w * mid * mid;
  }
  double mean = mass > 0.0 ? m1 / mass : 0.5 * (xs.front() + xs.back());
  double var = mass > 0.0 ? m2 / mass - mean * mean : 0.0;
  double sd = var > 0.0 ? std::sqrt(var) : 0.25 * (xs.back() - xs.front());

  auto loss = [&](const std::vector<double>& p) {
    const double s = std::exp(p[1]);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = normal_cdf((xs[i] - p[0]) / s) - residual[i];
      total += d * d;
    }
    return total;
  };
  const auto best = detail::pattern_search(loss, {mean, std::log(sd)}, 0.25, 1e-10);
  auto dist = FeatureDistribution::gaussian(best.x[0], std::exp(best.x[1]));
  return {dist, 0.0, false};
}

UnmixFit fit_beta_family(const std::vector<double>& xs, const std::vector<double>& residual) {
  std::vector<CdfPoint> points;
  double running = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0.0 || xs[i] >= 1.0) continue;
    running = std::clamp(std::max(running, residual[i]), 0.0, 1.0);
    points.push_back({xs[i], running});
  }
  if (points.size() < 3) throw IllPosedError("unmix: samples leave too little support inside (0, 1)");
  const Beta b = fit_beta(points);
  return {FeatureDistribution::beta(b.a, b.b), 0.0, false};
}

}  // namespace

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "beta") return Family::Beta;
  throw ValidationError("unknown family '" + name + "' (expected gaussian or beta)");
}

std::string to_string(Family family) { return family == Family::Gaussian ? "gaussian" : "beta"; }

UnmixFit unmix(std::span<const double> samples, double known_weight, const FeatureDistribution& known,
               Family family, double tolerance) {
  if (samples.size() < 2) throw ValidationError("unmix: need at least 2 samples");
  if (!(known_weight >= 0.0 && known_weight <= 1.0))
    throw ValidationError("unmix: mixture weight must lie in [0, 1]");
  const double unknown_weight = 1.0 - known_weight;
  if (unknown_weight <= 1e-9)
    throw IllPosedError("unmix: the mixture carries no mass of the unknown component");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto quantile_index = [&](double p) {
    return std::min(sorted.size() - 1, static_cast<std::size_t>(p * (n - 1)));
  };
  const double lo = sorted[quantile_index(0.005)];
  const double hi = sorted[quantile_index(0.995)];
  if (!(hi > lo)) throw IllPosedError("unmix: samples have no spread");

  std::vector<double> xs(kUnmixGrid), residual(kUnmixGrid);
  for (std::size_t i = 0; i < kUnmixGrid; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kUnmixGrid - 1);
    const double mixed =
        static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), xs[i]) - sorted.begin()) / n;
    residual[i] = (mixed - known_weight * known.cdf(xs[i])) / unknown_weight;
  }

  double peak = residual.front();
  for (double r : residual) {
    if (r < peak - tolerance)
      throw IllPosedError("unmix: residual cdf is not monotone (known component or weight mis-specified)");
    peak = std::max(peak, r);
  }

  UnmixFit fit = family == Family::Gaussian ? fit_gaussian(xs, residual) : fit_beta_family(xs, residual);
  double ks = 0.0;
  for (std::size_t i = 0; i < kUnmixGrid; ++i) ks = std::max(ks, std::abs(residual[i] - fit.dist.cdf(xs[i])));
  fit.ks = ks;
  fit.poor_fit = ks > kPoorFitThreshold;
  return fit;
}

UnmixFit estimate_p0(std::span<const double> samples, double alpha, const FeatureDistribution& p1,
                     Family family, double tolerance) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  return unmix(samples, alpha, p1, family, tolerance);
}

UnmixFit estimate_pI(std::span<const double> samples, double alpha, double q,
                     const FeatureDistribution& p1, Family family, double tolerance) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q must lie in [0, 1]");
  if ((1.0 - alpha) * (1.0 - q) <= 1e-9)
    throw IllPosedError("estimate_pI: weight (1-alpha)(1-q) is zero, improved features never appear");
  return unmix(samples, (1.0 - alpha) * q + alpha, p1, family, tolerance);
}

double sampling_tolerance(std::size_t n, double unknown_weight) {
  const double band = 1.36 / (std::sqrt(static_cast<double>(n)) * std::max(unknown_weight, 1e-9));
  return std::max(kMonotoneTolerance, band);
}

Clamped estimate_q(double rate, double alpha) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("qualification rate must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const double raw = (rate - alpha) / (1.0 - alpha);
  const double q = std::clamp(raw, 0.0, 1.0);
  return {q, q != raw};
}

EpsilonEstimate estimate_epsilon(double post_rate, double caught, double alpha, double q) {
  if (!(post_rate >= 0.0 && post_rate <= 1.0)) throw ValidationError("qualification rate must lie in [0, 1]");
  if (!(caught >= 0.0 && caught <= 1.0)) throw ValidationError("caught fraction must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q must lie in [0, 1]");
  if (q <= 0.0) throw IllPosedError("estimate_epsilon: q = 0 leaves P_M unidentified by the rate");
  const double pm_raw = 1.0 - (post_rate - alpha) / ((1.0 - alpha) * q);
  if (pm_raw <= 0.0) throw IllPosedError("estimate_epsilon: implied P_M is not positive");
  const double pm = std::min(pm_raw, 1.0);
  const double eps_raw = caught / pm;
  const double eps = std::clamp(eps_raw, 0.0, 1.0);
  return {{eps, eps != eps_raw}, {pm, pm != pm_raw}};
}

CostDiffFit estimate_cost_diff(const GapParameters& g, std::span<const Probe> probes) {
  if (probes.size() < 3) throw ValidationError("estimate_cost_diff: need at least 3 probes");
  std::vector<double> gaps, pms;
  for (const auto& p : probes) {
    if (!(p.p_manip >= 0.0 && p.p_manip <= 1.0)) throw ValidationError("probe P_M must lie in [0, 1]");
    gaps.push_back(net_gap(g.p1, g.p_improved, g.q, g.eps, p.theta));
    pms.push_back(p.p_manip);
  }
  const auto [pmin, pmax] = std::minmax_element(pms.begin(), pms.end());
  const auto [gmin, gmax] = std::minmax_element(gaps.begin(), gaps.end());
  if (*pmax - *pmin < 1e-9 || *gmax - *gmin < 1e-12)
    throw IllPosedError("estimate_cost_diff: probes are flat, the fit is rank-deficient");

  // Probit regression for the starting point; exact on noiseless Gaussian data.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (pms[i] <= 1e-6 || pms[i] >= 1.0 - 1e-6) continue;
    const double z = probit(pms[i]);
    sx += gaps[i];
    sy += z;
    sxx += gaps[i] * gaps[i];
    sxy += gaps[i] * z;
    m += 1;
  }
  const double det = m * sxx - sx * sx;
  double mean = 0.0, sd = 0.5;
  if (m >= 2 && det > 1e-14) {
    const double slope = (m * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / m;
    if (slope <= 0.0) throw IllPosedError("estimate_cost_diff: P_M does not increase with the net gap");
    sd = 1.0 / slope;
    mean = -intercept / slope;
  }

  auto loss = [&](const std::vector<double>& p) {
    const double s = std::exp(p[1]);
    double total = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const double d = normal_cdf((gaps[i] - p[0]) / s) - pms[i];
      total += d * d;
    }
    return total;
  };
  const auto best = detail::pattern_search(loss, {mean, std::log(sd)}, 0.05, 1e-12);
  return {best.x[0], std::exp(best.x[1]), std::sqrt(best.value / static_cast<double>(gaps.size()))};
}

PooledEpsilon pool_epsilon(std::span<const ProbeEstimate> probes, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(probes.size());
  for (const auto& p : probes) {
    const double c = p.outcome.caught_fraction;
    const double y = (p.outcome.qualification_rate - alpha) / (1.0 - alpha);
    sx += c;
    sy += y;
    sxx += c * c;
    sxy += c * y;
  }
  const double det = m * sxx - sx * sx;
  if (probes.size() >= 3 && det > 1e-12) {
    const double slope = (m * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / m;
    if (slope < 0.0 && intercept > 0.0) {
      const double raw = -intercept / slope;
      const double eps = std::clamp(raw, 0.0, 1.0);
      return {{eps, eps != raw}, true, intercept};
    }
  }
  double caught = 0.0, pm = 0.0;
  for (const auto& p : probes)
    if (p.identified) {
      caught += p.outcome.caught_fraction;
      pm += p.estimate.p_manip.value;
    }
  if (pm <= 0.0) throw IllPosedError("estimation: no probe implies a positive P_M");
  const double raw = caught / pm;
  const double eps = std::clamp(raw, 0.0, 1.0);
  return {{eps, eps != raw}, false, std::numeric_limits<double>::quiet_NaN()};
}

std::vector<double> default_probe_thetas(const PopulationModel& model, std::size_t count) {
  if (count < 3) throw ValidationError("probe count must be >= 3");
  const ThetaBounds b = model.bounds();
  const double lo = b.lo + 0.1 * (b.hi - b.lo), hi = b.hi - 0.1 * (b.hi - b.lo);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

namespace {

Family family_of(const FeatureDistribution& d) { return d.is_beta() ? Family::Beta : Family::Gaussian; }

ParameterError compare(const FeatureDistribution& estimate, const FeatureDistribution& truth) {
  return {std::abs(estimate.mean() - truth.mean()), std::abs(estimate.stddev() - truth.stddev())};
}

InterventionOutcome outcome_of(const SimulationResult& r, double theta, const SimulationOptions& o) {
  return {theta, o.auditing_everyone, o.manipulation_disabled, r.n, r.qualification_rate(),
          r.caught_among_unqualified()};
}

}  // namespace

EstimationReport run_estimation_pipeline(const PopulationModel& truth, std::size_t n, std::uint64_t seed,
                                         std::span<const double> probe_thetas,
                                         const PipelineOptions& options) {
  if (probe_thetas.size() < 3) throw ValidationError("estimation: need at least 3 probe thresholds");
  if (n < 2) throw ValidationError("estimation: sample_size must be >= 2");
  validate(truth);
  auto step_seed = [&](std::uint64_t step) { return splitmix64(seed ^ splitmix64(step + 0x51ed)); };
  const double alpha = truth.alpha;
  const double lowest = truth.bounds().lo;

  // Step 1: lowest threshold; the pre-response population.
  SimulationOptions step1;
  step1.retain_agents = true;
  step1.threads = options.threads;
  const auto r1 = simulate(truth, lowest, n, step_seed(1), step1);
  const auto initial = r1.initial_features();
  UnmixFit p0 = estimate_p0(initial, alpha, truth.p1, options.p0_family.value_or(family_of(truth.p0)),
                          sampling_tolerance(n, 1.0 - alpha));

  // Steps 2-3: strict auditing, so nobody manipulates; everyone improves.
  SimulationOptions audit;
  audit.auditing_everyone = true;
  audit.manipulation_disabled = true;
  audit.retain_agents = true;
  audit.threads = options.threads;
  const auto r2 = simulate(truth, lowest, n, step_seed(2), audit);
  const Clamped q = estimate_q(r2.qualification_rate(), alpha);
  const auto improved = r2.final_features();
  UnmixFit p_improved =
      estimate_pI(improved, alpha, q.value, truth.p1,
                  options.p_improved_family.value_or(family_of(truth.p_improved)),
                  sampling_tolerance(n, (1.0 - alpha) * (1.0 - q.value)));
  EstimationReport report{n, seed, std::move(p0), q, std::move(p_improved), {}, {}, {}, std::nullopt};

  // Step 4: one intervention per probe threshold; eps pooled across probes.
  SimulationOptions plain;
  plain.threads = options.threads;
  for (std::size_t i = 0; i < probe_thetas.size(); ++i) {
    const auto r = simulate(truth, probe_thetas[i], n, step_seed(100 + i), plain);
    const auto outcome = outcome_of(r, probe_thetas[i], plain);
    ProbeEstimate probe{outcome, {{0.0, true}, {0.0, true}}, false};
    try {
      probe.estimate = estimate_epsilon(outcome.qualification_rate, outcome.caught_fraction, alpha,
                                        report.q.value);
      probe.identified = true;
    } catch (const IllPosedError&) {
      // Sampling noise pushed the implied P_M to zero or below; the probe is
      // kept at P_M = 0 and flagged rather than aborting the whole run.
    }
    report.probes.push_back(probe);
  }
  report.eps = pool_epsilon(report.probes, alpha);

  // Step 5: probe (theta, P_M) pairs trace the cost-difference cdf. With eps
  // known, the caught fraction measures P_M more directly than the rate.
  std::vector<Probe> probes;
  const double eps_hat = report.eps.eps.value;
  for (const auto& p : report.probes) {
    const double pm = eps_hat > 0.0 ? std::min(1.0, p.outcome.caught_fraction / eps_hat) : p.estimate.p_manip.value;
    probes.push_back({p.outcome.theta, pm});
  }
  const GapParameters gap{truth.p1, report.p_improved.dist, report.q.value, eps_hat};
  report.cost_diff = estimate_cost_diff(gap, probes);

  const auto& cost_truth = truth.cost_diff.distribution();
  report.errors = EstimationErrors{
      compare(report.p0.dist, truth.p0),
      std::abs(report.q.value - truth.q),
      compare(report.p_improved.dist, truth.p_improved),
      std::abs(report.eps.eps.value - truth.eps),
      {std::abs(report.cost_diff.mean - cost_truth.mean()),
       std::abs(report.cost_diff.std - cost_truth.stddev())}};
  return report;
}

namespace {

using nlohmann::json;

nlohmann::json fit_json(const UnmixFit& f) {
  nlohmann::json j{{"distribution", f.dist.describe()},
                   {"mean", f.dist.mean()},
                   {"std", f.dist.stddev()},
                   {"ks", f.ks},
                   {"poor_fit", f.poor_fit}};
  if (const auto* g = std::get_if<Gaussian>(&f.dist.variant())) j["params"] = {{"mean", g->mean}, {"std", g->std}};
  if (const auto* b = std::get_if<Beta>(&f.dist.variant())) j["params"] = {{"a", b->a}, {"b", b->b}};
  return j;
}

nlohmann::json error_json(const ParameterError& e) { return {{"location", e.location}, {"scale", e.scale}}; }

}  // namespace

nlohmann::json to_json(const EstimationReport& r) {
  nlohmann::json j;
  j["sample_size"] = r.sample_size;
  j["seed"] = r.seed;
  j["p0"] = fit_json(r.p0);
  j["q"] = {{"estimate", r.q.value}, {"clamped", r.q.clamped}};
  j["p_improved"] = fit_json(r.p_improved);
  j["eps"] = {{"estimate", r.eps.eps.value},
              {"clamped", r.eps.eps.clamped},
              {"method", r.eps.regression ? "regression" : "pooled-ratio"},
              {"q_implied", r.eps.regression ? json(r.eps.q_implied) : json()}};
  j["cost_diff"] = {{"mean", r.cost_diff.mean}, {"std", r.cost_diff.std},
                    {"rms_residual", r.cost_diff.rms_residual}};
  auto& probes = j["probes"] = nlohmann::json::array();
  for (const auto& p : r.probes)
    probes.push_back({{"theta", p.outcome.theta},
                      {"samples", p.outcome.samples},
                      {"qualification_rate", p.outcome.qualification_rate},
                      {"caught_fraction", p.outcome.caught_fraction},
                      {"p_manip", p.estimate.p_manip.value},
                      {"p_manip_clamped", p.estimate.p_manip.clamped},
                      {"eps", p.estimate.eps.value},
                      {"eps_clamped", p.estimate.eps.clamped},
                      {"identified", p.identified}});
  if (r.errors) {
    j["errors"] = {{"p0", error_json(r.errors->p0)},
                   {"q", r.errors->q},
                   {"p_improved", error_json(r.errors->p_improved)},
                   {"eps", r.errors->eps},
                   {"cost_diff", error_json(r.errors->cost_diff)}};
  }
  return j;
}

}  // namespace stratthresh
