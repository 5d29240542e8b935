#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratthresh/best_response.hpp"

namespace stratthresh {

enum class Family { Gaussian, Beta };
Family parse_family(const std::string& name);
std::string to_string(Family family);

// A parametric law fitted to the unknown component of a two-part mixture.
struct UnmixFit {
  FeatureDistribution dist;
  double ks;      // sup |residual cdf - fitted cdf| on the fitting grid
  bool poor_fit;  // ks above kPoorFitThreshold
};

inline constexpr double kPoorFitThreshold = 0.03;
inline constexpr double kMonotoneTolerance = 1e-2;

// Samples from w1 * known + (1 - w1) * unknown. Subtracts the known cdf,
// renormalizes, and fits `family` by least squares on 200 grid points.
// Throws IllPosedError when 1 - w1 vanishes or the residual cdf decreases by
// more than `tolerance`.
UnmixFit unmix(std::span<const double> samples, double known_weight,
               const FeatureDistribution& known, Family family,
               double tolerance = kMonotoneTolerance);

// Samples of the pre-response population alpha * p1 + (1 - alpha) * p0.
UnmixFit estimate_p0(std::span<const double> samples, double alpha, const FeatureDistribution& p1,
                     Family family, double tolerance = kMonotoneTolerance);

// Samples after an intervention with manipulation disabled:
// (1-alpha)(1-q) p_improved + [(1-alpha) q + alpha] p1.
UnmixFit estimate_pI(std::span<const double> samples, double alpha, double q,
                     const FeatureDistribution& p1, Family family,
                     double tolerance = kMonotoneTolerance);

// kMonotoneTolerance, widened to the DKW sampling band of the residual cdf
// when n samples are too few for the fixed tolerance.
double sampling_tolerance(std::size_t n, double unknown_weight);

struct Clamped {
  double value;
  bool clamped;
};

// Post-audit qualification rate alpha + (1 - alpha) q, solved for q.
Clamped estimate_q(double post_audit_rate, double alpha);

struct EpsilonEstimate {
  Clamped eps;
  Clamped p_manip;
};

// Solves alpha_p = alpha + (1 - alpha)(1 - P_M) q for P_M, then eps = caught / P_M.
// `caught_fraction` is measured among unqualified agents.
EpsilonEstimate estimate_epsilon(double post_rate, double caught_fraction, double alpha, double q);

struct GapParameters {
  FeatureDistribution p1;
  FeatureDistribution p_improved;
  double q;
  double eps;
};

struct Probe {
  double theta;
  double p_manip;
};

struct CostDiffFit {
  double mean;
  double std;
  double rms_residual;
};

// Maps each probe threshold to its net gap and fits a Gaussian cdf through the
// (gap, P_M) points. Throws ValidationError below 3 probes and IllPosedError
// when the probes carry no slope information.
CostDiffFit estimate_cost_diff(const GapParameters& gap, std::span<const Probe> probes);

struct InterventionOutcome {
  double theta;
  bool audit_everyone;
  bool manipulation_disabled;
  std::size_t samples;
  double qualification_rate;
  double caught_fraction;  // among unqualified agents
};

struct ProbeEstimate {
  InterventionOutcome outcome;
  EpsilonEstimate estimate;  // from this probe alone
  bool identified;           // false when the implied P_M was not positive
};

struct PooledEpsilon {
  Clamped eps;
  bool regression;    // false: fell back to sum(caught) / sum(P_M)
  double q_implied;   // intercept of the regression (NaN on fallback)
};

// Uses every probe at once. Rewriting the step-4 relation as
//   (alpha_p - alpha) / (1 - alpha) = q - (q / eps) * caught
// makes eps = -intercept / slope of a straight-line fit across probes, which
// does not inherit the sampling error of a separately estimated q. Falls back
// to the ratio of summed caught fractions to summed per-probe P_M when the
// probes do not determine a negative slope.
PooledEpsilon pool_epsilon(std::span<const ProbeEstimate> probes, double alpha);

struct ParameterError {
  double location;  // |estimated mean - true mean|
  double scale;     // |estimated std - true std|
};

struct EstimationErrors {
  ParameterError p0;
  double q;
  ParameterError p_improved;
  double eps;
  ParameterError cost_diff;
};

struct EstimationReport {
  std::size_t sample_size;
  std::uint64_t seed;
  UnmixFit p0;
  Clamped q;
  UnmixFit p_improved;
  PooledEpsilon eps;
  std::vector<ProbeEstimate> probes;
  CostDiffFit cost_diff;
  std::optional<EstimationErrors> errors;
};

struct PipelineOptions {
  std::optional<Family> p0_family;  // default: family of the ground truth
  std::optional<Family> p_improved_family;
  std::size_t threads = 0;
};

// Evenly spaced thresholds across the middle 80% of the model's theta bounds.
std::vector<double> default_probe_thetas(const PopulationModel& model, std::size_t count = 8);

// Runs the five-step controlled-experiment procedure against simulations of
// `truth`, using only alpha and p1 as prior knowledge.
EstimationReport run_estimation_pipeline(const PopulationModel& truth, std::size_t sample_size,
                                         std::uint64_t seed, std::span<const double> probe_thetas,
                                         const PipelineOptions& options = {});

nlohmann::json to_json(const EstimationReport& report);

}  // namespace stratthresh
