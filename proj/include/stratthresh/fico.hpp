#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stratthresh/distribution.hpp"
#include "stratthresh/fairness.hpp"

namespace stratthresh {

// One score bucket of a credit-score style table: the group's score cdf at
// `score` and the qualification likelihood of the bucket ending at `score`.
struct FicoRecord {
  double score;  // in [0, 1]
  std::string group;
  double cdf;          // F_{X|S}(score | group)
  double p_qualified;  // P(Y = 1 | x, group)
};

struct FicoGroupAlpha {
  std::string group;
  double alpha;
};

struct FicoInput {
  std::vector<FicoRecord> records;
  std::vector<FicoGroupAlpha> alphas;
};

// Throws ValidationError on non-ascending scores, non-monotone cdfs, values
// outside [0, 1], or groups without an alpha.
void validate(const FicoInput& input);

// `score,group,cdf,p_qualified` plus the sidecar `group,alpha`.
FicoInput read_fico(const std::filesystem::path& records_csv, const std::filesystem::path& alpha_csv);
void write_fico(const FicoInput& input, const std::filesystem::path& records_csv,
                const std::filesystem::path& alpha_csv);

struct FicoGroupFit {
  std::string group;
  double alpha;
  Beta p1;
  Beta p0;
  Beta p_improved;  // parameter-wise midpoint of p1 and p0
};

// Splits each group's score cdf into its qualified and unqualified parts and
// fits a Beta law to each. Groups appear in first-seen order.
std::vector<FicoGroupFit> fit_fico_groups(const FicoInput& input);

struct FicoBehavior {
  double q = 0.3;
  double eps = 0.5;
  double cost_mean = 0.0;
  double cost_std = 0.25;
  double u = 1.0;
  FairnessMetric metric = FairnessMetric::EqOpt;
};

// Exactly two groups; the first one seen becomes group a.
GroupScenario ingest_fico(const FicoInput& input, const FicoBehavior& behavior);

struct FicoGroupSpec {
  std::string group;
  double alpha;
  Beta p1;
  Beta p0;
};

// Tabulates known Beta laws on the scores i / buckets, i = 1..buckets.
FicoInput synthesize_fico_input(const std::vector<FicoGroupSpec>& groups, std::size_t buckets = 100);

// Two-group fixture with a credit-score flavour: a majority group with a high
// qualification rate and a minority group with a low one.
std::vector<FicoGroupSpec> fico_like_fixture();

}  // namespace stratthresh
