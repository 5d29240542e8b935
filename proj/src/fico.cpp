#include "stratthresh/fico.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "stratthresh/csv.hpp"
#include "stratthresh/errors.hpp"

namespace stratthresh {

namespace {

std::vector<std::string> group_order(const FicoInput& in) {
  std::vector<std::string> order;
  for (const auto& r : in.records)
    if (std::find(order.begin(), order.end(), r.group) == order.end()) order.push_back(r.group);
  return order;
}

std::vector<const FicoRecord*> records_of(const FicoInput& in, const std::string& group) {
  std::vector<const FicoRecord*> out;
  for (const auto& r : in.records)
    if (r.group == group) out.push_back(&r);
  return out;
}

double alpha_of(const FicoInput& in, const std::string& group) {
  for (const auto& a : in.alphas)
    if (a.group == group) return a.alpha;
  throw ValidationError("fico: no alpha for group '" + group + "'");
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate(const FicoInput& in) {
  if (in.records.empty()) throw ValidationError("fico: no records");
  for (const auto& a : in.alphas)
    if (!(a.alpha > 0.0 && a.alpha < 1.0))
      throw ValidationError("fico: alpha of group '" + a.group + "' must lie in (0, 1)");
  for (const auto& g : group_order(in)) {
    alpha_of(in, g);
    const auto rows = records_of(in, g);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = *rows[i];
      const std::string where = "fico: group '" + g + "' score " + format_number(r.score);
      if (!unit(r.score)) throw ValidationError(where + ": score outside [0, 1]");
      if (!unit(r.cdf)) throw ValidationError(where + ": cdf outside [0, 1]");
      if (!unit(r.p_qualified)) throw ValidationError(where + ": p_qualified outside [0, 1]");
      if (i > 0 && !(r.score > rows[i - 1]->score)) throw ValidationError(where + ": scores not ascending");
      if (i > 0 && r.cdf < rows[i - 1]->cdf) throw ValidationError(where + ": cdf not monotone");
    }
  }
}

FicoInput read_fico(const std::filesystem::path& records_csv, const std::filesystem::path& alpha_csv) {
  FicoInput in;
  const CsvTable t = read_csv(records_csv);
  require_header(t, {"score", "group", "cdf", "p_qualified"});
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    in.records.push_back({t.number(r, 0), t.rows[r][1], t.number(r, 2), t.number(r, 3)});
  const CsvTable a = read_csv(alpha_csv);
  require_header(a, {"group", "alpha"});
  for (std::size_t r = 0; r < a.rows.size(); ++r) in.alphas.push_back({a.rows[r][0], a.number(r, 1)});
  validate(in);
  return in;
}

void write_fico(const FicoInput& in, const std::filesystem::path& records_csv,
                const std::filesystem::path& alpha_csv) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : in.records)
    rows.push_back({format_number(r.score), r.group, format_number(r.cdf), format_number(r.p_qualified)});
  write_file_atomic(records_csv, render_csv({"score", "group", "cdf", "p_qualified"}, rows));
  std::vector<std::vector<std::string>> alphas;
  for (const auto& a : in.alphas) alphas.push_back({a.group, format_number(a.alpha)});
  write_file_atomic(alpha_csv, render_csv({"group", "alpha"}, alphas));
}

std::vector<FicoGroupFit> fit_fico_groups(const FicoInput& in) {
  validate(in);
  std::vector<FicoGroupFit> out;
  for (const auto& g : group_order(in)) {
    const auto rows = records_of(in, g);
    // Cumulative qualified / unqualified mass: dF(x|y,s) is proportional to
    // P(y|x,s) dF(x|s).
    std::vector<double> cum1, cum0;
    double prev = 0.0, m1 = 0.0, m0 = 0.0;
    for (const auto* r : rows) {
      const double d = r->cdf - prev;
      prev = r->cdf;
      m1 += r->p_qualified * d;
      m0 += (1.0 - r->p_qualified) * d;
      cum1.push_back(m1);
      cum0.push_back(m0);
    }
    if (m1 <= 0.0 || m0 <= 0.0)
      throw ValidationError("fico: group '" + g + "' has no qualified or no unqualified mass");
    std::vector<CdfPoint> pts1, pts0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i]->score <= 0.0 || rows[i]->score >= 1.0) continue;
      pts1.push_back({rows[i]->score, std::min(1.0, cum1[i] / m1)});
      pts0.push_back({rows[i]->score, std::min(1.0, cum0[i] / m0)});
    }
    const Beta p1 = fit_beta(pts1);
    const Beta p0 = fit_beta(pts0);
    out.push_back({g, alpha_of(in, g), p1, p0, Beta{0.5 * (p1.a + p0.a), 0.5 * (p1.b + p0.b)}});
  }
  return out;
}

GroupScenario ingest_fico(const FicoInput& in, const FicoBehavior& b) {
  const auto fits = fit_fico_groups(in);
  if (fits.size() != 2)
    throw ValidationError("fico: expected exactly two groups, found " + std::to_string(fits.size()));
  auto model = [&](const FicoGroupFit& f) {
    return NamedModel{f.group,
                      PopulationModel{f.alpha, FeatureDistribution::beta(f.p1.a, f.p1.b),
                                      FeatureDistribution::beta(f.p0.a, f.p0.b),
                                      FeatureDistribution::beta(f.p_improved.a, f.p_improved.b),
                                      CostDiffDistribution::gaussian(b.cost_mean, b.cost_std), b.q, b.eps,
                                      b.u}};
  };
  GroupScenario s{model(fits[0]), model(fits[1]), b.metric};
  validate(s);
  return s;
}

FicoInput synthesize_fico_input(const std::vector<FicoGroupSpec>& groups, std::size_t buckets) {
  if (buckets < 3) throw ValidationError("fico: need at least 3 buckets");
  FicoInput in;
  for (const auto& g : groups) {
    if (!(g.alpha > 0.0 && g.alpha < 1.0)) throw ValidationError("fico: alpha must lie in (0, 1)");
    in.alphas.push_back({g.group, g.alpha});
    double f1_prev = 0.0, f0_prev = 0.0;
    for (std::size_t i = 1; i <= buckets; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(buckets);
      const double f1 = i == buckets ? 1.0 : boost::math::ibeta(g.p1.a, g.p1.b, x);
      const double f0 = i == buckets ? 1.0 : boost::math::ibeta(g.p0.a, g.p0.b, x);
      const double d1 = g.alpha * (f1 - f1_prev), d0 = (1.0 - g.alpha) * (f0 - f0_prev);
      const double p = d1 + d0 > 0.0 ? d1 / (d1 + d0) : g.alpha;
      in.records.push_back({x, g.group, g.alpha * f1 + (1.0 - g.alpha) * f0, p});
      f1_prev = f1;
      f0_prev = f0;
    }
  }
  return in;
}

std::vector<FicoGroupSpec> fico_like_fixture() {
  return {{"caucasian", 0.76, Beta{5.5, 2.0}, Beta{2.2, 3.2}},
          {"african_american", 0.34, Beta{4.0, 2.0}, Beta{1.6, 4.0}}};
}

}  // namespace stratthresh
