#include "stratthresh/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace stratthresh {

using nlohmann::json;

ObjectReader::ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

std::string ObjectReader::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const json& ObjectReader::required(const std::string& key) {
  if (!object_.contains(key)) throw ConfigError(field(key), "missing required field");
  seen_.insert(key);
  return object_.at(key);
}

std::optional<json> ObjectReader::optional(const std::string& key) {
  if (!object_.contains(key)) return std::nullopt;
  seen_.insert(key);
  return object_.at(key);
}

namespace {

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field, "must be finite");
  return d;
}

}  // namespace

double ObjectReader::number(const std::string& key) { return as_number(required(key), field(key)); }

double ObjectReader::number(const std::string& key, double fallback) {
  const auto v = optional(key);
  return v ? as_number(*v, field(key)) : fallback;
}

std::size_t ObjectReader::count(const std::string& key, std::size_t fallback) {
  const auto v = optional(key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < 0)
    throw ConfigError(field(key), "expected a non-negative integer");
  return v->get<std::size_t>();
}

std::string ObjectReader::string(const std::string& key) {
  const json& v = required(key);
  if (!v.is_string()) throw ConfigError(field(key), "expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ObjectReader::grid(const std::string& key) {
  const json& v = required(key);
  const std::string f = field(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], f + "[" + std::to_string(i) + "]"));
  } else if (v.is_object()) {
    ObjectReader r(v, f);
    const double start = r.number("start"), stop = r.number("stop"), step = r.number("step");
    r.finish();
    if (!(step > 0.0)) throw ConfigError(f + ".step", "must be > 0");
    if (stop < start) throw ConfigError(f + ".stop", "must be >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 1000000) throw ConfigError(f, "grid has too many points");
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + step * static_cast<double>(i));
  } else {
    throw ConfigError(f, "expected a list of numbers or {start, stop, step}");
  }
  if (out.empty()) throw ConfigError(f, "grid must not be empty");
  return out;
}

std::vector<double> ObjectReader::grid(const std::string& key, std::vector<double> fallback) {
  return has(key) ? grid(key) : fallback;
}

void ObjectReader::finish() const {
  for (const auto& [key, value] : object_.items())
    if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
}

FeatureDistribution parse_distribution(const json& spec, const std::string& path,
                                       const std::filesystem::path& base_dir) {
  ObjectReader r(spec, path);
  const std::string family = r.string("family");
  try {
    if (family == "gaussian") {
      const double mean = r.number("mean"), sd = r.number("std");
      r.finish();
      if (!(sd > 0.0)) throw ConfigError(r.field("std"), "must be > 0");
      return FeatureDistribution::gaussian(mean, sd);
    }
    if (family == "beta") {
      const double a = r.number("a"), b = r.number("b");
      r.finish();
      if (!(a > 0.0)) throw ConfigError(r.field("a"), "must be > 0");
      if (!(b > 0.0)) throw ConfigError(r.field("b"), "must be > 0");
      return FeatureDistribution::beta(a, b);
    }
    if (family == "grid") {
      const std::filesystem::path file = r.string("path");
      r.finish();
      return load_grid_csv(file.is_absolute() ? file : base_dir / file);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(r.field("family"), "unknown family '" + family + "' (expected gaussian, beta or grid)");
}

CostDiffDistribution parse_cost_diff(const json& spec, const std::string& path,
                                     const std::filesystem::path& base_dir) {
  ObjectReader r(spec, path);
  const std::string family = r.string("family", "gaussian");
  if (family == "gaussian") {
    const double mean = r.number("mean", 0.0), sd = r.number("std", kDefaultCostStd);
    r.finish();
    if (!(sd > 0.0)) throw ConfigError(r.field("std"), "must be > 0");
    return CostDiffDistribution::gaussian(mean, sd);
  }
  if (family == "grid") return CostDiffDistribution(parse_distribution(spec, path, base_dir));
  throw ConfigError(r.field("family"), "cost_diff family must be gaussian or grid");
}

namespace {

NamedModel parse_group(const json& spec, const std::string& path, const std::filesystem::path& base) {
  ObjectReader r(spec, path);
  const std::string name = r.string("name");
  const double alpha = r.number("alpha");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(r.field("alpha"), "must lie in (0, 1)");
  const double q = r.number("q");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError(r.field("q"), "must lie in [0, 1]");
  const double eps = r.number("eps");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError(r.field("eps"), "must lie in [0, 1]");
  const double u = r.number("u", 1.0);
  if (!(u > 0.0)) throw ConfigError(r.field("u"), "must be > 0");

  auto p1 = parse_distribution(r.required("p1"), r.field("p1"), base);
  auto p0 = parse_distribution(r.required("p0"), r.field("p0"), base);
  auto pi = parse_distribution(r.required("p_improved"), r.field("p_improved"), base);
  const auto cost_spec = r.optional("cost_diff");
  auto cost = parse_cost_diff(cost_spec.value_or(json::object()), r.field("cost_diff"), base);

  ThetaBounds bounds;
  if (const auto tb = r.optional("theta_bounds")) {
    const std::string f = r.field("theta_bounds");
    if (!tb->is_array() || tb->size() != 2) throw ConfigError(f, "expected [lo, hi]");
    bounds = {as_number((*tb)[0], f + "[0]"), as_number((*tb)[1], f + "[1]")};
    if (!(bounds.hi > bounds.lo)) throw ConfigError(f, "hi must exceed lo");
  }
  r.finish();

  NamedModel g{name, PopulationModel{alpha, std::move(p1), std::move(p0), std::move(pi), std::move(cost), q,
                                     eps, u, bounds}};
  try {
    validate(g.model);
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ObjectReader root(doc, "");
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.task = root.string("task");
  if (const auto scenario = root.optional("scenario")) {
    ObjectReader s(*scenario, "scenario");
    const std::string metric = s.string("metric", "eqopt");
    try {
      c.metric = parse_metric(metric);
    } catch (const ValidationError& e) {
      throw ConfigError(s.field("metric"), e.what());
    }
    const json& groups = s.required("groups");
    if (!groups.is_array() || groups.empty() || groups.size() > 2)
      throw ConfigError("scenario.groups", "expected a list of one or two groups");
    for (std::size_t i = 0; i < groups.size(); ++i)
      c.groups.push_back(parse_group(groups[i], "scenario.groups[" + std::to_string(i) + "]", base_dir));
    if (c.groups.size() == 2 && c.groups[0].name == c.groups[1].name)
      throw ConfigError("scenario.groups", "group names must differ");
    s.finish();
  }
  if (const auto params = root.optional("params")) {
    if (!params->is_object()) throw ConfigError("params", "expected an object");
    c.params = *params;
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return parse_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

GroupScenario two_group_scenario(const ExperimentConfig& c) {
  if (c.groups.size() != 2) throw ConfigError("scenario.groups", "this task needs exactly two groups");
  GroupScenario s{c.groups[0], c.groups[1], c.metric};
  try {
    validate(s);
  } catch (const ValidationError& e) {
    throw ConfigError("scenario", e.what());
  }
  return s;
}

json distribution_to_json(const FeatureDistribution& d) {
  if (const auto* g = std::get_if<Gaussian>(&d.variant()))
    return {{"family", "gaussian"}, {"mean", g->mean}, {"std", g->std}};
  if (const auto* b = std::get_if<Beta>(&d.variant())) return {{"family", "beta"}, {"a", b->a}, {"b", b->b}};
  throw ValidationError("only gaussian and beta laws can be written inline: " + d.describe());
}

json scenario_to_json(const std::vector<NamedModel>& groups, FairnessMetric metric) {
  json out{{"metric", to_string(metric)}, {"groups", json::array()}};
  for (const auto& g : groups) {
    const auto& m = g.model;
    json cost = distribution_to_json(m.cost_diff.distribution());
    json group{{"name", g.name},
               {"alpha", m.alpha},
               {"p1", distribution_to_json(m.p1)},
               {"p0", distribution_to_json(m.p0)},
               {"p_improved", distribution_to_json(m.p_improved)},
               {"cost_diff", cost},
               {"q", m.q},
               {"eps", m.eps},
               {"u", m.u}};
    if (m.theta_bounds.is_set()) group["theta_bounds"] = {m.theta_bounds.lo, m.theta_bounds.hi};
    out["groups"].push_back(group);
  }
  return out;
}

}  // namespace stratthresh
