#pragma once

// JSON documents: scenarios (tip-scenario/1), planner configs (tip-planner/1),
// score reports (tip-report/1), and custom 1D decomposition cases
// (tip-case/1). Readers are tolerant of unknown fields, which are reported as
// warnings; every other violation raises SchemaError naming the field.

#include <cstdint>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/cases.hpp"
#include "tip/errors.hpp"
#include "tip/hilbert.hpp"
#include "tip/planner.hpp"
#include "tip/scenario.hpp"
#include "tip/tipmetric.hpp"

namespace tip::io {

using json = nlohmann::json;

inline constexpr const char* kScenarioSchema = "tip-scenario/1";
inline constexpr const char* kPlannerSchema = "tip-planner/1";
inline constexpr const char* kReportSchema = "tip-report/1";
inline constexpr const char* kCaseSchema = "tip-case/1";

namespace detail {

inline std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

/// Field access with path-aware errors and unknown-key warnings.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>* warnings)
      : j_(j), path_(std::move(path)), warnings_(warnings) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  ~Reader() = default;

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw SchemaError(join(path_, key), "missing required field");
    return j_.at(key);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw SchemaError(join(path_, key), "must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : (seen_.insert(key), fallback); }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned()) throw SchemaError(join(path_, key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw SchemaError(join(path_, key), "must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : (seen_.insert(key), fallback);
  }

  geometry::Vec2 vec2(const std::string& key) { return as_vec2(raw(key), join(path_, key)); }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw SchemaError(join(path_, key), "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw SchemaError(join(path_, key) + "[" + std::to_string(i) + "]", "must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Reader child(const std::string& key) { return Reader(raw(key), join(path_, key), warnings_); }

  const std::string& path() const noexcept { return path_; }
  std::vector<std::string>* warnings() const noexcept { return warnings_; }

  /// Reports keys that were never read.
  void finish() const {
    if (warnings_ == nullptr) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) warnings_->push_back("ignoring unknown field '" + join(path_, k) + "'");
  }

  static geometry::Vec2 as_vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw SchemaError(path, "must be a [x, y] pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>* warnings_;
  std::set<std::string> seen_;
};

inline json vec2_json(geometry::Vec2 v) { return json::array({v.x, v.y}); }
inline json size_json(const scenario::Size2& s) { return json::array({s.length, s.width}); }

inline scenario::Size2 read_size(Reader& r, const std::string& key) {
  const geometry::Vec2 v = r.vec2(key);
  return {v.x, v.y};
}

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", "invalid JSON in " + origin + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("<file>", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

inline void check_schema(Reader& r, const char* expected) {
  const std::string s = r.string("schema");
  if (s != expected) throw SchemaError("schema", "expected '" + std::string(expected) + "', found '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

struct ScenarioDocument {
  scenario::Scenario scenario;
  scenario::UncertaintyMap uncertainty;
  std::vector<std::string> warnings;

  scenario::ScenarioDistribution distribution() const { return scenario::as_distribution(scenario, uncertainty); }
};

inline json to_json(const scenario::Scenario& s, const scenario::UncertaintyMap& uncertainty = {}) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    json jo = {{"id", o.id},
               {"category", std::string(scenario::to_string(o.category))},
               {"center", detail::vec2_json(o.center)},
               {"heading", o.heading},
               {"speed", o.speed},
               {"size", detail::size_json(o.size)}};
    if (auto it = uncertainty.find(o.id); it != uncertainty.end())
      jo["uncertainty"] = {{"location", it->second.location},
                           {"yaw", it->second.yaw},
                           {"velocity", it->second.velocity},
                           {"size", it->second.size}};
    objects.push_back(std::move(jo));
  }
  json centerline = json::array();
  for (const auto& p : s.corridor.centerline) centerline.push_back(detail::vec2_json(p));
  return {{"schema", kScenarioSchema},
          {"id", s.id},
          {"horizon_s", s.horizon_s},
          {"dt_s", s.dt_s},
          {"ego",
           {{"center", detail::vec2_json(s.ego.center)},
            {"heading", s.ego.heading},
            {"speed", s.ego.speed},
            {"size", detail::size_json(s.ego.size)}}},
          {"corridor", {{"centerline", centerline}, {"half_width", s.corridor.half_width}}},
          {"objects", objects}};
}

inline ScenarioDocument scenario_from_json(const json& j) {
  ScenarioDocument doc;
  auto* w = &doc.warnings;
  detail::Reader root(j, "", w);
  detail::check_schema(root, kScenarioSchema);
  auto& s = doc.scenario;
  s.id = root.string("id", "");
  s.horizon_s = root.number("horizon_s", 3.0);
  s.dt_s = root.number("dt_s", 0.1);

  {
    auto ego = root.child("ego");
    s.ego.center = ego.vec2("center");
    s.ego.heading = ego.number("heading");
    s.ego.speed = ego.number("speed");
    s.ego.size = detail::read_size(ego, "size");
    ego.finish();
  }
  {
    auto cor = root.child("corridor");
    const json& cl = cor.raw("centerline");
    if (!cl.is_array()) throw SchemaError("corridor.centerline", "must be an array of [x, y] points");
    for (std::size_t i = 0; i < cl.size(); ++i)
      s.corridor.centerline.push_back(detail::Reader::as_vec2(cl[i], "corridor.centerline[" + std::to_string(i) + "]"));
    s.corridor.half_width = cor.number("half_width");
    cor.finish();
  }

  const json& objs = root.raw("objects");
  if (!objs.is_array()) throw SchemaError("objects", "must be an array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    detail::Reader r(objs[i], path, w);
    scenario::WorldObject o;
    o.id = r.string("id");
    const std::string cat = r.string("category");
    const auto c = scenario::category_from_string(cat);
    if (!c) throw SchemaError(path + ".category", "unknown category '" + cat + "'");
    o.category = *c;
    o.center = r.vec2("center");
    o.heading = r.number("heading");
    o.speed = r.number("speed");
    o.size = detail::read_size(r, "size");
    if (r.has("uncertainty")) {
      auto u = r.child("uncertainty");
      scenario::ObjectUncertainty ou{u.number("location", 0.0), u.number("yaw", 0.0), u.number("velocity", 0.0),
                                     u.number("size", 0.0)};
      for (double v : {ou.location, ou.yaw, ou.velocity, ou.size})
        if (!(v >= 0.0)) throw SchemaError(path + ".uncertainty", "standard deviations must be >= 0");
      u.finish();
      doc.uncertainty[o.id] = ou;
    }
    r.finish();
    s.objects.push_back(std::move(o));
  }
  root.finish();
  scenario::validate(s);
  return doc;
}

inline ScenarioDocument load_scenario_document(const std::string& path) {
  return scenario_from_json(detail::parse_text(detail::read_file(path), path));
}

inline scenario::Scenario load_scenario(const std::string& path) { return load_scenario_document(path).scenario; }

inline void save_scenario(const scenario::Scenario& s, const std::string& path,
                          const scenario::UncertaintyMap& uncertainty = {}) {
  scenario::validate(s);
  detail::write_file(path, to_json(s, uncertainty).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Planner configs
// ---------------------------------------------------------------------------

inline json to_json(const planner::PlannerConfig& c) {
  const auto& w = c.weights;
  return {{"schema", kPlannerSchema},
          {"name", c.name},
          {"accel_min", c.accel_min},
          {"accel_max", c.accel_max},
          {"jerk_min", c.jerk_min},
          {"jerk_max", c.jerk_max},
          {"lateral_offsets", c.lateral_offsets},
          {"accel_targets", c.accel_targets},
          {"utility_bound_m", c.utility_bound_m},
          {"safe_distance_m", c.safe_distance_m},
          {"control_noise_sd", c.control_noise_sd},
          {"weights",
           {{"jerk", w.jerk_weight},
            {"safety", w.safety_weight},
            {"legal", w.legal_weight},
            {"progress", w.progress_weight},
            {"collision", w.collision_penalty}}}};
}

/// Fields other than `schema` fall back to the defaults of PlannerConfig.
inline planner::PlannerConfig planner_config_from_json(const json& j, std::vector<std::string>* warnings = nullptr) {
  detail::Reader r(j, "", warnings);
  detail::check_schema(r, kPlannerSchema);
  planner::PlannerConfig c;
  c.name = r.string("name", c.name);
  c.accel_min = r.number("accel_min", c.accel_min);
  c.accel_max = r.number("accel_max", c.accel_max);
  c.jerk_min = r.number("jerk_min", c.jerk_min);
  c.jerk_max = r.number("jerk_max", c.jerk_max);
  if (r.has("lateral_offsets")) c.lateral_offsets = r.numbers("lateral_offsets");
  if (r.has("accel_targets")) c.accel_targets = r.numbers("accel_targets");
  c.utility_bound_m = r.number("utility_bound_m", c.utility_bound_m);
  c.safe_distance_m = r.number("safe_distance_m", c.safe_distance_m);
  c.control_noise_sd = r.number("control_noise_sd", c.control_noise_sd);
  if (r.has("weights")) {
    auto w = r.child("weights");
    c.weights.jerk_weight = w.number("jerk", c.weights.jerk_weight);
    c.weights.safety_weight = w.number("safety", c.weights.safety_weight);
    c.weights.legal_weight = w.number("legal", c.weights.legal_weight);
    c.weights.progress_weight = w.number("progress", c.weights.progress_weight);
    c.weights.collision_penalty = w.number("collision", c.weights.collision_penalty);
    w.finish();
  }
  r.finish();
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw SchemaError("<planner>", e.what());
  }
  return c;
}

inline planner::PlannerConfig load_planner_config(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  return planner_config_from_json(detail::parse_text(detail::read_file(path), path), warnings);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const metric::TipReport& r, const std::string& scenario_id = "") {
  json per = json::array();
  for (const auto& d : r.per_action) per.push_back({{"action_id", d.action_id}, {"delta_xi", d.delta_xi}});
  json j = {{"schema", kReportSchema},
            {"scenario_id", scenario_id},
            {"tip_score", r.tip_score},
            {"aggregation", r.aggregation},
            {"a_star", r.a_star_id},
            {"candidate_count", r.candidate_count},
            {"n", r.n},
            {"seed", r.seed},
            {"per_action", per}};
  if (r.bound) {
    const auto& b = *r.bound;
    j["bound"] = {{"epsilon", b.epsilon}, {"m", b.m}, {"variance", b.variance}, {"l_value", b.l_value},
                  {"probability", b.probability}};
  } else {
    j["bound"] = nullptr;
  }
  return j;
}

inline constexpr const char* kReportCsvHeader = "scenario_id,tip,a_star,n,seed,bound_prob";

inline std::string report_csv_row(const metric::TipReport& r, const std::string& scenario_id) {
  std::ostringstream os;
  os.precision(17);
  os << scenario_id << ',' << r.tip_score << ',' << r.a_star_id << ',' << r.n << ',' << r.seed << ','
     << (r.bound ? r.bound->probability : 1.0);
  return os.str();
}

// ---------------------------------------------------------------------------
// 1D decomposition cases
// ---------------------------------------------------------------------------

inline hilbert::AnalyticDensity density_from_json(const json& j, const std::string& path) {
  detail::Reader r(j, path, nullptr);
  const std::string kind = r.string("kind");
  try {
    if (kind == "uniform") return hilbert::AnalyticDensity::uniform(r.number("a"), r.number("b"));
    if (kind == "truncated_gaussian")
      return hilbert::AnalyticDensity::truncated_gaussian(r.number("mean"), r.number("sd"), r.number("lo"),
                                                          r.number("hi"));
    if (kind == "piecewise_constant")
      return hilbert::AnalyticDensity::piecewise_constant(r.numbers("breakpoints"), r.numbers("levels"));
    if (kind == "mixture") {
      const auto weights = r.numbers("weights");
      const json& comps = r.raw("components");
      if (!comps.is_array()) throw SchemaError(path + ".components", "must be an array");
      std::vector<hilbert::AnalyticDensity> cs;
      for (std::size_t i = 0; i < comps.size(); ++i)
        cs.push_back(density_from_json(comps[i], path + ".components[" + std::to_string(i) + "]"));
      return hilbert::AnalyticDensity::mixture(weights, std::move(cs));
    }
  } catch (const ContractError& e) {
    throw SchemaError(path, e.what());
  }
  throw SchemaError(path + ".kind", "unknown density kind '" + kind + "'");
}

/// {"kind": "constant", "value": c} or
/// {"kind": "piecewise_constant", "breakpoints": [...], "levels": [...], "outside": v}.
inline hilbert::GridFunction utility_from_json(const json& j, const std::string& path, const hilbert::Domain1D& d) {
  detail::Reader r(j, path, nullptr);
  const std::string kind = r.string("kind");
  if (kind == "constant") return hilbert::GridFunction::constant(d, r.number("value"));
  if (kind == "piecewise_constant") {
    const auto b = r.numbers("breakpoints");
    const auto l = r.numbers("levels");
    const double outside = r.number("outside", 0.0);
    if (b.size() < 2 || l.size() + 1 != b.size())
      throw SchemaError(path, "needs n+1 breakpoints for n levels");
    return hilbert::GridFunction::from_function(d, [&](double x) {
      if (x < b.front() || x > b.back()) return outside;
      for (std::size_t i = 0; i + 1 < b.size(); ++i)
        if (x <= b[i + 1]) return l[i];
      return l.back();
    });
  }
  throw SchemaError(path + ".kind", "unknown utility kind '" + kind + "'");
}

inline cases::DecompositionCase case_from_json(const json& j) {
  detail::Reader r(j, "", nullptr);
  detail::check_schema(r, kCaseSchema);
  auto dj = r.child("domain");
  const double lo = dj.number("lo"), hi = dj.number("hi");
  const double cells = dj.number("cells");
  if (!(cells >= 1.0) || cells != std::floor(cells)) throw SchemaError("domain.cells", "must be a positive integer");
  std::optional<hilbert::Domain1D> d;
  try {
    d.emplace(lo, hi, static_cast<std::size_t>(cells));
  } catch (const ContractError& e) {
    throw SchemaError("domain", e.what());
  }
  return {r.string("name", "custom"),
          *d,
          hilbert::embed(density_from_json(r.raw("p"), "p"), *d),
          hilbert::embed(density_from_json(r.raw("q"), "q"), *d),
          utility_from_json(r.raw("u_star"), "u_star", *d),
          utility_from_json(r.raw("u_alt"), "u_alt", *d)};
}

}  // namespace tip::io
