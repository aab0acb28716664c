#include "roughflow/scenarios.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

namespace roughflow::scenarios {

namespace {

constexpr const char* kBuiltinPrefix = "builtin:";

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "mode",         "strategy",    "c3",          "beta",
      "dyadic_tol",   "max_dyadic_level", "rk_substeps", "blowup_guard",
      "smallness",    "conv_radius", "samples",     "seed",
      "alpha",        "audit_override"};
  return keys;
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw io::ParseError("override '" + key + "': '" + text +
                         "' is not a number (scenario parameters are numeric)");
  return v;
}

/// Reads a knob, removing it from the override pool and echoing the resolved
/// value so manifests can reproduce the scenario exactly.
double take(std::map<std::string, double>& knobs, io::Json& resolved,
            const std::string& key, double fallback) {
  double v = fallback;
  if (auto it = knobs.find(key); it != knobs.end()) {
    v = it->second;
    knobs.erase(it);
  }
  resolved[key] = v;
  return v;
}

int take_count(std::map<std::string, double>& knobs, io::Json& resolved,
               const std::string& key, int fallback) {
  const double v = take(knobs, resolved, key, fallback);
  const int n = static_cast<int>(std::lround(v));
  if (n < 1 || n != v) throw io::ParseError("parameter '" + key + "' must be a positive integer");
  resolved[key] = n;
  return n;
}

std::vector<double> uniform_times(int segments, double T) {
  std::vector<double> ts;
  ts.reserve(segments + 1);
  for (int i = 0; i <= segments; ++i) ts.push_back(T * i / segments);
  return ts;
}

PolyVectorField trig_pair_coord(double c, bool primary) {
  // primary: (c sin x2, c cos x1); partner: (c cos x2, c sin x1)
  PolyVectorField f(2, 2);
  PolyTerm t0(2, c);
  (primary ? t0.sin_pows : t0.cos_pows)(1) = 1;
  f.coord(0).add_term(t0);
  PolyTerm t1(2, c);
  (primary ? t1.cos_pows : t1.sin_pows)(0) = 1;
  f.coord(1).add_term(t1);
  f.canonicalize();
  return f;
}

PolyVectorField drift_and_rotation_field() {
  // (x sin y, x): unbounded product growth in the first coordinate.
  PolyVectorField f(2, 2);
  PolyTerm t0(2, 1.0);
  t0.exps(0) = 1;
  t0.sin_pows(1) = 1;
  f.coord(0).add_term(t0);
  PolyTerm t1(2, 1.0);
  t1.exps(0) = 1;
  f.coord(1).add_term(t1);
  f.canonicalize();
  return f;
}

// --- drivers -----------------------------------------------------------------

RoughDriver zero1_driver(std::map<std::string, double>& knobs, io::Json& rec) {
  const double T = take(knobs, rec, "T", 1.0);
  const double p = take(knobs, rec, "p", 2.2);
  std::vector<Vec> pts(3, Vec::Zero(1));
  return signature_lift(pts, {0.0, T / 2, T}, p);
}

RoughDriver line1_driver(std::map<std::string, double>& knobs, io::Json& rec) {
  const double T = take(knobs, rec, "T", 1.0);
  const double v = take(knobs, rec, "v", 0.5);
  const double p = take(knobs, rec, "p", 2.2);
  const int segments = take_count(knobs, rec, "segments", 16);
  const std::vector<double> ts = uniform_times(segments, T);
  std::vector<Vec> pts;
  pts.reserve(ts.size());
  for (double t : ts) {
    Vec x(1);
    x << v * t;
    pts.push_back(x);
  }
  return signature_lift(pts, ts, p);
}

RoughDriver smooth2_driver(std::map<std::string, double>& knobs, io::Json& rec) {
  const double T = take(knobs, rec, "T", 0.5);
  const double amp = take(knobs, rec, "amp", 0.35);
  const double p = take(knobs, rec, "p", 2.5);
  const double d1 = take(knobs, rec, "drift1", 0.0);
  const double d2 = take(knobs, rec, "drift2", 0.0);
  const int segments = take_count(knobs, rec, "segments", 1024);
  const std::vector<double> ts = uniform_times(segments, T);
  std::vector<Vec> pts;
  pts.reserve(ts.size());
  // A dense polyline sampling of a smooth curve: fine enough that every
  // dyadic cell the diagnostics visit still sees curvature, never a single
  // straight segment. drift1/drift2 tilt the loop so the total increment is
  // amp (drift1, drift2) instead of zero.
  for (int i = 0; i <= segments; ++i) {
    const double u = static_cast<double>(i) / segments;
    Vec x(2);
    x << amp * (std::sin(2 * std::numbers::pi * u) + d1 * u),
        amp * (std::cos(4 * std::numbers::pi * u + 0.5) + d2 * u);
    pts.push_back(x);
  }
  return signature_lift(pts, ts, p);
}

RoughDriver area2_driver(std::map<std::string, double>& knobs, io::Json& rec) {
  const double T = take(knobs, rec, "T", 3.0);
  const double p = take(knobs, rec, "p", 2.5);
  const int cells = take_count(knobs, rec, "cells", 64);
  Mat C = Mat::Zero(2, 2);
  C(0, 0) = 1.0;
  return pure_area_driver(T, cells, C, p);
}

// --- field sets ----------------------------------------------------------------

std::vector<PolyVectorField> linear1_fields(std::map<std::string, double>&, io::Json&) {
  PolyVectorField f(1, 1);
  f.coord(0) = PolyScalar::coordinate(1, 0);
  return {f};
}

std::vector<PolyVectorField> bounded2_fields(std::map<std::string, double>& knobs,
                                             io::Json& rec) {
  const double c = take(knobs, rec, "field_scale", 0.8);
  return {trig_pair_coord(c, true), trig_pair_coord(c, false)};
}

std::vector<PolyVectorField> commuting2_fields(std::map<std::string, double>&, io::Json&) {
  Mat A1(2, 2), A2(2, 2);
  A1 << 0.3, 0.1, 0.1, -0.2;
  A2 = 0.2 * Mat::Identity(2, 2) + 0.5 * A1;
  return {PolyVectorField::linear(A1), PolyVectorField::linear(A2)};
}

std::vector<PolyVectorField> counterexample2_fields(std::map<std::string, double>&,
                                                    io::Json&) {
  return {drift_and_rotation_field(), PolyVectorField::zero(2, 2)};
}

std::vector<PolyVectorField> param_linear2_fields(std::map<std::string, double>&,
                                                  io::Json&) {
  // State (a, x) with the parameter frozen: V(a, x) = (0, a x).
  PolyVectorField f(2, 2);
  PolyTerm t(2, 1.0);
  t.exps(0) = 1;
  t.exps(1) = 1;
  f.coord(1).add_term(t);
  f.canonicalize();
  return {f};
}

// --- presets ---------------------------------------------------------------------

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Scenario drift_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  const double c = take(knobs, rec, "c", 0.5);
  RoughDriver driver = zero1_driver(knobs, rec);
  PolyVectorField v0(1, 1);
  v0.coord(0) = PolyScalar::constant(1, c);
  return Scenario{"drift",
                  std::move(driver),
                  {PolyVectorField::zero(1, 1)},
                  std::move(v0),
                  {vec1(0.0), vec1(0.5), vec1(1.0)},
                  SolverConfig{},
                  0,
                  false,
                  std::move(rec)};
}

Scenario compliant_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  std::vector<PolyVectorField> fields = bounded2_fields(knobs, rec);
  RoughDriver driver = smooth2_driver(knobs, rec);
  SolverConfig cfg;
  cfg.samples = 64;         // certification cloud; studies stay under a second
  cfg.max_dyadic_level = 8; // defect regression window n = 2..8
  return Scenario{"compliant",
                  std::move(driver),
                  std::move(fields),
                  PolyVectorField::zero(2, 2),
                  {vec2(0.3, -0.2), vec2(-0.5, 0.1)},
                  cfg,
                  0,
                  false,
                  std::move(rec)};
}

Scenario linear_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  RoughDriver driver = line1_driver(knobs, rec);
  return Scenario{"linear",
                  std::move(driver),
                  linear1_fields(knobs, rec),
                  PolyVectorField::zero(1, 1),
                  {vec1(1.0), vec1(2.0)},
                  SolverConfig{},
                  0,
                  false,
                  std::move(rec)};
}

Scenario commuting_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  knobs.try_emplace("segments", 64);  // exactness is algebraic, not resolution-bound
  knobs.try_emplace("drift1", 1.0);   // open curve: the closed form sees a real increment
  knobs.try_emplace("drift2", -0.7);
  RoughDriver driver = smooth2_driver(knobs, rec);
  SolverConfig cfg;
  cfg.samples = 64;
  return Scenario{"commuting",
                  std::move(driver),
                  commuting2_fields(knobs, rec),
                  PolyVectorField::zero(2, 2),
                  {vec2(1.0, 0.5), vec2(-0.4, 0.8)},
                  cfg,
                  0,
                  false,
                  std::move(rec)};
}

Scenario counterexample_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  const double a = take(knobs, rec, "a", 1.0);
  if (a <= 0.0) throw io::ParseError("parameter 'a' must be positive");
  RoughDriver driver = area2_driver(knobs, rec);
  SolverConfig cfg;
  cfg.audit_override = true;  // the point of the scenario is the certified failure
  return Scenario{"counterexample",
                  std::move(driver),
                  counterexample2_fields(knobs, rec),
                  PolyVectorField::zero(2, 2),
                  {vec2(a, 0.0)},
                  cfg,
                  0,
                  true,
                  std::move(rec)};
}

Scenario sensitivity_preset(std::map<std::string, double>& knobs) {
  io::Json rec = io::Json::object();
  const double a = take(knobs, rec, "a", 0.7);
  const double x = take(knobs, rec, "x", 1.0);
  knobs.try_emplace("segments", 4);
  RoughDriver driver = line1_driver(knobs, rec);
  SolverConfig cfg;
  cfg.audit_override = true;  // the bilinear term exceeds the certified band
  return Scenario{"sensitivity",
                  std::move(driver),
                  param_linear2_fields(knobs, rec),
                  PolyVectorField::zero(2, 2),
                  {vec2(a, x)},
                  cfg,
                  1,
                  false,
                  std::move(rec)};
}

// --- resolution ------------------------------------------------------------------

std::map<std::string, std::string> split_overrides(const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const std::string& kv : kvs) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw io::ParseError("override must look like key=value: '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void check_consistent(const Scenario& s) {
  if (s.fields.empty()) throw io::ParseError("scenario: needs at least one field");
  const int d = s.fields.front().dim();
  for (const PolyVectorField& f : s.fields)
    if (f.dim() != d || f.outdim() != d)
      throw io::ParseError("scenario: all fields must be square maps of one dimension");
  if (static_cast<int>(s.fields.size()) != s.driver.width())
    throw io::ParseError("scenario: needs exactly one field per driver channel");
  if (s.v0.dim() != d || s.v0.outdim() != d)
    throw io::ParseError("scenario: drift dimension disagrees with the fields");
  for (const Vec& x : s.x0s)
    if (x.size() != d) throw io::ParseError("scenario: initial point dimension disagrees");
}

std::string strip_builtin(const std::string& ref) {
  return ref.substr(std::string(kBuiltinPrefix).size());
}

Scenario make_builtin(const std::string& name, std::map<std::string, double>& knobs) {
  if (name == "drift") return drift_preset(knobs);
  if (name == "compliant") return compliant_preset(knobs);
  if (name == "linear") return linear_preset(knobs);
  if (name == "commuting") return commuting_preset(knobs);
  if (name == "counterexample") return counterexample_preset(knobs);
  if (name == "sensitivity") return sensitivity_preset(knobs);
  throw io::ParseError("unknown builtin scenario '" + name + "'");
}

Scenario load_scenario_file(const std::string& path,
                            std::map<std::string, double> extra_knobs) {
  namespace fs = std::filesystem;
  const io::Json j = io::load_json_file(path);
  if (!j.is_object()) throw io::ParseError(path + ": scenario must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    static const std::set<std::string> allowed = {"name", "driver", "fields", "v0",
                                                  "p",    "T",      "x0",     "config",
                                                  "params"};
    if (!allowed.count(key)) throw io::ParseError(path + ": unknown scenario key '" + key + "'");
  }
  const fs::path base = fs::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    const fs::path cand(p);
    return cand.is_absolute() ? cand.string() : (base / cand).string();
  };

  std::map<std::string, double> knobs = std::move(extra_knobs);
  if (j.contains("params")) {
    const io::Json& pj = j.at("params");
    if (!pj.is_object()) throw io::ParseError(path + ": 'params' must be an object");
    for (const auto& [key, value] : pj.items()) {
      if (!value.is_number()) throw io::ParseError(path + ": parameter '" + key + "' must be numeric");
      knobs.try_emplace(key, value.get<double>());  // command line wins
    }
  }
  if (j.contains("p")) knobs.try_emplace("p", j.at("p").get<double>());
  if (j.contains("T")) knobs.try_emplace("T", j.at("T").get<double>());
  io::Json rec = io::Json::object();

  if (!j.contains("driver")) throw io::ParseError(path + ": scenario needs a 'driver'");
  const io::Json& dj = j.at("driver");
  auto load_driver = [&]() -> RoughDriver {
    if (dj.is_object()) return io::driver_from_json(dj);
    const std::string ref = dj.get<std::string>();
    if (ref.rfind(kBuiltinPrefix, 0) == 0) return builtin_driver(strip_builtin(ref), knobs, rec);
    RoughDriver d = io::driver_from_json(io::load_json_file(resolve(ref)));
    if (j.contains("p") && std::abs(j.at("p").get<double>() - d.p()) > 1e-12)
      throw io::ParseError(path + ": 'p' disagrees with the driver file");
    if (j.contains("T") && std::abs(j.at("T").get<double>() - d.t1()) > 1e-9)
      throw io::ParseError(path + ": 'T' disagrees with the driver horizon");
    knobs.erase("p");
    knobs.erase("T");
    return d;
  };
  RoughDriver driver = load_driver();

  if (!j.contains("fields")) throw io::ParseError(path + ": scenario needs 'fields'");
  const io::Json& fj = j.at("fields");
  std::vector<PolyVectorField> fields;
  if (fj.is_string()) {
    const std::string ref = fj.get<std::string>();
    fields = ref.rfind(kBuiltinPrefix, 0) == 0
                 ? builtin_fields(strip_builtin(ref), knobs, rec)
                 : io::fields_from_json(io::load_json_file(resolve(ref)));
  } else {
    fields = io::fields_from_json(fj);
  }
  const int d = fields.empty() ? 0 : fields.front().dim();

  PolyVectorField v0 = PolyVectorField::zero(d, d);
  if (j.contains("v0")) {
    const io::Json& vj = j.at("v0");
    if (vj.is_object())
      v0 = io::field_from_json(vj);
    else if (vj.get<std::string>() != std::string(kBuiltinPrefix) + "zero")
      v0 = io::field_from_json(io::load_json_file(resolve(vj.get<std::string>())));
  }

  std::vector<Vec> x0s;
  if (j.contains("x0")) {
    const io::Json& xj = j.at("x0");
    if (!xj.is_array() || xj.empty()) throw io::ParseError(path + ": 'x0' must be a non-empty array");
    const bool single = xj.front().is_number();
    const auto to_vec = [&](const io::Json& row) {
      Vec v(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) v(static_cast<Eigen::Index>(i)) = row.at(i).get<double>();
      return v;
    };
    if (single)
      x0s.push_back(to_vec(xj));
    else
      for (const io::Json& row : xj) x0s.push_back(to_vec(row));
  } else {
    x0s.push_back(Vec::Zero(d));
  }

  SolverConfig cfg;
  if (j.contains("config")) cfg = io::config_from_json(j.at("config"));

  if (!knobs.empty())
    throw io::ParseError(path + ": unused scenario parameter '" + knobs.begin()->first + "'");

  Scenario s{j.value("name", fs::path(path).stem().string()),
             std::move(driver),
             std::move(fields),
             std::move(v0),
             std::move(x0s),
             cfg,
             0,
             false,
             std::move(rec)};
  return s;
}

}  // namespace

bool is_builtin(const std::string& ref) { return ref.rfind(kBuiltinPrefix, 0) == 0; }

std::vector<std::string> builtin_names() {
  return {"drift", "compliant", "linear", "commuting", "counterexample", "sensitivity"};
}

RoughDriver builtin_driver(const std::string& name, std::map<std::string, double>& knobs,
                           io::Json& resolved) {
  if (name == "zero1") return zero1_driver(knobs, resolved);
  if (name == "line1") return line1_driver(knobs, resolved);
  if (name == "smooth2") return smooth2_driver(knobs, resolved);
  if (name == "area2") return area2_driver(knobs, resolved);
  throw io::ParseError("unknown builtin driver '" + name + "'");
}

std::vector<PolyVectorField> builtin_fields(const std::string& name,
                                            std::map<std::string, double>& knobs,
                                            io::Json& resolved) {
  if (name == "linear1") return linear1_fields(knobs, resolved);
  if (name == "bounded2") return bounded2_fields(knobs, resolved);
  if (name == "commuting2") return commuting2_fields(knobs, resolved);
  if (name == "counterexample2") return counterexample2_fields(knobs, resolved);
  if (name == "param_linear2") return param_linear2_fields(knobs, resolved);
  throw io::ParseError("unknown builtin field set '" + name + "'");
}

Scenario make_scenario(const std::string& ref, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> raw = split_overrides(overrides);
  std::map<std::string, double> knobs;
  std::vector<std::string> config_kvs;
  for (const auto& [key, value] : raw) {
    if (config_keys().count(key))
      config_kvs.push_back(key + "=" + value);
    else
      knobs.emplace(key, parse_number(key, value));
  }

  Scenario s = is_builtin(ref) ? make_builtin(strip_builtin(ref), knobs)
                               : load_scenario_file(ref, std::move(knobs));
  if (is_builtin(ref) && !knobs.empty())
    throw io::ParseError("scenario '" + s.name + "' has no parameter '" +
                         knobs.begin()->first + "'");
  for (const std::string& kv : config_kvs) s.config = io::apply_override(s.config, kv);
  check_consistent(s);
  return s;
}

}  // namespace roughflow::scenarios
