#include "roughflow/io.hpp"

#include <charconv>
#include <cstddef>
#include <sstream>
#include <system_error>

namespace roughflow::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ParseError(what); }

void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

/// 1-based line/column of a 1-based byte offset, for parse diagnostics.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t pos = byte > 0 ? byte - 1 : 0;
  if (pos > text.size()) pos = text.size();
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

int get_int(const Json& j, const char* key) {
  require(j.contains(key), std::string("missing key '") + key + "'");
  const Json& v = j.at(key);
  require(v.is_number_integer(), std::string("key '") + key + "' must be an integer");
  return v.get<int>();
}

double get_double(const Json& j, const char* key) {
  require(j.contains(key), std::string("missing key '") + key + "'");
  const Json& v = j.at(key);
  require(v.is_number(), std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> get_double_array(const Json& v, const std::string& what) {
  require(v.is_array(), what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& e : v) {
    require(e.is_number(), what + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::ostringstream msg;
    msg << path << ":" << line << ":" << col << ": " << e.what();
    fail(msg.str());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

// --- tensor series ----------------------------------------------------------

Json series_to_json(const TruncatedTensorSeries& s) {
  Json j;
  j["width"] = s.width();
  j["depth"] = s.depth();
  if (s.scalar() != 1.0) j["scalar"] = s.scalar();
  Json levels = Json::array();
  for (int k = 1; k <= s.depth(); ++k) {
    const Vec& lvl = s.level(k);
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < lvl.size(); ++i) arr.push_back(lvl(i));
    levels.push_back(std::move(arr));
  }
  j["levels"] = std::move(levels);
  return j;
}

TruncatedTensorSeries series_from_json(const Json& j) {
  require(j.is_object(), "series must be a JSON object");
  const int width = get_int(j, "width");
  const int depth = get_int(j, "depth");
  require(width >= 1 && depth >= 1, "series width and depth must be >= 1");
  TruncatedTensorSeries s(width, depth);
  s.scalar() = j.contains("scalar") ? get_double(j, "scalar") : 1.0;
  require(j.contains("levels"), "series is missing 'levels'");
  const Json& levels = j.at("levels");
  require(levels.is_array() && static_cast<int>(levels.size()) == depth,
          "series 'levels' must hold one array per level 1..depth");
  for (int k = 1; k <= depth; ++k) {
    const std::vector<double> lvl = get_double_array(levels.at(k - 1), "series level");
    const std::size_t want = level_size(width, k);
    require(lvl.size() == want, "series level " + std::to_string(k) + " must have " +
                                    std::to_string(want) + " entries");
    for (std::size_t i = 0; i < want; ++i) s.level(k)(static_cast<Eigen::Index>(i)) = lvl[i];
  }
  return s;
}

// --- rough drivers ----------------------------------------------------------

Json driver_to_json(const RoughDriver& d) {
  Json j;
  j["width"] = d.width();
  j["p"] = d.p();
  Json times = Json::array();
  for (double t : d.times()) times.push_back(t);
  j["times"] = std::move(times);
  Json segments = Json::array();
  for (int i = 0; i < d.cells(); ++i) segments.push_back(series_to_json(d.segment(i)));
  j["segments"] = std::move(segments);
  return j;
}

RoughDriver driver_from_json(const Json& j) {
  require(j.is_object(), "driver must be a JSON object");
  const int width = get_int(j, "width");
  const double p = get_double(j, "p");
  require(j.contains("times"), "driver is missing 'times'");
  const std::vector<double> times = get_double_array(j.at("times"), "driver 'times'");
  require(j.contains("segments") && j.at("segments").is_array(),
          "driver is missing the 'segments' array");
  const Json& segs = j.at("segments");
  require(segs.size() + 1 == times.size(),
          "driver needs exactly one segment per adjacent pair of times");
  std::vector<TruncatedTensorSeries> segments;
  segments.reserve(segs.size());
  for (const Json& sj : segs) {
    TruncatedTensorSeries s = series_from_json(sj);
    require(s.width() == width, "driver segment width disagrees with driver width");
    segments.push_back(std::move(s));
  }
  try {
    return RoughDriver(p, times, std::move(segments));
  } catch (const std::invalid_argument& e) {
    fail(std::string("driver: ") + e.what());
  }
}

// --- polynomial/trig fields -------------------------------------------------

Json field_to_json(const PolyVectorField& f) {
  Json j;
  j["dim"] = f.dim();
  Json coords = Json::array();
  for (int c = 0; c < f.outdim(); ++c) {
    Json terms = Json::array();
    for (const PolyTerm& t : f.coord(c).terms()) {
      Json tj;
      tj["coeff"] = t.coeff;
      Json exps = Json::array();
      for (int k = 0; k < t.exps.size(); ++k) exps.push_back(t.exps(k));
      tj["exps"] = std::move(exps);
      if (t.t_exp != 0) tj["t_exp"] = t.t_exp;
      Json trig = Json::array();
      for (int k = 0; k < t.sin_pows.size(); ++k) {
        if (t.sin_pows(k) > 0) trig.push_back({{"axis", k}, {"fn", "sin"}, {"pow", t.sin_pows(k)}});
        if (t.cos_pows(k) > 0) trig.push_back({{"axis", k}, {"fn", "cos"}, {"pow", t.cos_pows(k)}});
      }
      if (!trig.empty()) tj["trig"] = std::move(trig);
      terms.push_back(std::move(tj));
    }
    coords.push_back(std::move(terms));
  }
  j["coords"] = std::move(coords);
  return j;
}

PolyVectorField field_from_json(const Json& j) {
  require(j.is_object(), "field must be a JSON object");
  const int dim = get_int(j, "dim");
  require(dim >= 1, "field 'dim' must be >= 1");
  require(j.contains("coords") && j.at("coords").is_array() && !j.at("coords").empty(),
          "field needs a non-empty 'coords' array");
  const Json& coords = j.at("coords");
  PolyVectorField f(dim, static_cast<int>(coords.size()));
  for (int c = 0; c < f.outdim(); ++c) {
    const Json& terms = coords.at(c);
    require(terms.is_array(), "each field coordinate must be an array of terms");
    for (const Json& tj : terms) {
      require(tj.is_object(), "field term must be a JSON object");
      PolyTerm t(dim, get_double(tj, "coeff"));
      if (tj.contains("exps")) {
        const Json& exps = tj.at("exps");
        require(exps.is_array() && static_cast<int>(exps.size()) == dim,
                "term 'exps' must list one integer power per coordinate");
        for (int k = 0; k < dim; ++k) {
          require(exps.at(k).is_number_integer() && exps.at(k).get<int>() >= 0,
                  "term 'exps' entries must be integers >= 0");
          t.exps(k) = exps.at(k).get<int>();
        }
      }
      if (tj.contains("t_exp")) {
        require(tj.at("t_exp").is_number_integer() && tj.at("t_exp").get<int>() >= 0,
                "term 't_exp' must be an integer >= 0");
        t.t_exp = tj.at("t_exp").get<int>();
      }
      if (tj.contains("trig")) {
        const Json& trig = tj.at("trig");
        require(trig.is_array(), "term 'trig' must be an array");
        for (const Json& e : trig) {
          require(e.is_object() && e.contains("axis") && e.contains("fn") && e.contains("pow"),
                  "trig entry needs 'axis', 'fn' and 'pow'");
          const int axis = e.at("axis").get<int>();
          require(axis >= 0 && axis < dim, "trig 'axis' out of range");
          const int pw = e.at("pow").get<int>();
          require(pw >= 1, "trig 'pow' must be >= 1");
          const std::string fn = e.at("fn").get<std::string>();
          if (fn == "sin")
            t.sin_pows(axis) += pw;
          else if (fn == "cos")
            t.cos_pows(axis) += pw;
          else
            fail("trig 'fn' must be \"sin\" or \"cos\"");
        }
      }
      f.coord(c).add_term(std::move(t));
    }
  }
  f.canonicalize();
  return f;
}

std::vector<PolyVectorField> fields_from_json(const Json& j) {
  if (j.is_array()) {
    std::vector<PolyVectorField> out;
    out.reserve(j.size());
    for (const Json& e : j) out.push_back(field_from_json(e));
    require(!out.empty(), "field list must not be empty");
    return out;
  }
  if (j.is_object() && j.contains("fields")) return fields_from_json(j.at("fields"));
  if (j.is_object() && j.contains("dim")) return {field_from_json(j)};
  fail("fields file must be a field object, an array of them, or {\"fields\": [..]}");
}

Json fields_to_json(const std::vector<PolyVectorField>& fs) {
  Json arr = Json::array();
  for (const PolyVectorField& f : fs) arr.push_back(field_to_json(f));
  Json j;
  j["fields"] = std::move(arr);
  return j;
}

// --- solver configuration ---------------------------------------------------

SolverConfig config_from_json(const Json& j, SolverConfig base) {
  require(j.is_object(), "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "mode") {
        const std::string m = value.get<std::string>();
        if (m == "word")
          base.mode = StepMode::Word;
        else if (m == "bracket")
          base.mode = StepMode::Bracket;
        else
          fail("config 'mode' must be \"word\" or \"bracket\"");
      } else if (key == "strategy") {
        const std::string s = value.get<std::string>();
        if (s == "control_greedy")
          base.strategy = PartitionStrategy::ControlGreedy;
        else if (s == "holder_budget")
          base.strategy = PartitionStrategy::HolderBudget;
        else
          fail("config 'strategy' must be \"control_greedy\" or \"holder_budget\"");
      } else if (key == "c3") {
        base.c3 = value.get<double>();
      } else if (key == "beta") {
        base.beta = value.get<double>();
      } else if (key == "dyadic_tol") {
        base.dyadic_tol = value.get<double>();
      } else if (key == "max_dyadic_level") {
        base.max_dyadic_level = value.get<int>();
      } else if (key == "rk_substeps") {
        base.rk_substeps = value.get<int>();
      } else if (key == "blowup_guard") {
        base.blowup_guard = value.get<double>();
      } else if (key == "smallness") {
        base.smallness = value.get<double>();
      } else if (key == "conv_radius") {
        base.conv_radius = value.get<double>();
      } else if (key == "samples") {
        base.samples = value.get<int>();
      } else if (key == "seed") {
        base.seed = value.get<unsigned>();
      } else if (key == "alpha") {
        base.alpha = value.get<double>();
      } else if (key == "audit_override") {
        base.audit_override = value.get<bool>();
      } else {
        fail("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail("config '" + key + "': " + e.what());
    }
  }
  return base;
}

Json config_to_json(const SolverConfig& cfg) {
  Json j;
  j["mode"] = cfg.mode == StepMode::Word ? "word" : "bracket";
  j["strategy"] =
      cfg.strategy == PartitionStrategy::ControlGreedy ? "control_greedy" : "holder_budget";
  j["c3"] = cfg.c3;
  j["beta"] = cfg.beta;
  j["dyadic_tol"] = cfg.dyadic_tol;
  j["max_dyadic_level"] = cfg.max_dyadic_level;
  j["rk_substeps"] = cfg.rk_substeps;
  j["blowup_guard"] = cfg.blowup_guard;
  j["smallness"] = cfg.smallness;
  j["conv_radius"] = cfg.conv_radius;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["alpha"] = cfg.alpha;
  j["audit_override"] = cfg.audit_override;
  return j;
}

SolverConfig apply_override(const SolverConfig& cfg, const std::string& kv) {
  const std::size_t eq = kv.find('=');
  require(eq != std::string::npos && eq > 0, "override must look like key=value: '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  Json parsed = Json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;  // bare words are strings
  Json j;
  j[key] = std::move(parsed);
  return config_from_json(j, cfg);
}

// --- CSV ----------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error(path + ": cannot open file for writing");
}

void CsvWriter::header(const std::vector<std::string>& names) { raw_row(names); }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

}  // namespace roughflow::io
