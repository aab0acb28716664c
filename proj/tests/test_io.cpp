#include "doctest.h"

#include "roughflow/io.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace roughflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "roughflow_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Vec> zigzag_points(int n, double amplitude) {
  std::vector<Vec> pts;
  const double golden = 2.399963229728653;
  for (int i = 0; i <= n; ++i) {
    Vec v(2);
    v << amplitude * std::cos(golden * i), amplitude * std::sin(golden * i);
    pts.push_back(v);
  }
  return pts;
}

std::vector<double> uniform_times(int n, double t0, double t1) {
  std::vector<double> ts;
  for (int i = 0; i <= n; ++i) ts.push_back(t0 + (t1 - t0) * i / n);
  return ts;
}

}  // namespace

TEST_CASE("series survives json round trips, in memory and through text") {
  TruncatedTensorSeries s = oracle::random_series(2, 3, 0.9, 1.0);

  const io::Json j = io::series_to_json(s);
  CHECK(!j.contains("scalar"));  // group-like scalar is implied
  const TruncatedTensorSeries back = io::series_from_json(j);
  const TruncatedTensorSeries reparsed = io::series_from_json(io::Json::parse(j.dump()));
  for (int k = 0; k <= 3; ++k) {
    CHECK((back.level(k) - s.level(k)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((reparsed.level(k) - s.level(k)).cwiseAbs().maxCoeff() == 0.0);
  }

  s.scalar() = 0.25;
  const io::Json j2 = io::series_to_json(s);
  CHECK(j2.at("scalar").get<double>() == 0.25);
  CHECK(io::series_from_json(j2).scalar() == 0.25);
}

TEST_CASE("series parsing rejects malformed shapes") {
  io::Json j = io::series_to_json(TruncatedTensorSeries::unit(2, 2));
  io::Json missing = j;
  missing.erase("width");
  CHECK_THROWS_AS((void)io::series_from_json(missing), io::ParseError);

  io::Json short_level = j;
  short_level["levels"][1] = {1.0, 2.0, 3.0};  // level 2 needs 4 entries
  CHECK_THROWS_AS((void)io::series_from_json(short_level), io::ParseError);

  io::Json wrong_count = j;
  wrong_count["levels"].erase(1);
  CHECK_THROWS_AS((void)io::series_from_json(wrong_count), io::ParseError);
}

TEST_CASE("drivers survive json round trips cell by cell") {
  const RoughDriver d = signature_lift(zigzag_points(6, 0.7), uniform_times(6, 0.0, 1.5), 2.5);
  const RoughDriver back = io::driver_from_json(io::Json::parse(io::driver_to_json(d).dump()));

  CHECK(back.p() == d.p());
  CHECK(back.width() == d.width());
  CHECK(back.times() == d.times());
  REQUIRE(back.cells() == d.cells());
  for (int i = 0; i < d.cells(); ++i)
    CHECK((back.segment(i) - d.segment(i)).max_abs() == 0.0);

  // Interpolated queries agree because the cell data agrees bit for bit.
  const TruncatedTensorSeries a = d.signature(0.31, 1.07);
  const TruncatedTensorSeries b = back.signature(0.31, 1.07);
  CHECK((a - b).max_abs() == 0.0);

  Mat C = Mat::Zero(2, 2);
  C(0, 0) = 1.0;
  const RoughDriver area = pure_area_driver(2.0, 8, C, 2.5);
  const RoughDriver area_back = io::driver_from_json(io::driver_to_json(area));
  CHECK((area_back.grid_signature(0, 8) - area.grid_signature(0, 8)).max_abs() == 0.0);
}

TEST_CASE("driver parsing rejects inconsistent grids") {
  io::Json j = io::driver_to_json(signature_lift(zigzag_points(3, 0.5), uniform_times(3, 0.0, 1.0), 2.2));

  io::Json bad_count = j;
  bad_count["segments"].erase(0);
  CHECK_THROWS_AS((void)io::driver_from_json(bad_count), io::ParseError);

  io::Json bad_width = j;
  bad_width["segments"][0]["width"] = 3;
  CHECK_THROWS_AS((void)io::driver_from_json(bad_width), io::ParseError);

  io::Json bad_times = j;
  bad_times["times"][2] = bad_times["times"][1];  // not strictly increasing
  CHECK_THROWS_AS((void)io::driver_from_json(bad_times), io::ParseError);
}

TEST_CASE("fields survive json round trips including trig and time terms") {
  // (x sin(y), x) plus a second field mixing powers, cos, and a time factor.
  PolyVectorField v1(2, 2);
  PolyTerm t0(2, 1.0);
  t0.exps(0) = 1;
  t0.sin_pows(1) = 1;
  v1.coord(0).add_term(t0);
  PolyTerm t1(2, 1.0);
  t1.exps(0) = 1;
  v1.coord(1).add_term(t1);
  v1.canonicalize();

  PolyVectorField v2(2, 2);
  PolyTerm u0(2, -0.75);
  u0.exps(1) = 2;
  u0.cos_pows(0) = 3;
  u0.t_exp = 2;
  v2.coord(0).add_term(u0);
  PolyTerm u1(2, 0.5);
  u1.sin_pows(0) = 1;
  u1.cos_pows(1) = 1;
  v2.coord(1).add_term(u1);
  v2.canonicalize();

  const io::Json jf = io::fields_to_json({v1, v2});
  const std::vector<PolyVectorField> back = io::fields_from_json(io::Json::parse(jf.dump()));
  REQUIRE(back.size() == 2);

  for (int i = 0; i < 8; ++i) {
    const Vec x = oracle::rvec(2, 2.0);
    const double t = oracle::runif(0.0, 1.5);
    CHECK((back[0].eval(x, t) - v1.eval(x, t)).norm() == 0.0);
    CHECK((back[1].eval(x, t) - v2.eval(x, t)).norm() == 0.0);
    CHECK((back[1].jacobian_eval(x, t) - v2.jacobian_eval(x, t)).norm() == 0.0);
  }

  // Compact keys: no t_exp or trig on the plain linear term.
  const io::Json plain = io::field_to_json(v1);
  CHECK(!plain["coords"][1][0].contains("t_exp"));
  CHECK(!plain["coords"][1][0].contains("trig"));
  CHECK(plain["coords"][0][0]["trig"][0]["fn"] == "sin");
}

TEST_CASE("fields file accepts an object, an array, or a fields wrapper") {
  const PolyVectorField f = PolyVectorField::identity(2);
  const io::Json one = io::field_to_json(f);
  CHECK(io::fields_from_json(one).size() == 1);

  io::Json arr = io::Json::array({one, one});
  CHECK(io::fields_from_json(arr).size() == 2);

  io::Json wrapped;
  wrapped["fields"] = arr;
  CHECK(io::fields_from_json(wrapped).size() == 2);

  CHECK_THROWS_AS((void)io::fields_from_json(io::Json::array()), io::ParseError);
  CHECK_THROWS_AS((void)io::fields_from_json(io::Json::object()), io::ParseError);
}

TEST_CASE("field parsing validates exps, trig entries, and dimensions") {
  io::Json j;
  j["dim"] = 2;
  j["coords"] = io::Json::array({io::Json::array({{{"coeff", 1.0}, {"exps", {1, 0}}}}),
                                 io::Json::array({{{"coeff", 2.0}}})});
  const PolyVectorField ok = io::field_from_json(j);
  Vec x(2);
  x << 3.0, -1.0;
  CHECK(ok.eval(x)(0) == 3.0);
  CHECK(ok.eval(x)(1) == 2.0);

  io::Json bad_exps = j;
  bad_exps["coords"][0][0]["exps"] = {1, 0, 0};
  CHECK_THROWS_AS((void)io::field_from_json(bad_exps), io::ParseError);

  io::Json bad_axis = j;
  bad_axis["coords"][0][0]["trig"] = {{{"axis", 2}, {"fn", "sin"}, {"pow", 1}}};
  CHECK_THROWS_AS((void)io::field_from_json(bad_axis), io::ParseError);

  io::Json bad_fn = j;
  bad_fn["coords"][0][0]["trig"] = {{{"axis", 0}, {"fn", "tan"}, {"pow", 1}}};
  CHECK_THROWS_AS((void)io::field_from_json(bad_fn), io::ParseError);
}

TEST_CASE("config json round trips and rejects unknown or mistyped keys") {
  SolverConfig cfg;
  cfg.mode = StepMode::Bracket;
  cfg.strategy = PartitionStrategy::HolderBudget;
  cfg.c3 = 2.5;
  cfg.beta = 0.4;
  cfg.dyadic_tol = 1e-9;
  cfg.max_dyadic_level = 12;
  cfg.rk_substeps = 16;
  cfg.samples = 48;
  cfg.seed = 99;
  cfg.alpha = 0.5;
  cfg.audit_override = true;

  const SolverConfig back = io::config_from_json(io::config_to_json(cfg));
  CHECK(back.mode == cfg.mode);
  CHECK(back.strategy == cfg.strategy);
  CHECK(back.c3 == cfg.c3);
  CHECK(back.beta == cfg.beta);
  CHECK(back.dyadic_tol == cfg.dyadic_tol);
  CHECK(back.max_dyadic_level == cfg.max_dyadic_level);
  CHECK(back.rk_substeps == cfg.rk_substeps);
  CHECK(back.samples == cfg.samples);
  CHECK(back.seed == cfg.seed);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.audit_override == cfg.audit_override);

  // Partial overrides keep the base for everything else.
  io::Json partial;
  partial["beta"] = 0.3;
  const SolverConfig merged = io::config_from_json(partial, cfg);
  CHECK(merged.beta == 0.3);
  CHECK(merged.mode == StepMode::Bracket);
  CHECK(merged.samples == 48);

  io::Json unknown;
  unknown["betta"] = 0.3;
  CHECK_THROWS_AS((void)io::config_from_json(unknown), io::ParseError);

  io::Json mistyped;
  mistyped["samples"] = "many";
  CHECK_THROWS_AS((void)io::config_from_json(mistyped), io::ParseError);

  io::Json bad_mode;
  bad_mode["mode"] = "wordy";
  CHECK_THROWS_AS((void)io::config_from_json(bad_mode), io::ParseError);
}

TEST_CASE("command line overrides parse scalars, bools, and words") {
  SolverConfig cfg;
  cfg = io::apply_override(cfg, "mode=bracket");
  CHECK(cfg.mode == StepMode::Bracket);
  cfg = io::apply_override(cfg, "samples=32");
  CHECK(cfg.samples == 32);
  cfg = io::apply_override(cfg, "dyadic_tol=1e-10");
  CHECK(cfg.dyadic_tol == 1e-10);
  cfg = io::apply_override(cfg, "audit_override=true");
  CHECK(cfg.audit_override);

  CHECK_THROWS_AS((void)io::apply_override(cfg, "no_equals_sign"), io::ParseError);
  CHECK_THROWS_AS((void)io::apply_override(cfg, "=0.5"), io::ParseError);
  CHECK_THROWS_AS((void)io::apply_override(cfg, "mystery=1"), io::ParseError);
}

TEST_CASE("json file loading reports the line and column of syntax errors") {
  const fs::path good = temp_file("good.json");
  write_text(good, "{\n  \"width\": 2\n}\n");
  CHECK(io::load_json_file(good.string()).at("width").get<int>() == 2);

  const fs::path bad = temp_file("bad.json");
  write_text(bad, "{\n  \"width\": 2,\n  BAD\n}\n");
  bool threw = false;
  try {
    (void)io::load_json_file(bad.string());
  } catch (const io::ParseError& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find(bad.string()) != std::string::npos);
    CHECK(msg.find(":3:") != std::string::npos);  // the offending line
  }
  CHECK(threw);

  CHECK_THROWS_AS((void)io::load_json_file("/nonexistent/nowhere.json"), io::ParseError);
}

TEST_CASE("csv output is deterministic with full-precision numbers") {
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(2.0) == "2");
  CHECK(io::format_double(-3.25) == "-3.25");
  CHECK(io::format_double(0.1) == "0.10000000000000001");

  // format_double must round trip every double it prints.
  for (int i = 0; i < 200; ++i) {
    const double v = oracle::runif() * std::pow(10.0, oracle::runif(-12.0, 12.0));
    CHECK(std::stod(io::format_double(v)) == v);
  }

  const fs::path p1 = temp_file("rows1.csv");
  const fs::path p2 = temp_file("rows2.csv");
  for (const fs::path& p : {p1, p2}) {
    io::CsvWriter w(p.string());
    w.header({"t", "value"});
    w.row({0.0, 1.0 / 3.0});
    w.row({0.125, 2e17});
  }
  const std::string text = read_text(p1);
  CHECK(text == read_text(p2));
  CHECK(text.find("t,value\n") == 0);
  CHECK(text.find("0.125,") != std::string::npos);

  const io::Json j = io::Json::parse("{\"a\": 0.1}");
  const fs::path jp = temp_file("echo.json");
  io::write_json_file(jp.string(), j);
  CHECK(io::load_json_file(jp.string()).at("a").get<double>() == 0.1);
}
