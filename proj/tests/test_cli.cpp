#include "doctest.h"

#include "roughflow/io.hpp"
#include "roughflow/rough_driver.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using roughflow::io::Json;

namespace {

const std::string kCli = ROUGHFLOW_CLI_PATH;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "roughflow_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the binary with the given arguments, captures stdout+stderr into
// `log`, and returns the process exit code.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = kCli + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses a CSV produced by the binary into header + rows of doubles.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
  Csv out;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      out.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    for (const std::string& c : cells) row.push_back(std::stod(c));
    out.rows.push_back(row);
  }
  return out;
}

std::size_t column(const Csv& csv, const std::string& name) {
  for (std::size_t i = 0; i < csv.header.size(); ++i)
    if (csv.header[i] == name) return i;
  REQUIRE(false);
  return 0;
}

}  // namespace

TEST_CASE("solve on the drift preset reproduces the pure-drift flow exactly") {
  const fs::path dir = fresh_dir("solve_drift");
  const int code =
      run_cli("solve --config builtin:drift --out " + dir.string(), dir / "log.txt");
  CHECK(code == 0);

  const Csv flow = read_csv(dir / "flow.csv");
  const std::size_t ct = column(flow, "t");
  const std::size_t cx = column(flow, "x0_1");
  const std::size_t cp = column(flow, "phi_1");
  REQUIRE(!flow.rows.empty());
  int finals = 0;
  for (const std::vector<double>& row : flow.rows) {
    // phi(t) = x + c t with c = 0.5; every arithmetic step is dyadic, so the
    // solver result is bit-exact, not merely close.
    CHECK(row[cp] == row[cx] + 0.5 * row[ct]);
    if (row[ct] == 1.0) ++finals;
  }
  CHECK(finals == 3);  // one endpoint row per initial condition

  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("command") == "solve");
  CHECK(m.at("scenario").at("name") == "drift");
  CHECK(m.at("results").at("exploded") == false);
  CHECK(m.at("outputs").contains("envelope"));
}

TEST_CASE("scenario knob overrides reach the preset and are echoed") {
  const fs::path dir = fresh_dir("solve_drift_c");
  const int code = run_cli(
      "solve --config builtin:drift --override c=0.25 --out " + dir.string(),
      dir / "log.txt");
  CHECK(code == 0);

  const Csv flow = read_csv(dir / "flow.csv");
  const std::size_t ct = column(flow, "t");
  const std::size_t cx = column(flow, "x0_1");
  const std::size_t cp = column(flow, "phi_1");
  for (const std::vector<double>& row : flow.rows)
    CHECK(row[cp] == row[cx] + 0.25 * row[ct]);

  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("scenario").at("params").at("c") == 0.25);
  CHECK(m.at("overrides").size() == 1);
}

TEST_CASE("explode on the counterexample preset reports the blow-up time") {
  const fs::path dir = fresh_dir("explode_ce");
  const int code = run_cli(
      "explode --config builtin:counterexample --out " + dir.string(),
      dir / "log.txt");
  CHECK(code == 0);  // the explosion is expected here

  const Json e = Json::parse(slurp(dir / "explosion.json"));
  const double t_star = e.at("t_star_estimate").get<double>();
  CHECK(t_star > 0.9);   // exact blow-up time for a = 1 is t* = 1
  CHECK(t_star < 1.1);
  CHECK(e.at("witness_entry").size() == 2);
  CHECK(e.at("trace").size() > 2);

  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("scenario").at("expect_explosion") == true);
}

TEST_CASE("explode on a globally solvable scenario exits with code 2") {
  const fs::path dir = fresh_dir("explode_compliant");
  const int code = run_cli(
      "explode --config builtin:compliant --out " + dir.string(), dir / "log.txt");
  CHECK(code == 2);
  CHECK(!fs::exists(dir / "explosion.json"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("an unexpected blow-up in solve exits 2 but still writes the report") {
  const fs::path dir = fresh_dir("solve_unexpected");
  const fs::path cfg = dir / "scenario.json";
  {
    Json j;
    j["name"] = "area-onto-axis";
    j["driver"] = "builtin:area2";
    j["fields"] = "builtin:counterexample2";
    j["x0"] = {2.0, 0.0};
    j["config"] = {{"audit_override", true}};
    roughflow::io::write_json_file(cfg, j);
  }
  const int code = run_cli(
      "solve --config " + cfg.string() + " --out " + dir.string(), dir / "log.txt");
  CHECK(code == 2);

  REQUIRE(fs::exists(dir / "explosion.json"));
  REQUIRE(fs::exists(dir / "manifest.json"));
  const Json e = Json::parse(slurp(dir / "explosion.json"));
  // Quadratic blow-up from x0 = (2, 0) happens at t* = 1/2.
  CHECK(e.at("t_star_estimate").get<double>() == doctest::Approx(0.5).epsilon(0.05));
  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("results").at("exploded") == true);
}

TEST_CASE("reruns with identical inputs produce byte-identical outputs") {
  const fs::path dir = fresh_dir("determinism");
  const std::string args =
      "solve --config builtin:drift --out " + dir.string();
  REQUIRE(run_cli(args, dir / "log.txt") == 0);
  std::map<std::string, std::string> snapshot;
  for (const fs::directory_entry& ent : fs::directory_iterator(dir))
    if (ent.path().extension() != ".txt")
      snapshot[ent.path().filename().string()] = slurp(ent.path());
  REQUIRE(run_cli(args, dir / "log.txt") == 0);
  for (const auto& [name, bytes] : snapshot) CHECK(slurp(dir / name) == bytes);
  CHECK(snapshot.size() >= 3);  // manifest, flow, envelope, defects
}

TEST_CASE("malformed configuration files exit 3 and report line and column") {
  const fs::path dir = fresh_dir("malformed");
  const fs::path cfg = dir / "broken.json";
  std::ofstream(cfg) << "{\n  \"driver\": \"builtin:zero1\",\n  \"fields\": oops\n}\n";
  const int code =
      run_cli("solve --config " + cfg.string() + " --out " + dir.string(),
              dir / "log.txt");
  CHECK(code == 3);
  const std::string log = slurp(dir / "log.txt");
  CHECK(log.find("broken.json:3:") != std::string::npos);
}

TEST_CASE("unknown override keys exit 3") {
  const fs::path dir = fresh_dir("bad_override");
  const int code = run_cli(
      "solve --config builtin:drift --override bogus_key=1 --out " + dir.string(),
      dir / "log.txt");
  CHECK(code == 3);
  const std::string log = slurp(dir / "log.txt");
  CHECK(log.find("bogus_key") != std::string::npos);
}

TEST_CASE("converge writes the per-level defect table and the fitted rate") {
  const fs::path dir = fresh_dir("converge");
  const int code = run_cli(
      "converge --config builtin:compliant --out " + dir.string(), dir / "log.txt");
  CHECK(code == 0);

  const Csv csv = read_csv(dir / "defects.csv");
  CHECK(csv.header == std::vector<std::string>{"n", "defect", "rate_so_far"});
  CHECK(csv.rows.size() == 8);
  const std::size_t cd = column(csv, "defect");
  // The fitted window starts at the second halving; from there defects shrink.
  CHECK(csv.rows[1][cd] > csv.rows.back()[cd]);

  const Json m = Json::parse(slurp(dir / "manifest.json"));
  const double rate = m.at("results").at("rate").get<double>();
  const double theoretical = m.at("results").at("theoretical").get<double>();
  CHECK(rate > 0.0);
  CHECK(rate < 1.0);
  CHECK(rate <= theoretical * 1.15);
}

TEST_CASE("lift turns a sampled path into a loadable driver file") {
  const fs::path dir = fresh_dir("lift");
  const fs::path path_file = dir / "path.json";
  {
    Json j;
    j["p"] = 2.2;
    j["times"] = {0.0, 0.25, 0.5, 0.75, 1.0};
    j["points"] = Json::array();
    for (int i = 0; i <= 4; ++i)
      j["points"].push_back({0.3 * i, 0.1 * i * i});
    roughflow::io::write_json_file(path_file, j);
  }
  const int code = run_cli(
      "lift --config " + path_file.string() + " --out " + dir.string(),
      dir / "log.txt");
  CHECK(code == 0);

  const roughflow::RoughDriver drv =
      roughflow::io::driver_from_json(Json::parse(slurp(dir / "driver.json")));
  CHECK(drv.width() == 2);
  CHECK(drv.depth() == 2);
  CHECK(drv.t0() == 0.0);
  CHECK(drv.t1() == 1.0);
  // The level-one entry of the signature is the raw increment.
  const roughflow::TruncatedTensorSeries sig = drv.signature(0.0, 1.0);
  CHECK(sig.level(1)(0) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(sig.level(1)(1) == doctest::Approx(1.6).epsilon(1e-12));

  const Json m = Json::parse(slurp(dir / "manifest.json"));
  CHECK(m.at("results").at("cells") == 4);
}

TEST_CASE("audit inspects a bare vector-field file") {
  const fs::path dir = fresh_dir("audit_fields");
  const fs::path fields_file = dir / "fields.json";
  {
    // One bounded trigonometric field in two dimensions.
    Json f;
    f["dim"] = 2;
    f["coords"] = Json::array();
    Json c0 = Json::array();
    c0.push_back({{"coeff", 0.8}, {"exps", {0, 0}},
                  {"trig", {{{"axis", 1}, {"fn", "sin"}, {"pow", 1}}}}});
    Json c1 = Json::array();
    c1.push_back({{"coeff", 0.8}, {"exps", {0, 0}},
                  {"trig", {{{"axis", 0}, {"fn", "cos"}, {"pow", 1}}}}});
    f["coords"] = {c0, c1};
    Json wrapper = Json::array({f});
    roughflow::io::write_json_file(fields_file, wrapper);
  }
  const int code = run_cli(
      "audit --config " + fields_file.string() + " --out " + dir.string(),
      dir / "log.txt");
  CHECK(code == 0);

  const Json a = Json::parse(slurp(dir / "audit.json"));
  CHECK(a.at("pass") == true);
  CHECK(a.at("hard_fail") == false);
  CHECK(!a.at("entries").empty());
}

TEST_CASE("the seed flag changes sampled diagnostics but not the flow") {
  const fs::path d1 = fresh_dir("seed_a");
  const fs::path d2 = fresh_dir("seed_b");
  REQUIRE(run_cli("solve --config builtin:drift --seed 7 --out " + d1.string(),
                  d1 / "log.txt") == 0);
  REQUIRE(run_cli("solve --config builtin:drift --seed 8 --out " + d2.string(),
                  d2 / "log.txt") == 0);
  CHECK(slurp(d1 / "flow.csv") == slurp(d2 / "flow.csv"));
  const Json m1 = Json::parse(slurp(d1 / "manifest.json"));
  const Json m2 = Json::parse(slurp(d2 / "manifest.json"));
  CHECK(m1.at("solver").at("seed") == 7);
  CHECK(m2.at("solver").at("seed") == 8);
}
