#include "CLI11.hpp"

#include "roughflow/derivative.hpp"
#include "roughflow/io.hpp"
#include "roughflow/scenarios.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace rf = roughflow;
namespace fs = std::filesystem;
using rf::io::Json;

namespace {

struct CommonArgs {
  std::string config;
  std::string out = ".";
  int seed = -1;  // < 0: keep the config's seed
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "scenario/input file or builtin:<name>")
      ->required();
  sub->add_option("--out", args.out, "output directory (created if missing)");
  sub->add_option("--seed", args.seed, "sampling seed, overrides the config");
  sub->add_option("--override", args.overrides,
                  "key=value scenario parameter or solver setting (repeatable)");
}

Json vec_json(const rf::Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat_json(const rf::Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

rf::scenarios::Scenario load_scenario(const CommonArgs& args) {
  rf::scenarios::Scenario s = rf::scenarios::make_scenario(args.config, args.overrides);
  if (args.seed >= 0) s.config.seed = static_cast<unsigned>(args.seed);
  return s;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out);
  return (fs::path(args.out) / name).string();
}

Json manifest_base(const std::string& command, const CommonArgs& args) {
  Json m;
  m["command"] = command;
  m["config"] = args.config;
  m["out"] = args.out;
  Json ov = Json::array();
  for (const std::string& o : args.overrides) ov.push_back(o);
  m["overrides"] = std::move(ov);
  return m;
}

void add_scenario_block(Json& m, const rf::scenarios::Scenario& s) {
  Json b;
  b["name"] = s.name;
  b["p"] = s.driver.p();
  b["t0"] = s.driver.t0();
  b["t1"] = s.driver.t1();
  b["width"] = s.driver.width();
  b["dim"] = s.fields.front().dim();
  b["expect_explosion"] = s.expect_explosion;
  b["params"] = s.params;
  m["scenario"] = std::move(b);
  m["solver"] = rf::io::config_to_json(s.config);
}

void write_manifest(const CommonArgs& args, const Json& m) {
  rf::io::write_json_file(out_path(args, "manifest.json"), m);
}

Json explosion_json(const rf::ExplosionReport& e) {
  Json j;
  j["interval"] = Json::array({e.interval_a, e.interval_b});
  j["last_state"] = vec_json(e.last_state);
  j["t_star_estimate"] = e.t_star;
  j["t_blow"] = e.t_blow;
  j["extrapolated"] = e.extrapolated;
  j["subinterval"] = e.subinterval;
  j["witness_index"] = e.witness_index;
  j["witness_entry"] = vec_json(e.witness_entry);
  j["r_last"] = e.r_last;
  Json trace = Json::array();
  for (const auto& [t, norm] : e.trace) trace.push_back(Json::array({t, norm}));
  j["trace"] = std::move(trace);
  return j;
}

void write_records_csv(const CommonArgs& args,
                       const std::vector<rf::SubintervalRecord>& records) {
  rf::io::CsvWriter csv(out_path(args, "defects.csv"));
  csv.header({"cell", "a", "b", "level", "steps", "defect", "converged", "smallness",
              "smallness_ok"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const rf::SubintervalRecord& r = records[i];
    csv.row({static_cast<double>(i), r.a, r.b, static_cast<double>(r.level),
             static_cast<double>(r.steps), r.defect, r.converged ? 1.0 : 0.0, r.smallness,
             r.smallness_ok ? 1.0 : 0.0});
  }
}

Json audit_json(const rf::AuditReport& a) {
  Json j;
  j["alpha_required"] = a.alpha_required;
  j["worst_alpha"] = a.worst_alpha;
  j["hard_fail"] = a.hard_fail;
  j["pass"] = a.pass;
  j["time_holder_constant"] = a.time_holder_constant;
  Json entries = Json::array();
  for (const rf::AuditEntry& e : a.entries) {
    Json ej;
    ej["name"] = e.name;
    ej["alpha_fit"] = e.alpha_fit;
    ej["constant"] = e.constant;
    ej["d1_bounded"] = e.d1_bounded;
    ej["d2_bounded"] = e.d2_bounded;
    ej["hard_fail"] = e.hard_fail;
    entries.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries);
  return j;
}

// --- subcommands -------------------------------------------------------------

int run_lift(const CommonArgs& args) {
  if (!args.overrides.empty())
    throw rf::io::ParseError("lift reads everything from the path file; no overrides");
  const Json j = rf::io::load_json_file(args.config);
  if (!j.is_object() || !j.contains("times") || !j.contains("points") || !j.contains("p"))
    throw rf::io::ParseError(args.config + ": path file needs {p, times, points}");
  const double p = j.at("p").get<double>();
  std::vector<double> times;
  for (const Json& t : j.at("times")) times.push_back(t.get<double>());
  std::vector<rf::Vec> points;
  for (const Json& row : j.at("points")) {
    if (row.is_number()) {
      rf::Vec v(1);
      v << row.get<double>();
      points.push_back(v);
    } else {
      rf::Vec v(static_cast<Eigen::Index>(row.size()));
      for (std::size_t i = 0; i < row.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = row.at(i).get<double>();
      points.push_back(v);
    }
  }
  if (points.size() != times.size())
    throw rf::io::ParseError(args.config + ": times and points must have equal length");

  rf::RoughDriver driver = [&] {
    try {
      return rf::signature_lift(points, times, p);
    } catch (const std::invalid_argument& e) {
      throw rf::io::ParseError(args.config + ": " + e.what());
    }
  }();
  rf::io::write_json_file(out_path(args, "driver.json"), rf::io::driver_to_json(driver));

  Json m = manifest_base("lift", args);
  m["outputs"] = Json{{"driver", "driver.json"}};
  Json res;
  res["width"] = driver.width();
  res["depth"] = driver.depth();
  res["cells"] = driver.cells();
  res["holder_norm"] = rf::holder_norm(driver);
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_audit(const CommonArgs& args) {
  Json m = manifest_base("audit", args);
  rf::AuditReport report;
  if (rf::scenarios::is_builtin(args.config) ||
      rf::io::load_json_file(args.config).contains("driver")) {
    const rf::scenarios::Scenario s = load_scenario(args);
    add_scenario_block(m, s);
    report = rf::assumption_audit(s.v0, s.fields, s.driver.p(), s.config.alpha,
                                  {1.0, 10.0, 100.0, 1000.0},
                                  rf::SampleSpec{s.config.samples, s.config.seed});
  } else {
    // Bare fields file: zero drift, default p.
    rf::SolverConfig cfg;
    for (const std::string& kv : args.overrides) cfg = rf::io::apply_override(cfg, kv);
    if (args.seed >= 0) cfg.seed = static_cast<unsigned>(args.seed);
    const std::vector<rf::PolyVectorField> fields =
        rf::io::fields_from_json(rf::io::load_json_file(args.config));
    const int d = fields.front().dim();
    report = rf::assumption_audit(rf::PolyVectorField::zero(d, d), fields, 2.5, cfg.alpha,
                                  {1.0, 10.0, 100.0, 1000.0},
                                  rf::SampleSpec{cfg.samples, cfg.seed});
    m["solver"] = rf::io::config_to_json(cfg);
  }
  rf::io::write_json_file(out_path(args, "audit.json"), audit_json(report));
  m["outputs"] = Json{{"audit", "audit.json"}};
  Json res;
  res["pass"] = report.pass;
  res["hard_fail"] = report.hard_fail;
  res["worst_alpha"] = report.worst_alpha;
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_solve(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const rf::FlowResult r = rf::solve_flow(s.driver, s.fields, s.v0, s.config);

  Json m = manifest_base("solve", args);
  add_scenario_block(m, s);
  Json outputs;
  write_records_csv(args, r.records);
  outputs["defects"] = "defects.csv";

  Json res;
  res["holder_norm"] = r.holder;
  res["cells"] = static_cast<int>(r.partition.size()) - 1;
  res["audit_pass"] = r.audit.pass;
  res["audit_hard_fail"] = r.audit.hard_fail;
  res["worst_alpha"] = r.audit.worst_alpha;
  res["exploded"] = r.exploded();

  if (r.exploded()) {
    rf::io::write_json_file(out_path(args, "explosion.json"), explosion_json(*r.explosion));
    outputs["explosion"] = "explosion.json";
    res["t_star_estimate"] = r.explosion->t_star;
    m["outputs"] = std::move(outputs);
    m["results"] = std::move(res);
    write_manifest(args, m);
    return s.expect_explosion ? 0 : 2;
  }

  // The ball certification can succeed while a configured initial point still
  // leaves the guard (explosive sets can have measure zero), so trajectory
  // evaluation is guarded per point.
  bool trajectory_blowup = false;
  {
    const int d = s.fields.front().dim();
    std::vector<std::vector<double>> rows;
    for (const rf::Vec& x : s.x0s) {
      try {
        const std::vector<rf::Vec> traj = r.flow->trajectory(x);
        for (std::size_t k = 0; k < traj.size(); ++k) {
          std::vector<double> row = {r.partition[k]};
          for (Eigen::Index c = 0; c < x.size(); ++c) row.push_back(x(c));
          for (Eigen::Index c = 0; c < traj[k].size(); ++c) row.push_back(traj[k](c));
          rows.push_back(std::move(row));
        }
      } catch (const rf::BlowupError&) {
        trajectory_blowup = true;
      }
    }
    rf::io::CsvWriter csv(out_path(args, "flow.csv"));
    std::vector<std::string> head = {"t"};
    for (int c = 0; c < d; ++c) head.push_back("x0_" + std::to_string(c + 1));
    for (int c = 0; c < d; ++c) head.push_back("phi_" + std::to_string(c + 1));
    csv.header(head);
    for (const std::vector<double>& row : rows) csv.row(row);
    outputs["flow"] = "flow.csv";
  }

  if (trajectory_blowup) {
    // Re-solve along the exploding trajectories for a proper report.
    const rf::FlowResult rt =
        rf::solve_trajectories(s.driver, s.fields, s.v0, s.x0s, s.config);
    res["exploded"] = true;
    if (rt.exploded()) {
      rf::io::write_json_file(out_path(args, "explosion.json"),
                              explosion_json(*rt.explosion));
      outputs["explosion"] = "explosion.json";
      res["t_star_estimate"] = rt.explosion->t_star;
    }
    m["outputs"] = std::move(outputs);
    m["results"] = std::move(res);
    write_manifest(args, m);
    return s.expect_explosion ? 0 : 2;
  }

  try {
    const double R = s.config.conv_radius;
    const std::vector<double> radii = {R / 4, R / 2, R};
    const rf::GrowthEnvelope env =
        rf::growth_envelope(*r.flow, s.driver, radii, s.config.alpha,
                            rf::SampleSpec{s.config.samples, s.config.seed});
    rf::io::CsvWriter csv(out_path(args, "envelope.csv"));
    csv.header({"R", "sup_deviation", "envelope"});
    for (std::size_t i = 0; i < env.radii.size(); ++i)
      csv.row({env.radii[i], env.sup_dev[i], env.envelope[i]});
    outputs["envelope"] = "envelope.csv";
    res["envelope_alpha"] = env.alpha;
    res["envelope_c4"] = env.c4;
    res["envelope_budget"] = env.budget;
    res["envelope_bounded"] = env.bounded;
  } catch (const rf::BlowupError&) {
    res["exploded"] = true;
    res["envelope_bounded"] = false;
    m["outputs"] = std::move(outputs);
    m["results"] = std::move(res);
    write_manifest(args, m);
    return s.expect_explosion ? 0 : 2;
  }

  m["outputs"] = std::move(outputs);
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_converge(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const rf::DefectStudy study = rf::dyadic_defect_study(
      s.driver, s.fields, s.v0, s.driver.t0(), s.driver.t1(), s.config);

  rf::io::CsvWriter csv(out_path(args, "defects.csv"));
  csv.header({"n", "defect", "rate_so_far"});
  for (std::size_t i = 0; i < study.levels.size(); ++i)
    csv.row({static_cast<double>(study.levels[i]), study.defects[i], study.rate_so_far[i]});

  Json m = manifest_base("converge", args);
  add_scenario_block(m, s);
  m["outputs"] = Json{{"defects", "defects.csv"}};
  Json res;
  res["rate"] = study.rate;
  res["theoretical"] = study.theoretical;
  res["smallness"] = study.smallness;
  res["smallness_ok"] = study.smallness_ok;
  res["levels"] = static_cast<int>(study.levels.size());
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_remainder(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const double span = s.driver.t1() - s.driver.t0();
  std::vector<double> hs;
  for (int j = 3; j <= 9; ++j) {
    const double h = std::pow(2.0, -j);
    if (h <= span) hs.push_back(h);
  }
  if (hs.size() < 2)
    throw rf::io::ParseError("remainder: the driver horizon is too short for the h sweep");
  const int d = s.fields.front().dim();
  const rf::RemainderReport rep = rf::taylor_remainder(
      s.driver, s.fields, s.v0, s.driver.t0(), hs, rf::PolyVectorField::identity(d),
      s.config.conv_radius, s.config.mode, s.config.rk_substeps, s.config.blowup_guard,
      rf::SampleSpec{s.config.samples, s.config.seed});

  rf::io::CsvWriter csv(out_path(args, "remainder.csv"));
  csv.header({"h", "remainder", "slope_so_far"});
  for (std::size_t i = 0; i < rep.h.size(); ++i)
    csv.row({rep.h[i], rep.remainder[i], rep.slope_so_far[i]});

  Json m = manifest_base("remainder", args);
  add_scenario_block(m, s);
  m["outputs"] = Json{{"remainder", "remainder.csv"}};
  Json res;
  res["exact"] = !std::isfinite(rep.slope);
  if (std::isfinite(rep.slope)) res["slope"] = rep.slope;
  res["theoretical"] = rep.theoretical;
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_nbeta(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const rf::ControlTable table = rf::ControlTable::from_driver(s.driver);
  const rf::AccumulationReport acc = rf::accumulation(table, s.config.beta);

  {
    rf::io::CsvWriter csv(out_path(args, "control.csv"));
    csv.header({"i", "j", "t_i", "t_j", "w"});
    for (int i = 0; i < table.size(); ++i)
      for (int j = i + 1; j < table.size(); ++j)
        csv.row({static_cast<double>(i), static_cast<double>(j), table.times()[i],
                 table.times()[j], table.w(i, j)});
  }
  {
    rf::io::CsvWriter csv(out_path(args, "accumulation.csv"));
    csv.header({"i", "tau"});
    for (std::size_t i = 0; i < acc.taus.size(); ++i)
      csv.row({static_cast<double>(i), acc.taus[i]});
  }

  const std::vector<double> partition = rf::make_partition(s.driver, s.config);
  Json m = manifest_base("nbeta", args);
  add_scenario_block(m, s);
  m["outputs"] = Json{{"control", "control.csv"}, {"accumulation", "accumulation.csv"}};
  Json res;
  res["beta"] = acc.beta;
  res["n_beta"] = acc.n_beta;
  res["partition_cells"] = static_cast<int>(partition.size()) - 1;
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

int run_explode(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const rf::FlowResult r = rf::solve_trajectories(s.driver, s.fields, s.v0, s.x0s, s.config);

  Json m = manifest_base("explode", args);
  add_scenario_block(m, s);
  Json outputs;
  write_records_csv(args, r.records);
  outputs["defects"] = "defects.csv";
  Json res;
  res["exploded"] = r.exploded();
  if (r.exploded()) {
    rf::io::write_json_file(out_path(args, "explosion.json"), explosion_json(*r.explosion));
    outputs["explosion"] = "explosion.json";
    res["t_star_estimate"] = r.explosion->t_star;
    res["t_blow"] = r.explosion->t_blow;
  }
  m["outputs"] = std::move(outputs);
  m["results"] = std::move(res);
  write_manifest(args, m);
  return r.exploded() ? 0 : 2;  // this command is the expected-explosion mode
}

int run_jacobian(const CommonArgs& args) {
  const rf::scenarios::Scenario s = load_scenario(args);
  const rf::Vec x0 = s.x0s.front();
  const rf::FlowResult r = rf::solve_trajectories(s.driver, s.fields, s.v0, {x0}, s.config);

  Json m = manifest_base("jacobian", args);
  add_scenario_block(m, s);
  if (r.exploded()) {
    rf::io::write_json_file(out_path(args, "explosion.json"), explosion_json(*r.explosion));
    m["outputs"] = Json{{"explosion", "explosion.json"}};
    m["results"] = Json{{"exploded", true}};
    write_manifest(args, m);
    return s.expect_explosion ? 0 : 2;
  }

  const rf::FlowJacobian fj = rf::flow_jacobian(*r.flow, x0);
  {
    rf::io::CsvWriter csv(out_path(args, "jacobian.csv"));
    csv.header({"interval_index", "factor_norm", "accumulated_norm"});
    for (const rf::JacobianRecord& rec : fj.records)
      csv.row({static_cast<double>(rec.index), rec.factor_norm, rec.accumulated_norm});
  }

  Json res;
  res["x0"] = vec_json(x0);
  res["y"] = vec_json(fj.y);
  res["jacobian"] = mat_json(fj.jacobian);
  res["det"] = fj.jacobian.determinant();
  if (s.n_params > 0) {
    const rf::SensitivityReport sens = rf::parameter_sensitivity(
        s.driver, s.fields, s.v0, s.n_params, x0.head(s.n_params),
        x0.tail(x0.size() - s.n_params), s.config);
    res["dx_da"] = mat_json(sens.dx_da);
  }
  m["outputs"] = Json{{"jacobian", "jacobian.csv"}};
  m["results"] = std::move(res);
  write_manifest(args, m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-ODE rough flow solver and diagnostics"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* lift = app.add_subcommand("lift", "lift a piecewise-linear path to a driver file");
  CLI::App* audit = app.add_subcommand("audit", "growth/derivative assumption audit");
  CLI::App* solve = app.add_subcommand("solve", "build the global flow; flow/defect/envelope outputs");
  CLI::App* converge = app.add_subcommand("converge", "dyadic defect study over the horizon");
  CLI::App* remainder = app.add_subcommand("remainder", "Taylor remainder order study");
  CLI::App* nbeta = app.add_subcommand("nbeta", "control table and greedy accumulation");
  CLI::App* explode = app.add_subcommand("explode", "run an explosive scenario to its blow-up");
  CLI::App* jacobian = app.add_subcommand("jacobian", "flow derivative along the first initial point");
  for (CLI::App* sub : {lift, audit, solve, converge, remainder, nbeta, explode, jacobian})
    add_common(sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;  // bad flags/usage are input errors
  }

  try {
    if (app.got_subcommand(lift)) return run_lift(args);
    if (app.got_subcommand(audit)) return run_audit(args);
    if (app.got_subcommand(solve)) return run_solve(args);
    if (app.got_subcommand(converge)) return run_converge(args);
    if (app.got_subcommand(remainder)) return run_remainder(args);
    if (app.got_subcommand(nbeta)) return run_nbeta(args);
    if (app.got_subcommand(explode)) return run_explode(args);
    if (app.got_subcommand(jacobian)) return run_jacobian(args);
  } catch (const rf::io::ParseError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const rf::BlowupError&) {
    std::cerr << "error: trajectory left the guard ball during evaluation" << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 3;
}
