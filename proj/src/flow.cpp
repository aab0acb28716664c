#include "roughflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace roughflow {

namespace {

void validate_config(const SolverConfig& cfg) {
  if (cfg.c3 <= 0.0) throw std::invalid_argument("config: c3 must be positive");
  if (cfg.beta <= 0.0) throw std::invalid_argument("config: beta must be positive");
  if (cfg.dyadic_tol <= 0.0)
    throw std::invalid_argument("config: dyadic_tol must be positive");
  if (cfg.max_dyadic_level < 1 || cfg.max_dyadic_level > 20)
    throw std::invalid_argument("config: max_dyadic_level out of range");
  if (cfg.rk_substeps < 1)
    throw std::invalid_argument("config: rk_substeps must be positive");
  if (cfg.blowup_guard <= 0.0)
    throw std::invalid_argument("config: blowup_guard must be positive");
  if (cfg.smallness <= 0.0)
    throw std::invalid_argument("config: smallness must be positive");
  if (cfg.conv_radius <= 0.0)
    throw std::invalid_argument("config: conv_radius must be positive");
  if (cfg.samples < 1) throw std::invalid_argument("config: samples must be positive");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw std::invalid_argument("config: alpha must lie in [0,1]");
}

void check_window(const RoughDriver& d, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("window: need a < b");
  if (a < d.t0() - 1e-12 || b > d.t1() + 1e-12)
    throw std::invalid_argument("window: outside the driver horizon");
}

// 1/|y| extrapolated linearly in global time over the last trace points; the
// final accepted point is dropped since the integrator is least reliable
// there.
void fit_blowup_time(ExplosionReport& rep) {
  rep.t_star = rep.t_blow;
  rep.extrapolated = false;
  const std::size_t n = rep.trace.size();
  const std::size_t hi = n >= 2 ? n - 1 : n;
  const std::size_t lo = hi > 10 ? hi - 10 : 0;
  std::vector<double> ts, inv;
  for (std::size_t i = lo; i < hi; ++i) {
    if (rep.trace[i].second <= 0.0) continue;
    ts.push_back(rep.trace[i].first);
    inv.push_back(1.0 / rep.trace[i].second);
  }
  if (ts.size() < 3) return;
  const LinFit fit = lin_fit(ts, inv);
  if (!(fit.slope < 0.0)) return;
  rep.t_star = std::max(-fit.intercept / fit.slope, rep.t_blow);
  rep.extrapolated = true;
}

ExplosionReport globalize_blowup(const BlowupError& e, const StepMap& step,
                                 int witness_index, const Vec& entry) {
  ExplosionReport rep;
  const double len = step.t - step.s;
  rep.t_blow = step.s + e.r_last * len;
  rep.r_last = e.r_last;
  rep.witness_index = witness_index;
  rep.witness_entry = entry;
  rep.last_state = e.last_state;
  rep.trace.reserve(e.trace.size());
  for (const auto& [r, norm] : e.trace)
    rep.trace.emplace_back(step.s + r * len, norm);
  fit_blowup_time(rep);
  return rep;
}

std::vector<Vec> sample_ball(int dim, const SolverConfig& cfg) {
  return QuasiSampler(dim, cfg.seed).ball(cfg.conv_radius, cfg.samples);
}

}  // namespace

std::vector<double> make_partition(const RoughDriver& driver,
                                   const SolverConfig& cfg) {
  validate_config(cfg);
  if (cfg.strategy == PartitionStrategy::ControlGreedy) {
    const ControlTable table = ControlTable::from_driver(driver);
    return accumulation(table, cfg.beta).taus;
  }
  const double norm = holder_norm(driver);
  const double span = driver.t1() - driver.t0();
  const double scale = std::pow(1.0 + norm, driver.p());
  long cells = std::lround(std::floor(cfg.c3 * scale));
  cells = std::max(cells, 1L);
  cells = std::min(cells, 32768L);
  while (cells < 32768L &&
         std::pow(span / cells, 1.0 / driver.p()) * (1.0 + norm) >
             cfg.smallness)
    cells *= 2;
  std::vector<double> part(static_cast<std::size_t>(cells) + 1);
  for (long i = 0; i <= cells; ++i)
    part[static_cast<std::size_t>(i)] =
        driver.t0() + span * static_cast<double>(i) / static_cast<double>(cells);
  return part;
}

WindowResult converge_window(const StepAssembler& assembler, double a, double b,
                             const SolverConfig& cfg,
                             const std::vector<Vec>& points, double holder) {
  validate_config(cfg);
  check_window(assembler.driver(), a, b);
  if (points.empty())
    throw std::invalid_argument("window: need at least one sample point");

  WindowResult out;
  SubintervalRecord& rec = out.record;
  rec.a = a;
  rec.b = b;
  rec.smallness =
      std::pow(b - a, 1.0 / assembler.driver().p()) * (1.0 + holder);
  rec.smallness_ok = rec.smallness <= cfg.smallness + 1e-12;

  std::vector<Vec> prev;
  for (int level = 0; level <= cfg.max_dyadic_level; ++level) {
    const int n = 1 << level;
    std::vector<StepMap> steps;
    steps.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      steps.push_back(assembler.step(a + (b - a) * k / n,
                                     a + (b - a) * (k + 1) / n));
    std::vector<Vec> images;
    images.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      Vec y = points[i];
      for (const StepMap& s : steps) {
        try {
          y = mu(s, y);
        } catch (const BlowupError& e) {
          rec.level = level;
          rec.steps = n;
          out.explosion =
              globalize_blowup(e, s, static_cast<int>(i), points[i]);
          return out;
        }
      }
      images.push_back(std::move(y));
    }
    rec.level = level;
    rec.steps = n;
    if (level > 0) {
      double defect = 0.0;
      for (std::size_t i = 0; i < images.size(); ++i)
        defect = std::max(defect, (images[i] - prev[i]).norm());
      rec.defect = defect;
      // The first halving alone is not trusted: symmetric drivers (closed
      // sub-loops) can collapse it to rounding noise while the map is still
      // far from the limit, so acceptance starts at the second comparison.
      if (level >= 2 && defect < cfg.dyadic_tol) {
        rec.converged = true;
        out.steps = std::move(steps);
        out.images = std::move(images);
        return out;
      }
    }
    if (level == cfg.max_dyadic_level) {
      out.steps = std::move(steps);
      out.images = std::move(images);
    } else {
      prev = std::move(images);
    }
  }
  return out;  // not converged; the finest level is kept
}

DefectStudy dyadic_defect_study(const RoughDriver& driver,
                                const std::vector<PolyVectorField>& fields,
                                const PolyVectorField& v0, double a, double b,
                                const SolverConfig& cfg) {
  validate_config(cfg);
  check_window(driver, a, b);
  const StepAssembler assembler(driver, fields, v0, cfg.mode, cfg.rk_substeps,
                                cfg.blowup_guard);
  const std::vector<Vec> points = sample_ball(v0.dim(), cfg);

  DefectStudy study;
  study.a = a;
  study.b = b;
  const double norm = holder_norm(driver);
  study.smallness = std::pow(b - a, 1.0 / driver.p()) * (1.0 + norm);
  study.smallness_ok = study.smallness <= cfg.smallness + 1e-12;
  study.theoretical =
      std::pow(2.0, -(driver.depth() + 1 - driver.p()) / driver.p());

  const auto compose = [&](int level) {
    const int n = 1 << level;
    std::vector<StepMap> steps;
    steps.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      steps.push_back(assembler.step(a + (b - a) * k / n,
                                     a + (b - a) * (k + 1) / n));
    std::vector<Vec> images;
    images.reserve(points.size());
    for (const Vec& x : points) {
      Vec y = x;
      for (const StepMap& s : steps) y = mu(s, y);
      images.push_back(std::move(y));
    }
    return images;
  };

  std::vector<Vec> prev = compose(0);
  std::vector<double> ns, logs;
  for (int n = 1; n <= cfg.max_dyadic_level; ++n) {
    const std::vector<Vec> cur = compose(n);
    double defect = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i)
      defect = std::max(defect, (cur[i] - prev[i]).norm());
    study.levels.push_back(n);
    study.defects.push_back(defect);
    // The first halving is pre-asymptotic; the rate regression starts at n = 2.
    if (n >= 2 && defect > 1e-14) {
      ns.push_back(n);
      logs.push_back(std::log2(defect));
    }
    study.rate_so_far.push_back(
        ns.size() >= 2 ? std::pow(2.0, lin_fit(ns, logs).slope) : 0.0);
    prev = cur;
    if (defect < 1e-15) break;
  }
  study.rate = study.rate_so_far.empty() ? 0.0 : study.rate_so_far.back();
  return study;
}

FlowComposition::FlowComposition(std::vector<double> partition,
                                 std::vector<std::vector<StepMap>> panels,
                                 double holder)
    : partition_(std::move(partition)),
      panels_(std::move(panels)),
      holder_(holder) {
  if (partition_.size() != panels_.size() + 1 || panels_.empty())
    throw std::invalid_argument("flow: partition/panel mismatch");
}

int FlowComposition::dim() const { return panels_.front().front().field.dim(); }

Vec FlowComposition::eval(const Vec& x) const {
  return eval_range(x, 0, cells());
}

Vec FlowComposition::eval_range(const Vec& x, int i, int j) const {
  if (i < 0 || j > cells() || i > j)
    throw std::invalid_argument("flow: bad partition index range");
  Vec y = x;
  for (int k = i; k < j; ++k)
    for (const StepMap& s : panels_[static_cast<std::size_t>(k)]) y = mu(s, y);
  return y;
}

std::vector<Vec> FlowComposition::trajectory(const Vec& x) const {
  std::vector<Vec> states;
  states.reserve(partition_.size());
  Vec y = x;
  states.push_back(y);
  for (const auto& panel : panels_) {
    for (const StepMap& s : panel) y = mu(s, y);
    states.push_back(y);
  }
  return states;
}

namespace {

FlowResult solve_impl(const RoughDriver& driver,
                      const std::vector<PolyVectorField>& fields,
                      const PolyVectorField& v0, const SolverConfig& cfg,
                      std::vector<Vec> points) {
  validate_config(cfg);
  FlowResult res;
  res.audit = assumption_audit(v0, fields, driver.p(), cfg.alpha);
  if (res.audit.hard_fail && !cfg.audit_override)
    throw std::runtime_error(
        "coefficient audit failed: derivative growth is unbounded; set the "
        "audit override to proceed anyway");
  res.holder = holder_norm(driver);
  res.partition = make_partition(driver, cfg);
  const StepAssembler assembler(driver, fields, v0, cfg.mode, cfg.rk_substeps,
                                cfg.blowup_guard);
  std::vector<std::vector<StepMap>> panels;
  panels.reserve(res.partition.size() - 1);
  for (std::size_t k = 0; k + 1 < res.partition.size(); ++k) {
    WindowResult w = converge_window(assembler, res.partition[k],
                                     res.partition[k + 1], cfg, points,
                                     res.holder);
    res.records.push_back(w.record);
    if (w.explosion) {
      w.explosion->interval_a = res.partition[k];
      w.explosion->interval_b = res.partition[k + 1];
      w.explosion->subinterval = static_cast<int>(k);
      res.explosion = std::move(w.explosion);
      return res;
    }
    panels.push_back(std::move(w.steps));
    points = std::move(w.images);
  }
  res.flow.emplace(res.partition, std::move(panels), res.holder);
  return res;
}

}  // namespace

FlowResult solve_flow(const RoughDriver& driver,
                      const std::vector<PolyVectorField>& fields,
                      const PolyVectorField& v0, const SolverConfig& cfg) {
  validate_config(cfg);
  return solve_impl(driver, fields, v0, cfg, sample_ball(v0.dim(), cfg));
}

FlowResult solve_trajectories(const RoughDriver& driver,
                              const std::vector<PolyVectorField>& fields,
                              const PolyVectorField& v0,
                              const std::vector<Vec>& x0s,
                              const SolverConfig& cfg) {
  if (x0s.empty())
    throw std::invalid_argument("solve: need at least one initial point");
  for (const Vec& x : x0s)
    if (x.size() != v0.dim())
      throw std::invalid_argument("solve: initial point dimension mismatch");
  return solve_impl(driver, fields, v0, cfg, x0s);
}

namespace {

// Collapses the per-panel records of a sub-solve into one summary row.
SubintervalRecord summarize_records(const FlowResult& r, double a, double b) {
  SubintervalRecord rec;
  rec.a = a;
  rec.b = b;
  rec.steps = 0;
  rec.converged = true;
  for (const SubintervalRecord& w : r.records) {
    rec.level = std::max(rec.level, w.level);
    rec.steps += w.steps;
    rec.defect = std::max(rec.defect, w.defect);
    rec.converged = rec.converged && w.converged;
    rec.smallness = std::max(rec.smallness, w.smallness);
    rec.smallness_ok = rec.smallness_ok && w.smallness_ok;
  }
  return rec;
}

}  // namespace

FlowDefectReport flow_defect(const RoughDriver& driver,
                             const std::vector<PolyVectorField>& fields,
                             const PolyVectorField& v0,
                             const SolverConfig& cfg, double s, double u,
                             double t) {
  validate_config(cfg);
  if (!(s < u && u < t))
    throw std::invalid_argument("flow defect: need s < u < t");
  check_window(driver, s, t);
  const std::vector<Vec> points = sample_ball(v0.dim(), cfg);

  const auto sub_solve = [&](double a, double b, const std::vector<Vec>& pts,
                             const char* side) {
    FlowResult r = solve_impl(restrict_driver(driver, a, b), fields, v0, cfg, pts);
    if (r.exploded())
      throw std::runtime_error(std::string("flow defect: blow-up over the ") +
                               side + " interval");
    return r;
  };

  const FlowResult left = sub_solve(s, u, points, "left");
  std::vector<Vec> mid;
  mid.reserve(points.size());
  for (const Vec& x : points) mid.push_back(left.flow->eval(x));
  const FlowResult right = sub_solve(u, t, mid, "right");
  const FlowResult full = sub_solve(s, t, points, "full");

  FlowDefectReport rep;
  rep.s = s;
  rep.u = u;
  rep.t = t;
  rep.left = summarize_records(left, s, u);
  rep.right = summarize_records(right, u, t);
  rep.full = summarize_records(full, s, t);
  for (std::size_t i = 0; i < points.size(); ++i)
    rep.defect = std::max(
        rep.defect, (right.flow->eval(mid[i]) - full.flow->eval(points[i])).norm());
  return rep;
}

GrowthEnvelope growth_envelope(const FlowComposition& flow,
                               const RoughDriver& driver,
                               const std::vector<double>& radii, double alpha,
                               const SampleSpec& spec) {
  if (radii.empty()) throw std::invalid_argument("envelope: need radii");
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("envelope: alpha must lie in [0,1]");
  GrowthEnvelope env;
  env.alpha = alpha;
  env.radii = radii;
  const double tp =
      std::pow(driver.t1() - driver.t0(), 1.0 / driver.p());
  env.budget = flow.cells() * tp;
  const QuasiSampler sampler(flow.dim(), spec.seed);
  std::vector<double> c4s;
  for (const double R : radii) {
    if (R <= 0.0) throw std::invalid_argument("envelope: radii must be positive");
    double sup = 0.0;
    for (const Vec& x : sampler.ball(R, spec.directions))
      sup = std::max(sup, (flow.eval(x) - x).norm());
    env.sup_dev.push_back(sup);
    double c4 = 0.0;
    if (sup > 0.0) {
      if (alpha == 1.0)
        c4 = std::log(sup / ((1.0 + R) * tp)) / env.budget;
      else
        c4 = (std::pow(sup / (1.0 + R) + 1.0, 1.0 - alpha) - 1.0) *
             std::pow(1.0 + R, 1.0 - alpha) / env.budget;
    }
    c4s.push_back(std::max(c4, 0.0));
  }
  for (const double c : c4s) env.c4 += c;
  env.c4 /= static_cast<double>(c4s.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double R = radii[i];
    double bound = 0.0;
    if (alpha == 1.0)
      bound = (1.0 + R) * tp * std::exp(env.c4 * env.budget);
    else
      bound = (1.0 + R) *
              (std::pow(1.0 + env.c4 * env.budget /
                                  std::pow(1.0 + R, 1.0 - alpha),
                        1.0 / (1.0 - alpha)) -
               1.0);
    env.envelope.push_back(bound);
    if (env.sup_dev[i] > bound * 1.25 + 1e-12) env.bounded = false;
  }
  return env;
}

}  // namespace roughflow
