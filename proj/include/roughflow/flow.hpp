#pragma once

#include "roughflow/poly_field.hpp"
#include "roughflow/rough_driver.hpp"
#include "roughflow/step_map.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace roughflow {

enum class PartitionStrategy { HolderBudget, ControlGreedy };

struct SolverConfig {
  StepMode mode = StepMode::Word;
  PartitionStrategy strategy = PartitionStrategy::ControlGreedy;
  double c3 = 1.0;        // subinterval budget constant for the uniform strategy
  double beta = 0.25;     // control mass per subinterval for the greedy strategy
  double dyadic_tol = 1e-8;
  int max_dyadic_level = 12;
  int rk_substeps = 32;
  double blowup_guard = 1e8;
  double smallness = 0.5;    // target for dt^{1/p} (1 + Holder norm)
  double conv_radius = 4.0;  // radius of the sampled ball certifying convergence
  int samples = 256;
  unsigned seed = 42;
  double alpha = 1.0;          // growth exponent the audit must certify
  bool audit_override = false; // proceed past a hard audit failure
};

struct SubintervalRecord {
  double a = 0.0, b = 0.0;
  int level = 0;    // dyadic level of the accepted (or last attempted) map
  int steps = 1;    // 2^level
  double defect = 0.0;  // last successive-refinement defect
  bool converged = false;
  double smallness = 0.0;  // (b-a)^{1/p} (1 + Holder norm)
  bool smallness_ok = true;
};

struct ExplosionReport {
  double interval_a = 0.0, interval_b = 0.0;  // subinterval being refined
  int subinterval = 0;
  double t_blow = 0.0;   // global time of the last accepted state
  double t_star = 0.0;   // extrapolated blow-up time (>= t_blow)
  bool extrapolated = false;
  double r_last = 0.0;   // unit-time parameter inside the failing step
  int witness_index = 0; // which sample point exploded first
  Vec witness_entry;     // its state at the start of the subinterval
  Vec last_state;
  std::vector<std::pair<double, double>> trace;  // (global time, |state|)
};

struct WindowResult {
  SubintervalRecord record;
  std::vector<StepMap> steps;  // maps of the accepted dyadic level, in order
  std::vector<Vec> images;     // sample points pushed through those maps
  std::optional<ExplosionReport> explosion;  // interval/index filled by caller
};

struct DefectStudy {
  double a = 0.0, b = 0.0;
  double smallness = 0.0;
  bool smallness_ok = true;
  std::vector<int> levels;            // n, comparing level n against n-1
  std::vector<double> defects;        // sup over samples of the refinement gap
  std::vector<double> rate_so_far;    // fitted per-level factor using rows <= n
  double rate = 0.0;                  // overall fitted per-level factor
  double theoretical = 0.0;           // 2^{-(floor(p)+1-p)/p}
};

/// The converged global approximate flow: per subinterval, the accepted
/// dyadic composition of log-ODE step maps.
class FlowComposition {
 public:
  FlowComposition(std::vector<double> partition,
                  std::vector<std::vector<StepMap>> panels, double holder);

  int dim() const;
  int cells() const { return static_cast<int>(panels_.size()); }
  const std::vector<double>& partition() const { return partition_; }
  const std::vector<std::vector<StepMap>>& panels() const { return panels_; }
  double holder_norm() const { return holder_; }

  /// phi_{t1,t0}(x).
  Vec eval(const Vec& x) const;
  /// phi_{t_j,t_i}(x) between partition indices i <= j.
  Vec eval_range(const Vec& x, int i, int j) const;
  /// States at every partition time, starting from x at t0.
  std::vector<Vec> trajectory(const Vec& x) const;

 private:
  std::vector<double> partition_;
  std::vector<std::vector<StepMap>> panels_;
  double holder_ = 0.0;
};

struct FlowResult {
  std::optional<FlowComposition> flow;       // set unless an explosion occurred
  std::optional<ExplosionReport> explosion;
  AuditReport audit;
  std::vector<SubintervalRecord> records;    // processed subintervals, in order
  std::vector<double> partition;             // planned partition
  double holder = 0.0;
  bool exploded() const { return explosion.has_value(); }
};

struct FlowDefectReport {
  double s = 0.0, u = 0.0, t = 0.0;
  double defect = 0.0;  // sup |phi_{t,u}(phi_{u,s}(x)) - phi_{t,s}(x)|
  SubintervalRecord left, right, full;
};

struct GrowthEnvelope {
  double alpha = 1.0;
  double c4 = 0.0;       // fitted envelope constant (averaged over radii)
  double budget = 0.0;   // N (t1-t0)^{1/p}, the envelope argument
  std::vector<double> radii;
  std::vector<double> sup_dev;   // sup_{|x|<=R} |phi(x) - x|
  std::vector<double> envelope;  // predicted bound with the fitted constant
  bool bounded = true;
};

/// Global partition per the configured strategy: greedy control stopping
/// times with budget beta, or a uniform grid sized from the Holder norm and
/// halved until the smallness target holds.
std::vector<double> make_partition(const RoughDriver& driver,
                                   const SolverConfig& config);

/// Dyadic refinement over [a,b]: doubles the number of log-ODE steps until
/// successive compositions of the sample points move less than dyadic_tol.
/// The one-step-vs-two comparison is never accepted on its own (symmetric
/// drivers can collapse it accidentally). A blow-up is reported in the
/// result instead of thrown.
WindowResult converge_window(const StepAssembler& assembler, double a, double b,
                             const SolverConfig& config,
                             const std::vector<Vec>& points, double holder);

/// Full defect-vs-level table over [a,b] together with the fitted per-level
/// contraction factor; defects below 1e-14 are excluded from the fit.
DefectStudy dyadic_defect_study(const RoughDriver& driver,
                                const std::vector<PolyVectorField>& fields,
                                const PolyVectorField& v0, double a, double b,
                                const SolverConfig& config);

/// Audit, partition, and converge subinterval by subinterval, certifying
/// convergence on a sampled ball of radius conv_radius propagated through the
/// flow. A blow-up ends the sweep with an ExplosionReport. Throws when the
/// audit hard-fails and the override is not set.
FlowResult solve_flow(const RoughDriver& driver,
                      const std::vector<PolyVectorField>& fields,
                      const PolyVectorField& v0, const SolverConfig& config);

/// Same sweep, but certifies convergence only along the given initial points,
/// so explosion times correspond to those trajectories.
FlowResult solve_trajectories(const RoughDriver& driver,
                              const std::vector<PolyVectorField>& fields,
                              const PolyVectorField& v0,
                              const std::vector<Vec>& x0s,
                              const SolverConfig& config);

/// Two-sided flow identity check: independently re-solves [s,u], [u,t] and
/// [s,t] with the partitioned solver (on the restricted drivers) and reports
/// the sup discrepancy over the sampled ball; the per-side records summarize
/// the worst panel of each sub-solve.
FlowDefectReport flow_defect(const RoughDriver& driver,
                             const std::vector<PolyVectorField>& fields,
                             const PolyVectorField& v0,
                             const SolverConfig& config, double s, double u,
                             double t);

/// Deviation sup_{|x|<=R} |phi(x) - x| per radius against the growth envelope
/// for exponent alpha, with the envelope constant fitted per radius and
/// averaged.
GrowthEnvelope growth_envelope(const FlowComposition& flow,
                               const RoughDriver& driver,
                               const std::vector<double>& radii, double alpha,
                               const SampleSpec& spec = {});

}  // namespace roughflow
