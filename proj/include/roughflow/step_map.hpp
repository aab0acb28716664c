#pragma once

#include "roughflow/poly_field.hpp"
#include "roughflow/rough_driver.hpp"

#include <vector>

namespace roughflow {

enum class StepMode { Word, Bracket };

/// One local log-ODE step over [s,t]: an autonomous polynomial/trig field
/// whose unit-time flow approximates the rough flow on that interval.
struct StepMap {
  double s = 0.0, t = 0.0;
  PolyVectorField field;
  int substeps = 32;
  double guard = 1e8;
};

/// Assembles the log-ODE step field from the log-signature L = log X_{ts},
/// with time-dependent coefficient fields frozen at s:
///   word mode:    (t-s) V0(s,.) + sum_{k,I} L^{k,I} (V_I Id)(s,.)
///   bracket mode: (t-s) V0(s,.) + sum_k (1/k) sum_I L^{k,I} V_[I](s,.)
/// Both compute the canonical first-order image of L (the 1/k is the Dynkin
/// normalization for word coordinates against right-nested brackets); they
/// agree whenever L is a Lie element, i.e. for weak geometric drivers. Word
/// mode stays meaningful for non-geometric drivers. Optional Young data adds
/// sum_j Y_j W_j(s,.) for a mixed regular/rough drive.
StepMap build_step_field(const RoughDriver& driver,
                         const std::vector<PolyVectorField>& fields,
                         const PolyVectorField& v0, double s, double t,
                         StepMode mode = StepMode::Word, int substeps = 32,
                         double guard = 1e8,
                         const std::vector<PolyVectorField>* young_fields = nullptr,
                         const Vec* young_increment = nullptr);

/// Repeated step assembly against one driver/field set; caches the contracted
/// word (or bracket) fields when the coefficients are time-independent.
class StepAssembler {
 public:
  StepAssembler(const RoughDriver& driver, std::vector<PolyVectorField> fields,
                PolyVectorField v0, StepMode mode = StepMode::Word,
                int substeps = 32, double guard = 1e8);

  StepMap step(double s, double t) const;
  const RoughDriver& driver() const { return *driver_; }
  int dim() const { return v0_.dim(); }

 private:
  const RoughDriver* driver_;
  std::vector<PolyVectorField> fields_;
  PolyVectorField v0_;
  StepMode mode_;
  int substeps_;
  double guard_;
  bool autonomous_;
  std::vector<std::vector<PolyVectorField>> cached_;  // [level-1][word index]
};

/// Unit-time flow of the step field: fixed-step RK4 with `substeps` stages.
/// Leaves through BlowupError when |y| exceeds the guard or goes non-finite.
Vec mu(const StepMap& step, const Vec& x);

struct MuJac {
  Vec y;
  Mat jac;
};

/// Endpoint and derivative of the step flow, integrating the variational
/// equation J' = DF(y) J alongside y' = F(y).
MuJac mu_jacobian(const StepMap& step, const Vec& x);

struct RemainderReport {
  std::vector<double> h;
  std::vector<double> remainder;       // sup over the sampled ball
  std::vector<double> slope_so_far;    // log-log fit over rows 0..i
  double slope = 0.0;                  // overall fitted order
  double theoretical = 0.0;            // (floor(p)+1)/p
};

/// Sup over a sampled ball of |f(mu_{s+h,s}(x)) - f(x) - h (V0 f)(x)
/// - sum_{k,I} X^{k,I} (V_I f)(x)| for each h, with the log-log order fit.
/// Remainders below 1e-15 are treated as exact and excluded from the fit;
/// if none remain the slope reports +infinity.
RemainderReport taylor_remainder(const RoughDriver& driver,
                                 const std::vector<PolyVectorField>& fields,
                                 const PolyVectorField& v0, double s,
                                 const std::vector<double>& hs,
                                 const PolyVectorField& f, double R,
                                 StepMode mode = StepMode::Word, int substeps = 32,
                                 double guard = 1e8, const SampleSpec& spec = {});

}  // namespace roughflow
