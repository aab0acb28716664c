#pragma once

#include "roughflow/flow.hpp"

#include <vector>

namespace roughflow {

struct JacobianRecord {
  int index = 0;        // panel position in the flow partition
  double a = 0.0, b = 0.0;
  Mat factor;           // D phi_{b,a} at the moving state
  Mat accumulated;      // D phi_{b,t0}(x0)
  Vec state;            // phi_{b,t0}(x0)
  double factor_norm = 0.0;       // Frobenius norm of the panel factor
  double accumulated_norm = 0.0;  // Frobenius norm of the running product
  double deviation = 0.0;         // |D phi_{b,t0} - Id|_F
};

struct FlowJacobian {
  Vec y;         // phi_{t1,t0}(x0)
  Mat jacobian;  // D phi_{t1,t0}(x0)
  std::vector<JacobianRecord> records;  // one per panel, in order
};

/// Chains the variational solves of every stored step map along the moving
/// trajectory; the panel records expose the factorization of the derivative.
FlowJacobian flow_jacobian(const FlowComposition& flow, const Vec& x0);

struct SensitivityReport {
  Vec y;             // final state block
  Mat dx_da;         // state-by-parameter sensitivity block
  Mat full_jacobian; // derivative of the augmented flow
};

/// Parameter sensitivities through state augmentation: the caller provides
/// fields on z = (a, x) whose first n_params coordinates are constant (zero
/// dynamics), and the parameter block of the augmented derivative is
/// extracted. Solved along the single augmented trajectory, so an explosion
/// surfaces as in solve_trajectories.
SensitivityReport parameter_sensitivity(
    const RoughDriver& driver, const std::vector<PolyVectorField>& aug_fields,
    const PolyVectorField& aug_v0, int n_params, const Vec& params,
    const Vec& x0, const SolverConfig& config);

struct DerivativeGrowthCheck {
  std::vector<double> ts;    // right endpoints of prefix windows
  std::vector<double> ws;    // control mass w(t0, t)
  std::vector<int> ns;       // accumulation count at budget beta over [t0, t]
  std::vector<double> devs;  // |D phi_{t,t0}(x0) - Id|_F
  double beta = 0.0;
  double c1 = 0.0;         // fitted per-count log growth
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Tests the derivative growth estimate: regresses
/// log dev - (1/p) log w against the accumulation count N over expanding
/// prefix windows of the flow partition.
DerivativeGrowthCheck derivative_growth_check(const FlowComposition& flow,
                                              const RoughDriver& driver,
                                              const Vec& x0, double beta);

}  // namespace roughflow
