#include "roughflow/derivative.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roughflow {

FlowJacobian flow_jacobian(const FlowComposition& flow, const Vec& x0) {
  const int d = flow.dim();
  if (x0.size() != d)
    throw std::invalid_argument("flow jacobian: initial point dimension mismatch");
  FlowJacobian out;
  out.y = x0;
  out.jacobian = Mat::Identity(d, d);
  const Mat id = Mat::Identity(d, d);
  const auto& partition = flow.partition();
  for (std::size_t k = 0; k < flow.panels().size(); ++k) {
    Mat factor = Mat::Identity(d, d);
    for (const StepMap& s : flow.panels()[k]) {
      MuJac mj = mu_jacobian(s, out.y);
      factor = mj.jac * factor;
      out.y = std::move(mj.y);
    }
    out.jacobian = factor * out.jacobian;
    JacobianRecord rec;
    rec.index = static_cast<int>(k);
    rec.a = partition[k];
    rec.b = partition[k + 1];
    rec.factor = std::move(factor);
    rec.accumulated = out.jacobian;
    rec.state = out.y;
    rec.factor_norm = rec.factor.norm();
    rec.accumulated_norm = rec.accumulated.norm();
    rec.deviation = (rec.accumulated - id).norm();
    out.records.push_back(std::move(rec));
  }
  return out;
}

SensitivityReport parameter_sensitivity(
    const RoughDriver& driver, const std::vector<PolyVectorField>& aug_fields,
    const PolyVectorField& aug_v0, int n_params, const Vec& params,
    const Vec& x0, const SolverConfig& config) {
  const int dz = aug_v0.dim();
  if (n_params < 1 || n_params >= dz)
    throw std::invalid_argument("sensitivity: parameter count out of range");
  if (params.size() != n_params || x0.size() != dz - n_params)
    throw std::invalid_argument("sensitivity: block sizes do not match");
  Vec z0(dz);
  z0.head(n_params) = params;
  z0.tail(dz - n_params) = x0;
  const FlowResult res =
      solve_trajectories(driver, aug_fields, aug_v0, {z0}, config);
  if (res.exploded())
    throw std::runtime_error("sensitivity: augmented trajectory blew up");
  const FlowJacobian fj = flow_jacobian(*res.flow, z0);
  SensitivityReport rep;
  rep.full_jacobian = fj.jacobian;
  rep.y = fj.y.tail(dz - n_params);
  rep.dx_da = fj.jacobian.bottomLeftCorner(dz - n_params, n_params);
  return rep;
}

DerivativeGrowthCheck derivative_growth_check(const FlowComposition& flow,
                                              const RoughDriver& driver,
                                              const Vec& x0, double beta) {
  if (beta <= 0.0)
    throw std::invalid_argument("derivative growth: beta must be positive");
  const FlowJacobian fj = flow_jacobian(flow, x0);
  const ControlTable table = ControlTable::from_driver(driver);
  const AccumulationReport acc = accumulation(table, beta);

  const auto grid_index = [&](double t) {
    const auto& ts = table.times();
    int best = 0;
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (std::abs(ts[i] - t) < std::abs(ts[best] - t))
        best = static_cast<int>(i);
    return best;
  };

  DerivativeGrowthCheck chk;
  chk.beta = beta;
  const int i0 = grid_index(flow.partition().front());
  std::vector<double> xs, ys;
  for (const JacobianRecord& rec : fj.records) {
    const double t = rec.b;
    const double w = table.w(i0, grid_index(t));
    int n = 0;
    for (std::size_t i = 1; i < acc.taus.size(); ++i)
      if (acc.taus[i] < t - 1e-12) ++n;
    chk.ts.push_back(t);
    chk.ws.push_back(w);
    chk.ns.push_back(n);
    chk.devs.push_back(rec.deviation);
    if (rec.deviation > 1e-15 && w > 0.0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(rec.deviation) - std::log(w) / driver.p());
    }
  }
  if (xs.size() >= 2) {
    const LinFit fit = lin_fit(xs, ys);
    chk.c1 = fit.slope;
    chk.intercept = fit.intercept;
    chk.r2 = fit.r2;
  }
  return chk;
}

}  // namespace roughflow
