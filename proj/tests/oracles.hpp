#pragma once

// Reference computations for tests. Everything here is deliberately
// independent of the library's own algebra/stepping code paths: signatures by
// direct iterated-integral quadrature, derivatives by finite differences,
// controls by brute-force partition scans, ODE solves on the raw driving path.

#include "roughflow/poly_field.hpp"
#include "roughflow/tensor_series.hpp"
#include "roughflow/types.hpp"

#include <random>
#include <vector>

namespace oracle {

using roughflow::Mat;
using roughflow::TruncatedTensorSeries;
using roughflow::Vec;

// Signature of the piecewise-linear path through `pts` by trapezoid-rule
// iterated integrals on a refined grid (levels computed bottom-up). Exact to
// O(refine^-2); with refine*segments ~ 1e4 that is ~1e-10 at unit scale.
inline TruncatedTensorSeries signature_quadrature(const std::vector<Vec>& pts, int depth,
                                                  int refine_per_segment) {
  const int width = static_cast<int>(pts.front().size());
  TruncatedTensorSeries s = TruncatedTensorSeries::unit(width, depth);
  std::vector<Vec> prev(depth + 1), next(depth + 1);
  for (int k = 0; k <= depth; ++k)
    prev[k] = Vec::Zero(static_cast<Eigen::Index>(roughflow::level_size(width, k)));
  prev[0](0) = 1.0;
  for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
    const Vec dx = (pts[seg + 1] - pts[seg]) / refine_per_segment;
    for (int m = 0; m < refine_per_segment; ++m) {
      next[0] = prev[0];
      for (int k = 1; k <= depth; ++k) {
        const auto rows = prev[k - 1].size();
        next[k] = prev[k];
        // trapezoid: uses the already-updated level k-1 endpoint
        for (Eigen::Index u = 0; u < rows; ++u) {
          const double avg = 0.5 * (prev[k - 1](u) + next[k - 1](u));
          for (int c = 0; c < width; ++c)
            next[k](u * width + c) += avg * dx(c);
        }
      }
      std::swap(prev, next);
    }
  }
  for (int k = 0; k <= depth; ++k) s.level(k) = prev[k];
  return s;
}

// Central-difference Jacobian of an arbitrary map R^d -> R^m.
template <typename F>
Mat fd_jacobian(const F& f, const Vec& x, double h = 1e-5) {
  const Vec fx = f(x);
  Mat J(fx.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

// Classical RK4 solve of dy = v0(t,y) dt + sum_i V_i(y) dx^i along the
// piecewise-linear path through (times, pts), substeps per segment.
inline Vec ode_on_path(const std::vector<roughflow::PolyVectorField>& fields,
                       const roughflow::PolyVectorField& v0,
                       const std::vector<double>& times, const std::vector<Vec>& pts,
                       Vec y, int substeps) {
  for (std::size_t seg = 0; seg + 1 < times.size(); ++seg) {
    const double dt = (times[seg + 1] - times[seg]) / substeps;
    const Vec xdot = (pts[seg + 1] - pts[seg]) / (times[seg + 1] - times[seg]);
    for (int m = 0; m < substeps; ++m) {
      const double t0 = times[seg] + m * dt;
      auto rhs = [&](double t, const Vec& y_) {
        Vec r = v0.eval(y_, t);
        for (std::size_t i = 0; i < fields.size(); ++i)
          r += fields[i].eval(y_, t) * xdot(static_cast<Eigen::Index>(i));
        return r;
      };
      const Vec k1 = rhs(t0, y);
      const Vec k2 = rhs(t0 + dt / 2, y + (dt / 2) * k1);
      const Vec k3 = rhs(t0 + dt / 2, y + (dt / 2) * k2);
      const Vec k4 = rhs(t0 + dt, y + dt * k3);
      y += (dt * (k1 + 2 * k2 + 2 * k3 + k4)) / 6.0;
    }
  }
  return y;
}

inline std::mt19937& rng() {
  static std::mt19937 gen(0xA5A5u);
  return gen;
}

inline double runif(double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline Vec rvec(int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * runif();
  return v;
}

inline TruncatedTensorSeries random_series(int width, int depth, double scale = 1.0,
                                           double scalar_part = 0.0) {
  TruncatedTensorSeries s(width, depth);
  s.scalar() = scalar_part;
  for (int k = 1; k <= depth; ++k)
    s.level(k) = rvec(static_cast<int>(roughflow::level_size(width, k)), scale);
  return s;
}

}  // namespace oracle
