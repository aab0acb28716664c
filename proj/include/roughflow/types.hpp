#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace roughflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a step integration leaves the guard ball (or goes non-finite).
/// Carries the trailing |y| trace so callers can extrapolate a blow-up time.
struct BlowupError : std::runtime_error {
  Vec last_state;      // last state with |y| <= guard and all entries finite
  double r_last;       // unit-time coordinate of last_state within the step
  // (r, |y|) after each accepted substep, last_state's entry included
  std::vector<std::pair<double, double>> trace;

  BlowupError(Vec y, double r, std::vector<std::pair<double, double>> tr)
      : std::runtime_error("step integration left the guard ball"),
        last_state(std::move(y)), r_last(r), trace(std::move(tr)) {}
};

/// x^n for small non-negative integer n by repeated multiplication.
inline double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

/// Ordinary least squares y = intercept + slope*x. r2 = 1 for degenerate data.
inline LinFit lin_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("lin_fit: need two or more paired points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinFit f;
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

/// Deterministic low-discrepancy sampler: Kronecker (R_d) sequence in the unit
/// cube, pushed to sphere directions via Box-Muller. The seed enters as a
/// Cranley-Patterson rotation, so distinct seeds give distinct fixed samples.
class QuasiSampler {
 public:
  QuasiSampler(int dim, unsigned seed) : dim_(dim), seed_(seed) {
    const int m = dim_ == 1 ? 2 : (dim_ % 2 == 0 ? dim_ : dim_ + 1);
    cube_.assign(m, 0.0);
    // generalized golden ratio: unique real root > 1 of x^{m+1} = x + 1
    double phi = 1.5;
    for (int it = 0; it < 64; ++it)
      phi = std::pow(1.0 + phi, 1.0 / (m + 1));
    alpha_.resize(m);
    double a = 1.0;
    for (int i = 0; i < m; ++i) {
      a /= phi;
      alpha_[i] = a;
    }
    rot_.resize(m);
    unsigned h = seed_ * 2654435761u + 1013904223u;
    for (int i = 0; i < m; ++i) {
      h ^= h << 13; h ^= h >> 17; h ^= h << 5;
      rot_[i] = static_cast<double>(h % 1000003u) / 1000003.0;
    }
  }

  /// n-th unit direction on the sphere S^{dim-1}.
  Vec direction(int n) const {
    if (dim_ == 1) {
      Vec v(1);
      v(0) = (n % 2 == 0) ? 1.0 : -1.0;
      return v;
    }
    const int m = static_cast<int>(alpha_.size());
    Vec g(m);
    for (int i = 0; i < m; ++i) {
      double u = rot_[i] + (n + 1) * alpha_[i];
      u -= std::floor(u);
      cube_[i] = u;
    }
    for (int i = 0; i + 1 < m; i += 2) {
      constexpr double two_pi = 6.283185307179586476925287;
      const double u1 = std::max(cube_[i], 1e-12), u2 = cube_[i + 1];
      const double r = std::sqrt(-2.0 * std::log(u1));
      g(i) = r * std::cos(two_pi * u2);
      g(i + 1) = r * std::sin(two_pi * u2);
    }
    Vec v = g.head(dim_);
    const double nv = v.norm();
    return nv > 1e-12 ? Vec(v / nv) : direction(n + 7919);
  }

  /// Fixed sample of the closed ball B(0,R): radial shells x directions.
  /// count points total; shells = ceil(count/32) capped at 8, outermost at R.
  std::vector<Vec> ball(double R, int count) const {
    std::vector<Vec> pts;
    pts.reserve(count);
    const int shells = std::min(8, std::max(1, (count + 31) / 32));
    for (int i = 0; i < count; ++i) {
      const int s = i % shells;
      const double r = R * static_cast<double>(s + 1) / shells;
      pts.push_back(r * direction(i));
    }
    return pts;
  }

 private:
  int dim_;
  unsigned seed_;
  std::vector<double> alpha_, rot_;
  mutable std::vector<double> cube_;
};

}  // namespace roughflow
