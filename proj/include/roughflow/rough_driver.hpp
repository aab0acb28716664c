#pragma once

#include "roughflow/tensor_series.hpp"
#include "roughflow/types.hpp"

#include <vector>

namespace roughflow {

/// A p-rough path presented on a time grid: one group-like series per
/// adjacent cell, truncation depth floor(p). Queries between grid points
/// interpolate linearly in log coordinates within a cell (scale the cell's
/// log-signature by the time fraction and re-exponentiate), which is exact
/// for piecewise-linear lifts and for pure-area segments.
class RoughDriver {
 public:
  RoughDriver(double p, std::vector<double> times,
              std::vector<TruncatedTensorSeries> segments);

  double p() const { return p_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  const std::vector<double>& times() const { return times_; }
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  const TruncatedTensorSeries& segment(int i) const { return segments_[i]; }
  int cells() const { return static_cast<int>(segments_.size()); }

  /// Signature over [s,t] with t0 <= s <= t <= t1; s == t gives the unit.
  TruncatedTensorSeries signature(double s, double t) const;

  /// Signature over the grid interval [times[i], times[j]].
  TruncatedTensorSeries grid_signature(int i, int j) const;

 private:
  TruncatedTensorSeries cell_part(int cell, double a, double b) const;

  double p_;
  int width_, depth_;
  std::vector<double> times_;
  std::vector<TruncatedTensorSeries> segments_;
  std::vector<TruncatedTensorSeries> cell_logs_;  // log of each cell signature
};

/// Canonical (signature) lift of the piecewise-linear path through `points`
/// at the given times, truncated at depth floor(p).
RoughDriver signature_lift(const std::vector<Vec>& points,
                           const std::vector<double>& times, double p);

/// Driver with unit level-1 part and pure level-2 area: signature over [s,t]
/// is 1 + (t-s) C. Requires floor(p) in {2,3} (Chen consistency would fail
/// beyond level 3). C is the area rate per unit time, an width x width matrix.
RoughDriver pure_area_driver(double T, int cells, const Mat& C, double p = 2.5);

/// The same rough path restricted to [a,b]: interior grid times are kept and
/// the boundary cells are recut with interpolated signatures.
RoughDriver restrict_driver(const RoughDriver& d, double a, double b);

/// Holder p-rough-path norm over the driver's grid:
/// max over grid pairs s<t and levels 1<=m<=depth of (|X^m_{ts}|^{1/m} / |t-s|^{1/p}).
double holder_norm(const RoughDriver& d);

/// Table of p-variation controls w(t_i, t_j) = sup over grid partitions of
/// sum of max_m |X^m|^{p/m}, computed by dynamic programming (superadditive
/// by construction). O(M^3) in the grid size.
class ControlTable {
 public:
  static ControlTable from_driver(const RoughDriver& d);

  /// Synthetic table w(t_i,t_j) = weight(t_i,t_j) maximized over partitions;
  /// used for tests and for external controls (weight must be >= 0).
  template <typename WeightFn>
  static ControlTable from_weights(const std::vector<double>& times, WeightFn weight) {
    ControlTable c;
    c.times_ = times;
    const int M = static_cast<int>(times.size());
    c.w_ = Mat::Zero(M, M);
    for (int span = 1; span < M; ++span)
      for (int i = 0; i + span < M; ++i) {
        const int j = i + span;
        double best = weight(times[i], times[j]);
        for (int k = i + 1; k < j; ++k)
          best = std::max(best, c.w_(i, k) + weight(times[k], times[j]));
        c.w_(i, j) = best;
      }
    return c;
  }

  const std::vector<double>& times() const { return times_; }
  double w(int i, int j) const { return w_(i, j); }
  int size() const { return static_cast<int>(times_.size()); }

 private:
  std::vector<double> times_;
  Mat w_;
};

struct AccumulationReport {
  double beta = 0.0;
  std::vector<double> taus;  // tau_0 = t_0, strictly increasing, last = t1
  int n_beta = 0;            // largest index i with tau_i < t1
};

/// Greedy stopping times on the control's grid: tau_{i+1} = first grid time
/// >= tau_i with w(tau_i, .) >= beta, capped at the horizon.
AccumulationReport accumulation(const ControlTable& c, double beta);

}  // namespace roughflow
