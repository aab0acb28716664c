#include "roughflow/rough_driver.hpp"

#include <algorithm>
#include <cmath>

namespace roughflow {

RoughDriver::RoughDriver(double p, std::vector<double> times,
                         std::vector<TruncatedTensorSeries> segments)
    : p_(p), times_(std::move(times)), segments_(std::move(segments)) {
  if (p_ <= 1.0) throw std::invalid_argument("RoughDriver: p must exceed 1");
  if (times_.size() < 2 || segments_.size() != times_.size() - 1)
    throw std::invalid_argument("RoughDriver: need M+1 times and M segments");
  for (std::size_t i = 0; i + 1 < times_.size(); ++i)
    if (!(times_[i] < times_[i + 1]))
      throw std::invalid_argument("RoughDriver: times must be strictly increasing");
  depth_ = static_cast<int>(std::floor(p_));
  width_ = segments_.front().width();
  cell_logs_.reserve(segments_.size());
  for (const auto& s : segments_) {
    if (s.width() != width_ || s.depth() != depth_)
      throw std::invalid_argument("RoughDriver: segment shape must be (width, floor(p))");
    if (s.scalar() != 1.0)
      throw std::invalid_argument("RoughDriver: segments must be group-like (level-0 = 1)");
    cell_logs_.push_back(tensor_log(s));
  }
}

TruncatedTensorSeries RoughDriver::cell_part(int cell, double a, double b) const {
  const double w = times_[cell + 1] - times_[cell];
  const double frac = (b - a) / w;
  if (frac >= 1.0 - 1e-15 && a <= times_[cell] + 1e-15 * std::max(1.0, std::abs(times_[cell])))
    return segments_[cell];
  return tensor_exp(frac * cell_logs_[cell]);
}

TruncatedTensorSeries RoughDriver::signature(double s, double t) const {
  const double eps = 1e-12 * std::max(1.0, std::abs(t1()));
  if (s < t0() - eps || t > t1() + eps || s > t + eps)
    throw std::invalid_argument("RoughDriver::signature: need t0 <= s <= t <= t1");
  s = std::clamp(s, t0(), t1());
  t = std::clamp(t, t0(), t1());
  if (t - s <= 0.0) return TruncatedTensorSeries::unit(width_, depth_);

  // locate the cell holding each endpoint (cell i covers [times[i], times[i+1]))
  const auto locate = [&](double u) {
    const auto it = std::upper_bound(times_.begin(), times_.end(), u);
    int i = static_cast<int>(it - times_.begin()) - 1;
    return std::clamp(i, 0, cells() - 1);
  };
  const int ci = locate(s), cj = locate(t);
  if (ci == cj) return cell_part(ci, s, t);

  TruncatedTensorSeries acc = cell_part(ci, s, times_[ci + 1]);
  for (int c = ci + 1; c < cj; ++c) acc = tensor_mul(acc, segments_[c]);
  if (t > times_[cj]) acc = tensor_mul(acc, cell_part(cj, times_[cj], t));
  return acc;
}

TruncatedTensorSeries RoughDriver::grid_signature(int i, int j) const {
  if (i < 0 || j > cells() || i > j)
    throw std::invalid_argument("grid_signature: bad indices");
  TruncatedTensorSeries acc = TruncatedTensorSeries::unit(width_, depth_);
  for (int c = i; c < j; ++c) acc = tensor_mul(acc, segments_[c]);
  return acc;
}

RoughDriver signature_lift(const std::vector<Vec>& points,
                           const std::vector<double>& times, double p) {
  if (points.size() != times.size() || points.size() < 2)
    throw std::invalid_argument("signature_lift: need matching points and times, two or more");
  const int width = static_cast<int>(points.front().size());
  const int depth = static_cast<int>(std::floor(p));
  std::vector<TruncatedTensorSeries> segs;
  segs.reserve(points.size() - 1);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    TruncatedTensorSeries l(width, depth);
    l.level(1) = points[i + 1] - points[i];
    segs.push_back(tensor_exp(l));
  }
  return RoughDriver(p, times, std::move(segs));
}

RoughDriver pure_area_driver(double T, int cells, const Mat& C, double p) {
  const int depth = static_cast<int>(std::floor(p));
  if (depth < 2 || depth > 3)
    throw std::invalid_argument("pure_area_driver: floor(p) must be 2 or 3");
  if (C.rows() != C.cols() || C.rows() < 1)
    throw std::invalid_argument("pure_area_driver: C must be square");
  const int width = static_cast<int>(C.rows());
  std::vector<double> times(cells + 1);
  for (int i = 0; i <= cells; ++i) times[i] = T * i / cells;
  std::vector<TruncatedTensorSeries> segs;
  segs.reserve(cells);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (int i = 0; i < cells; ++i) {
    TruncatedTensorSeries s = TruncatedTensorSeries::unit(width, depth);
    Eigen::Map<RowMat>(s.level(2).data(), width, width) = (times[i + 1] - times[i]) * C;
    segs.push_back(s);
  }
  return RoughDriver(p, times, std::move(segs));
}

RoughDriver restrict_driver(const RoughDriver& d, double a, double b) {
  if (!(d.t0() <= a && a < b && b <= d.t1()))
    throw std::invalid_argument("restrict_driver: need t0 <= a < b <= t1");
  const double margin = 1e-12 * (d.t1() - d.t0());
  std::vector<double> times = {a};
  for (const double t : d.times())
    if (t > a + margin && t < b - margin) times.push_back(t);
  times.push_back(b);
  std::vector<TruncatedTensorSeries> segs;
  segs.reserve(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    segs.push_back(d.signature(times[i], times[i + 1]));
  return RoughDriver(d.p(), std::move(times), std::move(segs));
}

double holder_norm(const RoughDriver& d) {
  const auto& ts = d.times();
  const int M = d.cells();
  double norm = 0.0;
  for (int i = 0; i < M; ++i) {
    TruncatedTensorSeries acc = TruncatedTensorSeries::unit(d.width(), d.depth());
    for (int j = i + 1; j <= M; ++j) {
      acc = tensor_mul(acc, d.segment(j - 1));
      const double dt = ts[j] - ts[i];
      for (int m = 1; m <= d.depth(); ++m) {
        const double r = std::pow(acc.level_norm(m), 1.0 / m) / std::pow(dt, 1.0 / d.p());
        norm = std::max(norm, r);
      }
    }
  }
  return norm;
}

ControlTable ControlTable::from_driver(const RoughDriver& d) {
  ControlTable c;
  c.times_ = d.times();
  const int M = static_cast<int>(c.times_.size());
  // per-pair weight max_m |X^m_{ij}|^{p/m}
  Mat weight = Mat::Zero(M, M);
  for (int i = 0; i + 1 < M; ++i) {
    TruncatedTensorSeries acc = TruncatedTensorSeries::unit(d.width(), d.depth());
    for (int j = i + 1; j < M; ++j) {
      acc = tensor_mul(acc, d.segment(j - 1));
      double wij = 0.0;
      for (int m = 1; m <= d.depth(); ++m)
        wij = std::max(wij, std::pow(acc.level_norm(m), d.p() / m));
      weight(i, j) = wij;
    }
  }
  c.w_ = Mat::Zero(M, M);
  for (int span = 1; span < M; ++span)
    for (int i = 0; i + span < M; ++i) {
      const int j = i + span;
      double best = weight(i, j);
      for (int k = i + 1; k < j; ++k)
        best = std::max(best, c.w_(i, k) + weight(k, j));
      c.w_(i, j) = best;
    }
  return c;
}

AccumulationReport accumulation(const ControlTable& c, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("accumulation: beta must be positive");
  AccumulationReport rep;
  rep.beta = beta;
  const int M = c.size();
  int cur = 0;
  rep.taus.push_back(c.times()[0]);
  while (cur < M - 1) {
    int nxt = -1;
    for (int j = cur + 1; j < M; ++j)
      if (c.w(cur, j) >= beta) {
        nxt = j;
        break;
      }
    if (nxt < 0) {
      rep.taus.push_back(c.times()[M - 1]);  // capped at the horizon
      break;
    }
    rep.taus.push_back(c.times()[nxt]);
    cur = nxt;
  }
  // N = sup{ i : tau_i < horizon }; tau_0 counts as index 0
  rep.n_beta = 0;
  for (std::size_t i = 0; i < rep.taus.size(); ++i)
    if (rep.taus[i] < c.times()[M - 1]) rep.n_beta = static_cast<int>(i);
  return rep;
}

}  // namespace roughflow
