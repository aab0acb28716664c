#include "roughflow/tensor_series.hpp"

namespace roughflow {

TruncatedTensorSeries tensor_mul(const TruncatedTensorSeries& a, const TruncatedTensorSeries& b) {
  a.check_shape(b);
  const int width = a.width(), depth = a.depth();
  TruncatedTensorSeries out(width, depth);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (int k = 0; k <= depth; ++k) {
    Vec& lk = out.level(k);
    for (int i = 0; i <= k; ++i) {
      const int j = k - i;
      const auto li = static_cast<Eigen::Index>(level_size(width, i));
      const auto lj = static_cast<Eigen::Index>(level_size(width, j));
      // concatenated word index = idx(u)*width^j + idx(v): row-major outer product
      Eigen::Map<RowMat>(lk.data(), li, lj).noalias() +=
          a.level(i) * b.level(j).transpose();
    }
  }
  return out;
}

TruncatedTensorSeries tensor_exp(const TruncatedTensorSeries& l) {
  if (l.scalar() != 0.0)
    throw std::invalid_argument("tensor_exp: nonzero level-0 part");
  TruncatedTensorSeries acc = TruncatedTensorSeries::unit(l.width(), l.depth());
  TruncatedTensorSeries term = acc;
  for (int k = 1; k <= l.depth(); ++k) {
    term = tensor_mul(term, l);
    term *= 1.0 / k;
    acc += term;
  }
  return acc;
}

TruncatedTensorSeries tensor_log(const TruncatedTensorSeries& g) {
  if (g.scalar() != 1.0)
    throw std::invalid_argument("tensor_log: level-0 part must equal 1");
  TruncatedTensorSeries a = g;
  a.scalar() = 0.0;
  TruncatedTensorSeries acc = a;
  TruncatedTensorSeries pw = a;
  for (int k = 2; k <= g.depth(); ++k) {
    pw = tensor_mul(pw, a);
    const double c = (k % 2 == 0 ? -1.0 : 1.0) / k;
    acc += c * pw;
  }
  return acc;
}

std::vector<std::vector<int>> shuffle_words(const std::vector<int>& u, const std::vector<int>& v) {
  if (u.empty()) return {v};
  if (v.empty()) return {u};
  std::vector<std::vector<int>> out;
  std::vector<int> u1(u.begin() + 1, u.end());
  for (auto& w : shuffle_words(u1, v)) {
    w.insert(w.begin(), u[0]);
    out.push_back(std::move(w));
  }
  std::vector<int> v1(v.begin() + 1, v.end());
  for (auto& w : shuffle_words(u, v1)) {
    w.insert(w.begin(), v[0]);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::vector<int>> words_of_length(int width, int k) {
  std::vector<std::vector<int>> out;
  out.reserve(level_size(width, k));
  std::vector<int> w(k, 0);
  while (true) {
    out.push_back(w);
    int pos = k - 1;
    while (pos >= 0 && w[pos] == width - 1) w[pos--] = 0;
    if (pos < 0) break;
    ++w[pos];
  }
  return out;
}

ShuffleCheck check_weak_geometric(const TruncatedTensorSeries& g, double tol) {
  ShuffleCheck res;
  const int width = g.width(), depth = g.depth();
  for (int ki = 1; ki < depth; ++ki) {
    for (int kj = ki; ki + kj <= depth; ++kj) {
      const auto wi = words_of_length(width, ki);
      const auto wj = words_of_length(width, kj);
      for (const auto& I : wi) {
        for (const auto& J : wj) {
          double sum = 0.0;
          for (const auto& K : shuffle_words(I, J)) sum += g.coeff(K);
          const double v = std::abs(g.coeff(I) * g.coeff(J) - sum);
          res.max_violation = std::max(res.max_violation, v);
        }
      }
    }
  }
  res.pass = res.max_violation <= tol;
  return res;
}

}  // namespace roughflow
