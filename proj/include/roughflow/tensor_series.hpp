#pragma once

#include "roughflow/types.hpp"

#include <cstddef>
#include <vector>

namespace roughflow {

/// Number of words of length k over an alphabet of `width` letters.
inline std::size_t level_size(int width, int k) {
  std::size_t n = 1;
  for (int i = 0; i < k; ++i) n *= static_cast<std::size_t>(width);
  return n;
}

/// Flat index of a word (letters 0..width-1, first letter most significant)
/// inside the dense level block of its length.
inline std::size_t word_index(int width, const std::vector<int>& word) {
  std::size_t idx = 0;
  for (int letter : word) idx = idx * static_cast<std::size_t>(width) + static_cast<std::size_t>(letter);
  return idx;
}

/// Element of the depth-truncated free tensor algebra over R^width.
/// Level k is a dense flat block of width^k coefficients in lexicographic
/// word order; level 0 is the scalar part.
class TruncatedTensorSeries {
 public:
  TruncatedTensorSeries() = default;

  TruncatedTensorSeries(int width, int depth) : width_(width), depth_(depth) {
    if (width < 1 || depth < 1)
      throw std::invalid_argument("TruncatedTensorSeries: width and depth must be >= 1");
    levels_.reserve(depth + 1);
    for (int k = 0; k <= depth; ++k)
      levels_.push_back(Vec::Zero(static_cast<Eigen::Index>(level_size(width, k))));
  }

  static TruncatedTensorSeries unit(int width, int depth) {
    TruncatedTensorSeries s(width, depth);
    s.scalar() = 1.0;
    return s;
  }

  int width() const { return width_; }
  int depth() const { return depth_; }

  double scalar() const { return levels_[0](0); }
  double& scalar() { return levels_[0](0); }

  const Vec& level(int k) const { return levels_[k]; }
  Vec& level(int k) { return levels_[k]; }

  double coeff(const std::vector<int>& word) const {
    return levels_[word.size()](static_cast<Eigen::Index>(word_index(width_, word)));
  }

  TruncatedTensorSeries& operator+=(const TruncatedTensorSeries& o) {
    check_shape(o);
    for (int k = 0; k <= depth_; ++k) levels_[k] += o.levels_[k];
    return *this;
  }
  TruncatedTensorSeries& operator-=(const TruncatedTensorSeries& o) {
    check_shape(o);
    for (int k = 0; k <= depth_; ++k) levels_[k] -= o.levels_[k];
    return *this;
  }
  TruncatedTensorSeries& operator*=(double c) {
    for (auto& l : levels_) l *= c;
    return *this;
  }

  friend TruncatedTensorSeries operator+(TruncatedTensorSeries a, const TruncatedTensorSeries& b) { return a += b; }
  friend TruncatedTensorSeries operator-(TruncatedTensorSeries a, const TruncatedTensorSeries& b) { return a -= b; }
  friend TruncatedTensorSeries operator*(double c, TruncatedTensorSeries a) { return a *= c; }
  friend TruncatedTensorSeries operator*(TruncatedTensorSeries a, double c) { return a *= c; }

  /// Largest absolute coefficient across all levels.
  double max_abs() const {
    double m = 0.0;
    for (const auto& l : levels_)
      if (l.size() > 0) m = std::max(m, l.cwiseAbs().maxCoeff());
    return m;
  }

  /// Euclidean norm of the level-k block.
  double level_norm(int k) const { return levels_[k].norm(); }

  void check_shape(const TruncatedTensorSeries& o) const {
    if (o.width_ != width_ || o.depth_ != depth_)
      throw std::invalid_argument("tensor series shape mismatch");
  }

 private:
  int width_ = 0;
  int depth_ = 0;
  std::vector<Vec> levels_;
};

/// Chen (concatenation) product truncated at the common depth:
/// level k of a*b = sum over i+j=k of a_i (x) b_j.
TruncatedTensorSeries tensor_mul(const TruncatedTensorSeries& a, const TruncatedTensorSeries& b);

/// exp of a series with zero scalar part (rejects anything else).
TruncatedTensorSeries tensor_exp(const TruncatedTensorSeries& l);

/// log of a series with unit scalar part (rejects anything else).
TruncatedTensorSeries tensor_log(const TruncatedTensorSeries& g);

struct ShuffleCheck {
  double max_violation = 0.0;
  bool pass = true;
};

/// Checks every shuffle identity X^I X^J = sum over shuffles K of X^K with
/// |I|,|J| >= 1 and |I|+|J| <= depth. Weak geometricity test for group-like
/// elements.
ShuffleCheck check_weak_geometric(const TruncatedTensorSeries& g, double tol);

/// All interleavings of u and v (with multiplicity).
std::vector<std::vector<int>> shuffle_words(const std::vector<int>& u, const std::vector<int>& v);

/// Enumerates all words of length k over letters 0..width-1 in lexicographic order.
std::vector<std::vector<int>> words_of_length(int width, int k);

}  // namespace roughflow
