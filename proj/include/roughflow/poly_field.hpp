#pragma once

#include "roughflow/types.hpp"

#include <string>
#include <vector>

namespace roughflow {

/// One multiplicative term on R^dim x time:
///   coeff * t^t_exp * prod_j x_j^exps[j] * sin(x_j)^sin_pows[j] * cos(x_j)^cos_pows[j]
/// The class is closed under products and exact partial derivatives, which is
/// all the bracket/operator calculus needs.
struct PolyTerm {
  double coeff = 0.0;
  int t_exp = 0;
  Eigen::ArrayXi exps, sin_pows, cos_pows;

  explicit PolyTerm(int dim, double c = 0.0)
      : coeff(c),
        exps(Eigen::ArrayXi::Zero(dim)),
        sin_pows(Eigen::ArrayXi::Zero(dim)),
        cos_pows(Eigen::ArrayXi::Zero(dim)) {}
};

/// Scalar-valued polynomial/trig expression: a canonicalized sum of PolyTerms.
class PolyScalar {
 public:
  explicit PolyScalar(int dim = 0) : dim_(dim) {}

  static PolyScalar constant(int dim, double c);
  static PolyScalar coordinate(int dim, int j);

  int dim() const { return dim_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }
  void add_term(PolyTerm t);

  double eval(const Vec& x, double t = 0.0) const;
  PolyScalar partial(int j) const;         // exact d/dx_j
  PolyScalar freeze_time(double s) const;  // substitute t := s
  bool time_dependent() const;

  /// Sorts terms by (t_exp, exps, sin, cos) key, merges equal keys, drops
  /// coefficients below drop_tol in magnitude.
  void canonicalize(double drop_tol = 1e-14);

  PolyScalar& operator+=(const PolyScalar& o);
  PolyScalar& operator*=(double c);
  friend PolyScalar operator+(PolyScalar a, const PolyScalar& b) { return a += b; }
  friend PolyScalar operator-(PolyScalar a, const PolyScalar& b);
  friend PolyScalar operator*(const PolyScalar& a, const PolyScalar& b);
  friend PolyScalar operator*(double c, PolyScalar a) { return a *= c; }

 private:
  int dim_ = 0;
  std::vector<PolyTerm> terms_;
};

/// Polynomial/trig map R^dim (x time) -> R^outdim; one PolyScalar per output
/// coordinate. Vector fields are the square case outdim == dim.
class PolyVectorField {
 public:
  PolyVectorField() = default;
  PolyVectorField(int dim, int outdim)
      : dim_(dim), coords_(outdim, PolyScalar(dim)) {}

  static PolyVectorField identity(int dim);
  static PolyVectorField zero(int dim, int outdim);
  /// x -> A x + b (b optional).
  static PolyVectorField linear(const Mat& A, const Vec& b = Vec());

  int dim() const { return dim_; }
  int outdim() const { return static_cast<int>(coords_.size()); }
  PolyScalar& coord(int c) { return coords_[c]; }
  const PolyScalar& coord(int c) const { return coords_[c]; }

  Vec eval(const Vec& x, double t = 0.0) const;
  Mat jacobian_eval(const Vec& x, double t = 0.0) const;
  PolyVectorField freeze_time(double s) const;
  bool time_dependent() const;
  void canonicalize(double drop_tol = 1e-14);

  /// Field of all first partials, flattened row-major: out c*dim+j = d f_c / d x_j.
  PolyVectorField gradient_field() const;

  PolyVectorField& operator+=(const PolyVectorField& o);
  PolyVectorField& operator*=(double c);
  friend PolyVectorField operator+(PolyVectorField a, const PolyVectorField& b) { return a += b; }
  friend PolyVectorField operator*(double c, PolyVectorField a) { return a *= c; }

 private:
  int dim_ = 0;
  std::vector<PolyScalar> coords_;
};

/// Lie bracket [v,w] = Dw.v - Dv.w of square fields (exact, symbolic).
PolyVectorField lie_bracket(const PolyVectorField& v, const PolyVectorField& w);

/// Right-nested iterated bracket V_[I] = [V_{i1},[...,[V_{i_{k-1}},V_{ik}]]].
/// Letters are 0-based indices into fields. |I| = 1 returns the field itself.
PolyVectorField iterated_bracket(const std::vector<PolyVectorField>& fields,
                                 const std::vector<int>& word);

/// First-order-operator action V_I f = V_{i1} ( ... (V_{ik} f) ), where each
/// V g := (Dg)(V) acts coordinate-wise; rightmost letter acts first.
PolyVectorField apply_operator(const std::vector<PolyVectorField>& fields,
                               const std::vector<int>& word, const PolyVectorField& f);

struct SampleSpec {
  int directions = 64;
  unsigned seed = 42;
};

struct GrowthReport {
  std::vector<double> radii;
  // ratios(a, r) = max over sampled |x| = radii[r] of |f(x)| / (1+radii[r])^alpha_grid[a]
  std::vector<double> alpha_grid;
  Mat ratios;
  double alpha_fit = -1.0;  // least grid alpha that fits; -1 = none fits
  double constant = 0.0;    // max ratio at alpha_fit beyond the smallest radius
  bool fits = false;
};

/// Samples |f| on spheres and fits the least alpha in {0,0.1,...,1} whose
/// ratio profile is non-increasing beyond the smallest radius (up to slack
/// (R'/R)^0.05 per step, i.e. log-log slope <= 0.05).
GrowthReport growth_report(const PolyVectorField& f, const std::vector<double>& radii,
                           const SampleSpec& spec = {});

struct AuditEntry {
  std::string name;
  double alpha_fit = -1.0;
  double constant = 0.0;
  bool d1_bounded = false;
  bool d2_bounded = false;
  bool hard_fail = false;
};

struct AuditReport {
  double alpha_required = 1.0;
  double worst_alpha = 0.0;   // max fitted alpha across entries (-1 if any entry fits nothing)
  bool hard_fail = false;     // some entry has no alpha fit or unbounded D/D^2
  bool pass = false;          // !hard_fail and worst_alpha <= alpha_required
  std::vector<AuditEntry> entries;
  double time_holder_constant = 0.0;  // max sampled Holder-in-time ratio; 0 if autonomous
};

/// Builds every bracket chain V_[I_n] ... V_[I_1] Id with total word length
/// <= floor(p) plus the V0-prefixed variants, runs growth_report on each chain
/// and on its first/second derivatives, and summarizes. Hard failure when a
/// chain exceeds every alpha on the grid or has unbounded derivatives.
AuditReport assumption_audit(const PolyVectorField& v0,
                             const std::vector<PolyVectorField>& fields, double p,
                             double alpha_required,
                             const std::vector<double>& radii = {1.0, 10.0, 100.0, 1000.0},
                             const SampleSpec& spec = {});

}  // namespace roughflow
