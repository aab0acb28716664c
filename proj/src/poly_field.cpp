#include "roughflow/poly_field.hpp"

#include "roughflow/tensor_series.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace roughflow {

namespace {

// canonical ordering key for merging equal monomial/trig structures
bool term_key_less(const PolyTerm& a, const PolyTerm& b) {
  if (a.t_exp != b.t_exp) return a.t_exp < b.t_exp;
  for (Eigen::Index j = 0; j < a.exps.size(); ++j) {
    if (a.exps(j) != b.exps(j)) return a.exps(j) < b.exps(j);
    if (a.sin_pows(j) != b.sin_pows(j)) return a.sin_pows(j) < b.sin_pows(j);
    if (a.cos_pows(j) != b.cos_pows(j)) return a.cos_pows(j) < b.cos_pows(j);
  }
  return false;
}

bool term_key_equal(const PolyTerm& a, const PolyTerm& b) {
  return a.t_exp == b.t_exp && (a.exps == b.exps).all() &&
         (a.sin_pows == b.sin_pows).all() && (a.cos_pows == b.cos_pows).all();
}

}  // namespace

PolyScalar PolyScalar::constant(int dim, double c) {
  PolyScalar s(dim);
  if (c != 0.0) s.terms_.push_back(PolyTerm(dim, c));
  return s;
}

PolyScalar PolyScalar::coordinate(int dim, int j) {
  if (j < 0 || j >= dim) throw std::invalid_argument("PolyScalar::coordinate: bad index");
  PolyScalar s(dim);
  PolyTerm t(dim, 1.0);
  t.exps(j) = 1;
  s.terms_.push_back(std::move(t));
  return s;
}

void PolyScalar::add_term(PolyTerm t) {
  if (t.exps.size() != dim_)
    throw std::invalid_argument("PolyScalar::add_term: dimension mismatch");
  terms_.push_back(std::move(t));
  canonicalize();
}

double PolyScalar::eval(const Vec& x, double t) const {
  double acc = 0.0;
  for (const auto& term : terms_) {
    double v = term.coeff * pow_int(t, term.t_exp);
    for (int j = 0; j < dim_; ++j) {
      if (term.exps(j)) v *= pow_int(x(j), term.exps(j));
      if (term.sin_pows(j)) v *= pow_int(std::sin(x(j)), term.sin_pows(j));
      if (term.cos_pows(j)) v *= pow_int(std::cos(x(j)), term.cos_pows(j));
    }
    acc += v;
  }
  return acc;
}

PolyScalar PolyScalar::partial(int j) const {
  PolyScalar out(dim_);
  for (const auto& term : terms_) {
    if (term.exps(j)) {  // monomial factor
      PolyTerm t = term;
      t.coeff *= term.exps(j);
      t.exps(j) -= 1;
      out.terms_.push_back(std::move(t));
    }
    if (term.sin_pows(j)) {  // sin^s -> s sin^{s-1} cos
      PolyTerm t = term;
      t.coeff *= term.sin_pows(j);
      t.sin_pows(j) -= 1;
      t.cos_pows(j) += 1;
      out.terms_.push_back(std::move(t));
    }
    if (term.cos_pows(j)) {  // cos^c -> -c cos^{c-1} sin
      PolyTerm t = term;
      t.coeff *= -term.cos_pows(j);
      t.cos_pows(j) -= 1;
      t.sin_pows(j) += 1;
      out.terms_.push_back(std::move(t));
    }
  }
  out.canonicalize();
  return out;
}

PolyScalar PolyScalar::freeze_time(double s) const {
  PolyScalar out(dim_);
  for (const auto& term : terms_) {
    PolyTerm t = term;
    t.coeff *= pow_int(s, t.t_exp);
    t.t_exp = 0;
    out.terms_.push_back(std::move(t));
  }
  out.canonicalize();
  return out;
}

bool PolyScalar::time_dependent() const {
  for (const auto& t : terms_)
    if (t.t_exp != 0) return true;
  return false;
}

void PolyScalar::canonicalize(double drop_tol) {
  std::sort(terms_.begin(), terms_.end(), term_key_less);
  std::vector<PolyTerm> merged;
  for (auto& t : terms_) {
    if (!merged.empty() && term_key_equal(merged.back(), t))
      merged.back().coeff += t.coeff;
    else
      merged.push_back(std::move(t));
  }
  terms_.clear();
  for (auto& t : merged)
    if (std::abs(t.coeff) > drop_tol) terms_.push_back(std::move(t));
}

PolyScalar& PolyScalar::operator+=(const PolyScalar& o) {
  if (o.dim_ != dim_) throw std::invalid_argument("PolyScalar: dimension mismatch");
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  canonicalize();
  return *this;
}

PolyScalar& PolyScalar::operator*=(double c) {
  for (auto& t : terms_) t.coeff *= c;
  canonicalize();
  return *this;
}

PolyScalar operator-(PolyScalar a, const PolyScalar& b) {
  PolyScalar nb = b;
  nb *= -1.0;
  return a += nb;
}

PolyScalar operator*(const PolyScalar& a, const PolyScalar& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("PolyScalar: dimension mismatch");
  PolyScalar out(a.dim());
  std::vector<PolyTerm> prod;
  prod.reserve(a.terms().size() * b.terms().size());
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms()) {
      PolyTerm t(a.dim(), ta.coeff * tb.coeff);
      t.t_exp = ta.t_exp + tb.t_exp;
      t.exps = ta.exps + tb.exps;
      t.sin_pows = ta.sin_pows + tb.sin_pows;
      t.cos_pows = ta.cos_pows + tb.cos_pows;
      prod.push_back(std::move(t));
    }
  for (auto& t : prod) out.terms_.push_back(std::move(t));
  out.canonicalize();
  return out;
}

PolyVectorField PolyVectorField::identity(int dim) {
  PolyVectorField f(dim, dim);
  for (int c = 0; c < dim; ++c) f.coords_[c] = PolyScalar::coordinate(dim, c);
  return f;
}

PolyVectorField PolyVectorField::zero(int dim, int outdim) {
  return PolyVectorField(dim, outdim);
}

PolyVectorField PolyVectorField::linear(const Mat& A, const Vec& b) {
  const int dim = static_cast<int>(A.cols());
  PolyVectorField f(dim, static_cast<int>(A.rows()));
  for (int c = 0; c < A.rows(); ++c) {
    PolyScalar s(dim);
    for (int j = 0; j < dim; ++j)
      if (A(c, j) != 0.0) s += A(c, j) * PolyScalar::coordinate(dim, j);
    if (b.size() == A.rows() && b(c) != 0.0) s += PolyScalar::constant(dim, b(c));
    f.coords_[c] = std::move(s);
  }
  return f;
}

Vec PolyVectorField::eval(const Vec& x, double t) const {
  if (x.size() != dim_) throw std::invalid_argument("PolyVectorField::eval: dimension mismatch");
  Vec out(outdim());
  for (int c = 0; c < outdim(); ++c) out(c) = coords_[c].eval(x, t);
  return out;
}

Mat PolyVectorField::jacobian_eval(const Vec& x, double t) const {
  Mat J(outdim(), dim_);
  for (int c = 0; c < outdim(); ++c)
    for (int j = 0; j < dim_; ++j) J(c, j) = coords_[c].partial(j).eval(x, t);
  return J;
}

PolyVectorField PolyVectorField::freeze_time(double s) const {
  PolyVectorField out(dim_, outdim());
  for (int c = 0; c < outdim(); ++c) out.coords_[c] = coords_[c].freeze_time(s);
  return out;
}

bool PolyVectorField::time_dependent() const {
  for (const auto& c : coords_)
    if (c.time_dependent()) return true;
  return false;
}

void PolyVectorField::canonicalize(double drop_tol) {
  for (auto& c : coords_) c.canonicalize(drop_tol);
}

PolyVectorField PolyVectorField::gradient_field() const {
  PolyVectorField out(dim_, outdim() * dim_);
  for (int c = 0; c < outdim(); ++c)
    for (int j = 0; j < dim_; ++j) out.coords_[c * dim_ + j] = coords_[c].partial(j);
  return out;
}

PolyVectorField& PolyVectorField::operator+=(const PolyVectorField& o) {
  if (o.dim_ != dim_ || o.outdim() != outdim())
    throw std::invalid_argument("PolyVectorField: shape mismatch");
  for (int c = 0; c < outdim(); ++c) coords_[c] += o.coords_[c];
  return *this;
}

PolyVectorField& PolyVectorField::operator*=(double c) {
  for (auto& s : coords_) s *= c;
  return *this;
}

namespace {

// directional derivative (Dg)(v): out_c = sum_j (d g_c / d x_j) v_j
PolyVectorField derive_along(const PolyVectorField& g, const PolyVectorField& v) {
  if (g.dim() != v.dim() || v.outdim() != v.dim())
    throw std::invalid_argument("derive_along: v must be a square field on g's space");
  PolyVectorField out(g.dim(), g.outdim());
  for (int c = 0; c < g.outdim(); ++c) {
    PolyScalar acc(g.dim());
    for (int j = 0; j < g.dim(); ++j) acc += g.coord(c).partial(j) * v.coord(j);
    out.coord(c) = std::move(acc);
  }
  return out;
}

}  // namespace

PolyVectorField lie_bracket(const PolyVectorField& v, const PolyVectorField& w) {
  if (v.dim() != v.outdim() || w.dim() != w.outdim() || v.dim() != w.dim())
    throw std::invalid_argument("lie_bracket: needs square fields of equal dimension");
  PolyVectorField out = derive_along(w, v);
  PolyVectorField neg = derive_along(v, w);
  neg *= -1.0;
  out += neg;
  return out;
}

PolyVectorField iterated_bracket(const std::vector<PolyVectorField>& fields,
                                 const std::vector<int>& word) {
  if (word.empty()) throw std::invalid_argument("iterated_bracket: empty word");
  for (int l : word)
    if (l < 0 || l >= static_cast<int>(fields.size()))
      throw std::invalid_argument("iterated_bracket: letter out of range");
  PolyVectorField acc = fields[word.back()];
  for (int m = static_cast<int>(word.size()) - 2; m >= 0; --m)
    acc = lie_bracket(fields[word[m]], acc);
  return acc;
}

PolyVectorField apply_operator(const std::vector<PolyVectorField>& fields,
                               const std::vector<int>& word, const PolyVectorField& f) {
  if (word.empty()) throw std::invalid_argument("apply_operator: empty word");
  for (int l : word)
    if (l < 0 || l >= static_cast<int>(fields.size()))
      throw std::invalid_argument("apply_operator: letter out of range");
  PolyVectorField g = f;
  for (int m = static_cast<int>(word.size()) - 1; m >= 0; --m)
    g = derive_along(g, fields[word[m]]);
  return g;
}

GrowthReport growth_report(const PolyVectorField& f, const std::vector<double>& radii,
                           const SampleSpec& spec) {
  if (radii.size() < 2) throw std::invalid_argument("growth_report: need two or more radii");
  GrowthReport rep;
  rep.radii = radii;
  for (int a = 0; a <= 10; ++a) rep.alpha_grid.push_back(a * 0.1);
  const int nr = static_cast<int>(radii.size());
  rep.ratios = Mat::Zero(11, nr);

  QuasiSampler sampler(f.dim(), spec.seed);
  std::vector<Vec> dirs;
  dirs.reserve(spec.directions);
  for (int i = 0; i < spec.directions; ++i) dirs.push_back(sampler.direction(i));

  std::vector<double> sup(nr, 0.0);
  for (int r = 0; r < nr; ++r)
    for (const auto& u : dirs)
      sup[r] = std::max(sup[r], f.eval(radii[r] * u).norm());

  for (int a = 0; a <= 10; ++a)
    for (int r = 0; r < nr; ++r)
      rep.ratios(a, r) = sup[r] / std::pow(1.0 + radii[r], rep.alpha_grid[a]);

  // least alpha whose ratio profile is non-increasing beyond the smallest
  // radius, allowing log-log slope 0.05 per step
  const int start = nr >= 3 ? 1 : 0;
  for (int a = 0; a <= 10; ++a) {
    bool ok = true;
    for (int r = start; r + 1 < nr && ok; ++r) {
      const double slack = std::pow(radii[r + 1] / radii[r], 0.05);
      if (rep.ratios(a, r + 1) > rep.ratios(a, r) * slack + 1e-12) ok = false;
    }
    if (ok) {
      rep.fits = true;
      rep.alpha_fit = rep.alpha_grid[a];
      rep.constant = rep.ratios.row(a).segment(start, nr - start).maxCoeff();
      break;
    }
  }
  return rep;
}

namespace {

std::string word_name(const std::vector<int>& w) {
  std::string s = "V[";
  for (int l : w) s += static_cast<char>('1' + l);
  return s + "]";
}

void enumerate_chains(int width, int budget, std::vector<std::vector<int>>& cur,
                      std::vector<std::vector<std::vector<int>>>& out) {
  if (!cur.empty()) out.push_back(cur);
  for (int len = 1; len <= budget; ++len)
    for (const auto& w : words_of_length(width, len)) {
      cur.push_back(w);
      enumerate_chains(width, budget - len, cur, out);
      cur.pop_back();
    }
}

}  // namespace

AuditReport assumption_audit(const PolyVectorField& v0,
                             const std::vector<PolyVectorField>& fields, double p,
                             double alpha_required, const std::vector<double>& radii,
                             const SampleSpec& spec) {
  if (fields.empty()) throw std::invalid_argument("assumption_audit: no fields");
  const int depth = static_cast<int>(std::floor(p));
  const int width = static_cast<int>(fields.size());
  const int d = fields.front().dim();
  for (const auto& f : fields)
    if (f.dim() != d || f.outdim() != d)
      throw std::invalid_argument("assumption_audit: fields must be square, equal dims");

  AuditReport rep;
  rep.alpha_required = alpha_required;

  bool timed = v0.time_dependent();
  for (const auto& f : fields) timed = timed || f.time_dependent();
  const std::vector<double> freeze_at = timed ? std::vector<double>{0.0, 0.7}
                                              : std::vector<double>{0.0};

  std::vector<std::vector<std::vector<int>>> chains;
  std::vector<std::vector<int>> cur;
  enumerate_chains(width, depth, cur, chains);

  // The exponent ladder needs sup estimates well inside its slack, so the
  // audit samples spheres more densely than the default report.
  SampleSpec dense = spec;
  dense.directions = std::max(spec.directions, 256);

  // Derivative boundedness is a flatness statement, not an exponent fit:
  // the sup may not grow past a fixed multiple of its smallest-radius value.
  const auto flat_sups = [](const GrowthReport& r) {
    const double base = std::max(r.ratios(0, 0), 1e-12);
    return r.ratios.row(0).maxCoeff() <= 2.5 * base;
  };

  const auto audit_fn = [&](const std::string& name, const PolyVectorField& g) {
    AuditEntry e;
    e.name = name;
    const auto gr = growth_report(g, radii, dense);
    e.alpha_fit = gr.alpha_fit;
    e.constant = gr.constant;
    const auto g1 = g.gradient_field();
    e.d1_bounded = flat_sups(growth_report(g1, radii, dense));
    e.d2_bounded = flat_sups(growth_report(g1.gradient_field(), radii, dense));
    e.hard_fail = !gr.fits || !e.d1_bounded || !e.d2_bounded;
    rep.entries.push_back(e);
  };

  for (double s : freeze_at) {
    const std::string suffix = timed ? "@t=" + std::to_string(s).substr(0, 3) : "";
    const PolyVectorField v0s = v0.freeze_time(s);
    std::vector<PolyVectorField> fs;
    fs.reserve(fields.size());
    for (const auto& f : fields) fs.push_back(f.freeze_time(s));

    audit_fn("V0" + suffix, v0s);
    for (const auto& chain : chains) {
      PolyVectorField g = PolyVectorField::identity(d);
      std::string name = "Id";
      for (const auto& I : chain) {
        g = derive_along(g, iterated_bracket(fs, I));
        name = word_name(I) + name;
      }
      audit_fn(name + suffix, g);
      // V0-prefixed variant (V0 applied last)
      audit_fn("V0" + name + suffix, derive_along(g, v0s));
    }
  }

  rep.worst_alpha = 0.0;
  rep.hard_fail = false;
  for (const auto& e : rep.entries) {
    if (e.hard_fail) {
      rep.hard_fail = true;
      if (e.alpha_fit < 0) rep.worst_alpha = -1.0;
    }
    if (rep.worst_alpha >= 0 && e.alpha_fit >= 0)
      rep.worst_alpha = std::max(rep.worst_alpha, e.alpha_fit);
  }

  // Holder-in-time ratio for time-dependent data, sampled on [0,1] pairs
  if (timed) {
    const double kappa1 = (1.0 + depth - p) / p;
    const double kappa2 = depth / p;
    QuasiSampler sampler(d, spec.seed + 1);
    const std::vector<std::pair<double, double>> st = {{0.0, 0.3}, {0.2, 0.9}, {0.5, 1.0}};
    double worst = 0.0;
    for (const auto& [s, t] : st)
      for (double R : radii)
        for (int i = 0; i < 16; ++i) {
          const Vec x = R * sampler.direction(i);
          const double growth = std::pow(1.0 + x.norm(), alpha_required);
          worst = std::max(worst, (v0.eval(x, t) - v0.eval(x, s)).norm() /
                                      (std::pow(t - s, kappa1) * growth));
          for (const auto& f : fields)
            worst = std::max(worst, (f.eval(x, t) - f.eval(x, s)).norm() /
                                        (std::pow(t - s, kappa2) * growth));
        }
    rep.time_holder_constant = worst;
  }

  rep.pass = !rep.hard_fail && rep.worst_alpha <= alpha_required + 1e-12;
  return rep;
}

}  // namespace roughflow
