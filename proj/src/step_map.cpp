#include "roughflow/step_map.hpp"

#include "roughflow/tensor_series.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace roughflow {

namespace {

// V_I Id in word mode, (1/|I|) V_[I] in bracket mode; both reduce the
// log-signature to the same first-order field on Lie elements.
PolyVectorField word_field(const std::vector<PolyVectorField>& fields,
                           const std::vector<int>& word, StepMode mode) {
  if (mode == StepMode::Word) {
    const int dim = fields.front().dim();
    return apply_operator(fields, word, PolyVectorField::identity(dim));
  }
  PolyVectorField b = iterated_bracket(fields, word);
  b *= 1.0 / static_cast<double>(word.size());
  return b;
}

std::vector<std::vector<PolyVectorField>> all_word_fields(
    const std::vector<PolyVectorField>& fields, int width, int depth,
    StepMode mode) {
  std::vector<std::vector<PolyVectorField>> out(depth);
  for (int k = 1; k <= depth; ++k) {
    const auto words = words_of_length(width, k);
    out[k - 1].reserve(words.size());
    for (const auto& w : words) out[k - 1].push_back(word_field(fields, w, mode));
  }
  return out;
}

PolyVectorField contract(const TruncatedTensorSeries& log_sig,
                         const std::vector<std::vector<PolyVectorField>>& word_fields,
                         const PolyVectorField& v0, double dt,
                         const std::vector<PolyVectorField>* young_fields,
                         const Vec* young_increment) {
  const int dim = v0.dim();
  PolyVectorField g = PolyVectorField::zero(dim, dim);
  if (dt != 0.0) {
    PolyVectorField drift = v0;
    drift *= dt;
    g += drift;
  }
  for (int k = 1; k <= log_sig.depth(); ++k) {
    const auto& level = log_sig.level(k);
    for (int idx = 0; idx < level.size(); ++idx) {
      const double c = level(idx);
      if (c == 0.0) continue;
      PolyVectorField term = word_fields[k - 1][static_cast<std::size_t>(idx)];
      term *= c;
      g += term;
    }
  }
  if (young_fields != nullptr) {
    if (young_increment == nullptr ||
        young_increment->size() != static_cast<Eigen::Index>(young_fields->size()))
      throw std::invalid_argument("step field: Young increment size mismatch");
    for (std::size_t j = 0; j < young_fields->size(); ++j) {
      const double c = (*young_increment)(static_cast<Eigen::Index>(j));
      if (c == 0.0) continue;
      PolyVectorField term = (*young_fields)[j];
      term *= c;
      g += term;
    }
  }
  g.canonicalize();
  return g;
}

void validate_fields(const RoughDriver& driver,
                     const std::vector<PolyVectorField>& fields,
                     const PolyVectorField& v0) {
  if (fields.size() != static_cast<std::size_t>(driver.width()))
    throw std::invalid_argument("step field: need one coefficient field per driver channel");
  const int dim = v0.dim();
  if (v0.outdim() != dim)
    throw std::invalid_argument("step field: drift must map the state space to itself");
  for (const auto& f : fields)
    if (f.dim() != dim || f.outdim() != dim)
      throw std::invalid_argument("step field: coefficient field dimension mismatch");
}

}  // namespace

StepMap build_step_field(const RoughDriver& driver,
                         const std::vector<PolyVectorField>& fields,
                         const PolyVectorField& v0, double s, double t,
                         StepMode mode, int substeps, double guard,
                         const std::vector<PolyVectorField>* young_fields,
                         const Vec* young_increment) {
  validate_fields(driver, fields, v0);
  std::vector<PolyVectorField> frozen;
  frozen.reserve(fields.size());
  for (const auto& f : fields) frozen.push_back(f.freeze_time(s));
  const auto word_fields =
      all_word_fields(frozen, driver.width(), driver.depth(), mode);
  std::vector<PolyVectorField> young_frozen;
  if (young_fields != nullptr) {
    young_frozen.reserve(young_fields->size());
    for (const auto& f : *young_fields) young_frozen.push_back(f.freeze_time(s));
  }
  StepMap step;
  step.s = s;
  step.t = t;
  step.substeps = substeps;
  step.guard = guard;
  step.field = contract(tensor_log(driver.signature(s, t)), word_fields,
                        v0.freeze_time(s), t - s,
                        young_fields != nullptr ? &young_frozen : nullptr,
                        young_increment);
  return step;
}

StepAssembler::StepAssembler(const RoughDriver& driver,
                             std::vector<PolyVectorField> fields,
                             PolyVectorField v0, StepMode mode, int substeps,
                             double guard)
    : driver_(&driver),
      fields_(std::move(fields)),
      v0_(std::move(v0)),
      mode_(mode),
      substeps_(substeps),
      guard_(guard) {
  validate_fields(driver, fields_, v0_);
  autonomous_ = !v0_.time_dependent();
  for (const auto& f : fields_) autonomous_ = autonomous_ && !f.time_dependent();
  if (autonomous_)
    cached_ = all_word_fields(fields_, driver.width(), driver.depth(), mode_);
}

StepMap StepAssembler::step(double s, double t) const {
  StepMap out;
  out.s = s;
  out.t = t;
  out.substeps = substeps_;
  out.guard = guard_;
  const TruncatedTensorSeries log_sig = tensor_log(driver_->signature(s, t));
  if (autonomous_) {
    out.field = contract(log_sig, cached_, v0_, t - s, nullptr, nullptr);
  } else {
    std::vector<PolyVectorField> frozen;
    frozen.reserve(fields_.size());
    for (const auto& f : fields_) frozen.push_back(f.freeze_time(s));
    out.field = contract(log_sig,
                         all_word_fields(frozen, driver_->width(),
                                         driver_->depth(), mode_),
                         v0_.freeze_time(s), t - s, nullptr, nullptr);
  }
  return out;
}

Vec mu(const StepMap& step, const Vec& x) {
  Vec y = x;
  std::vector<std::pair<double, double>> trace;
  trace.reserve(static_cast<std::size_t>(step.substeps) + 1);
  trace.emplace_back(0.0, y.norm());
  const double h = 1.0 / step.substeps;
  for (int m = 0; m < step.substeps; ++m) {
    const Vec k1 = step.field.eval(y);
    const Vec k2 = step.field.eval(y + (h / 2) * k1);
    const Vec k3 = step.field.eval(y + (h / 2) * k2);
    const Vec k4 = step.field.eval(y + h * k3);
    Vec next = y + (h * (k1 + 2 * k2 + 2 * k3 + k4)) / 6;
    if (!next.allFinite() || next.norm() > step.guard)
      throw BlowupError(y, m * h, std::move(trace));
    y = std::move(next);
    trace.emplace_back((m + 1) * h, y.norm());
  }
  return y;
}

MuJac mu_jacobian(const StepMap& step, const Vec& x) {
  const int d = step.field.dim();
  const PolyVectorField grad = step.field.gradient_field();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto dmat = [&](const Vec& y) -> Mat {
    const Vec flat = grad.eval(y);
    return Eigen::Map<const RowMat>(flat.data(), d, d);
  };
  Vec y = x;
  Mat jac = Mat::Identity(d, d);
  std::vector<std::pair<double, double>> trace;
  trace.reserve(static_cast<std::size_t>(step.substeps) + 1);
  trace.emplace_back(0.0, y.norm());
  const double h = 1.0 / step.substeps;
  for (int m = 0; m < step.substeps; ++m) {
    const Vec k1 = step.field.eval(y);
    const Mat j1 = dmat(y) * jac;
    const Vec y2 = y + (h / 2) * k1;
    const Vec k2 = step.field.eval(y2);
    const Mat j2 = dmat(y2) * (jac + (h / 2) * j1);
    const Vec y3 = y + (h / 2) * k2;
    const Vec k3 = step.field.eval(y3);
    const Mat j3 = dmat(y3) * (jac + (h / 2) * j2);
    const Vec y4 = y + h * k3;
    const Vec k4 = step.field.eval(y4);
    const Mat j4 = dmat(y4) * (jac + h * j3);
    Vec next = y + (h * (k1 + 2 * k2 + 2 * k3 + k4)) / 6;
    if (!next.allFinite() || next.norm() > step.guard)
      throw BlowupError(y, m * h, std::move(trace));
    y = std::move(next);
    jac += (h * (j1 + 2 * j2 + 2 * j3 + j4)) / 6;
    trace.emplace_back((m + 1) * h, y.norm());
  }
  return {std::move(y), std::move(jac)};
}

RemainderReport taylor_remainder(const RoughDriver& driver,
                                 const std::vector<PolyVectorField>& fields,
                                 const PolyVectorField& v0, double s,
                                 const std::vector<double>& hs,
                                 const PolyVectorField& f, double R,
                                 StepMode mode, int substeps, double guard,
                                 const SampleSpec& spec) {
  validate_fields(driver, fields, v0);
  if (f.dim() != v0.dim())
    throw std::invalid_argument("remainder: probe dimension mismatch");
  if (hs.empty()) throw std::invalid_argument("remainder: need at least one h");
  std::vector<PolyVectorField> frozen;
  frozen.reserve(fields.size());
  for (const auto& g : fields) frozen.push_back(g.freeze_time(s));
  const PolyVectorField v0f = v0.freeze_time(s);
  const PolyVectorField probe = f.freeze_time(s);

  // (V_I f) for every word up to the driver depth, plus the drift term V0 f.
  const int width = driver.width();
  const int depth = driver.depth();
  std::vector<std::vector<std::pair<std::vector<int>, PolyVectorField>>> contracted(depth);
  for (int k = 1; k <= depth; ++k)
    for (const auto& w : words_of_length(width, k))
      contracted[k - 1].emplace_back(w, apply_operator(frozen, w, probe));
  PolyVectorField drift_probe = probe;
  {
    std::vector<PolyVectorField> drift_only = {v0f};
    drift_probe = apply_operator(drift_only, {0}, probe);
  }

  const QuasiSampler sampler(v0.dim(), spec.seed);
  const std::vector<Vec> pts = sampler.ball(R, std::max(8, spec.directions));

  RemainderReport rep;
  rep.theoretical = (depth + 1) / driver.p();
  std::vector<double> log_h, log_r;
  for (const double h : hs) {
    if (h <= 0.0) throw std::invalid_argument("remainder: h must be positive");
    const StepMap step =
        build_step_field(driver, fields, v0, s, s + h, mode, substeps, guard);
    const TruncatedTensorSeries sig = driver.signature(s, s + h);
    double sup = 0.0;
    for (const Vec& x : pts) {
      Vec expansion = probe.eval(x) + h * drift_probe.eval(x);
      for (int k = 1; k <= depth; ++k) {
        const auto& level = sig.level(k);
        for (const auto& [w, vf] : contracted[k - 1]) {
          const double c = level(word_index(width, w));
          if (c != 0.0) expansion += c * vf.eval(x);
        }
      }
      const double err = (probe.eval(mu(step, x)) - expansion).norm();
      sup = std::max(sup, err);
    }
    rep.h.push_back(h);
    rep.remainder.push_back(sup);
    if (sup > 1e-15) {
      log_h.push_back(std::log(h));
      log_r.push_back(std::log(sup));
    }
    if (log_h.size() >= 2)
      rep.slope_so_far.push_back(lin_fit(log_h, log_r).slope);
    else
      rep.slope_so_far.push_back(std::numeric_limits<double>::infinity());
  }
  rep.slope = rep.slope_so_far.back();
  return rep;
}

}  // namespace roughflow
