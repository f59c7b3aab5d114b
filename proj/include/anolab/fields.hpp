#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "anolab/frame_model.hpp"
#include "anolab/jet.hpp"

namespace anolab {

/// Scalar function on a model, evaluated in chart coordinates.
///
/// Three representations share one interface:
///  - closed form: written against jets, exact first derivatives;
///  - sampled: values only, gradient by 4th-order central differences;
///  - grid: node samples with gluing-aware tricubic (Lagrange) interpolation.
/// All are immutable and cheap to copy.
class ScalarField {
 public:
  struct Impl {
    virtual ~Impl() = default;
    [[nodiscard]] virtual Jet jet(const Vec3& p) const = 0;
    [[nodiscard]] virtual double value(const Vec3& p) const { return jet(p).v; }
  };

  ScalarField() : ScalarField(constant(0.0)) {}
  explicit ScalarField(std::shared_ptr<const Impl> impl, const FrameModel* owner = nullptr,
                       std::optional<double> constant_value = std::nullopt)
      : impl_(std::move(impl)), owner_(owner), constant_(constant_value) {}

  static ScalarField constant(double c);
  static ScalarField closed(std::function<Jet(const JetPoint&)> f, const FrameModel* owner = nullptr);
  static ScalarField from_jet(std::function<Jet(const Vec3&)> f, const FrameModel* owner = nullptr);
  static ScalarField sampled(std::function<double(const Vec3&)> f, const FrameModel* owner = nullptr,
                             double step = 1e-3);
  static ScalarField grid(ModelPtr model, std::vector<double> samples);

  [[nodiscard]] double operator()(const Vec3& p) const {
    return constant_ ? *constant_ : impl_->value(p);
  }
  [[nodiscard]] Jet jet(const Vec3& p) const { return constant_ ? Jet(*constant_) : impl_->jet(p); }
  [[nodiscard]] const FrameModel* owner() const { return owner_; }
  [[nodiscard]] std::optional<double> constant_value() const { return constant_; }
  [[nodiscard]] bool is_constant() const { return constant_.has_value(); }
  /// False for fields known to have kinks (or of unknown regularity, like sampled data).
  [[nodiscard]] bool is_smooth() const { return smooth_; }
  [[nodiscard]] ScalarField with_smoothness(bool smooth) const {
    ScalarField out = *this;
    out.smooth_ = smooth;
    return out;
  }

 private:
  std::shared_ptr<const Impl> impl_;
  const FrameModel* owner_ = nullptr;
  std::optional<double> constant_;
  bool smooth_ = true;
};

namespace detail {

struct ConstantImpl final : ScalarField::Impl {
  double c;
  explicit ConstantImpl(double value) : c(value) {}
  Jet jet(const Vec3&) const override { return Jet(c); }
};

struct ClosedImpl final : ScalarField::Impl {
  std::function<Jet(const JetPoint&)> f;
  explicit ClosedImpl(std::function<Jet(const JetPoint&)> fn) : f(std::move(fn)) {}
  Jet jet(const Vec3& p) const override { return f(JetPoint(p)); }
  double value(const Vec3& p) const override {
    return f(JetPoint(Jet(p[0]), Jet(p[1]), Jet(p[2]))).v;
  }
};

struct JetFnImpl final : ScalarField::Impl {
  std::function<Jet(const Vec3&)> f;
  explicit JetFnImpl(std::function<Jet(const Vec3&)> fn) : f(std::move(fn)) {}
  Jet jet(const Vec3& p) const override { return f(p); }
};

struct SampledImpl final : ScalarField::Impl {
  std::function<double(const Vec3&)> f;
  double h;
  SampledImpl(std::function<double(const Vec3&)> fn, double step) : f(std::move(fn)), h(step) {}
  double value(const Vec3& p) const override { return f(p); }
  Jet jet(const Vec3& p) const override {
    Jet j(f(p));
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      j.d[a] = (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h);
    }
    return j;
  }
};

/// Cubic Lagrange weights on nodes -1, 0, 1, 2 and their derivatives, at s in [0, 1).
inline void cubic_weights(double s, double w[4], double dw[4]) {
  const double s2 = s * s, s3 = s2 * s;
  w[0] = -(s3 - 3 * s2 + 2 * s) / 6;
  w[1] = (s3 - 2 * s2 - s + 2) / 2;
  w[2] = -(s3 - s2 - 2 * s) / 2;
  w[3] = (s3 - s) / 6;
  dw[0] = -(3 * s2 - 6 * s + 2) / 6;
  dw[1] = (3 * s2 - 4 * s - 1) / 2;
  dw[2] = -(3 * s2 - 2 * s - 2) / 2;
  dw[3] = (3 * s2 - 1) / 6;
}

struct GridImpl final : ScalarField::Impl {
  ModelPtr model;
  std::vector<double> samples;

  GridImpl(ModelPtr m, std::vector<double> s) : model(std::move(m)), samples(std::move(s)) {
    if (!model->is_grid()) throw ModelError("grid field on a model without a grid");
    if (samples.size() != model->node_count()) throw ModelError("grid sample count mismatch");
  }

  // The stencil is laid out in lifted coordinates around p and each node is pulled
  // back to the canonical grid, so gradients come out in the caller's chart.
  template <bool WithGradient>
  Jet eval(const Vec3& p) const {
    const Vec3 h = model->spacing();
    const Vec3& lo = model->domain().lower;
    int base[3];
    double w[3][4], dw[3][4];
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] - lo[a]) / h[a];
      const double fl = std::floor(u);
      base[a] = static_cast<int>(fl) - 1;
      cubic_weights(u - fl, w[a], dw[a]);
    }
    Jet out;
    for (int c = 0; c < 4; ++c)
      for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
          const auto n = model->canonical_node(base[0] + a, base[1] + b, base[2] + c);
          const double v = samples[model->flat_index(n[0], n[1], n[2])];
          out.v += w[0][a] * w[1][b] * w[2][c] * v;
          if constexpr (WithGradient) {
            out.d[0] += dw[0][a] * w[1][b] * w[2][c] * v;
            out.d[1] += w[0][a] * dw[1][b] * w[2][c] * v;
            out.d[2] += w[0][a] * w[1][b] * dw[2][c] * v;
          }
        }
      }
    if constexpr (WithGradient) out.d = out.d.cwiseQuotient(h);
    return out;
  }

  Jet jet(const Vec3& p) const override { return eval<true>(p); }
  double value(const Vec3& p) const override { return eval<false>(p).v; }
};

}  // namespace detail

inline ScalarField ScalarField::constant(double c) {
  return ScalarField(std::make_shared<detail::ConstantImpl>(c), nullptr, c);
}
inline ScalarField ScalarField::closed(std::function<Jet(const JetPoint&)> f, const FrameModel* owner) {
  return ScalarField(std::make_shared<detail::ClosedImpl>(std::move(f)), owner);
}
inline ScalarField ScalarField::from_jet(std::function<Jet(const Vec3&)> f, const FrameModel* owner) {
  return ScalarField(std::make_shared<detail::JetFnImpl>(std::move(f)), owner);
}
inline ScalarField ScalarField::sampled(std::function<double(const Vec3&)> f, const FrameModel* owner,
                                        double step) {
  return ScalarField(std::make_shared<detail::SampledImpl>(std::move(f), step), owner).with_smoothness(false);
}
inline ScalarField ScalarField::grid(ModelPtr model, std::vector<double> samples) {
  const FrameModel* owner = model.get();
  return ScalarField(std::make_shared<detail::GridImpl>(std::move(model), std::move(samples)), owner);
}

namespace detail {
inline const FrameModel* merge_owner(const ScalarField& a, const ScalarField& b) {
  if (a.owner() && b.owner() && a.owner() != b.owner())
    throw ModelError("fields belong to different models");
  return a.owner() ? a.owner() : b.owner();
}
/// Pointwise combination; plain values never go through jets, so nested expressions of
/// differenced fields stay cheap to evaluate.
template <class Op>
struct BinaryImpl final : ScalarField::Impl {
  ScalarField a, b;
  Op op;
  BinaryImpl(ScalarField x, ScalarField y, Op o) : a(std::move(x)), b(std::move(y)), op(o) {}
  Jet jet(const Vec3& p) const override { return op(a.jet(p), b.jet(p)); }
  double value(const Vec3& p) const override { return op(Jet(a(p)), Jet(b(p))).v; }
};

template <class Op>
ScalarField binary(const ScalarField& a, const ScalarField& b, Op op) {
  const FrameModel* owner = merge_owner(a, b);
  if (a.is_constant() && b.is_constant()) {
    ScalarField c = ScalarField::constant(op(Jet(*a.constant_value()), Jet(*b.constant_value())).v);
    return c;
  }
  return ScalarField(std::make_shared<BinaryImpl<Op>>(a, b, op), owner).with_smoothness(a.is_smooth() && b.is_smooth());
}
}  // namespace detail

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  if (a.constant_value() == 0.0) return b;
  if (b.constant_value() == 0.0) return a;
  return detail::binary(a, b, [](const Jet& x, const Jet& y) { return x + y; });
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  if (b.constant_value() == 0.0) return a;
  return detail::binary(a, b, [](const Jet& x, const Jet& y) { return x - y; });
}
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  if (a.constant_value() == 0.0 || b.constant_value() == 0.0) return ScalarField::constant(0.0);
  if (a.constant_value() == 1.0) return b;
  if (b.constant_value() == 1.0) return a;
  return detail::binary(a, b, [](const Jet& x, const Jet& y) { return x * y; });
}
inline ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  return detail::binary(a, b, [](const Jet& x, const Jet& y) { return x / y; });
}
inline ScalarField operator*(double s, const ScalarField& a) { return ScalarField::constant(s) * a; }
inline ScalarField operator-(const ScalarField& a) { return -1.0 * a; }

/// Applies a jet function pointwise, e.g. `map(f, [](const Jet& j){ return exp(j); })`.
template <class F>
ScalarField map(const ScalarField& a, F fn) {
  if (a.is_constant()) return ScalarField::constant(fn(Jet(*a.constant_value())).v);
  return detail::binary(a, ScalarField::constant(0.0), [fn](const Jet& x, const Jet&) { return fn(x); });
}

/// Samples any field on the model grid.
inline ScalarField resample(const ScalarField& f, const ModelPtr& model) {
  std::vector<double> s(model->node_count());
  for (std::size_t n = 0; n < s.size(); ++n) s[n] = f(model->node(n));
  return ScalarField::grid(model, std::move(s));
}

/// Triple of frame coefficients; shared storage for vector fields and 1-forms.
struct FrameTriple {
  std::array<ScalarField, 3> c;

  FrameTriple() = default;
  FrameTriple(ScalarField a, ScalarField b, ScalarField d) : c{std::move(a), std::move(b), std::move(d)} {}

  [[nodiscard]] const ScalarField& operator[](int i) const { return c[i]; }
  [[nodiscard]] ScalarField& operator[](int i) { return c[i]; }
  [[nodiscard]] Vec3 at(const Vec3& p) const { return {c[0](p), c[1](p), c[2](p)}; }
  [[nodiscard]] const FrameModel* owner() const {
    const FrameModel* o = nullptr;
    for (const auto& s : c) {
      if (s.owner() && o && s.owner() != o) throw ModelError("components belong to different models");
      if (s.owner()) o = s.owner();
    }
    return o;
  }

  static FrameTriple constant(const Vec3& v) {
    return {ScalarField::constant(v[0]), ScalarField::constant(v[1]), ScalarField::constant(v[2])};
  }
};

/// Vector field by its coefficients on the model frame (f_1, f_2, f_3).
struct VecField : FrameTriple {
  using FrameTriple::FrameTriple;
  VecField(const FrameTriple& t) : FrameTriple(t) {}  // NOLINT
  static VecField constant(const Vec3& v) { return VecField(FrameTriple::constant(v)); }
};

/// 1-form by its coefficients on the dual coframe.
struct OneForm : FrameTriple {
  using FrameTriple::FrameTriple;
  OneForm(const FrameTriple& t) : FrameTriple(t) {}  // NOLINT
  static OneForm constant(const Vec3& v) { return OneForm(FrameTriple::constant(v)); }
};

/// 2-form by its values on the frame pairs (12), (13), (23).
struct TwoForm {
  ScalarField c12, c13, c23;

  /// Antisymmetric coefficient matrix beta(f_i, f_j) at p.
  [[nodiscard]] Mat3 matrix(const Vec3& p) const {
    const double a = c12(p), b = c13(p), c = c23(p);
    Mat3 m;
    m << 0, a, b, -a, 0, c, -b, -c, 0;
    return m;
  }
};

template <class T>
T linear_combination(double a, const T& u, double b, const T& v) {
  T out;
  for (int i = 0; i < 3; ++i) out[i] = a * u[i] + b * v[i];
  return out;
}

inline OneForm operator*(const ScalarField& f, const OneForm& a) { return {f * a[0], f * a[1], f * a[2]}; }
inline VecField operator*(const ScalarField& f, const VecField& a) { return {f * a[0], f * a[1], f * a[2]}; }

/// <alpha, V> as a scalar field.
inline ScalarField pair(const OneForm& alpha, const VecField& v) {
  return alpha[0] * v[0] + alpha[1] * v[1] + alpha[2] * v[2];
}

inline TwoForm operator-(const TwoForm& a, const TwoForm& b) {
  return {a.c12 - b.c12, a.c13 - b.c13, a.c23 - b.c23};
}
inline TwoForm operator+(const TwoForm& a, const TwoForm& b) {
  return {a.c12 + b.c12, a.c13 + b.c13, a.c23 + b.c23};
}
inline TwoForm operator*(const ScalarField& f, const TwoForm& a) { return {f * a.c12, f * a.c13, f * a.c23}; }

}  // namespace anolab
