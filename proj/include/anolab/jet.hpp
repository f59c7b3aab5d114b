#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace anolab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// First-order jet: a value together with its coordinate gradient.
///
/// Closed-form scalar fields are written against `Jet` so their first
/// derivatives are exact; everything that only knows values falls back to
/// differencing (see fields.hpp).
struct Jet {
  double v = 0.0;
  Vec3 d = Vec3::Zero();

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: implicit constants are convenient in formulas
  Jet(double value, const Vec3& grad) : v(value), d(grad) {}

  static Jet variable(double value, int axis) {
    Jet j(value);
    j.d[axis] = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& o) { v += o.v; d += o.d; return *this; }
  Jet& operator-=(const Jet& o) { v -= o.v; d -= o.d; return *this; }
  Jet& operator*=(const Jet& o) { d = d * o.v + o.d * v; v *= o.v; return *this; }
  Jet& operator/=(const Jet& o) {
    d = (d * o.v - o.d * v) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, const Jet& b) { return a *= b; }
inline Jet operator/(Jet a, const Jet& b) { return a /= b; }
inline Jet operator-(const Jet& a) { return {-a.v, -a.d}; }

inline Jet sin(const Jet& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Jet cos(const Jet& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Jet log(const Jet& a) { return {std::log(a.v), a.d / a.v}; }
inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
inline Jet pow(const Jet& a, double p) {
  return {std::pow(a.v, p), p * std::pow(a.v, p - 1.0) * a.d};
}
// Derivative taken as 0 at the kink; callers that care supply their own X-derivative.
inline Jet abs(const Jet& a) { return a.v < 0.0 ? -a : a; }

/// A point in chart coordinates lifted to jets, one seed per axis.
struct JetPoint {
  Jet x, y, z;

  explicit JetPoint(const Vec3& p)
      : x(Jet::variable(p[0], 0)), y(Jet::variable(p[1], 1)), z(Jet::variable(p[2], 2)) {}
  JetPoint(Jet a, Jet b, Jet c) : x(std::move(a)), y(std::move(b)), z(std::move(c)) {}

  [[nodiscard]] const Jet& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  [[nodiscard]] Vec3 value() const { return {x.v, y.v, z.v}; }
};

/// 3-vector of jets; used for frame fields written in coordinates.
struct JetVec3 {
  Jet c[3];

  [[nodiscard]] Vec3 value() const { return {c[0].v, c[1].v, c[2].v}; }
  /// Row i of the result is the gradient of component i.
  [[nodiscard]] Mat3 jacobian() const {
    Mat3 j;
    for (int i = 0; i < 3; ++i) j.row(i) = c[i].d.transpose();
    return j;
  }
};

}  // namespace anolab
