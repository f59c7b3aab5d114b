#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "anolab/jet.hpp"

namespace anolab {

/// Raised when fields from different models are combined, or a model is malformed.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { coordinate_grid, homogeneous_frame };

inline const char* to_string(ModelKind k) {
  return k == ModelKind::coordinate_grid ? "coordinate-grid" : "homogeneous-frame";
}

/// How an axis of the fundamental domain is glued.
///
/// `monodromy` is only meaningful on the third axis and glues (x, y, 1) to (A(x, y), 0)
/// on the unit torus in the first two axes.
struct AxisRule {
  enum Kind { open, periodic, monodromy };
  Kind kind = periodic;
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Identity();

  static AxisRule make_open() { return {open, Eigen::Matrix2d::Identity()}; }
  static AxisRule make_periodic() { return {periodic, Eigen::Matrix2d::Identity()}; }
  static AxisRule make_monodromy(const Eigen::Matrix2d& a) { return {monodromy, a}; }
};

struct Domain {
  Vec3 lower = Vec3::Zero();
  Vec3 extent = Vec3::Ones();
  std::array<AxisRule, 3> rules{AxisRule::make_periodic(), AxisRule::make_periodic(),
                                AxisRule::make_periodic()};

  [[nodiscard]] bool compact() const {
    for (const auto& r : rules)
      if (r.kind == AxisRule::open) return false;
    return true;
  }
  [[nodiscard]] bool has_monodromy() const { return rules[2].kind == AxisRule::monodromy; }
};

/// Frame fields f_1, f_2, f_3 written in chart coordinates (element k is f_{k+1}).
using FrameJets = std::array<JetVec3, 3>;
using FrameRealization = std::function<FrameJets(const JetPoint&)>;

/// c[k](i, j) = c^k_{ij}, i.e. [f_i, f_j] = sum_k c^k_{ij} f_k.
using StructureTensor = std::array<Mat3, 3>;

/// Symmetric positive coefficient matrix of a metric in the model frame.
using MetricFn = std::function<Mat3(const Vec3&)>;

struct Metric {
  std::string tag = "frame-orthonormal";
  MetricFn at = [](const Vec3&) -> Mat3 { return Mat3::Identity(); };

  [[nodiscard]] bool is_frame_orthonormal() const { return tag == "frame-orthonormal"; }
};

/// A 3-manifold with a global frame over a sampled fundamental domain.
///
/// Fields live as frame coefficients, so under the identifications they are plain
/// scalar functions; only points need to be carried through gluing maps.
class FrameModel {
 public:
  FrameModel(std::string name, ModelKind kind, Domain domain, std::array<int, 3> resolution,
             FrameRealization frame, std::optional<StructureTensor> constants = std::nullopt)
      : name_(std::move(name)),
        kind_(kind),
        domain_(std::move(domain)),
        resolution_(resolution),
        frame_(std::move(frame)),
        constants_(std::move(constants)) {
    if (domain_.has_monodromy()) {
      if (domain_.rules[0].kind != AxisRule::periodic || domain_.rules[1].kind != AxisRule::periodic)
        throw ModelError("monodromy gluing needs periodic fibre axes");
      if (std::abs(std::abs(domain_.rules[2].matrix.determinant()) - 1.0) > 1e-12)
        throw ModelError("monodromy matrix must be unimodular");
      if (resolution_[0] != resolution_[1])
        throw ModelError("monodromy models need equal resolution on the fibre axes");
      inverse_monodromy_ = domain_.rules[2].matrix.inverse();
    }
    if (domain_.rules[0].kind == AxisRule::monodromy || domain_.rules[1].kind == AxisRule::monodromy)
      throw ModelError("monodromy is only supported on the third axis");
    if (kind_ == ModelKind::coordinate_grid) {
      if (!domain_.compact()) throw ModelError("grid models need a compact domain");
      for (int r : resolution_)
        if (r < 8) throw ModelError("grid resolution must be at least 8 per axis");
    }
    if (constants_) {
      for (int k = 0; k < 3; ++k)
        if (((*constants_)[k] + (*constants_)[k].transpose()).cwiseAbs().maxCoeff() != 0.0)
          throw ModelError("structure constants must be antisymmetric in (i, j)");
    }
  }

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] ModelKind kind() const { return kind_; }
  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] const std::array<int, 3>& resolution() const { return resolution_; }
  [[nodiscard]] bool is_grid() const { return kind_ == ModelKind::coordinate_grid; }
  [[nodiscard]] bool has_constant_structure() const { return constants_.has_value(); }

  [[nodiscard]] Vec3 spacing() const {
    Vec3 h;
    for (int a = 0; a < 3; ++a) h[a] = domain_.extent[a] / resolution_[a];
    return h;
  }
  /// Largest grid spacing; 0 for homogeneous models.
  [[nodiscard]] double h() const { return is_grid() ? spacing().maxCoeff() : 0.0; }

  /// Default verdict tolerance: 1e-6 on homogeneous models, 10 h^2 on grids.
  [[nodiscard]] double default_tolerance() const {
    return is_grid() ? 10.0 * h() * h() : 1e-6;
  }

  [[nodiscard]] std::size_t node_count() const {
    return static_cast<std::size_t>(resolution_[0]) * resolution_[1] * resolution_[2];
  }
  [[nodiscard]] Vec3 node(int i, int j, int k) const {
    const Vec3 h = spacing();
    return domain_.lower + Vec3(i * h[0], j * h[1], k * h[2]);
  }
  [[nodiscard]] std::array<int, 3> node_index(std::size_t flat) const {
    const int n0 = resolution_[0], n1 = resolution_[1];
    const int i = static_cast<int>(flat % n0);
    const int j = static_cast<int>((flat / n0) % n1);
    const int k = static_cast<int>(flat / (static_cast<std::size_t>(n0) * n1));
    return {i, j, k};
  }
  [[nodiscard]] std::size_t flat_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(resolution_[0]) * (j + static_cast<std::size_t>(resolution_[1]) * k);
  }
  [[nodiscard]] Vec3 node(std::size_t flat) const {
    const auto [i, j, k] = node_index(flat);
    return node(i, j, k);
  }

  /// Maps arbitrary integer node indices onto the canonical grid, through the gluing maps.
  [[nodiscard]] std::array<int, 3> canonical_node(int i, int j, int k) const {
    const auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    if (domain_.has_monodromy()) {
      const int n = resolution_[2];
      int q = (k >= 0) ? k / n : -((-k + n - 1) / n);
      k -= q * n;
      const Eigen::Matrix2d& a = q > 0 ? domain_.rules[2].matrix : inverse_monodromy_;
      for (int s = 0; s < std::abs(q); ++s) {
        const double ni = a(0, 0) * i + a(0, 1) * j;
        const double nj = a(1, 0) * i + a(1, 1) * j;
        i = static_cast<int>(std::lround(ni));
        j = static_cast<int>(std::lround(nj));
      }
    } else if (domain_.rules[2].kind == AxisRule::periodic) {
      k = wrap(k, resolution_[2]);
    }
    if (domain_.rules[0].kind == AxisRule::periodic) i = wrap(i, resolution_[0]);
    if (domain_.rules[1].kind == AxisRule::periodic) j = wrap(j, resolution_[1]);
    return {i, j, k};
  }

  /// Representative of p inside the fundamental domain.
  [[nodiscard]] Vec3 wrap(Vec3 p) const {
    const Vec3& lo = domain_.lower;
    const Vec3& ex = domain_.extent;
    if (domain_.has_monodromy()) {
      const double q = cell((p[2] - lo[2]) / ex[2]);
      const int steps = static_cast<int>(q);
      const Eigen::Matrix2d& a = steps > 0 ? domain_.rules[2].matrix : inverse_monodromy_;
      Eigen::Vector2d xy(p[0], p[1]);
      for (int s = 0; s < std::abs(steps); ++s) xy = a * xy;
      p[0] = xy[0];
      p[1] = xy[1];
      p[2] = std::max(lo[2], p[2] - q * ex[2]);
    } else if (domain_.rules[2].kind == AxisRule::periodic) {
      p[2] = lo[2] + ex[2] * frac((p[2] - lo[2]) / ex[2]);
    }
    for (int a = 0; a < 2; ++a)
      if (domain_.rules[a].kind == AxisRule::periodic) p[a] = lo[a] + ex[a] * frac((p[a] - lo[a]) / ex[a]);
    return p;
  }

  /// Jet version of `wrap`: the gluing maps are affine, so derivatives carry through.
  [[nodiscard]] JetPoint wrap(const JetPoint& p) const {
    const Vec3 v = p.value();
    const Vec3 w = wrap(v);
    Eigen::Matrix2d lin = Eigen::Matrix2d::Identity();
    if (domain_.has_monodromy()) {
      const int steps = static_cast<int>(cell((v[2] - domain_.lower[2]) / domain_.extent[2]));
      const Eigen::Matrix2d& a = steps > 0 ? domain_.rules[2].matrix : inverse_monodromy_;
      for (int s = 0; s < std::abs(steps); ++s) lin = a * lin;
    }
    Jet x = lin(0, 0) * p.x + lin(0, 1) * p.y;
    Jet y = lin(1, 0) * p.x + lin(1, 1) * p.y;
    Jet z = p.z;
    x.v = w[0];
    y.v = w[1];
    z.v = w[2];
    return {x, y, z};
  }

  [[nodiscard]] FrameJets frame_jets(const Vec3& p) const { return frame_(JetPoint(p)); }
  [[nodiscard]] const FrameRealization& frame_realization() const { return frame_; }

  /// Coordinate components of the frame: column k is f_{k+1}.
  [[nodiscard]] Mat3 frame_matrix(const Vec3& p) const {
    const FrameJets f = frame_jets(p);
    Mat3 m;
    for (int k = 0; k < 3; ++k) m.col(k) = f[k].value();
    return m;
  }

  /// Coordinate volume of the frame parallelepiped; converts frame densities to
  /// coordinate densities.
  [[nodiscard]] double frame_volume(const Vec3& p) const { return frame_matrix(p).determinant(); }

  /// Structure functions at p. Declared constants when present, otherwise computed
  /// from the coordinate realization.
  [[nodiscard]] StructureTensor structure(const Vec3& p) const {
    if (constants_) return *constants_;
    return realized_structure(p);
  }

  /// Structure functions computed from the coordinate realization only.
  [[nodiscard]] StructureTensor realized_structure(const Vec3& p) const {
    const FrameJets f = frame_jets(p);
    Mat3 fm;
    std::array<Mat3, 3> jac;
    for (int k = 0; k < 3; ++k) {
      fm.col(k) = f[k].value();
      jac[k] = f[k].jacobian();
    }
    const auto lu = fm.partialPivLu();
    StructureTensor c;
    for (auto& m : c) m.setZero();
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const Vec3 br = jac[j] * fm.col(i) - jac[i] * fm.col(j);
        const Vec3 coeff = lu.solve(br);
        for (int k = 0; k < 3; ++k) {
          c[k](i, j) = coeff[k];
          c[k](j, i) = -coeff[k];
        }
      }
    return c;
  }

  /// Max |sum over cyclic (i,j,k) of [[f_i,f_j],f_k]| for constant structure.
  [[nodiscard]] double jacobi_residual() const {
    if (!constants_) return 0.0;
    const StructureTensor& c = *constants_;
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double s = 0.0;
            for (int m = 0; m < 3; ++m)
              s += c[m](i, j) * c[l](m, k) + c[m](j, k) * c[l](m, i) + c[m](k, i) * c[l](m, j);
            worst = std::max(worst, std::abs(s));
          }
    return worst;
  }

  Metric base_metric;

 private:
  // Values within rounding of an integer are snapped to it, so points landing on the
  // identified face are carried across the gluing rather than left at the far edge.
  static double cell(double v) { return std::floor(v + 1e-12); }
  static double frac(double v) { return std::max(0.0, v - cell(v)); }

  std::string name_;
  ModelKind kind_;
  Domain domain_;
  std::array<int, 3> resolution_;
  FrameRealization frame_;
  std::optional<StructureTensor> constants_;
  Eigen::Matrix2d inverse_monodromy_ = Eigen::Matrix2d::Identity();
};

using ModelPtr = std::shared_ptr<const FrameModel>;

inline FrameRealization coordinate_frame() {
  return [](const JetPoint&) {
    FrameJets f;
    for (int k = 0; k < 3; ++k)
      for (int a = 0; a < 3; ++a) f[k].c[a] = Jet(k == a ? 1.0 : 0.0);
    return f;
  };
}

}  // namespace anolab
