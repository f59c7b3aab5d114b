#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "anolab/fields.hpp"
#include "anolab/frame_model.hpp"

namespace anolab {

namespace detail {

inline void check_owner(const FrameModel& model, const FrameModel* owner) {
  if (owner && owner != &model) throw ModelError("field belongs to model '" + owner->name() + "', not '" +
                                                 model.name() + "'");
}

/// Frame-directional derivatives (f_1 g, f_2 g, f_3 g) of a field at p.
inline Vec3 frame_gradient(const FrameModel& model, const ScalarField& g, const Vec3& p) {
  if (g.is_constant()) return Vec3::Zero();
  return model.frame_matrix(p).transpose() * g.jet(p).d;
}

}  // namespace detail

/// V·f, the derivative of f along V.
[[nodiscard]] inline ScalarField directional(const VecField& v, const ScalarField& f, const FrameModel& model) {
  detail::check_owner(model, v.owner());
  detail::check_owner(model, f.owner());
  if (f.is_constant()) return ScalarField::constant(0.0);
  const FrameModel* m = &model;
  return ScalarField::sampled(
      [v, f, m](const Vec3& p) { return v.at(p).dot(detail::frame_gradient(*m, f, p)); }, m);
}

/// [V, W]^k = V(W^k) - W(V^k) + V^i W^j c^k_ij.
[[nodiscard]] inline VecField lie_bracket(const VecField& v, const VecField& w, const FrameModel& model) {
  detail::check_owner(model, v.owner());
  detail::check_owner(model, w.owner());
  const FrameModel* m = &model;
  bool all_constant = model.has_constant_structure();
  for (int i = 0; i < 3; ++i) all_constant = all_constant && v[i].is_constant() && w[i].is_constant();
  const auto algebraic = [m](const Vec3& vv, const Vec3& ww, const Vec3& p) {
    const StructureTensor c = m->structure(p);
    Vec3 out;
    for (int k = 0; k < 3; ++k) out[k] = vv.dot(c[k] * ww);
    return out;
  };
  if (all_constant) return VecField::constant(algebraic(v.at(Vec3::Zero()), w.at(Vec3::Zero()), Vec3::Zero()));
  VecField out;
  for (int k = 0; k < 3; ++k) {
    out[k] = ScalarField::sampled(
        [v, w, m, k, algebraic](const Vec3& p) {
          const Vec3 vv = v.at(p), ww = w.at(p);
          return vv.dot(detail::frame_gradient(*m, w[k], p)) - ww.dot(detail::frame_gradient(*m, v[k], p)) +
                 algebraic(vv, ww, p)[k];
        },
        m);
  }
  return out;
}

/// d of a function: df(f_i) = f_i·g.
[[nodiscard]] inline OneForm differential(const ScalarField& g, const FrameModel& model) {
  detail::check_owner(model, g.owner());
  if (g.is_constant()) return OneForm::constant(Vec3::Zero());
  const FrameModel* m = &model;
  OneForm out;
  for (int i = 0; i < 3; ++i)
    out[i] = ScalarField::sampled([g, m, i](const Vec3& p) { return detail::frame_gradient(*m, g, p)[i]; }, m);
  return out;
}

/// dα(f_i, f_j) = f_i·α_j - f_j·α_i - Σ_k α_k c^k_ij.
[[nodiscard]] inline TwoForm exterior_derivative(const OneForm& alpha, const FrameModel& model) {
  detail::check_owner(model, alpha.owner());
  const FrameModel* m = &model;
  const bool all_constant = model.has_constant_structure() && alpha[0].is_constant() &&
                            alpha[1].is_constant() && alpha[2].is_constant();
  const auto entry = [m, alpha](const Vec3& p, int i, int j) {
    const Vec3 a = alpha.at(p);
    const StructureTensor c = m->structure(p);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s -= a[k] * c[k](i, j);
    if (!alpha[j].is_constant()) s += detail::frame_gradient(*m, alpha[j], p)[i];
    if (!alpha[i].is_constant()) s -= detail::frame_gradient(*m, alpha[i], p)[j];
    return s;
  };
  const auto component = [&](int i, int j) {
    if (all_constant) return ScalarField::constant(entry(Vec3::Zero(), i, j));
    return ScalarField::sampled([entry, i, j](const Vec3& p) { return entry(p, i, j); }, m);
  };
  return {component(0, 1), component(0, 2), component(1, 2)};
}

/// (α∧β)(f_1, f_2, f_3): a density relative to the frame volume.
[[nodiscard]] inline ScalarField wedge_density(const OneForm& a, const TwoForm& b, const FrameModel& model) {
  detail::check_owner(model, a.owner());
  return a[0] * b.c23 - a[1] * b.c13 + a[2] * b.c12;
}

/// Pointwise version of `wedge_density` on coefficient data.
[[nodiscard]] inline double wedge_value(const Vec3& a, const Mat3& b) {
  return a[0] * b(1, 2) - a[1] * b(0, 2) + a[2] * b(0, 1);
}

/// α∧β for two 1-forms, as a 2-form.
[[nodiscard]] inline TwoForm wedge(const OneForm& a, const OneForm& b) {
  return {a[0] * b[1] - a[1] * b[0], a[0] * b[2] - a[2] * b[0], a[1] * b[2] - a[2] * b[1]};
}

/// Raised by `smooth_with_flow_control` when the bounds cannot be met; carries what was achieved.
class SmoothingError : public std::runtime_error {
 public:
  SmoothingError(const std::string& what, double value_bound, double derivative_bound)
      : std::runtime_error(what), value_bound(value_bound), derivative_bound(derivative_bound) {}
  double value_bound;
  double derivative_bound;
};

struct SmoothingResult {
  ScalarField field;
  double value_bound = 0.0;       ///< sup |f - f~| over the verification samples
  double derivative_bound = 0.0;  ///< sup |X·f - X·f~| over the verification samples
  double width = 0.0;             ///< mollifier width in grid cells; 0 when f was returned unchanged
  std::size_t samples = 0;
};

struct SmoothingOptions {
  int refinement = 10;                 ///< verification samples per grid cell along each axis
  std::size_t max_samples = 5'000'000;  ///< refinement is reduced on the smallest axes above this
};

namespace detail {

/// Periodic separable Gaussian blur of grid samples along each periodic axis.
inline std::vector<double> gaussian_blur(const FrameModel& model, const std::vector<double>& in, double width) {
  std::vector<double> cur = in, next(in.size());
  for (int axis = 0; axis < 3; ++axis) {
    const int radius = static_cast<int>(std::ceil(4.0 * width));
    std::vector<double> w(2 * radius + 1);
    double total = 0.0;
    for (int r = -radius; r <= radius; ++r) total += w[r + radius] = std::exp(-0.5 * r * r / (width * width));
    for (double& x : w) x /= total;
    for (std::size_t n = 0; n < cur.size(); ++n) {
      auto idx = model.node_index(n);
      double s = 0.0;
      for (int r = -radius; r <= radius; ++r) {
        auto q = idx;
        q[axis] += r;
        const auto c = model.canonical_node(q[0], q[1], q[2]);
        s += w[r + radius] * cur[model.flat_index(c[0], c[1], c[2])];
      }
      next[n] = s;
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace detail

/// Smooths f while controlling both |f - f~| and |X·f - X·f~| below eps.
///
/// Closed-form and already-interpolated inputs are returned unchanged. Anything else is
/// sampled on the model grid and mollified with a Gaussian of growing width until both bounds,
/// checked on a dense sample (`refinement` per cell per axis), fall below eps. The
/// derivative of f is taken from its jet (exact away from kinks).
[[nodiscard]] inline SmoothingResult smooth_with_flow_control(const ScalarField& f, const VecField& x, double eps,
                                                              const ModelPtr& model,
                                                              SmoothingOptions opts = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  detail::check_owner(*model, f.owner());
  detail::check_owner(*model, x.owner());
  if (f.is_smooth() || !model->is_grid()) return {f, 0.0, 0.0, 0.0, 0};

  std::array<int, 3> refine;
  for (int a = 0; a < 3; ++a) refine[a] = opts.refinement;
  const auto total = [&]() {
    std::size_t t = 1;
    for (int a = 0; a < 3; ++a) t *= static_cast<std::size_t>(refine[a]) * model->resolution()[a];
    return t;
  };
  while (total() > opts.max_samples) {
    int smallest = 0;
    for (int a = 1; a < 3; ++a)
      if (model->resolution()[a] * refine[a] < model->resolution()[smallest] * refine[smallest]) smallest = a;
    if (refine[smallest] == 1) break;
    refine[smallest] = std::max(1, refine[smallest] / 2);
  }

  // Dense reference data, shared by every candidate width.
  const Vec3 h = model->spacing();
  std::vector<Vec3> pts;
  std::vector<double> fv, xf;
  pts.reserve(total());
  for (int k = 0; k < model->resolution()[2] * refine[2]; ++k)
    for (int j = 0; j < model->resolution()[1] * refine[1]; ++j)
      for (int i = 0; i < model->resolution()[0] * refine[0]; ++i)
        pts.push_back(model->domain().lower +
                      Vec3(i * h[0] / refine[0], j * h[1] / refine[1], k * h[2] / refine[2]));
  fv.resize(pts.size());
  xf.resize(pts.size());
  for (std::size_t n = 0; n < pts.size(); ++n) {
    const Jet j = f.jet(pts[n]);
    fv[n] = j.v;
    xf[n] = x.at(pts[n]).dot(model->frame_matrix(pts[n]).transpose() * j.d);
  }

  std::vector<double> nodes(model->node_count());
  for (std::size_t n = 0; n < nodes.size(); ++n) nodes[n] = f(model->node(n));

  const auto measure = [&](const ScalarField& g, double& vb, double& db) {
    vb = db = 0.0;
    for (std::size_t n = 0; n < pts.size(); ++n) {
      const Jet j = g.jet(pts[n]);
      vb = std::max(vb, std::abs(j.v - fv[n]));
      db = std::max(db, std::abs(x.at(pts[n]).dot(model->frame_matrix(pts[n]).transpose() * j.d) - xf[n]));
    }
  };

  SmoothingResult best{f, INFINITY, INFINITY, 0.0, pts.size()};
  for (double width : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    const std::vector<double> s = width == 0.0 ? nodes : detail::gaussian_blur(*model, nodes, width);
    ScalarField g = ScalarField::grid(model, s);
    double vb, db;
    measure(g, vb, db);
    if (std::max(vb, db) < std::max(best.value_bound, best.derivative_bound)) best = {g, vb, db, width, pts.size()};
    if (vb < eps && db < eps) return {g, vb, db, width, pts.size()};
  }
  throw SmoothingError("smoothing bounds unattainable at this resolution (value " +
                           std::to_string(best.value_bound) + ", derivative " +
                           std::to_string(best.derivative_bound) + ")",
                       best.value_bound, best.derivative_bound);
}

}  // namespace anolab
