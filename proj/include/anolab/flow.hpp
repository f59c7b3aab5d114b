#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "anolab/fields.hpp"
#include "anolab/frame_model.hpp"

namespace anolab {

struct FlowOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  double horizon = 1000.0;  ///< |t| beyond this is rejected
  double initial_step = 1e-2;
  std::size_t max_steps = 200000;
};

/// Integration failure; carries the last state the integrator accepted.
class FlowError : public std::runtime_error {
 public:
  FlowError(const std::string& what, Vec3 last_point, double last_time)
      : std::runtime_error(what), last_point(std::move(last_point)), last_time(last_time) {}
  Vec3 last_point;
  double last_time;
};

struct FlowResult {
  Vec3 point;                  ///< endpoint, wrapped into the fundamental domain
  Vec3 lifted;                 ///< endpoint in the chart the trajectory started in
  std::vector<Vec3> tangents;  ///< pushed tangent vectors, frame coefficients at the endpoint
  std::vector<double> integrals;  ///< signed integrals of the integrands along the trajectory
};

/// Metric coefficients at p.
[[nodiscard]] inline Mat3 metric_at(const Metric& g, const Vec3& p) {
  return g.is_frame_orthonormal() ? Mat3::Identity() : g.at(p);
}

/// Component of v orthogonal to x in the metric g (the quotient TM/<X> represented in X^perp).
[[nodiscard]] inline Vec3 eta_project(const Vec3& v, const Vec3& x, const Mat3& g) {
  return v - (v.dot(g * x) / x.dot(g * x)) * x;
}

[[nodiscard]] inline double metric_norm(const Vec3& v, const Mat3& g) { return std::sqrt(v.dot(g * v)); }

/// Norm of the class of v in TM/<X>.
[[nodiscard]] inline double quotient_norm(const Vec3& v, const Vec3& x, const Mat3& g) {
  return metric_norm(eta_project(v, x, g), g);
}

namespace detail {

/// Right-hand side of the flow plus the variational equation in frame coefficients.
///
/// A field V transported by the flow satisfies [X, V] = 0, so along the trajectory
///   d/dt V^k = V(X^k) - X^i V^j c^k_ij.
struct FlowSystem {
  const FrameModel& model;
  const VecField& x;
  std::size_t n_tangents;
  const std::vector<ScalarField>& integrands;

  using State = std::vector<double>;

  void operator()(const State& s, State& ds, double /*t*/) const {
    const Vec3 p(s[0], s[1], s[2]);
    Vec3 a;
    Mat3 grad_a;  // row k: coordinate gradient of X^k
    bool constant = true;
    for (int k = 0; k < 3; ++k) {
      if (x[k].is_constant()) {
        a[k] = *x[k].constant_value();
        grad_a.row(k).setZero();
      } else {
        const Jet j = x[k].jet(p);
        a[k] = j.v;
        grad_a.row(k) = j.d.transpose();
        constant = false;
      }
    }
    const Mat3 f = model.frame_matrix(p);
    const Vec3 dp = f * a;
    for (int i = 0; i < 3; ++i) ds[i] = dp[i];
    if (n_tangents > 0) {
      Mat3 m = constant ? Mat3::Zero().eval() : (grad_a * f).eval();
      const StructureTensor c = model.structure(p);
      for (int k = 0; k < 3; ++k) m.row(k) -= (c[k].transpose() * a).transpose();
      for (std::size_t t = 0; t < n_tangents; ++t) {
        const Vec3 v(s[3 + 3 * t], s[4 + 3 * t], s[5 + 3 * t]);
        const Vec3 dv = m * v;
        for (int i = 0; i < 3; ++i) ds[3 + 3 * t + i] = dv[i];
      }
    }
    const std::size_t off = 3 + 3 * n_tangents;
    for (std::size_t i = 0; i < integrands.size(); ++i) ds[off + i] = integrands[i](p);
  }
};

}  // namespace detail

/// Integrates X from p for time t (either sign), pushing tangent vectors (frame
/// coefficients) and accumulating integrals of scalar fields along the way.
///
/// Integration runs in the lifted chart; fields are frame coefficients and therefore
/// invariant under the gluing, so only the endpoint needs wrapping.
[[nodiscard]] inline FlowResult integrate_flow(const FrameModel& model, const VecField& x, const Vec3& p, double t,
                                               const std::vector<Vec3>& tangents = {},
                                               const std::vector<ScalarField>& integrands = {},
                                               const FlowOptions& opts = {}) {
  if (std::abs(t) > opts.horizon) throw FlowError("time exceeds the configured horizon", p, 0.0);
  FlowResult out;
  out.tangents = tangents;
  out.integrals.assign(integrands.size(), 0.0);
  if (t == 0.0) {
    out.lifted = p;
    out.point = model.wrap(p);
    return out;
  }
  namespace ode = boost::numeric::odeint;
  using State = detail::FlowSystem::State;
  State s(3 + 3 * tangents.size() + integrands.size(), 0.0);
  for (int i = 0; i < 3; ++i) s[i] = p[i];
  for (std::size_t k = 0; k < tangents.size(); ++k)
    for (int i = 0; i < 3; ++i) s[3 + 3 * k + i] = tangents[k][i];

  const detail::FlowSystem sys{model, x, tangents.size(), integrands};
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(opts.abs_tol, opts.rel_tol);
  Vec3 last = p;
  double last_t = 0.0;
  try {
    const double dt = std::copysign(std::min(opts.initial_step, std::abs(t)), t);
    ode::integrate_adaptive(stepper, sys, s, 0.0, t, dt, [&](const State& st, double tt) {
      last = Vec3(st[0], st[1], st[2]);
      last_t = tt;
      if (!std::isfinite(st[0]) || !std::isfinite(st[1]) || !std::isfinite(st[2]))
        throw FlowError("trajectory left the finite range", last, tt);
    });
  } catch (const ode::step_adjustment_error& e) {
    throw FlowError(std::string("step size underflow: ") + e.what(), last, last_t);
  } catch (const ode::no_progress_error& e) {
    throw FlowError(std::string("integrator made no progress: ") + e.what(), last, last_t);
  }
  out.lifted = Vec3(s[0], s[1], s[2]);
  out.point = model.wrap(out.lifted);
  for (std::size_t k = 0; k < tangents.size(); ++k)
    out.tangents[k] = Vec3(s[3 + 3 * k], s[4 + 3 * k], s[5 + 3 * k]);
  for (std::size_t i = 0; i < integrands.size(); ++i) out.integrals[i] = s[3 + 3 * tangents.size() + i];
  return out;
}

/// phi^t(p), wrapped into the fundamental domain.
[[nodiscard]] inline Vec3 flow_map(const VecField& x, const Vec3& p, double t, const FrameModel& model,
                                   const FlowOptions& opts = {}) {
  return integrate_flow(model, x, p, t, {}, {}, opts).point;
}

/// phi^t_* v for v at p (frame coefficients in, frame coefficients at phi^t(p) out).
[[nodiscard]] inline Vec3 tangent_push(const VecField& x, const Vec3& p, const Vec3& v, double t,
                                       const FrameModel& model, const FlowOptions& opts = {}) {
  return integrate_flow(model, x, p, t, {v}, {}, opts).tangents[0];
}

/// Differential of phi^t at p in frame coefficients (column j = push of f_j).
[[nodiscard]] inline Mat3 flow_jacobian(const VecField& x, const Vec3& p, double t, const FrameModel& model,
                                        const FlowOptions& opts = {}) {
  const FlowResult r =
      integrate_flow(model, x, p, t, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, {}, opts);
  Mat3 m;
  for (int j = 0; j < 3; ++j) m.col(j) = r.tangents[j];
  return m;
}

/// Number of sample points: grid nodes, or the single base point of a homogeneous model.
[[nodiscard]] inline std::size_t sample_count(const FrameModel& model) {
  return model.is_grid() ? model.node_count() : 1;
}
[[nodiscard]] inline Vec3 sample_point(const FrameModel& model, std::size_t n) {
  return model.is_grid() ? model.node(n) : model.domain().lower;
}

/// Field from per-sample values: interpolated on grids, constant on homogeneous models.
[[nodiscard]] inline ScalarField field_from_samples(const ModelPtr& model, std::vector<double> values) {
  if (!model->is_grid()) return ScalarField::constant(values.at(0));
  return ScalarField::grid(model, std::move(values));
}

/// Per-sample time-tau flow data, reused by every fixed-point iteration on the grid.
struct StepMaps {
  double tau = 0.0;
  std::vector<Vec3> image;       ///< phi^tau(p), wrapped
  std::vector<Mat3> jacobian;    ///< D phi^tau at p, frame coefficients
};

[[nodiscard]] inline StepMaps compute_step_maps(const FrameModel& model, const VecField& x, double tau,
                                                const FlowOptions& opts = {}) {
  StepMaps m;
  m.tau = tau;
  const std::size_t n = sample_count(model);
  m.image.resize(n);
  m.jacobian.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(model, i);
    const FlowResult r =
        integrate_flow(model, x, p, tau, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, {}, opts);
    m.image[i] = r.point;
    for (int j = 0; j < 3; ++j) m.jacobian[i].col(j) = r.tangents[j];
  }
  return m;
}

/// Per-sample integrals of f along trajectories over [0, t] (signed).
[[nodiscard]] inline std::vector<double> trajectory_integrals(const FrameModel& model, const VecField& x,
                                                              const ScalarField& f, double t,
                                                              const FlowOptions& opts = {}) {
  const std::size_t n = sample_count(model);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = integrate_flow(model, x, sample_point(model, i), t, {}, {f}, opts).integrals[0];
  return out;
}

}  // namespace anolab
