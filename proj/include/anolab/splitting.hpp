#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "anolab/calculus.hpp"
#include "anolab/fields.hpp"
#include "anolab/flow.hpp"

namespace anolab {

/// Raised when a splitting or rate computation cannot produce a meaningful result.
class SplittingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] inline VecField vec_field_from_samples(const ModelPtr& model, const std::vector<Vec3>& s) {
  VecField out;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> c(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) c[n] = s[n][k];
    out[k] = field_from_samples(model, std::move(c));
  }
  return out;
}

/// Angle between the lines spanned by a and b, in the metric g.
[[nodiscard]] inline double line_angle(const Vec3& a, const Vec3& b, const Mat3& g) {
  const double c = std::abs(a.dot(g * b)) / (metric_norm(a, g) * metric_norm(b, g));
  return std::acos(std::min(1.0, c));
}

struct SplittingParams {
  double step = 1.0;           ///< time of one iteration of the direction map
  int max_horizon_steps = 64;  ///< iterations before giving up
  double tol = 1e-7;           ///< direction change per doubling that counts as converged
  std::optional<Metric> metric;  ///< defaults to the model's base metric
  FlowOptions flow{};
};

/// Stable/unstable directions as eta-representatives (eta = X^perp in the metric).
struct Splitting {
  ModelPtr model;
  VecField x;
  Metric metric;
  VecField e_s, e_u;
  std::vector<Vec3> es_samples, eu_samples;

  bool converged = false;
  double horizon = 0.0;                 ///< T reached by the iteration
  std::vector<double> doubling_change;  ///< max line change between T and 2T (worst of s/u)
  double invariance_residual_u = 0.0;   ///< angle between pushed e_u and e_u over one step
  double invariance_residual_s = 0.0;
  double seed_disagreement = 0.0;
  double min_independence = 0.0;        ///< min det[e_s, e_u, X] in the metric volume
  std::vector<std::string> diagnostics;
};

namespace detail {

/// Flips samples so that neighbouring grid samples (through the gluing) agree in sign,
/// propagating from sample 0. Returns false if some edge still disagrees afterwards,
/// i.e. the line field is not orientable on the grid.
inline bool align_signs(const FrameModel& model, std::vector<Vec3>& f, const std::vector<Mat3>& gs) {
  if (!model.is_grid()) return true;
  const std::size_t n = f.size();
  const auto neighbours = [&](std::size_t i) {
    std::array<std::size_t, 6> out{};
    const auto idx = model.node_index(i);
    for (int a = 0; a < 3; ++a)
      for (int d = 0; d < 2; ++d) {
        auto q = idx;
        q[a] += d == 0 ? 1 : -1;
        const auto c = model.canonical_node(q[0], q[1], q[2]);
        out[2 * a + d] = model.flat_index(c[0], c[1], c[2]);
      }
    return out;
  };
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (const std::size_t j : neighbours(i)) {
      if (seen[j]) continue;
      if (f[i].dot(gs[i] * f[j]) < 0.0) f[j] = -f[j];
      seen[j] = 1;
      queue.push_back(j);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (const std::size_t j : neighbours(i))
      if (f[i].dot(gs[i] * f[j]) <= 0.0) return false;
  return true;
}

/// Interpolates a line field through its projector v v^T, so the sign of the samples
/// does not matter; evaluation returns a unit vector spanning the interpolated line.
class LineFieldInterp {
 public:
  LineFieldInterp(const ModelPtr& model, const std::vector<Vec3>& s) {
    int c = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b, ++c) {
        std::vector<double> v(s.size());
        for (std::size_t n = 0; n < s.size(); ++n) v[n] = s[n][a] * s[n][b] / s[n].squaredNorm();
        comp_[c] = field_from_samples(model, std::move(v));
      }
  }

  [[nodiscard]] Vec3 at(const Vec3& p) const {
    Mat3 m;
    int c = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b, ++c) m(a, b) = m(b, a) = comp_[c](p);
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(m);
    return es.eigenvectors().col(2);
  }

 private:
  std::array<ScalarField, 6> comp_;
};

/// Iterates v(p) <- normalize(eta(K(p)^-1 v(q(p)))) from several seeds; the result is the
/// direction field attracting under the given step maps.
struct DirectionIteration {
  std::vector<std::vector<Vec3>> fields;  // per seed
  std::vector<double> doubling_change;
  double last_change = 0.0;
  int steps = 0;
  bool converged = false;
};

inline DirectionIteration iterate_directions(const ModelPtr& model, const VecField& x, const Metric& metric,
                                             const StepMaps& back, const SplittingParams& prm) {
  const std::size_t n = sample_count(*model);
  // Irrational-looking ratios so no seed sits on an invariant subdominant direction by accident.
  const std::vector<Vec3> seeds{Vec3(1.0, 0.6180339887, 0.4142135624), Vec3(-0.3183098862, 1.0, 0.7071067812),
                                Vec3(0.5772156649, -0.2718281828, 1.0)};
  std::vector<Vec3> xs(n);
  std::vector<Mat3> gs(n), kinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    xs[i] = x.at(p);
    gs[i] = metric_at(metric, p);
    kinv[i] = back.jacobian[i].inverse();
  }
  const auto normalize = [&](const Vec3& v, std::size_t i) {
    const Vec3 e = eta_project(v, xs[i], gs[i]);
    return Vec3(e / metric_norm(e, gs[i]));
  };

  DirectionIteration it;
  it.fields.resize(seeds.size(), std::vector<Vec3>(n));
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) it.fields[s][i] = normalize(seeds[s], i);

  std::vector<std::vector<Vec3>> checkpoint = it.fields;
  int next_check = 2;
  for (int step = 1; step <= prm.max_horizon_steps; ++step) {
    double change = 0.0;
    for (auto& f : it.fields) {
      const LineFieldInterp interp(model, f);
      std::vector<Vec3> next(n);
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = normalize(kinv[i] * interp.at(back.image[i]), i);
        change = std::max(change, line_angle(next[i], f[i], gs[i]));
      }
      f = std::move(next);
    }
    it.last_change = change;
    it.steps = step;
    if (step == next_check) {
      double d = 0.0;
      for (std::size_t s = 0; s < it.fields.size(); ++s)
        for (std::size_t i = 0; i < n; ++i) d = std::max(d, line_angle(it.fields[s][i], checkpoint[s][i], gs[i]));
      it.doubling_change.push_back(d);
      checkpoint = it.fields;
      next_check *= 2;
      if (d < prm.tol) {
        it.converged = true;
        break;
      }
    }
  }
  return it;
}

}  // namespace detail

/// Computes the splitting by iterating the linearized flow on direction fields.
///
/// e_u at p is the limit of pushes of a seed from phi^-T(p) to p (the forward-attracting
/// direction); e_s is the same construction for the time-reversed flow. Both are
/// eta-projected, unit-normalized in the metric, and signed so that (e_s, e_u, X) is
/// positively oriented.
[[nodiscard]] inline Splitting compute_splitting(const VecField& x, const ModelPtr& model,
                                                 const SplittingParams& prm = {}) {
  Splitting out;
  out.model = model;
  out.x = x;
  out.metric = prm.metric.value_or(model->base_metric);
  const std::size_t n = sample_count(*model);

  const StepMaps back = compute_step_maps(*model, x, -prm.step, prm.flow);
  const StepMaps fwd = compute_step_maps(*model, x, prm.step, prm.flow);
  const detail::DirectionIteration iu = detail::iterate_directions(model, x, out.metric, back, prm);
  const detail::DirectionIteration is = detail::iterate_directions(model, x, out.metric, fwd, prm);

  out.converged = iu.converged && is.converged;
  out.horizon = prm.step * std::max(iu.steps, is.steps);
  for (std::size_t k = 0; k < std::max(iu.doubling_change.size(), is.doubling_change.size()); ++k) {
    const double a = k < iu.doubling_change.size() ? iu.doubling_change[k] : 0.0;
    const double b = k < is.doubling_change.size() ? is.doubling_change[k] : 0.0;
    out.doubling_change.push_back(std::max(a, b));
  }
  out.invariance_residual_u = iu.last_change;
  out.invariance_residual_s = is.last_change;
  if (!out.converged)
    out.diagnostics.push_back("direction iteration did not converge within the horizon; domination may fail");

  std::vector<Vec3> eu = iu.fields[0], es = is.fields[0];
  std::vector<Mat3> gs(n);
  std::vector<Vec3> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    gs[i] = metric_at(out.metric, sample_point(*model, i));
    xs[i] = x.at(sample_point(*model, i));
  }
  for (std::size_t s = 1; s < iu.fields.size(); ++s)
    for (std::size_t i = 0; i < n; ++i)
      out.seed_disagreement = std::max({out.seed_disagreement, line_angle(iu.fields[s][i], eu[i], gs[i]),
                                        line_angle(is.fields[s][i], es[i], gs[i])});
  if (out.seed_disagreement > std::max(1e3 * prm.tol, 1e-6))
    out.diagnostics.push_back("seeds converged to different lines (disagreement " +
                              std::to_string(out.seed_disagreement) + ")");

  // Continuity across neighbouring samples, including through the gluing.
  if (!detail::align_signs(*model, eu, gs) || !detail::align_signs(*model, es, gs))
    throw SplittingError("stable/unstable direction fields cannot be oriented consistently "
                         "(non-orientable line field or unresolved splitting)");
  // Sign conventions: largest e_u component positive at the base sample, then orient e_s.
  {
    Eigen::Index k;
    eu[0].cwiseAbs().maxCoeff(&k);
    if (eu[0][k] < 0)
      for (auto& v : eu) v = -v;
    Mat3 b;
    b << es[0], eu[0], xs[0];
    if (b.determinant() < 0)
      for (auto& v : es) v = -v;
  }
  out.min_independence = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Mat3 b;
    b << es[i], eu[i], xs[i];
    out.min_independence = std::min(out.min_independence, b.determinant() * std::sqrt(gs[i].determinant()));
  }
  if (out.min_independence <= 0.0) out.diagnostics.push_back("(e_s, e_u, X) is not positively oriented everywhere");

  out.es_samples = es;
  out.eu_samples = eu;
  out.e_s = vec_field_from_samples(model, es);
  out.e_u = vec_field_from_samples(model, eu);
  return out;
}

/// Splitting given analytically (frame coefficients); used for ground-truth comparisons.
[[nodiscard]] inline Splitting declared_splitting(const VecField& x, const VecField& e_s, const VecField& e_u,
                                                  const ModelPtr& model) {
  Splitting out;
  out.model = model;
  out.x = x;
  out.metric = model->base_metric;
  out.e_s = e_s;
  out.e_u = e_u;
  out.converged = true;
  const std::size_t n = sample_count(*model);
  out.min_independence = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    out.es_samples.push_back(e_s.at(p));
    out.eu_samples.push_back(e_u.at(p));
    Mat3 b;
    b << e_s.at(p), e_u.at(p), x.at(p);
    out.min_independence = std::min(out.min_independence, b.determinant());
  }
  return out;
}

enum class RateMethod { bracket, finite_time };

inline const char* to_string(RateMethod m) { return m == RateMethod::bracket ? "bracket" : "finite-time"; }

/// Expansion rates and shears: -L_X e_s = r_s e_s - q_s X, -L_X e_u = r_u e_u - q_u X.
struct Rates {
  ScalarField r_s, r_u, q_s, q_u;
  std::vector<double> rs, ru, qs, qu;  ///< per-sample values
  RateMethod method = RateMethod::bracket;
  double step = 0.0;
  std::string metric_tag;
  double off_plane_residual = 0.0;  ///< max |e_s-component of L_X e_u| and vice versa
};

struct RateOptions {
  double step = 1e-3;  ///< finite-time step; Richardson-extrapolated with step/2
  bool require_converged = true;
  FlowOptions flow{};
};

/// Pointwise coefficients of v on the basis (e_s, e_u, X).
[[nodiscard]] inline Vec3 splitting_coefficients(const Splitting& sp, const Vec3& p, const Vec3& v) {
  Mat3 b;
  b << sp.e_s.at(p), sp.e_u.at(p), sp.x.at(p);
  return b.partialPivLu().solve(v);
}

[[nodiscard]] inline Rates expansion_rates(const Splitting& sp, RateMethod method, const RateOptions& opts = {}) {
  if (opts.require_converged && !sp.converged)
    throw SplittingError("splitting did not converge; expansion rates would be meaningless");
  const ModelPtr& model = sp.model;
  const std::size_t n = sample_count(*model);
  Rates r;
  r.method = method;
  r.metric_tag = sp.metric.tag;
  r.rs.resize(n);
  r.ru.resize(n);
  r.qs.resize(n);
  r.qu.resize(n);
  if (method == RateMethod::bracket) {
    const VecField bu = lie_bracket(sp.x, sp.e_u, *model);
    const VecField bs = lie_bracket(sp.x, sp.e_s, *model);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = sample_point(*model, i);
      const Vec3 cu = splitting_coefficients(sp, p, bu.at(p));
      const Vec3 cs = splitting_coefficients(sp, p, bs.at(p));
      r.ru[i] = -cu[1];
      r.qu[i] = cu[2];
      r.rs[i] = -cs[0];
      r.qs[i] = cs[2];
      r.off_plane_residual = std::max({r.off_plane_residual, std::abs(cu[0]), std::abs(cs[1])});
    }
  } else {
    r.step = opts.step;
    // phi^t_* e(p) = A(t) e(phi^t p) + B(t) X + ...; r = d/dt ln|A|, q = -dB/dt at t = 0.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = sample_point(*model, i);
      const std::vector<Vec3> tangents{sp.e_s.at(p), sp.e_u.at(p)};
      const auto coeffs = [&](double t) {
        const FlowResult fr = integrate_flow(*model, sp.x, p, t, tangents, {}, opts.flow);
        return std::pair{splitting_coefficients(sp, fr.point, fr.tangents[0]),
                         splitting_coefficients(sp, fr.point, fr.tangents[1])};
      };
      const auto derivative = [&](double h) {
        const auto [sp_, up_] = coeffs(h);
        const auto [sm_, um_] = coeffs(-h);
        return std::array<double, 4>{(std::log(std::abs(sp_[0])) - std::log(std::abs(sm_[0]))) / (2 * h),
                                     (std::log(std::abs(up_[1])) - std::log(std::abs(um_[1]))) / (2 * h),
                                     -(sp_[2] - sm_[2]) / (2 * h), -(up_[2] - um_[2]) / (2 * h)};
      };
      const auto d1 = derivative(opts.step), d2 = derivative(opts.step / 2);
      std::array<double, 4> d;
      for (int k = 0; k < 4; ++k) d[k] = (4.0 * d2[k] - d1[k]) / 3.0;
      r.rs[i] = d[0];
      r.ru[i] = d[1];
      r.qs[i] = d[2];
      r.qu[i] = d[3];
    }
  }
  r.r_s = field_from_samples(model, r.rs);
  r.r_u = field_from_samples(model, r.ru);
  r.q_s = field_from_samples(model, r.qs);
  r.q_u = field_from_samples(model, r.qu);
  return r;
}

/// Constant rates, e.g. declared ground truth.
[[nodiscard]] inline Rates constant_rates(const ModelPtr& model, double rs, double ru, const std::string& tag) {
  Rates r;
  const std::size_t n = sample_count(*model);
  r.rs.assign(n, rs);
  r.ru.assign(n, ru);
  r.qs.assign(n, 0.0);
  r.qu.assign(n, 0.0);
  r.r_s = ScalarField::constant(rs);
  r.r_u = ScalarField::constant(ru);
  r.q_s = r.q_u = ScalarField::constant(0.0);
  r.metric_tag = tag;
  return r;
}

/// Rates of fX from rates of X (pointwise scaling by f at each sample).
[[nodiscard]] inline Rates rescale_rates(const Rates& r, const ModelPtr& model, const ScalarField& f) {
  Rates out = r;
  for (std::size_t i = 0; i < out.rs.size(); ++i) {
    const double s = f(sample_point(*model, i));
    out.rs[i] *= s;
    out.ru[i] *= s;
  }
  out.r_s = field_from_samples(model, out.rs);
  out.r_u = field_from_samples(model, out.ru);
  return out;
}

enum class Classification { anosov, projectively_anosov, inconclusive };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::anosov: return "anosov";
    case Classification::projectively_anosov: return "projectively-anosov";
    default: return "inconclusive";
  }
}

struct Verdict {
  double projective_margin = 0.0;  ///< inf (r_u - r_s)
  double anosov_margin = 0.0;      ///< min(inf r_u, inf -r_s)
  Classification classification = Classification::inconclusive;
  double tolerance = 0.0;
  std::size_t argmin_projective = 0, argmin_anosov = 0;  ///< sample indices
};

[[nodiscard]] inline Verdict classify_flow(const Rates& r, double tol) {
  Verdict v;
  v.tolerance = tol;
  v.projective_margin = v.anosov_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.rs.size(); ++i) {
    const double pm = r.ru[i] - r.rs[i];
    const double am = std::min(r.ru[i], -r.rs[i]);
    if (pm < v.projective_margin) {
      v.projective_margin = pm;
      v.argmin_projective = i;
    }
    if (am < v.anosov_margin) {
      v.anosov_margin = am;
      v.argmin_anosov = i;
    }
  }
  if (v.anosov_margin > tol)
    v.classification = Classification::anosov;
  else if (v.projective_margin > tol)
    v.classification = Classification::projectively_anosov;
  return v;
}

/// Time-averaged pullback metric (1/T) int_0^T phi^{t*} g dt, sampled on the model.
struct AveragedMetric {
  Metric metric;
  double quadrature_change = 0.0;   ///< max relative change between the last two refinements
  double x_derivative_bound = 0.0;  ///< sup |X·g_T| estimated by differencing along the flow
};

[[nodiscard]] inline AveragedMetric averaged_metric(const Metric& g, const VecField& x, double t_avg,
                                                    const ModelPtr& model, int panels = 0,
                                                    const FlowOptions& flow = {}, double quad_tol = 1e-6) {
  if (!(t_avg > 0.0)) throw std::invalid_argument("averaging time must be positive");
  const std::size_t n = sample_count(*model);
  // Composite 4-point Gauss-Legendre.
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  const auto average_at = [&](const Vec3& p, int m) {
    Mat3 acc = Mat3::Zero();
    Vec3 cur = p;
    std::vector<Vec3> tangents{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    double t_cur = 0.0;
    const double width = t_avg / m;
    for (int panel = 0; panel < m; ++panel) {
      for (int q = 0; q < 4; ++q) {
        const double t = width * (panel + 0.5 * (gx[q] + 1.0));
        const FlowResult fr = integrate_flow(*model, x, cur, t - t_cur, tangents, {}, flow);
        cur = fr.lifted;
        tangents = fr.tangents;
        t_cur = t;
        Mat3 pm;
        for (int j = 0; j < 3; ++j) pm.col(j) = tangents[j];
        acc += 0.5 * width * gw[q] * (pm.transpose() * metric_at(g, fr.point) * pm);
      }
    }
    return Mat3(acc / t_avg);
  };
  int m = panels > 0 ? panels : std::max(2, static_cast<int>(std::ceil(2.0 * t_avg)));
  AveragedMetric out;
  std::vector<Mat3> samples(n), refined(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = average_at(sample_point(*model, i), m);
  for (int attempt = 0; attempt < 4; ++attempt) {
    m *= 2;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      refined[i] = average_at(sample_point(*model, i), m);
      change = std::max(change, (refined[i] - samples[i]).norm() / refined[i].norm());
    }
    samples = refined;
    out.quadrature_change = change;
    if (change < quad_tol) break;
  }
  if (out.quadrature_change >= quad_tol)
    throw SplittingError("metric averaging quadrature did not converge (relative change " +
                         std::to_string(out.quadrature_change) + ")");

  std::array<ScalarField, 6> comp;
  const int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (int c = 0; c < 6; ++c) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = samples[i](ij[c][0], ij[c][1]);
    comp[c] = field_from_samples(model, std::move(v));
  }
  out.metric.tag = g.tag + "|averaged(T=" + std::to_string(t_avg) + ")";
  out.metric.at = [comp](const Vec3& p) {
    Mat3 m;
    m << comp[0](p), comp[1](p), comp[2](p), comp[1](p), comp[3](p), comp[4](p), comp[2](p), comp[4](p), comp[5](p);
    return m;
  };
  const double h = 1e-3;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    const Vec3 a = flow_map(x, p, h, *model, flow), b = flow_map(x, p, -h, *model, flow);
    out.x_derivative_bound = std::max(out.x_derivative_bound, (out.metric.at(a) - out.metric.at(b)).norm() / (2 * h));
  }
  return out;
}

}  // namespace anolab
