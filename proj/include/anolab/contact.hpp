#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anolab/calculus.hpp"
#include "anolab/fields.hpp"
#include "anolab/flow.hpp"
#include "anolab/splitting.hpp"

namespace anolab {

/// Raised when a contact-geometric construction cannot be carried out (non-contact input,
/// violated orientation contract, unattainable margins).
class ContactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 1-form from per-sample coefficients (grid-interpolated, or constant on homogeneous models).
[[nodiscard]] inline OneForm one_form_from_samples(const ModelPtr& model, const std::vector<Vec3>& s) {
  return OneForm(vec_field_from_samples(model, s));
}

/// Evaluates a scalar field on every sample point of the model.
[[nodiscard]] inline std::vector<double> sample_values(const ScalarField& f, const FrameModel& model) {
  const std::size_t n = sample_count(model);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(sample_point(model, i));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Contact densities

struct ContactDensity {
  ScalarField density;  ///< (α∧dα)(f_1, f_2, f_3)
  double min = 0.0, max = 0.0;
  int sign = 0;         ///< +1 positive contact, -1 negative contact, 0 vanishes or changes sign
  double margin = 0.0;  ///< min |density| when the sign is definite, else 0
  std::size_t argmin = 0;
};

/// α∧dα with a sign summary over the sample points.
[[nodiscard]] inline ContactDensity contact_density(const OneForm& alpha, const FrameModel& model) {
  ContactDensity out;
  out.density = wedge_density(alpha, exterior_derivative(alpha, model), model);
  const std::vector<double> v = sample_values(out.density, model);
  out.min = *std::min_element(v.begin(), v.end());
  out.max = *std::max_element(v.begin(), v.end());
  out.sign = out.min > 0.0 ? 1 : (out.max < 0.0 ? -1 : 0);
  if (out.sign != 0) {
    out.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i]) < out.margin) {
        out.margin = std::abs(v[i]);
        out.argmin = i;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Coframes dual to a splitting

/// Per-sample dual coframe of (e_s, e_u, X): rows are alpha_s, alpha_u, alpha_X.
[[nodiscard]] inline std::vector<Mat3> dual_coframes(const Splitting& sp) {
  const std::size_t n = sample_count(*sp.model);
  std::vector<Mat3> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*sp.model, i);
    Mat3 b;
    b << sp.e_s.at(p), sp.e_u.at(p), sp.x.at(p);
    out[i] = b.inverse();
  }
  return out;
}

struct DualForms {
  OneForm alpha_s, alpha_u;
  double cond1_margin = 0.0;  ///< inf [X·g_u + (inf r_u) g_u], g_u = alpha_u(e_u)
  double cond2_margin = 0.0;  ///< inf -[X·g_s + (sup r_s) g_s], g_s = alpha_s(e_s)
  double smoothing_value_bound = 0.0;
  double smoothing_derivative_bound = 0.0;
};

/// The exact duals of the splitting; nothing is smoothed when the coefficients already are.
[[nodiscard]] inline std::pair<OneForm, OneForm> exact_duals(const Splitting& sp) {
  const ModelPtr& model = sp.model;
  if (!model->is_grid()) {
    // Homogeneous: constant fields, exact algebra.
    const Mat3 d = dual_coframes(sp)[0];
    return {OneForm::constant(d.row(0).transpose()), OneForm::constant(d.row(1).transpose())};
  }
  const std::vector<Mat3> d = dual_coframes(sp);
  std::vector<Vec3> s(d.size()), u(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    s[i] = d[i].row(0).transpose();
    u[i] = d[i].row(1).transpose();
  }
  return {one_form_from_samples(model, s), one_form_from_samples(model, u)};
}

/// Smoothed forms alpha_s^0, alpha_u^0 killing X, with the margins of the two dynamical
/// conditions the synthesis relies on. Throws when either margin is not positive.
[[nodiscard]] inline DualForms dual_coframe_forms(const Splitting& sp, const Rates& rates, double eps) {
  const ModelPtr& model = sp.model;
  DualForms out;
  auto [as, au] = exact_duals(sp);
  // Smooth the coefficient functions; the coframe construction keeps alpha(X) = 0 exact
  // on the sample points.
  for (int k = 0; k < 3; ++k) {
    for (OneForm* a : {&as, &au}) {
      const SmoothingResult r = smooth_with_flow_control((*a)[k], sp.x, eps, model);
      (*a)[k] = r.field;
      out.smoothing_value_bound = std::max(out.smoothing_value_bound, r.value_bound);
      out.smoothing_derivative_bound = std::max(out.smoothing_derivative_bound, r.derivative_bound);
    }
  }
  out.alpha_s = as;
  out.alpha_u = au;
  const double inf_ru = *std::min_element(rates.ru.begin(), rates.ru.end());
  const double sup_rs = *std::max_element(rates.rs.begin(), rates.rs.end());
  const ScalarField gu = pair(au, sp.e_u), gs = pair(as, sp.e_s);
  const ScalarField xgu = directional(sp.x, gu, *model), xgs = directional(sp.x, gs, *model);
  out.cond1_margin = out.cond2_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample_count(*model); ++i) {
    const Vec3 p = sample_point(*model, i);
    out.cond1_margin = std::min(out.cond1_margin, xgu(p) + inf_ru * gu(p));
    out.cond2_margin = std::min(out.cond2_margin, -(xgs(p) + sup_rs * gs(p)));
  }
  if (!(out.cond1_margin > 0.0) || !(out.cond2_margin > 0.0))
    throw ContactError("dual coframe conditions fail (cond1 margin " + std::to_string(out.cond1_margin) +
                       ", cond2 margin " + std::to_string(out.cond2_margin) + ")");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Normalized pullbacks

struct Pullback {
  OneForm alpha;                 ///< I^T phi^{T*} alpha^0
  ScalarField normalizer;        ///< I^T = exp(-int_0^T r(phi^t p) dt)
  std::vector<Vec3> samples;     ///< coefficients of alpha at the sample points
  std::vector<double> normalizer_samples;
  std::vector<Vec3> images;      ///< phi^T(p)
  double claim1_residual = 0.0;  ///< max |alpha^T(e(p)) - alpha^0(e(phi^T p))|, if e was given
  double claim3_residual = 0.0;  ///< max |X·I^T - (r(p) - r(phi^T p)) I^T|
};

/// alpha^T = I^T phi^{T*} alpha^0 with I^T = exp(-int_0^T r), for T of either sign.
///
/// Each sample is integrated once: the Jacobian of phi^T (frame columns) and the integral
/// of r come from the same trajectory.
[[nodiscard]] inline Pullback pullback_normalized(const OneForm& alpha0, const VecField& x, double t,
                                                  const ScalarField& r, const ModelPtr& model,
                                                  const std::optional<VecField>& e = std::nullopt,
                                                  const FlowOptions& flow = {}) {
  const std::size_t n = sample_count(*model);
  Pullback out;
  out.samples.resize(n);
  out.normalizer_samples.resize(n);
  out.images.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    const FlowResult fr =
        integrate_flow(*model, x, p, t, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}, {r}, flow);
    const double norm = std::exp(-fr.integrals[0]);
    const Vec3 a0 = alpha0.at(fr.point);
    Vec3 a;
    for (int j = 0; j < 3; ++j) a[j] = norm * a0.dot(fr.tangents[j]);
    out.samples[i] = a;
    out.normalizer_samples[i] = norm;
    out.images[i] = fr.point;
    if (e) out.claim1_residual = std::max(out.claim1_residual, std::abs(a.dot(e->at(p)) - a0.dot(e->at(fr.point))));
  }
  out.alpha = one_form_from_samples(model, out.samples);
  out.normalizer = field_from_samples(model, out.normalizer_samples);
  if (model->is_grid()) {
    const ScalarField xi = directional(x, out.normalizer, *model);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = sample_point(*model, i);
      const double expected = (r(p) - r(out.images[i])) * out.normalizer_samples[i];
      out.claim3_residual = std::max(out.claim3_residual, std::abs(xi(p) - expected));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Bi-contact synthesis

struct BiContact {
  OneForm alpha_minus, alpha_plus;
  ScalarField density_minus, density_plus;
  double margin_plus = 0.0;   ///< inf alpha_+∧dalpha_+ over the samples
  double margin_minus = 0.0;  ///< inf -alpha_-∧dalpha_- over the samples
  double transversality_margin = 0.0;  ///< min sine of the angle between the kernels
  double x_in_kernels = 0.0;           ///< max |alpha_±(X)|
  std::string provenance;              ///< "synthesized(T=...)" or "model-supplied"
  bool contact = false;                ///< both margins positive and kernels transverse
  std::vector<std::string> diagnostics;
};

/// Convergence diagnostics of the approximating forms at one horizon.
struct ApproxDiagnostics {
  double t = 0.0;
  double angle_l1 = 0.0;      ///< max angle between ker alpha_u^T ∩ eta and e_s (in e_s/e_u coordinates)
  double angle_l1_s = 0.0;    ///< same for ker alpha_s^T and e_u
  double max_abs_l2_u = 0.0;  ///< max |alpha_u^T∧dalpha_u^T|
  double max_abs_l2_s = 0.0;  ///< max |alpha_s^T∧dalpha_s^T|
  double max_l3_us = 0.0;     ///< max alpha_u^T∧dalpha_s^T (must be negative)
  double max_l3_su = 0.0;     ///< max alpha_s^T∧dalpha_u^T (must be negative)
  double normalizer_ratio_min = 0.0;  ///< min over samples of I_u^T / I_s^T (forward normalizers)
  double normalizer_ratio_max = 0.0;
};

struct ApproxForms {
  OneForm alpha_u0, alpha_s0;
  OneForm alpha_uT, alpha_sT;
  ScalarField I_uT, I_sT;  ///< I_u^T (forward) and I_s^{-T} (backward) normalizers used
  double t = 0.0;
  double cond1_margin = 0.0, cond2_margin = 0.0;
  double claim1_residual_u = 0.0, claim1_residual_s = 0.0;
  double claim3_residual_u = 0.0, claim3_residual_s = 0.0;
  ApproxDiagnostics diagnostics;
};

struct SynthesisOptions {
  double smoothing_eps = 1e-2;
  double tol = 1e-9;        ///< l3 diagnostics must be below -tol for the automatic horizon
  double max_horizon = 64;  ///< doubling search limit
  FlowOptions flow{};
};

/// Sine of the angle between two covectors in the dual metric at p.
[[nodiscard]] inline double covector_angle_sine(const Vec3& a, const Vec3& b, const Mat3& g) {
  const Mat3 gi = g.inverse();
  const double aa = a.dot(gi * a), bb = b.dot(gi * b), ab = a.dot(gi * b);
  return std::sqrt(std::max(0.0, 1.0 - ab * ab / (aa * bb)));
}

namespace detail {

inline double max_of(const ScalarField& f, const FrameModel& model) {
  const std::vector<double> v = sample_values(f, model);
  return *std::max_element(v.begin(), v.end());
}

inline double max_abs_of(const ScalarField& f, const FrameModel& model) {
  double m = 0.0;
  for (double v : sample_values(f, model)) m = std::max(m, std::abs(v));
  return m;
}

/// Largest angle between ker(alpha) ∩ eta and the direction `target`, measured in the
/// (e_s, e_u) coordinates of eta; `other` is the second basis vector.
inline double kernel_angle(const OneForm& alpha, const VecField& target, const VecField& other,
                           const FrameModel& model) {
  double m = 0.0;
  for (std::size_t i = 0; i < sample_count(model); ++i) {
    const Vec3 p = sample_point(model, i);
    const Vec3 a = alpha.at(p);
    m = std::max(m, std::atan2(std::abs(a.dot(target.at(p))), std::abs(a.dot(other.at(p)))));
  }
  return m;
}

}  // namespace detail

/// Assembles (alpha_-, alpha_+) = ((alpha_u + alpha_s)/2, (alpha_u - alpha_s)/2) with densities and margins.
[[nodiscard]] inline BiContact assemble_bicontact(const OneForm& alpha_u, const OneForm& alpha_s, const VecField& x,
                                                  const ModelPtr& model, std::string provenance) {
  BiContact b;
  b.alpha_plus = linear_combination(0.5, alpha_u, -0.5, alpha_s);
  b.alpha_minus = linear_combination(0.5, alpha_u, 0.5, alpha_s);
  b.provenance = std::move(provenance);
  const ContactDensity dp = contact_density(b.alpha_plus, *model);
  const ContactDensity dm = contact_density(b.alpha_minus, *model);
  b.density_plus = dp.density;
  b.density_minus = dm.density;
  b.margin_plus = dp.min;
  b.margin_minus = -dm.max;
  b.transversality_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample_count(*model); ++i) {
    const Vec3 p = sample_point(*model, i);
    const Vec3 ap = b.alpha_plus.at(p), am = b.alpha_minus.at(p), xv = x.at(p);
    b.transversality_margin =
        std::min(b.transversality_margin, covector_angle_sine(ap, am, metric_at(model->base_metric, p)));
    b.x_in_kernels = std::max({b.x_in_kernels, std::abs(ap.dot(xv)), std::abs(am.dot(xv))});
  }
  b.contact = b.margin_plus > 0.0 && b.margin_minus > 0.0 && b.transversality_margin > 0.0;
  if (!b.contact)
    b.diagnostics.push_back("not a bi-contact structure: margins (+) " + std::to_string(b.margin_plus) + ", (-) " +
                            std::to_string(b.margin_minus));
  return b;
}

/// Bi-contact structure from a pair of initial forms at horizon T.
///
/// alpha_u^T = I_u^T phi^{T*} alpha_u^0 and alpha_s^T = I_s^{-T} phi^{-T*} alpha_s^0; both
/// kill X because the initial forms do and the flow preserves X.
[[nodiscard]] inline std::pair<BiContact, ApproxForms> synthesize_from(const Splitting& sp, const Rates& rates,
                                                                      double t, const OneForm& alpha_u0,
                                                                      const OneForm& alpha_s0,
                                                                      const SynthesisOptions& opts = {}) {
  if (t < 0.0) throw std::invalid_argument("synthesis horizon must be non-negative");
  const ModelPtr& model = sp.model;
  const Pullback pu = pullback_normalized(alpha_u0, sp.x, t, rates.r_u, model, sp.e_u, opts.flow);
  const Pullback ps = pullback_normalized(alpha_s0, sp.x, -t, rates.r_s, model, sp.e_s, opts.flow);

  ApproxForms ap;
  ap.alpha_u0 = alpha_u0;
  ap.alpha_s0 = alpha_s0;
  ap.alpha_uT = pu.alpha;
  ap.alpha_sT = ps.alpha;
  ap.I_uT = pu.normalizer;
  ap.I_sT = ps.normalizer;
  ap.t = t;
  ap.claim1_residual_u = pu.claim1_residual;
  ap.claim1_residual_s = ps.claim1_residual;
  ap.claim3_residual_u = pu.claim3_residual;
  ap.claim3_residual_s = ps.claim3_residual;

  ApproxDiagnostics& d = ap.diagnostics;
  d.t = t;
  d.angle_l1 = detail::kernel_angle(pu.alpha, sp.e_s, sp.e_u, *model);
  d.angle_l1_s = detail::kernel_angle(ps.alpha, sp.e_u, sp.e_s, *model);
  const TwoForm du = exterior_derivative(pu.alpha, *model), ds = exterior_derivative(ps.alpha, *model);
  d.max_abs_l2_u = detail::max_abs_of(wedge_density(pu.alpha, du, *model), *model);
  d.max_abs_l2_s = detail::max_abs_of(wedge_density(ps.alpha, ds, *model), *model);
  d.max_l3_us = detail::max_of(wedge_density(pu.alpha, ds, *model), *model);
  d.max_l3_su = detail::max_of(wedge_density(ps.alpha, du, *model), *model);
  // I_u^T / I_s^T with both normalizers taken forward: exp(int_0^T (r_s - r_u)).
  const std::vector<double> ratio = trajectory_integrals(*model, sp.x, rates.r_s - rates.r_u, t, opts.flow);
  d.normalizer_ratio_min = std::exp(*std::min_element(ratio.begin(), ratio.end()));
  d.normalizer_ratio_max = std::exp(*std::max_element(ratio.begin(), ratio.end()));

  BiContact b = assemble_bicontact(pu.alpha, ps.alpha, sp.x, model, "synthesized(T=" + std::to_string(t) + ")");
  return {std::move(b), std::move(ap)};
}

/// Synthesis from the smoothed dual coframe. A negative horizon selects the smallest T in
/// 1, 2, 4, ... for which both l3 diagnostics are below -tol and the result is bi-contact.
[[nodiscard]] inline std::pair<BiContact, ApproxForms> synthesize_bicontact(const Splitting& sp, const Rates& rates,
                                                                           double t = -1.0,
                                                                           const SynthesisOptions& opts = {}) {
  const Verdict v = classify_flow(rates, sp.model->default_tolerance());
  if (v.classification == Classification::inconclusive)
    throw ContactError("synthesis needs a projectively Anosov flow (projective margin " +
                       std::to_string(v.projective_margin) + ")");
  const DualForms duals = dual_coframe_forms(sp, rates, opts.smoothing_eps);
  const auto run = [&](double horizon) {
    auto out = synthesize_from(sp, rates, horizon, duals.alpha_u, duals.alpha_s, opts);
    out.second.cond1_margin = duals.cond1_margin;
    out.second.cond2_margin = duals.cond2_margin;
    return out;
  };
  if (t >= 0.0) return run(t);
  for (double h = 1.0;; h *= 2.0) {
    auto out = run(h);
    const ApproxDiagnostics& d = out.second.diagnostics;
    if ((d.max_l3_us < -opts.tol && d.max_l3_su < -opts.tol && out.first.contact) || 2.0 * h > opts.max_horizon) {
      if (!out.first.contact) out.first.diagnostics.push_back("automatic horizon search hit its limit");
      return out;
    }
  }
}

/// The bi-contact structure made of the exact duals of a splitting (T = 0, no smoothing).
[[nodiscard]] inline BiContact bicontact_from_duals(const Splitting& sp) {
  const auto [as, au] = exact_duals(sp);
  return assemble_bicontact(au, as, sp.x, sp.model, "exact-duals");
}

/// A bi-contact structure given by the model itself.
[[nodiscard]] inline BiContact bicontact_from_forms(const OneForm& alpha_minus, const OneForm& alpha_plus,
                                                    const VecField& x, const ModelPtr& model) {
  // (alpha_u, alpha_s) = (alpha_- + alpha_+, alpha_- - alpha_+) inverts the half-sum convention.
  return assemble_bicontact(linear_combination(1.0, alpha_minus, 1.0, alpha_plus),
                            linear_combination(1.0, alpha_minus, -1.0, alpha_plus), x, model, "model-supplied");
}

// ---------------------------------------------------------------------------------------------
// Dynamical sign

enum class DynSign { negative = -1, tangent = 0, positive = 1 };

inline const char* to_string(DynSign s) {
  return s == DynSign::positive ? "positive" : (s == DynSign::negative ? "negative" : "tangent");
}

struct SignField {
  std::vector<DynSign> signs;    ///< per sample
  std::vector<double> product;   ///< a*b of the normalized (e_s, e_u) components
  std::vector<double> a, b;      ///< normalized e_s and e_u components
  std::size_t positive = 0, negative = 0, tangent = 0;

  [[nodiscard]] bool all(DynSign s) const {
    return std::all_of(signs.begin(), signs.end(), [s](DynSign v) { return v == s; });
  }
};

namespace detail {

inline void classify_components(SignField& out, double a, double b, double tol) {
  const double r = std::hypot(a, b);
  if (r == 0.0) {
    a = b = 0.0;
  } else {
    a /= r;
    b /= r;
  }
  out.a.push_back(a);
  out.b.push_back(b);
  out.product.push_back(a * b);
  DynSign s = DynSign::tangent;
  if (std::abs(a) > tol && std::abs(b) > tol) s = a * b > 0 ? DynSign::positive : DynSign::negative;
  out.signs.push_back(s);
  (s == DynSign::positive ? out.positive : (s == DynSign::negative ? out.negative : out.tangent))++;
}

}  // namespace detail

/// Sign of a vector field: its eta-part a e_s + b e_u is positive iff ab > 0.
[[nodiscard]] inline SignField dynamical_sign(const VecField& v, const Splitting& sp, double tol = 1e-9) {
  SignField out;
  for (std::size_t i = 0; i < sample_count(*sp.model); ++i) {
    const Vec3 p = sample_point(*sp.model, i);
    const Vec3 c = splitting_coefficients(sp, p, v.at(p));
    detail::classify_components(out, c[0], c[1], tol);
  }
  return out;
}

/// Sign of the plane field ker(alpha) (which must contain X): the sign of its line in eta.
[[nodiscard]] inline SignField dynamical_sign(const OneForm& alpha, const Splitting& sp, double tol = 1e-9) {
  SignField out;
  for (std::size_t i = 0; i < sample_count(*sp.model); ++i) {
    const Vec3 p = sample_point(*sp.model, i);
    const Vec3 a = alpha.at(p);
    const Vec3 xv = sp.x.at(p);
    if (std::abs(a.dot(xv)) > 1e-6 * a.norm() * xv.norm())
      throw ContactError("plane field does not contain X");
    // ker(alpha) ∩ eta is spanned by alpha(e_u) e_s - alpha(e_s) e_u.
    detail::classify_components(out, a.dot(sp.e_u.at(p)), -a.dot(sp.e_s.at(p)), tol);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Angle rotation along the flow

struct RotationCheck {
  std::vector<double> rate;  ///< X·theta at each sample
  double min = 0.0, max = 0.0;
  int sign = 0;  ///< -1 rotates towards e_s everywhere (positive contact), +1 the opposite, 0 otherwise
};

namespace detail {

/// Angle of ker(alpha) ∩ eta at q, pulled back to p by D phi^{-h}, measured from the
/// positive bisector in the (e_s, e_u) coordinates at p.
inline double pulled_angle(const OneForm& alpha, const Splitting& sp, const Vec3& p, double h,
                           const FlowOptions& flow) {
  const FrameModel& m = *sp.model;
  const FlowResult fwd = integrate_flow(m, sp.x, p, h, {}, {}, flow);
  const Vec3 q = fwd.point;
  const Vec3 a = alpha.at(q);
  const Vec3 w = a.dot(sp.e_u.at(q)) * sp.e_s.at(q) - a.dot(sp.e_s.at(q)) * sp.e_u.at(q);
  const Vec3 back = integrate_flow(m, sp.x, q, -h, {w}, {}, flow).tangents[0];
  const Vec3 c = splitting_coefficients(sp, p, back);
  return std::atan2(c[1], c[0]) - std::numbers::pi / 4;
}

/// Difference of line angles reduced to (-pi/2, pi/2].
inline double line_angle_difference(double a, double b) {
  double d = std::fmod(a - b, std::numbers::pi);
  if (d > std::numbers::pi / 2) d -= std::numbers::pi;
  if (d <= -std::numbers::pi / 2) d += std::numbers::pi;
  return d;
}

}  // namespace detail

/// X·theta_xi by central differencing of the pulled-back kernel line along trajectories.
/// Negative everywhere means the plane field turns like a positive contact structure.
[[nodiscard]] inline RotationCheck angle_rotation_check(const OneForm& alpha, const Splitting& sp, double h = 1e-3,
                                                        const FlowOptions& flow = {}) {
  (void)dynamical_sign(alpha, sp);  // rejects planes not containing X
  RotationCheck out;
  const std::size_t n = sample_count(*sp.model);
  out.rate.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*sp.model, i);
    const double tp = detail::pulled_angle(alpha, sp, p, h, flow);
    const double tm = detail::pulled_angle(alpha, sp, p, -h, flow);
    out.rate[i] = detail::line_angle_difference(tp, tm) / (2 * h);
  }
  out.min = *std::min_element(out.rate.begin(), out.rate.end());
  out.max = *std::max_element(out.rate.begin(), out.rate.end());
  out.sign = out.max < 0.0 ? -1 : (out.min > 0.0 ? 1 : 0);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Reeb fields

struct ReebField {
  VecField field;
  double residual_normalization = 0.0;  ///< max |alpha(R) - 1|
  double residual_kernel = 0.0;         ///< max |dalpha(R, .)|
};

/// The Reeb field: R spans the kernel of dalpha (the axial vector (b23, -b13, b12)) and is
/// scaled so alpha(R) = 1, the scale being the contact density.
[[nodiscard]] inline ReebField reeb_field(const OneForm& alpha, const FrameModel& model, double min_density = 1e-12) {
  const TwoForm da = exterior_derivative(alpha, model);
  const ScalarField rho = wedge_density(alpha, da, model);
  const std::vector<double> rv = sample_values(rho, model);
  for (std::size_t i = 0; i < rv.size(); ++i)
    if (!(std::abs(rv[i]) > min_density)) {
      const Vec3 p = sample_point(model, i);
      throw ContactError("form is not contact at (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ", " +
                         std::to_string(p[2]) + "); the Reeb system is singular");
    }
  ReebField out;
  out.field = VecField(da.c23 / rho, -da.c13 / rho, da.c12 / rho);
  for (std::size_t i = 0; i < rv.size(); ++i) {
    const Vec3 p = sample_point(model, i);
    const Vec3 r = out.field.at(p);
    out.residual_normalization = std::max(out.residual_normalization, std::abs(alpha.at(p).dot(r) - 1.0));
    out.residual_kernel = std::max(out.residual_kernel, (da.matrix(p) * r).cwiseAbs().maxCoeff());
  }
  return out;
}

struct ReebAnosovResult {
  Classification classification = Classification::inconclusive;
  bool anosov = false;
  ReebField reeb_plus, reeb_minus;
  SignField sign_plus, sign_minus;
  double witness_angle = 0.0;  ///< max angle between the eta-part of R_+ and -r_s e_u - r_u e_s
  double failure_measure = 0.0;  ///< volume fraction where R_+ is not dynamically negative
  std::vector<std::size_t> failure_samples;
  std::vector<std::string> diagnostics;
};

/// Anosov test through Reeb dynamics: alpha_+ = (alpha_u - alpha_s)/2 from the exact duals
/// must have a dynamically negative Reeb field (and alpha_- a positive one).
[[nodiscard]] inline ReebAnosovResult reeb_anosov_test(const Splitting& sp, const Rates& rates) {
  const ModelPtr& model = sp.model;
  const BiContact b = bicontact_from_duals(sp);
  if (b.margin_plus <= 0.0 || b.margin_minus <= 0.0)
    throw ContactError("exact-dual candidates are not contact (flow is not projectively Anosov)");
  ReebAnosovResult out;
  out.reeb_plus = reeb_field(b.alpha_plus, *model);
  out.reeb_minus = reeb_field(b.alpha_minus, *model);
  out.sign_plus = dynamical_sign(out.reeb_plus.field, sp);
  out.sign_minus = dynamical_sign(out.reeb_minus.field, sp);
  const std::size_t n = sample_count(*model);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    const Vec3 c = splitting_coefficients(sp, p, out.reeb_plus.field.at(p));
    // Witness -r_s e_u - r_u e_s has (e_s, e_u) components (-r_u, -r_s).
    const Eigen::Vector2d w(-rates.ru[i], -rates.rs[i]), r(c[0], c[1]);
    const double ang = std::atan2(std::abs(w[0] * r[1] - w[1] * r[0]), std::abs(w.dot(r)));
    out.witness_angle = std::max(out.witness_angle, ang);
    if (out.sign_plus.signs[i] != DynSign::negative) out.failure_samples.push_back(i);
  }
  out.failure_measure = static_cast<double>(out.failure_samples.size()) / static_cast<double>(n);
  out.anosov = out.sign_plus.all(DynSign::negative) && out.sign_minus.all(DynSign::positive);
  out.classification = out.anosov ? Classification::anosov : Classification::projectively_anosov;
  if (!out.anosov)
    out.diagnostics.push_back("Reeb field of alpha_+ is not dynamically negative on " +
                              std::to_string(out.failure_samples.size()) + " of " + std::to_string(n) + " samples");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Interpolation times

struct InterpolationTimes {
  ScalarField tau_u, tau_s;
  std::vector<double> tau_u_samples, tau_s_samples;
  OneForm beta_s;       ///< (alpha_- - alpha_+)/2
  double beta_s_min = 0.0;  ///< inf beta_s(e_s)
  bool flipped_plus = false, flipped_minus = false;
  OneForm alpha_minus, alpha_plus;  ///< after orientation normalization
};

/// tau_u solves (1 - tau) alpha_-(e_s) + (1 + tau) alpha_+(e_s) = 0; tau_s solves the same
/// equation for the pair (-alpha_-, alpha_+) on e_u. Forms are first sign-normalized so
/// that alpha_+(e_s) < 0 < alpha_-(e_s).
[[nodiscard]] inline InterpolationTimes interpolation_time(const OneForm& alpha_minus, const OneForm& alpha_plus,
                                                           const Splitting& sp) {
  const ModelPtr& model = sp.model;
  if (contact_density(alpha_plus, *model).sign != 1 || contact_density(alpha_minus, *model).sign != -1)
    throw ContactError("interpolation times need a positive alpha_+ and a negative alpha_- (orientation swapped?)");
  InterpolationTimes out;
  const Vec3 p0 = sample_point(*model, 0);
  out.flipped_plus = alpha_plus.at(p0).dot(sp.e_s.at(p0)) > 0.0;
  out.flipped_minus = alpha_minus.at(p0).dot(sp.e_s.at(p0)) < 0.0;
  out.alpha_plus = out.flipped_plus ? ScalarField::constant(-1.0) * alpha_plus : alpha_plus;
  out.alpha_minus = out.flipped_minus ? ScalarField::constant(-1.0) * alpha_minus : alpha_minus;
  out.beta_s = linear_combination(0.5, out.alpha_minus, -0.5, out.alpha_plus);

  const std::size_t n = sample_count(*model);
  out.tau_u_samples.resize(n);
  out.tau_s_samples.resize(n);
  out.beta_s_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    const Vec3 am = out.alpha_minus.at(p), apl = out.alpha_plus.at(p);
    const Vec3 es = sp.e_s.at(p), eu = sp.e_u.at(p);
    const double a = am.dot(es), b = apl.dot(es);
    if (!(b < 0.0 && 0.0 < a)) throw ContactError("orientation contract alpha_+(e_s) < 0 < alpha_-(e_s) fails");
    const double tu = (a + b) / (a - b);
    const double c = am.dot(eu), d = apl.dot(eu);
    if (std::abs(c + d) < 1e-12) throw ContactError("interpolation time for e_u is undefined (denominator 0)");
    const double ts = (c - d) / (c + d);
    if (!(std::abs(tu) < 1.0) || !(std::abs(ts) < 1.0))
      throw ContactError("interpolation time outside (-1, 1)");
    out.tau_u_samples[i] = tu;
    out.tau_s_samples[i] = ts;
    out.beta_s_min = std::min(out.beta_s_min, 0.5 * (a - b));
  }
  out.tau_u = field_from_samples(model, out.tau_u_samples);
  out.tau_s = field_from_samples(model, out.tau_s_samples);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Linear interpolation of positive contact structures

struct InterpolationFamily {
  std::vector<double> t;
  std::vector<double> min_direct;     ///< min over samples of alpha_t∧dalpha_t
  std::vector<double> min_quadratic;  ///< same from the quadratic identity (divided by 4)
  double min_density = 0.0;
  double agreement = 0.0;  ///< max |direct - quadratic| over samples and t
  bool positive = false;
};

/// alpha_t = (1 - t) alpha_+ + t alpha_+' for t in [0, 1], with alpha_+' = (f alpha_u - alpha_s)/2.
/// The density is evaluated directly and through
///   4 (alpha_t∧dalpha_t) = t^2 (f r_u - f r_s + X·f) + (1-t)^2 (r_u - r_s)
///                          + t(1-t) (r_u - r_s + f r_u - f r_s + X·f),
/// with f = alpha_+'(e_u) / alpha_+(e_u).
[[nodiscard]] inline InterpolationFamily interpolation_contact_family(const OneForm& alpha_plus,
                                                                      const OneForm& alpha_plus_prime,
                                                                      const Splitting& sp, const Rates& rates,
                                                                      int t_nodes = 11) {
  const ModelPtr& model = sp.model;
  for (const OneForm* a : {&alpha_plus, &alpha_plus_prime}) {
    const SignField s = dynamical_sign(*a, sp);
    if (!s.all(DynSign::positive)) {
      for (std::size_t i = 0; i < s.signs.size(); ++i)
        if (s.signs[i] != DynSign::positive) {
          const Vec3 p = sample_point(*model, i);
          throw ContactError("plane field is not dynamically positive at (" + std::to_string(p[0]) + ", " +
                             std::to_string(p[1]) + ", " + std::to_string(p[2]) + ")");
        }
    }
  }
  const ScalarField f = pair(alpha_plus_prime, sp.e_u) / pair(alpha_plus, sp.e_u);
  const ScalarField xf = directional(sp.x, f, *model);
  InterpolationFamily out;
  out.min_density = std::numeric_limits<double>::infinity();
  const std::size_t n = sample_count(*model);
  for (int k = 0; k < t_nodes; ++k) {
    const double t = static_cast<double>(k) / (t_nodes - 1);
    const OneForm at = linear_combination(1.0 - t, alpha_plus, t, alpha_plus_prime);
    const ScalarField direct = wedge_density(at, exterior_derivative(at, *model), *model);
    double md = std::numeric_limits<double>::infinity(), mq = md;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = sample_point(*model, i);
      const double ru = rates.ru[i], rs = rates.rs[i], fv = f(p), xfv = xf(p);
      const double q = (t * t * (fv * ru - fv * rs + xfv) + (1 - t) * (1 - t) * (ru - rs) +
                        t * (1 - t) * (ru - rs + fv * ru - fv * rs + xfv)) /
                       4.0;
      const double dv = direct(p);
      md = std::min(md, dv);
      mq = std::min(mq, q);
      out.agreement = std::max(out.agreement, std::abs(dv - q));
    }
    out.t.push_back(t);
    out.min_direct.push_back(md);
    out.min_quadratic.push_back(mq);
    out.min_density = std::min(out.min_density, md);
  }
  out.positive = out.min_density > 0.0;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Winding of plane fields

struct Winding {
  double total_angle = 0.0;  ///< radians, signed
  double half_turns = 0.0;   ///< total_angle / pi
  double integrality_residual = 0.0;  ///< distance of half_turns to the nearest integer
  long full_turns = 0;
  bool giroux_torsion = false;   ///< at least two full turns
  bool threshold_case = false;   ///< exactly one full turn: two pi-torsions glued
  bool pi_torsion = false;       ///< at least one half turn
  std::string note;
};

/// Total rotation of the line ker(alpha) ∩ span(u, v) along a closed curve, measured in the
/// (u, v) coordinates of that plane.
[[nodiscard]] inline Winding plane_winding(const OneForm& alpha, const std::function<Vec3(double)>& curve,
                                           const VecField& u, const VecField& v, int samples = 4096) {
  if (samples < 8) throw std::invalid_argument("plane_winding needs at least 8 samples");
  const auto angle = [&](double s) {
    const Vec3 p = curve(s);
    const Vec3 a = alpha.at(p);
    const double au = a.dot(u.at(p)), av = a.dot(v.at(p));
    if (std::hypot(au, av) < 1e-12) throw ContactError("plane field contains the measurement plane on the curve");
    // ker(alpha) ∩ span(u, v) is spanned by alpha(v) u - alpha(u) v.
    return std::atan2(-au, av);
  };
  Winding out;
  double prev = angle(0.0);
  for (int k = 1; k <= samples; ++k) {
    const double cur = angle(static_cast<double>(k) / samples);
    out.total_angle += detail::line_angle_difference(cur, prev);
    prev = cur;
  }
  out.half_turns = out.total_angle / std::numbers::pi;
  out.integrality_residual = std::abs(out.half_turns - std::round(out.half_turns));
  const long half = std::lround(std::abs(out.half_turns));
  out.full_turns = half / 2;
  out.pi_torsion = half >= 1;
  out.giroux_torsion = out.full_turns >= 2;
  out.threshold_case = half == 2;
  if (out.giroux_torsion)
    out.note = "contains Giroux torsion";
  else if (out.threshold_case)
    out.note = "one full turn: two Giroux pi-torsions glued (threshold case)";
  else if (out.pi_torsion)
    out.note = "Giroux pi-torsion";
  else
    out.note = "no twisting";
  return out;
}

// ---------------------------------------------------------------------------------------------
// Negative regions

struct RegionComponent {
  std::size_t samples = 0;
  double z_min = 0.0, z_max = 0.0;
  bool z_band = false;  ///< union of full horizontal layers of the grid
  std::size_t es_boundary = 0, eu_boundary = 0;  ///< boundary edges by tangency type
};

struct NegativeRegion {
  double measure = 0.0;  ///< volume fraction of negative samples
  std::vector<RegionComponent> components;
  std::size_t tangent_samples = 0;
  bool rotation_negative_on_closure = true;  ///< X·theta < 0 on the region and its boundary
  double max_rotation_on_closure = -std::numeric_limits<double>::infinity();
  bool degenerate = false;  ///< everything tangent (no interior to speak of)
};

/// Sign-set extraction of {dynamical_sign(ker alpha) = negative}, its connected components
/// and their boundary tangency types (E^s where the e_u-component vanishes, E^u otherwise).
[[nodiscard]] inline NegativeRegion negative_region(const OneForm& alpha, const Splitting& sp,
                                                    bool check_rotation = true) {
  const ModelPtr& model = sp.model;
  const SignField s = dynamical_sign(alpha, sp);
  NegativeRegion out;
  const std::size_t n = s.signs.size();
  out.tangent_samples = s.tangent;
  out.degenerate = s.tangent == n;
  out.measure = static_cast<double>(s.negative) / static_cast<double>(n);
  if (s.negative == 0 || !model->is_grid()) return out;

  const auto neighbours = [&](std::size_t i) {
    std::array<std::size_t, 6> nb{};
    const auto idx = model->node_index(i);
    for (int a = 0; a < 3; ++a)
      for (int d = 0; d < 2; ++d) {
        auto q = idx;
        q[a] += d == 0 ? 1 : -1;
        const auto c = model->canonical_node(q[0], q[1], q[2]);
        nb[2 * a + d] = model->flat_index(c[0], c[1], c[2]);
      }
    return nb;
  };
  std::vector<int> label(n, -1);
  std::vector<char> closure(n, 0);
  const int layer = model->resolution()[0] * model->resolution()[1];
  for (std::size_t i = 0; i < n; ++i) {
    if (s.signs[i] != DynSign::negative || label[i] >= 0) continue;
    RegionComponent comp;
    comp.z_min = std::numeric_limits<double>::infinity();
    comp.z_max = -comp.z_min;
    std::vector<int> per_layer(model->resolution()[2], 0);
    std::deque<std::size_t> queue{i};
    label[i] = static_cast<int>(out.components.size());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      ++comp.samples;
      closure[j] = 1;
      const Vec3 p = sample_point(*model, j);
      comp.z_min = std::min(comp.z_min, p[2]);
      comp.z_max = std::max(comp.z_max, p[2]);
      per_layer[model->node_index(j)[2]]++;
      for (const std::size_t k : neighbours(j)) {
        if (s.signs[k] == DynSign::negative) {
          if (label[k] < 0) {
            label[k] = label[i];
            queue.push_back(k);
          }
          continue;
        }
        closure[k] = 1;
        // The sign changes across the edge through the component that vanishes first:
        // a -> 0 means the line is E^u, b -> 0 means it is E^s.
        const double ta = s.a[j] / (s.a[j] - s.a[k]), tb = s.b[j] / (s.b[j] - s.b[k]);
        const bool a_crosses = s.a[j] * s.a[k] <= 0.0, b_crosses = s.b[j] * s.b[k] <= 0.0;
        if (a_crosses && (!b_crosses || ta <= tb))
          ++comp.eu_boundary;
        else
          ++comp.es_boundary;
      }
    }
    comp.z_band = std::all_of(per_layer.begin(), per_layer.end(), [layer](int c) { return c == 0 || c == layer; });
    out.components.push_back(comp);
  }
  if (check_rotation) {
    const RotationCheck rc = angle_rotation_check(alpha, sp);
    for (std::size_t i = 0; i < n; ++i)
      if (closure[i]) out.max_rotation_on_closure = std::max(out.max_rotation_on_closure, rc.rate[i]);
    out.rotation_negative_on_closure = out.max_rotation_on_closure < 0.0;
  }
  return out;
}

}  // namespace anolab
