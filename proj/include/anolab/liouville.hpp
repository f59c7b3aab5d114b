#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "anolab/calculus.hpp"
#include "anolab/contact.hpp"
#include "anolab/splitting.hpp"

namespace anolab {

/// Which pair is tested on M x [-1, 1]: beta_t = (1 - t) sigma alpha_- + (1 + t) alpha_+.
enum class LiouvillePair { standard, twisted };

inline const char* to_string(LiouvillePair p) {
  return p == LiouvillePair::standard ? "(alpha_-, alpha_+)" : "(-alpha_-, alpha_+)";
}

namespace detail {

/// Coefficients of alpha_± and their differentials at every sample; all 4-form evaluations
/// reduce to algebra on these.
struct PairSamples {
  std::vector<Vec3> am, ap;
  std::vector<Mat3> dam, dap;
};

inline PairSamples pair_samples(const OneForm& alpha_minus, const OneForm& alpha_plus, const FrameModel& model) {
  const TwoForm dm = exterior_derivative(alpha_minus, model), dp = exterior_derivative(alpha_plus, model);
  PairSamples s;
  const std::size_t n = sample_count(model);
  s.am.resize(n);
  s.ap.resize(n);
  s.dam.resize(n);
  s.dap.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(model, i);
    s.am[i] = alpha_minus.at(p);
    s.ap[i] = alpha_plus.at(p);
    s.dam[i] = dm.matrix(p);
    s.dap[i] = dp.matrix(p);
  }
  return s;
}

/// Coefficient of dt∧f_1∧f_2∧f_3 in omega∧omega through alpha_u = alpha_- + alpha_+ and
/// alpha_s = alpha_- - alpha_+:
///   standard: -2 alpha_s∧dalpha_u + 2t alpha_s∧dalpha_s
///   twisted:  -2 alpha_u∧dalpha_s + 2t alpha_u∧dalpha_u
inline double closed_form_density(const PairSamples& s, std::size_t i, double t, LiouvillePair pair) {
  const Vec3 au = s.am[i] + s.ap[i], as = s.am[i] - s.ap[i];
  const Mat3 du = s.dam[i] + s.dap[i], ds = s.dam[i] - s.dap[i];
  if (pair == LiouvillePair::standard) return -2.0 * wedge_value(as, du) + 2.0 * t * wedge_value(as, ds);
  return -2.0 * wedge_value(au, ds) + 2.0 * t * wedge_value(au, du);
}

/// The same coefficient from omega = dt∧beta' + d beta_t, i.e. omega∧omega = 2 dt∧beta'∧d beta_t.
inline double direct_density(const PairSamples& s, std::size_t i, double t, LiouvillePair pair) {
  const double sigma = pair == LiouvillePair::standard ? 1.0 : -1.0;
  const Vec3 beta_dot = -sigma * s.am[i] + s.ap[i];
  const Mat3 d_beta = (1.0 - t) * sigma * s.dam[i] + (1.0 + t) * s.dap[i];
  return 2.0 * wedge_value(beta_dot, d_beta);
}

}  // namespace detail

struct LiouvilleDensity {
  std::vector<double> closed_form, direct;  ///< per sample
  double agreement = 0.0;                    ///< max |closed_form - direct|
};

/// omega∧omega coefficient at a fixed t, both ways.
[[nodiscard]] inline LiouvilleDensity liouville_density(const OneForm& alpha_minus, const OneForm& alpha_plus,
                                                        double t, const FrameModel& model,
                                                        LiouvillePair pair = LiouvillePair::standard) {
  const detail::PairSamples s = detail::pair_samples(alpha_minus, alpha_plus, model);
  LiouvilleDensity out;
  for (std::size_t i = 0; i < s.am.size(); ++i) {
    out.closed_form.push_back(detail::closed_form_density(s, i, t, pair));
    out.direct.push_back(detail::direct_density(s, i, t, pair));
    out.agreement = std::max(out.agreement, std::abs(out.closed_form.back() - out.direct.back()));
  }
  return out;
}

struct LiouvilleReport {
  LiouvillePair pair = LiouvillePair::standard;
  double min_density = 0.0;
  Vec3 argmin_point = Vec3::Zero();
  double argmin_t = 0.0;
  std::vector<std::pair<double, double>> profile;  ///< (t, min over space)
  std::string profile_csv_path;                    ///< filled in when the profile is written out
  double agreement_residual = 0.0;                 ///< closed-form vs direct
  double boundary_residual = 0.0;  ///< beta_{±1} against 2 alpha_+ and ±2 alpha_-
  double tolerance = 0.0;
  bool positive = false;
};

/// Nodes t_k = -cos(pi k / (n - 1)), endpoints included.
[[nodiscard]] inline std::vector<double> chebyshev_nodes(int n = 33) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = -std::cos(std::numbers::pi * k / (n - 1));
  t.front() = -1.0;
  t.back() = 1.0;
  return t;
}

/// Tests both pairs (alpha_-, alpha_+) and (-alpha_-, alpha_+) over the sample grid and
/// 33 nodes in t. Rejects inputs that are not contact with the expected signs.
[[nodiscard]] inline std::pair<LiouvilleReport, LiouvilleReport> liouville_verdict(const OneForm& alpha_minus,
                                                                                  const OneForm& alpha_plus,
                                                                                  const FrameModel& model,
                                                                                  double tol = -1.0,
                                                                                  int t_nodes = 33) {
  const ContactDensity cp = contact_density(alpha_plus, model), cm = contact_density(alpha_minus, model);
  if (cp.sign != 1) throw ContactError("alpha_+ is not a positive contact form");
  if (cm.sign != -1) throw ContactError("alpha_- is not a negative contact form");
  if (tol < 0.0) tol = model.default_tolerance();
  const detail::PairSamples s = detail::pair_samples(alpha_minus, alpha_plus, model);
  const std::vector<double> ts = chebyshev_nodes(t_nodes);

  const auto run = [&](LiouvillePair pair) {
    LiouvilleReport r;
    r.pair = pair;
    r.tolerance = tol;
    r.min_density = std::numeric_limits<double>::infinity();
    const double sigma = pair == LiouvillePair::standard ? 1.0 : -1.0;
    for (const double t : ts) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < s.am.size(); ++i) {
        const double c = detail::closed_form_density(s, i, t, pair);
        const double d = detail::direct_density(s, i, t, pair);
        r.agreement_residual = std::max(r.agreement_residual, std::abs(c - d));
        m = std::min(m, c);
        if (c < r.min_density) {
          r.min_density = c;
          r.argmin_point = sample_point(model, i);
          r.argmin_t = t;
        }
      }
      r.profile.emplace_back(t, m);
    }
    // beta_t through (alpha_u, alpha_s) must restrict to 2 alpha_+ at t = 1 and 2 sigma alpha_- at t = -1.
    for (std::size_t i = 0; i < s.am.size(); ++i) {
      const Vec3 au = s.am[i] + s.ap[i], as = s.am[i] - s.ap[i];
      const Vec3 b1 = pair == LiouvillePair::standard ? Vec3(au - as) : Vec3(au - as);
      const Vec3 bm1 = pair == LiouvillePair::standard ? Vec3(au + as) : Vec3(-au - as);
      r.boundary_residual = std::max({r.boundary_residual, (b1 - 2.0 * s.ap[i]).cwiseAbs().maxCoeff(),
                                      (bm1 - 2.0 * sigma * s.am[i]).cwiseAbs().maxCoeff()});
    }
    r.positive = r.min_density > tol;
    return r;
  };
  return {run(LiouvillePair::standard), run(LiouvillePair::twisted)};
}

// ---------------------------------------------------------------------------------------------
// Weak filling of the T^3 family

struct WeakFilling {
  double min_plus = 0.0, min_minus = 0.0;  ///< min of omega on oriented bases of xi_n, xi_-m
  bool positive = false;
  double sup_eps = 0.0;          ///< largest eps in the search range for which the check passes
  bool sup_eps_bounded = false;  ///< false when no failure was found below the search limit
};

namespace detail {

/// omega = dx∧dy (the restriction of omega_1 ⊕ omega_2 to T^2 x ∂D^2) on the basis
/// (∂x - eps a ∂z, ∂y - eps b ∂z) of ker(dz + eps(a dx + b dy)), oriented by the contact
/// orientation (d alpha for positive, -d alpha for negative structures).
inline double filling_min(int k, double eps, double sign, double contact_sign, int samples) {
  const double w = 2.0 * std::numbers::pi * k;
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double z = static_cast<double>(i) / samples;
    const double a = std::cos(w * z), b = sign * std::sin(w * z);
    // d alpha = eps (a' dz∧dx + b' dz∧dy) with a' = -w sin, b' = sign w cos.
    const double ap = -w * std::sin(w * z), bp = sign * w * std::cos(w * z);
    // dz∧dx(v1, v2) = eps b, dz∧dy(v1, v2) = -eps a.
    const double dalpha = eps * (ap * eps * b - bp * eps * a);
    double orient = 1.0;
    if (std::abs(dalpha) > 1e-300) orient = (dalpha > 0.0 ? 1.0 : -1.0) * contact_sign;
    const double omega = 1.0;  // dx∧dy(v1, v2)
    m = std::min(m, orient * omega);
  }
  return m;
}

}  // namespace detail

/// Weak-filling check of (T^3, xi_n) and (T^3, xi_-m) by T^2 x D^2 with the isotoped forms
/// dz + eps (cos 2 pi n z dx - sin 2 pi n z dy) and dz + eps' (cos 2 pi m z dx + sin 2 pi m z dy).
[[nodiscard]] inline WeakFilling weak_filling_T3(int n, int m, double eps, double eps_prime,
                                                 const FrameModel& model, double eps_limit = 1e3,
                                                 int samples = 4096) {
  if (model.name() != "t3") throw ModelError("weak filling check needs the T^3 model");
  if (n < 1 || m < 1) throw ModelError("weak filling check needs n, m >= 1");
  const auto check = [&](double e, double ep) {
    return std::pair{detail::filling_min(n, e, -1.0, 1.0, samples), detail::filling_min(m, ep, 1.0, -1.0, samples)};
  };
  WeakFilling out;
  std::tie(out.min_plus, out.min_minus) = check(eps, eps_prime);
  out.positive = out.min_plus > 0.0 && out.min_minus > 0.0;
  // Bisection for the sup of a common eps that passes.
  const auto passes = [&](double e) {
    const auto [a, b] = check(e, e);
    return a > 0.0 && b > 0.0;
  };
  if (passes(eps_limit)) {
    out.sup_eps = eps_limit;
    out.sup_eps_bounded = false;
  } else {
    double lo = 0.0, hi = eps_limit;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? lo : hi) = mid;
    }
    out.sup_eps = lo;
    out.sup_eps_bounded = true;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Converse: recovering the rates from a Liouville pair

struct RateWitness {
  std::vector<double> ru, rs;  ///< per-sample estimates
  double min_ru = 0.0, max_rs = 0.0;
  bool strict = false;  ///< r_u > 0 > r_s everywhere
  InterpolationTimes times;
};

/// At t = tau_u the slice form (1 - t) alpha_- + (1 + t) alpha_+ is h times the dual of e_u,
/// and the Liouville density there equals 4 beta_s(e_s) h (r_u + X·ln|h|). Likewise the
/// twisted pair at t = tau_s is k times the dual of e_s, with density 2 u' k (r_s + X·ln|k|),
/// u' = (alpha_+ + alpha_-)(e_u). Both are solved for the rates.
[[nodiscard]] inline RateWitness converse_rate_witness(const OneForm& alpha_minus, const OneForm& alpha_plus,
                                                       const Splitting& sp, double min_division = 1e-9) {
  const ModelPtr& model = sp.model;
  const auto [std_pair, twisted] = liouville_verdict(alpha_minus, alpha_plus, *model);
  if (!std_pair.positive || !twisted.positive)
    throw ContactError("rate witness needs both Liouville pairs to be positive");
  RateWitness out;
  out.times = interpolation_time(alpha_minus, alpha_plus, sp);
  const OneForm& am = out.times.alpha_minus;
  const OneForm& ap = out.times.alpha_plus;
  const detail::PairSamples s = detail::pair_samples(am, ap, *model);
  const std::size_t n = s.am.size();
  std::vector<double> h(n), k(n), du(n), ds(n), bs(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    const Vec3 es = sp.e_s.at(p), eu = sp.e_u.at(p);
    const double tu = out.times.tau_u_samples[i], ts = out.times.tau_s_samples[i];
    h[i] = ((1.0 - tu) * s.am[i] + (1.0 + tu) * s.ap[i]).dot(eu);
    k[i] = ((1.0 - ts) * -s.am[i] + (1.0 + ts) * s.ap[i]).dot(es);
    bs[i] = 0.5 * (s.am[i] - s.ap[i]).dot(es);
    up[i] = (s.ap[i] + s.am[i]).dot(eu);
    if (std::abs(bs[i]) < min_division || std::abs(h[i]) < min_division || std::abs(up[i]) < min_division ||
        std::abs(k[i]) < min_division)
      throw ContactError("rate witness division margin below tolerance");
    du[i] = detail::direct_density(s, i, tu, LiouvillePair::standard);
    ds[i] = detail::direct_density(s, i, ts, LiouvillePair::twisted);
  }
  std::vector<double> lh(n), lk(n);
  for (std::size_t i = 0; i < n; ++i) {
    lh[i] = std::log(std::abs(h[i]));
    lk[i] = std::log(std::abs(k[i]));
  }
  const ScalarField xlh = directional(sp.x, field_from_samples(model, lh), *model);
  const ScalarField xlk = directional(sp.x, field_from_samples(model, lk), *model);
  out.ru.resize(n);
  out.rs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = sample_point(*model, i);
    out.ru[i] = du[i] / (4.0 * bs[i] * h[i]) - xlh(p);
    out.rs[i] = ds[i] / (2.0 * up[i] * k[i]) - xlk(p);
  }
  out.min_ru = *std::min_element(out.ru.begin(), out.ru.end());
  out.max_rs = *std::max_element(out.rs.begin(), out.rs.end());
  out.strict = out.min_ru > 0.0 && out.max_rs < 0.0;
  return out;
}

}  // namespace anolab
