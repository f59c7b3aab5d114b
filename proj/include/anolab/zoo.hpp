#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "anolab/fields.hpp"
#include "anolab/frame_model.hpp"

namespace anolab {

/// A model together with its flow and whatever ground truth is known analytically.
struct ZooModel {
  ModelPtr model;
  VecField x;

  // Ground truth (frame coefficients / constants); cleared by `perturb`.
  std::optional<VecField> e_s, e_u;
  std::optional<double> r_s, r_u;
  std::optional<OneForm> alpha_s, alpha_u;  ///< exact duals of (e_s, e_u) killing X

  // Declared contact candidates (T^3 family).
  std::optional<OneForm> alpha_plus, alpha_minus;
  std::optional<double> transversality_margin;

  std::vector<std::string> notes;
};

namespace detail {

inline StructureTensor structure_from_brackets(const std::vector<std::tuple<int, int, Vec3>>& brackets) {
  StructureTensor c;
  for (auto& m : c) m.setZero();
  for (const auto& [i, j, v] : brackets)
    for (int k = 0; k < 3; ++k) {
      c[k](i, j) = v[k];
      c[k](j, i) = -v[k];
    }
  return c;
}

inline VecField frame_leg(int k) {
  Vec3 v = Vec3::Zero();
  v[k] = 1.0;
  return VecField::constant(v);
}

}  // namespace detail

/// Frame-local model of the geodesic flow on the unit tangent bundle of a hyperbolic
/// surface: frame (e_s, e_u, X) with [X,e_s] = e_s, [X,e_u] = -e_u, [e_s,e_u] = 2X.
[[nodiscard]] inline ZooModel geodesic_frame_model() {
  const StructureTensor c = detail::structure_from_brackets({
      {2, 0, Vec3(1, 0, 0)},   // [X, e_s] = e_s
      {2, 1, Vec3(0, -1, 0)},  // [X, e_u] = -e_u
      {0, 1, Vec3(0, 0, 2)},   // [e_s, e_u] = 2X
  });
  ZooModel z;
  z.model = std::make_shared<FrameModel>("geodesic", ModelKind::homogeneous_frame, Domain{},
                                         std::array<int, 3>{1, 1, 1}, coordinate_frame(), c);
  z.x = detail::frame_leg(2);
  z.e_s = detail::frame_leg(0);
  z.e_u = detail::frame_leg(1);
  z.r_s = -1.0;
  z.r_u = 1.0;
  z.alpha_s = OneForm::constant(Vec3(1, 0, 0));
  z.alpha_u = OneForm::constant(Vec3(0, 1, 0));
  z.notes.push_back("homogeneous frame; only frame-local data is used");
  return z;
}

/// Eigen-data of a hyperbolic integer matrix with positive eigenvalues.
struct CatEigen {
  double lambda;  ///< expanding eigenvalue
  Eigen::Vector2d v_u, v_s;
};

[[nodiscard]] inline CatEigen cat_eigen(const Eigen::Matrix2d& a) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (a(i, j) != std::round(a(i, j))) throw ModelError("cat map must have integer entries");
  const double det = a.determinant(), tr = a.trace();
  if (std::abs(std::abs(det) - 1.0) > 1e-12) throw ModelError("cat map must have determinant +-1");
  if (std::abs(tr) <= 2.0) throw ModelError("cat map is not hyperbolic (|trace| <= 2)");
  if (det < 0.0 || tr < 0.0)
    throw ModelError("cat map needs positive eigenvalues so the stable/unstable line fields are orientable");
  const double lambda = (tr + std::sqrt(tr * tr - 4.0)) / 2.0;
  const auto eigvec = [&](double mu) {
    // (a - mu) v = 0; use the row with the larger entries for stability.
    Eigen::Vector2d v = std::abs(a(0, 1)) > std::abs(a(1, 0)) ? Eigen::Vector2d(a(0, 1), mu - a(0, 0))
                                                             : Eigen::Vector2d(mu - a(1, 1), a(1, 0));
    v.normalize();
    if (v[0] < 0.0) v = -v;
    return v;
  };
  return {lambda, eigvec(lambda), eigvec(1.0 / lambda)};
}

/// Suspension of a hyperbolic toral automorphism A: the mapping torus T^2 x [0,1] with
/// (p, 1) ~ (A p, 0). The frame is (lambda^t v_s, lambda^-t v_u, d/dt), which is invariant
/// under the gluing, and X = d/dt.
[[nodiscard]] inline ZooModel cat_suspension(const Eigen::Matrix2d& a, int resolution = 32) {
  const CatEigen ev = cat_eigen(a);
  const double ln = std::log(ev.lambda);
  Domain dom;
  dom.rules[2] = AxisRule::make_monodromy(a);
  const Eigen::Vector2d vs = ev.v_s, vu = ev.v_u;
  FrameRealization frame = [vs, vu, ln](const JetPoint& p) {
    const Jet grow = exp(ln * p.z), shrink = exp(-ln * p.z);
    FrameJets f;
    f[0].c[0] = grow * vs[0];
    f[0].c[1] = grow * vs[1];
    f[0].c[2] = Jet(0.0);
    f[1].c[0] = shrink * vu[0];
    f[1].c[1] = shrink * vu[1];
    f[1].c[2] = Jet(0.0);
    f[2].c[0] = Jet(0.0);
    f[2].c[1] = Jet(0.0);
    f[2].c[2] = Jet(1.0);
    return f;
  };
  const StructureTensor c = detail::structure_from_brackets({
      {2, 0, Vec3(ln, 0, 0)},   // [X, f_1] = ln(lambda) f_1
      {2, 1, Vec3(0, -ln, 0)},  // [X, f_2] = -ln(lambda) f_2
  });
  ZooModel z;
  z.model = std::make_shared<FrameModel>("cat", ModelKind::coordinate_grid, dom,
                                         std::array<int, 3>{resolution, resolution, resolution}, frame, c);
  z.x = detail::frame_leg(2);
  z.e_s = detail::frame_leg(0);
  z.e_u = detail::frame_leg(1);
  z.r_s = -ln;
  z.r_u = ln;
  z.alpha_s = OneForm::constant(Vec3(1, 0, 0));
  z.alpha_u = OneForm::constant(Vec3(0, 1, 0));
  z.notes.push_back("frame (lambda^t v_s, lambda^-t v_u, d/dt) is gluing-invariant; metric frame-orthonormal");
  return z;
}

/// Coordinate 1-form dz + eps (cos 2 pi k z dx + sign * sin 2 pi k z dy).
[[nodiscard]] inline OneForm t3_form(int k, double eps, double sign, const FrameModel* owner = nullptr) {
  const double w = 2.0 * std::numbers::pi * k;
  return {ScalarField::closed([=](const JetPoint& p) { return eps * cos(w * p.z); }, owner),
          ScalarField::closed([=](const JetPoint& p) { return sign * eps * sin(w * p.z); }, owner),
          ScalarField::constant(1.0)};
}

/// Sine of the angle between the kernels of two coordinate 1-forms at p.
[[nodiscard]] inline double kernel_angle_sine(const Vec3& a, const Vec3& b) {
  return a.cross(b).norm() / (a.norm() * b.norm());
}

/// The bi-contact family on T^3: alpha_+ = dz + eps (cos 2 pi n z dx - sin 2 pi n z dy),
/// alpha_- = dz + eps' (cos 2 pi m z dx + sin 2 pi m z dy), X the unit section of the
/// intersection of the kernels.
[[nodiscard]] inline ZooModel t3_model(int n, int m, double eps, double eps_prime,
                                       std::array<int, 3> resolution = {8, 8, 32}) {
  if (n < 1 || m < 1) throw ModelError("t3 model needs n, m >= 1");
  if (!(eps > 0.0 && eps < 0.5 && eps_prime > 0.0 && eps_prime < 0.5))
    throw ModelError("t3 model needs 0 < eps, eps' < 0.5");
  ZooModel z;
  z.model = std::make_shared<FrameModel>("t3", ModelKind::coordinate_grid, Domain{}, resolution, coordinate_frame());
  const FrameModel* owner = z.model.get();
  z.alpha_plus = t3_form(n, eps, -1.0, owner);
  z.alpha_minus = t3_form(m, eps_prime, 1.0, owner);
  const double wn = 2.0 * std::numbers::pi * n, wm = 2.0 * std::numbers::pi * m;
  // X = (alpha_+ x alpha_-) / |.|, written against jets so derivatives stay exact.
  const auto cross = [=](const JetPoint& p) {
    const Jet a0 = eps * cos(wn * p.z), a1 = -eps * sin(wn * p.z);
    const Jet b0 = eps_prime * cos(wm * p.z), b1 = eps_prime * sin(wm * p.z);
    std::array<Jet, 3> c{a1 - b1, b0 - a0, a0 * b1 - a1 * b0};
    const Jet norm = sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    for (auto& e : c) e = e / norm;
    return c;
  };
  for (int k = 0; k < 3; ++k)
    z.x[k] = ScalarField::closed([cross, k](const JetPoint& p) { return cross(p)[k]; }, owner);
  double margin = INFINITY;
  const int samples = 64 * std::max(n, m) * 16;
  for (int s = 0; s < samples; ++s) {
    const Vec3 p(0, 0, static_cast<double>(s) / samples);
    margin = std::min(margin, kernel_angle_sine(z.alpha_plus->at(p), z.alpha_minus->at(p)));
  }
  z.transversality_margin = margin;
  if (margin < 1e-12) z.notes.push_back("kernels are not transverse everywhere (margin 0)");
  z.notes.push_back("X normalized to unit length");
  return z;
}

/// Adds a smooth seeded trigonometric field to X whose C^1 size (sup of the value plus
/// sup of the coordinate gradient, before the gluing factor) is at most `amplitude`.
/// Structural stability is a C^1 statement, so the C^1 size is what "small" means here.
///
/// Modes are evaluated at the wrapped point, so the field is well defined on the quotient.
/// On mapping tori every mode carries a sin^4(pi t) factor, which vanishes to third order
/// at the gluing, so the perturbation is C^3 across it. Ground truth is cleared.
[[nodiscard]] inline ZooModel perturb(const ZooModel& base, double amplitude, unsigned seed) {
  if (!(amplitude >= 0.0)) throw ModelError("perturbation amplitude must be non-negative");
  if (amplitude >= 0.1) throw ModelError("perturbation amplitude must be below 0.1");
  if (amplitude == 0.0) return base;
  if (!base.model->is_grid()) throw ModelError("perturb needs a grid model (homogeneous fields must stay invariant)");
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> freq(-2, 2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi), weight(-1.0, 1.0);
  const bool glued = base.model->domain().has_monodromy();
  const Vec3 ext = base.model->domain().extent;
  ZooModel out;
  out.model = base.model;
  out.notes = base.notes;
  out.notes.push_back("perturbed: amplitude " + std::to_string(amplitude) + ", seed " + std::to_string(seed));
  constexpr int modes = 3;
  for (int k = 0; k < 3; ++k) {
    std::array<Vec3, modes> wave;
    std::array<double, modes> ph, wt;
    double total = 0.0;
    for (int l = 0; l < modes; ++l) {
      wave[l] = 2.0 * std::numbers::pi *
                Vec3(freq(rng) / ext[0], freq(rng) / ext[1], (glued ? std::abs(freq(rng)) : freq(rng)) / ext[2]);
      ph[l] = phase(rng);
      wt[l] = weight(rng);
      total += std::abs(wt[l]) * (1.0 + wave[l].norm());
    }
    const double scale = amplitude / std::max(total, 1e-12);
    const double pi = std::numbers::pi, lo_t = base.model->domain().lower[2], ex_t = ext[2];
    const FrameModel* m = base.model.get();
    ScalarField delta = ScalarField::closed(
        [=](const JetPoint& lifted) {
          const JetPoint p = m->wrap(lifted);
          Jet s(0.0);
          for (int l = 0; l < modes; ++l)
            s += wt[l] * sin(wave[l][0] * p.x + wave[l][1] * p.y + wave[l][2] * p.z + ph[l]);
          if (glued) s = s * pow(sin(pi * (p.z - lo_t) / ex_t), 4.0);
          return scale * s;
        },
        base.model.get());
    out.x[k] = base.x[k] + delta;
  }
  return out;
}

}  // namespace anolab
