#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "anolab/contact.hpp"
#include "anolab/zoo.hpp"

using namespace anolab;

namespace {

constexpr double kPi = std::numbers::pi;
const Eigen::Matrix2d kCat = (Eigen::Matrix2d() << 2, 1, 1, 1).finished();
const double kLambda = (3.0 + std::sqrt(5.0)) / 2.0;
const double kLnLambda = std::log(kLambda);

struct Fixture {
  ZooModel zoo;
  Splitting sp;
  Rates rates;
};

Fixture geodesic() {
  ZooModel g = geodesic_frame_model();
  Splitting sp = declared_splitting(g.x, *g.e_s, *g.e_u, g.model);
  Rates r = expansion_rates(sp, RateMethod::bracket);
  return {g, sp, r};
}

const Fixture& cat8() {
  static const Fixture f = [] {
    ZooModel c = cat_suspension(kCat, 8);
    Splitting sp = compute_splitting(c.x, c.model);
    Rates r = expansion_rates(sp, RateMethod::bracket);
    return Fixture{c, sp, r};
  }();
  return f;
}

const Fixture& t3() {
  static const Fixture f = [] {
    ZooModel z = t3_model(1, 1, 0.1, 0.2);
    Splitting sp = compute_splitting(z.x, z.model);
    Rates r = expansion_rates(sp, RateMethod::bracket);
    return Fixture{z, sp, r};
  }();
  return f;
}

OneForm half_sum(double a, const OneForm& u, double b, const OneForm& s) {
  return linear_combination(0.5 * a, u, 0.5 * b, s);
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Contact densities

TEST(ContactDensity, T3FormsHaveDensityTwoPiKTimesEpsSquared) {
  const ZooModel z = t3_model(1, 1, 0.1, 0.2);
  for (int n : {1, 2, 3}) {
    // Independent: alpha = dz + eps (cos w z dx - sin w z dy) gives alpha∧dalpha = eps^2 w dx∧dy∧dz.
    const double eps = 0.1;
    const ContactDensity plus = contact_density(t3_form(n, eps, -1.0, z.model.get()), *z.model);
    EXPECT_EQ(plus.sign, 1);
    EXPECT_NEAR(plus.min, 2 * kPi * n * eps * eps, 1e-9);
    EXPECT_NEAR(plus.max, 2 * kPi * n * eps * eps, 1e-9);
    const ContactDensity minus = contact_density(t3_form(n, eps, 1.0, z.model.get()), *z.model);
    EXPECT_EQ(minus.sign, -1);
    EXPECT_NEAR(minus.max, -2 * kPi * n * eps * eps, 1e-9);
  }
}

TEST(ContactDensity, UnitTrigonometricFormsGiveTwoPiN) {
  const ZooModel z = t3_model(1, 1, 0.1, 0.2);
  const FrameModel* m = z.model.get();
  for (int n : {1, 2}) {
    const double w = 2 * kPi * n;
    const OneForm a{ScalarField::closed([w](const JetPoint& p) { return cos(w * p.z); }, m),
                    ScalarField::closed([w](const JetPoint& p) { return -sin(w * p.z); }, m),
                    ScalarField::constant(0.0)};
    const ContactDensity d = contact_density(a, *z.model);
    EXPECT_NEAR(d.min, w, 1e-9);
    EXPECT_EQ(d.sign, 1);
  }
}

TEST(ContactDensity, ClosedFormIsNotContact) {
  const ZooModel z = t3_model(1, 1, 0.1, 0.2);
  const ContactDensity d = contact_density(OneForm::constant(Vec3(0, 0, 1)), *z.model);
  EXPECT_EQ(d.sign, 0);
  EXPECT_EQ(d.margin, 0.0);
  EXPECT_NEAR(d.max, 0.0, 1e-14);
}

// ---------------------------------------------------------------------------------------------
// Dual forms

TEST(DualForms, GeodesicConditionsHold) {
  const Fixture f = geodesic();
  const DualForms d = dual_coframe_forms(f.sp, f.rates, 1e-2);
  // g_u = g_s = 1, r_u = 1, r_s = -1: both conditions equal 1.
  EXPECT_NEAR(d.cond1_margin, 1.0, 1e-9);
  EXPECT_NEAR(d.cond2_margin, 1.0, 1e-9);
  const Vec3 p = Vec3::Zero();
  EXPECT_NEAR(d.alpha_u.at(p).dot(f.sp.e_u.at(p)), 1.0, 1e-12);
  EXPECT_NEAR(d.alpha_u.at(p).dot(f.sp.e_s.at(p)), 0.0, 1e-12);
  EXPECT_NEAR(d.alpha_s.at(p).dot(f.sp.x.at(p)), 0.0, 1e-12);
}

TEST(DualForms, CatDualsAreDualEverywhere) {
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  for (std::size_t i = 0; i < sample_count(*f.zoo.model); i += 37) {
    const Vec3 p = sample_point(*f.zoo.model, i);
    EXPECT_NEAR(au.at(p).dot(f.sp.e_u.at(p)), 1.0, 1e-9);
    EXPECT_NEAR(au.at(p).dot(f.sp.e_s.at(p)), 0.0, 1e-9);
    EXPECT_NEAR(as.at(p).dot(f.sp.e_s.at(p)), 1.0, 1e-9);
    EXPECT_NEAR(as.at(p).dot(f.sp.x.at(p)), 0.0, 1e-9);
  }
  const DualForms d = dual_coframe_forms(f.sp, f.rates, 1e-2);
  EXPECT_GT(d.cond1_margin, 0.9 * kLnLambda);
  EXPECT_GT(d.cond2_margin, 0.9 * kLnLambda);
}

TEST(DualForms, SwappedLabelsAreRejected) {
  const ZooModel g = geodesic_frame_model();
  const Splitting sp = declared_splitting(g.x, *g.e_u, *g.e_s, g.model);
  const Rates r = expansion_rates(sp, RateMethod::bracket);
  EXPECT_THROW((void)dual_coframe_forms(sp, r, 1e-2), ContactError);
}

// ---------------------------------------------------------------------------------------------
// Normalized pullbacks

TEST(Pullback, ZeroTimeIsIdentity) {
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  const Pullback pb = pullback_normalized(au, f.sp.x, 0.0, f.rates.r_u, f.zoo.model);
  const Vec3 p = sample_point(*f.zoo.model, 5);
  EXPECT_LT((pb.alpha.at(p) - au.at(p)).norm(), 1e-12);
  EXPECT_NEAR(pb.normalizer(p), 1.0, 1e-12);
}

TEST(Pullback, CatUnstableDualIsInvariantWithNormalizerLambdaToMinusT) {
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  for (double t : {1.0, 2.0}) {
    const Pullback pb = pullback_normalized(au, f.sp.x, t, f.rates.r_u, f.zoo.model);
    for (std::size_t i = 0; i < sample_count(*f.zoo.model); i += 53) {
      const Vec3 p = sample_point(*f.zoo.model, i);
      EXPECT_NEAR(pb.normalizer(p), std::pow(kLambda, -t), 1e-7);
      EXPECT_LT((pb.alpha.at(p) - au.at(p)).norm(), 1e-6);
    }
  }
}

TEST(Synthesis, TiltedStartConvergesAtTheLinearRate) {
  // alpha_u^0 = alpha_u + 0.2 alpha_s: pulling back by phi^T scales alpha_s(e_s) by lambda^-T and
  // alpha_u(e_u) by lambda^T, so the kernel tilt is atan(0.2 lambda^-2T) exactly.
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  const OneForm au0 = linear_combination(1.0, au, 0.2, as);
  const OneForm as0 = linear_combination(1.0, as, 0.2, au);
  double prev = INFINITY;
  for (double t : {1.0, 2.0}) {
    const auto [b, ap] = synthesize_from(f.sp, f.rates, t, au0, as0);
    const double expect = std::atan(0.2 * std::pow(kLambda, -2.0 * t));
    EXPECT_NEAR(ap.diagnostics.angle_l1, expect, 1e-3 * expect + 1e-7);
    EXPECT_LT(ap.diagnostics.angle_l1, prev);
    prev = ap.diagnostics.angle_l1;
    EXPECT_TRUE(b.contact);
  }
}

// ---------------------------------------------------------------------------------------------
// Bi-contact synthesis

TEST(Synthesis, GeodesicMarginsAreOneHalf) {
  const Fixture f = geodesic();
  const auto [b, ap] = synthesize_bicontact(f.sp, f.rates, 2.0);
  EXPECT_NEAR(b.margin_plus, 0.5, 1e-9);
  EXPECT_NEAR(b.margin_minus, 0.5, 1e-9);
  EXPECT_NEAR(ap.diagnostics.max_l3_us, -1.0, 1e-9);
  EXPECT_NEAR(ap.diagnostics.max_l3_su, -1.0, 1e-9);
  EXPECT_TRUE(b.contact);
  EXPECT_LT(b.x_in_kernels, 1e-12);
}

TEST(Synthesis, CatMarginsAreHalfLogLambda) {
  const Fixture& f = cat8();
  const auto [b, ap] = synthesize_bicontact(f.sp, f.rates, 2.0);
  EXPECT_NEAR(b.margin_plus, kLnLambda / 2, 1e-5);
  EXPECT_NEAR(b.margin_minus, kLnLambda / 2, 1e-5);
  // alpha_u∧dalpha_s = -ln(lambda) on the cat suspension.
  EXPECT_NEAR(ap.diagnostics.max_l3_us, -kLnLambda, 1e-4);
  EXPECT_LT(ap.claim1_residual_u, 1e-8);
  EXPECT_LT(ap.claim3_residual_s, 1e-8);
  // I_u^T / I_s^T = exp(int (r_s - r_u)) = lambda^-2T.
  const double ratio = std::pow(kLambda, -4.0);
  EXPECT_NEAR(ap.diagnostics.normalizer_ratio_min / ratio, 1.0, 1e-2);
  EXPECT_NEAR(ap.diagnostics.normalizer_ratio_max / ratio, 1.0, 1e-2);
}

TEST(Synthesis, ExactDualDensityIdentity) {
  // For alpha_+ = (alpha_u - alpha_s)/2 built from exact duals, 4 alpha_+∧dalpha_+ = r_u - r_s.
  const Fixture& f = cat8();
  const BiContact b = bicontact_from_duals(f.sp);
  for (std::size_t i = 0; i < sample_count(*f.zoo.model); i += 29) {
    const Vec3 p = sample_point(*f.zoo.model, i);
    EXPECT_NEAR(4.0 * b.density_plus(p), f.rates.ru[i] - f.rates.rs[i], 1e-6);
  }
}

TEST(Synthesis, PerturbedCatIsBiContact) {
  const ZooModel z = perturb(cat_suspension(kCat, 8), 0.02, 7);
  const Splitting sp = compute_splitting(z.x, z.model);
  const Rates r = expansion_rates(sp, RateMethod::bracket);
  const auto [b, ap] = synthesize_bicontact(sp, r, 4.0);
  EXPECT_TRUE(b.contact);
  EXPECT_GT(b.margin_plus, 0.0);
  EXPECT_GT(b.margin_minus, 0.0);
  EXPECT_LT(ap.diagnostics.max_l3_us, 0.0);
  EXPECT_LT(ap.diagnostics.max_l3_su, 0.0);
  // The splitting is only known on the grid; the pullback identity alpha^T(e(0)) = alpha^0(e(T)) holds up to interpolation error.
  EXPECT_LT(ap.claim1_residual_u, 1e-3);
}

// ---------------------------------------------------------------------------------------------
// Dynamical sign, rotation and Reeb fields

TEST(DynamicalSign, VectorFields) {
  const Fixture f = geodesic();
  EXPECT_TRUE(dynamical_sign(VecField::constant(Vec3(1, 1, 0)), f.sp).all(DynSign::positive));
  EXPECT_TRUE(dynamical_sign(VecField::constant(Vec3(1, -1, 0.3)), f.sp).all(DynSign::negative));
  EXPECT_TRUE(dynamical_sign(f.sp.x, f.sp).all(DynSign::tangent));
  EXPECT_TRUE(dynamical_sign(VecField::constant(Vec3(0, 1, 0)), f.sp).all(DynSign::tangent));
}

TEST(DynamicalSign, PlaneFields) {
  const Fixture f = geodesic();
  const BiContact b = bicontact_from_duals(f.sp);
  EXPECT_TRUE(dynamical_sign(b.alpha_plus, f.sp).all(DynSign::positive));
  EXPECT_TRUE(dynamical_sign(b.alpha_minus, f.sp).all(DynSign::negative));
  EXPECT_THROW((void)dynamical_sign(OneForm::constant(Vec3(0, 0, 1)), f.sp), ContactError);
}

TEST(AngleRotation, SignMatchesContactSign) {
  const Fixture& f = cat8();
  const BiContact b = bicontact_from_duals(f.sp);
  const RotationCheck plus = angle_rotation_check(b.alpha_plus, f.sp);
  const RotationCheck minus = angle_rotation_check(b.alpha_minus, f.sp);
  EXPECT_EQ(plus.sign, -contact_density(b.alpha_plus, *f.zoo.model).sign);
  EXPECT_EQ(minus.sign, -contact_density(b.alpha_minus, *f.zoo.model).sign);
}

TEST(Reeb, ReebOfFlowDualIsTheFlow) {
  const Fixture f = geodesic();
  const ReebField r = reeb_field(OneForm::constant(Vec3(0, 0, 1)), *f.zoo.model);
  EXPECT_LT((r.field.at(Vec3::Zero()) - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_LT(r.residual_normalization, 1e-12);
  EXPECT_LT(r.residual_kernel, 1e-12);
}

TEST(Reeb, ReebOfSumOfDualsLiesInEta) {
  // alpha_u + alpha_s has Reeb field (e_s + e_u)/2, not X.
  const Fixture f = geodesic();
  const ReebField r = reeb_field(linear_combination(1.0, *f.zoo.alpha_u, 1.0, *f.zoo.alpha_s), *f.zoo.model);
  EXPECT_LT((r.field.at(Vec3::Zero()) - Vec3(0.5, 0.5, 0)).norm(), 1e-12);
}

TEST(Reeb, GeodesicReebOfAlphaPlus) {
  const Fixture f = geodesic();
  const BiContact b = bicontact_from_duals(f.sp);
  const ReebField r = reeb_field(b.alpha_plus, *f.zoo.model);
  EXPECT_LT((r.field.at(Vec3::Zero()) - Vec3(-1, 1, 0)).norm(), 1e-12);
}

TEST(ReebAnosov, CatAndGeodesicAreAnosov) {
  const Fixture g = geodesic();
  const ReebAnosovResult rg = reeb_anosov_test(g.sp, g.rates);
  EXPECT_TRUE(rg.anosov);
  EXPECT_LT(rg.witness_angle, 1e-9);
  const Fixture& c = cat8();
  const ReebAnosovResult rc = reeb_anosov_test(c.sp, c.rates);
  EXPECT_TRUE(rc.anosov);
  EXPECT_EQ(rc.classification, Classification::anosov);
  EXPECT_LT(rc.witness_angle, 1e-6);
}

TEST(ReebAnosov, T3IsNotAnosov) {
  const Fixture& f = t3();
  const ReebAnosovResult r = reeb_anosov_test(f.sp, f.rates);
  EXPECT_FALSE(r.anosov);
  EXPECT_EQ(r.classification, Classification::projectively_anosov);
  EXPECT_GT(r.failure_measure, 0.0);
  EXPECT_FALSE(r.diagnostics.empty());
}

// ---------------------------------------------------------------------------------------------
// Interpolation times and linear interpolation

TEST(InterpolationTime, ClosedFormOracle) {
  const Fixture f = geodesic();
  const OneForm& au = *f.zoo.alpha_u;
  const OneForm& as = *f.zoo.alpha_s;
  // alpha_-(e_s) = 0.3, alpha_+(e_s) = -0.7: tau_u = (0.3 - 0.7)/(0.3 + 0.7) = -0.4.
  const InterpolationTimes it = interpolation_time(half_sum(1.0, au, 0.6, as), half_sum(1.0, au, -1.4, as), f.sp);
  EXPECT_NEAR(it.tau_u_samples[0], -0.4, 1e-12);
  EXPECT_NEAR(it.tau_s_samples[0], 0.0, 1e-12);
  EXPECT_NEAR(it.beta_s_min, 0.5, 1e-12);
}

TEST(InterpolationTime, SymmetricPairGivesZero) {
  const Fixture f = geodesic();
  const BiContact b = bicontact_from_duals(f.sp);
  const InterpolationTimes it = interpolation_time(b.alpha_minus, b.alpha_plus, f.sp);
  EXPECT_NEAR(it.tau_u_samples[0], 0.0, 1e-15);
  EXPECT_NEAR(it.tau_s_samples[0], 0.0, 1e-15);
}

TEST(InterpolationTime, SwappedOrientationIsRejected) {
  const Fixture f = geodesic();
  const BiContact b = bicontact_from_duals(f.sp);
  EXPECT_THROW((void)interpolation_time(b.alpha_plus, b.alpha_minus, f.sp), ContactError);
}

TEST(InterpolationFamily, ConstantRatios) {
  const Fixture f = geodesic();
  const OneForm& au = *f.zoo.alpha_u;
  const OneForm& as = *f.zoo.alpha_s;
  const OneForm ap = half_sum(1.0, au, -1.0, as);
  const InterpolationFamily same = interpolation_contact_family(ap, ap, f.sp, f.rates);
  for (double m : same.min_direct) EXPECT_NEAR(m, 0.5, 1e-12);
  // f = 2: independent density of (2 alpha_u - alpha_s)/2 is -2(a_u∧da_s + a_s∧da_u)/4 = 1.
  const InterpolationFamily two = interpolation_contact_family(ap, half_sum(2.0, au, -1.0, as), f.sp, f.rates);
  EXPECT_NEAR(two.min_direct.back(), 1.0, 1e-12);
  EXPECT_NEAR(two.min_direct.front(), 0.5, 1e-12);
  EXPECT_LT(two.agreement, 1e-12);
  EXPECT_TRUE(two.positive);
}

TEST(InterpolationFamily, VaryingRatioMatchesQuadratic) {
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  const OneForm ap = half_sum(1.0, au, -1.0, as);
  for (double amp : {0.1, 0.5}) {
    const ScalarField ratio = ScalarField::closed(
        [amp](const JetPoint& p) { return 1.5 + amp * sin(2 * kPi * p.z); }, f.zoo.model.get());
    const OneForm app = linear_combination(0.5, ratio * au, -0.5, as);
    const InterpolationFamily fam = interpolation_contact_family(ap, app, f.sp, f.rates);
    EXPECT_LT(fam.agreement, 1e-5);
    // At t = 1 the density is (f (r_u - r_s) + X·f)/4 with X = d/dz; its infimum over z is
    // (1.5 L - sqrt((amp L)^2 + (2 pi amp)^2))/4, L = 2 ln(lambda). The grid only samples z = k/8.
    const double l = 2 * kLnLambda;
    double oracle = INFINITY;
    for (int k = 0; k < 8; ++k) {
      const double z = k / 8.0;
      oracle = std::min(oracle, ((1.5 + amp * std::sin(2 * kPi * z)) * l + 2 * kPi * amp * std::cos(2 * kPi * z)) / 4);
    }
    EXPECT_NEAR(fam.min_direct.back(), oracle, 1e-4);
    EXPECT_EQ(fam.positive, amp == 0.1);
  }
}

TEST(InterpolationFamily, RejectsDynamicallyNegativePlanes) {
  const Fixture f = geodesic();
  const BiContact b = bicontact_from_duals(f.sp);
  EXPECT_THROW((void)interpolation_contact_family(b.alpha_plus, b.alpha_minus, f.sp, f.rates), ContactError);
}

// ---------------------------------------------------------------------------------------------
// Winding and negative regions

TEST(Winding, T3FormsTurnNTimes) {
  const ZooModel z = t3_model(1, 1, 0.1, 0.2);
  const auto curve = [](double s) { return Vec3(0.3, 0.1, s); };
  const VecField dx = VecField::constant(Vec3(1, 0, 0)), dy = VecField::constant(Vec3(0, 1, 0));
  for (int n : {1, 2, 3}) {
    const Winding w = plane_winding(t3_form(n, 0.1, -1.0, z.model.get()), curve, dx, dy);
    EXPECT_NEAR(std::abs(w.half_turns), 2.0 * n, 1e-9);
    EXPECT_EQ(w.full_turns, n);
    EXPECT_EQ(w.threshold_case, n == 1);
    EXPECT_EQ(w.giroux_torsion, n >= 2);
  }
  const Winding flat = plane_winding(OneForm::constant(Vec3(0.1, 0, 1)), curve, dx, dy);
  EXPECT_NEAR(flat.total_angle, 0.0, 1e-12);
  EXPECT_FALSE(flat.pi_torsion);
}

TEST(NegativeRegion, CatPlusIsEmptyAndStableDualDegenerate) {
  const Fixture& f = cat8();
  const BiContact b = bicontact_from_duals(f.sp);
  const NegativeRegion r = negative_region(b.alpha_plus, f.sp);
  EXPECT_EQ(r.measure, 0.0);
  EXPECT_TRUE(r.components.empty());
  const auto [as, au] = exact_duals(f.sp);
  const NegativeRegion d = negative_region(as, f.sp);
  EXPECT_TRUE(d.degenerate);
}

TEST(NegativeRegion, T3ContactPlanesAreSeparatedBySplitting) {
  // ker alpha_+ and ker alpha_- of a bi-contact pair lie in opposite quadrants of (E^s, E^u).
  const Fixture& f = t3();
  EXPECT_EQ(negative_region(*f.zoo.alpha_plus, f.sp, false).measure, 0.0);
  EXPECT_EQ(negative_region(*f.zoo.alpha_minus, f.sp, false).measure, 1.0);
}

TEST(NegativeRegion, SignChangingPlaneFieldHasHorizontalBands) {
  // ker((alpha_u - g alpha_s)/2) ∩ eta is spanned by e_s + g e_u, negative exactly where g < 0.
  const Fixture& f = cat8();
  const auto [as, au] = exact_duals(f.sp);
  const ScalarField g =
      ScalarField::closed([](const JetPoint& p) { return sin(2 * kPi * p.z) + 0.3; }, f.zoo.model.get());
  const NegativeRegion r = negative_region(linear_combination(0.5, au, -0.5, g * as), f.sp, false);
  // sin(2 pi k/8) < -0.3 for k = 5, 6, 7.
  EXPECT_NEAR(r.measure, 3.0 / 8.0, 1e-12);
  ASSERT_EQ(r.components.size(), 1u);
  EXPECT_TRUE(r.components[0].z_band);
  EXPECT_NEAR(r.components[0].z_min, 5.0 / 8.0, 1e-12);
  EXPECT_NEAR(r.components[0].z_max, 7.0 / 8.0, 1e-12);
  EXPECT_GT(r.components[0].es_boundary, 0u);
}
