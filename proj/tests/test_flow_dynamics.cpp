#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "anolab/splitting.hpp"
#include "anolab/zoo.hpp"

using namespace anolab;

namespace {

constexpr double kPi = std::numbers::pi;
const Eigen::Matrix2d kCat = (Eigen::Matrix2d() << 2, 1, 1, 1).finished();
const double kLambda = (3.0 + std::sqrt(5.0)) / 2.0;

double torus_distance(const Vec3& a, const Vec3& b) {
  Vec3 d = a - b;
  for (int k = 0; k < 3; ++k) d[k] -= std::round(d[k]);
  return d.norm();
}

VecField scaled(const VecField& x, const ScalarField& f) { return f * x; }

}  // namespace

TEST(FlowMap, CatSuspensionReentersThroughMonodromy) {
  const ZooModel cat = cat_suspension(kCat, 16);
  for (const Eigen::Vector2d& p0 : {Eigen::Vector2d(0.1, 0.3), Eigen::Vector2d(0.77, 0.52)}) {
    const Vec3 end = flow_map(cat.x, Vec3(p0[0], p0[1], 0.0), 1.0, *cat.model);
    Eigen::Vector2d expect = kCat * p0;
    expect = expect.array() - expect.array().floor();
    EXPECT_LT(torus_distance(end, Vec3(expect[0], expect[1], 0.0)), 1e-9);
  }
}

TEST(FlowMap, ZeroTimeAndTranslation) {
  const ZooModel t3 = t3_model(1, 1, 0.1, 0.2);
  const Vec3 p(0.2, 0.4, 0.6);
  EXPECT_EQ(flow_map(t3.x, p, 0.0, *t3.model), p);
  auto torus = std::make_shared<FrameModel>("torus", ModelKind::coordinate_grid, Domain{},
                                            std::array<int, 3>{8, 8, 8}, coordinate_frame());
  const Vec3 q = flow_map(VecField::constant(Vec3(0, 0, 1)), Vec3(0.1, 0.2, 0.7), 0.5, *torus);
  EXPECT_LT((q - Vec3(0.1, 0.2, 0.2)).norm(), 1e-12);
}

TEST(FlowMap, GroupLaw) {
  const ZooModel pert = perturb(cat_suspension(kCat, 16), 0.05, 3);
  const Vec3 p(0.3, 0.6, 0.2);
  const Vec3 a = flow_map(pert.x, flow_map(pert.x, p, 0.7, *pert.model), 0.9, *pert.model);
  const Vec3 b = flow_map(pert.x, p, 1.6, *pert.model);
  EXPECT_LT(torus_distance(a, b), 1e-8);
}

TEST(TangentPush, CatUnstableEigenvectorGrowsByLambda) {
  const ZooModel cat = cat_suspension(kCat, 16);
  const Vec3 v = tangent_push(cat.x, Vec3(0.2, 0.3, 0.0), Vec3(0, 1, 0), 1.0, *cat.model);
  EXPECT_NEAR(v[1], kLambda, 1e-8);
  EXPECT_NEAR(v[0], 0.0, 1e-12);
  // Independent check through coordinates: push is A v_u in the chart.
  const CatEigen ev = cat_eigen(kCat);
  const Eigen::Vector2d av = kCat * ev.v_u;
  EXPECT_NEAR(av.norm(), kLambda, 1e-12);
}

TEST(TangentPush, GeodesicStableLegContracts) {
  const ZooModel g = geodesic_frame_model();
  const Vec3 v = tangent_push(g.x, Vec3::Zero(), Vec3(1, 0, 0), 1.0, *g.model);
  EXPECT_NEAR(v[0], std::exp(-1.0), 1e-9);
  EXPECT_NEAR(v[1], 0.0, 1e-12);
}

TEST(TangentPush, GeneratorIsEquivariantAndCocycleHolds) {
  const ZooModel pert = perturb(cat_suspension(kCat, 16), 0.05, 11);
  const Vec3 p(0.15, 0.85, 0.4);
  const Vec3 xp = pert.x.at(p);
  const double t = 0.8;
  const FlowResult r = integrate_flow(*pert.model, pert.x, p, t, {xp});
  EXPECT_LT((r.tangents[0] - pert.x.at(r.point)).norm(), 1e-8);

  const Vec3 v(0.3, -0.2, 0.5);
  const FlowResult a = integrate_flow(*pert.model, pert.x, p, 0.5, {v});
  const Vec3 two_step = tangent_push(pert.x, a.point, a.tangents[0], 0.7, *pert.model);
  const Vec3 one_step = tangent_push(pert.x, p, v, 1.2, *pert.model);
  EXPECT_LT((two_step - one_step).norm(), 1e-8 * one_step.norm());
  // Linearity in v.
  const Vec3 w(-1.0, 0.4, 0.1);
  const Vec3 lin = tangent_push(pert.x, p, 2.0 * v + w, 1.2, *pert.model);
  EXPECT_LT((lin - 2.0 * one_step - tangent_push(pert.x, p, w, 1.2, *pert.model)).norm(), 1e-8 * lin.norm());
}

TEST(Splitting, CatDirectionsAreTheEigenLines) {
  const ZooModel cat = cat_suspension(kCat, 16);
  const Splitting sp = compute_splitting(cat.x, cat.model);
  ASSERT_TRUE(sp.converged);
  for (std::size_t i = 0; i < sp.eu_samples.size(); i += 97) {
    EXPECT_LT((sp.eu_samples[i] - Vec3(0, 1, 0)).norm(), 1e-7);
    EXPECT_LT((sp.es_samples[i] - Vec3(1, 0, 0)).norm(), 1e-7);
  }
  // In coordinates e_u = lambda^{-t} v_u: the unstable eigendirection, shrinking along the suspension.
  const CatEigen ev = cat_eigen(kCat);
  const Vec3 p(0.3, 0.4, 0.75);
  const Vec3 coord = cat.model->frame_matrix(p) * sp.e_u.at(p);
  EXPECT_NEAR(coord[0], std::pow(kLambda, -0.75) * ev.v_u[0], 1e-7);
  EXPECT_NEAR(coord[1], std::pow(kLambda, -0.75) * ev.v_u[1], 1e-7);
  EXPECT_LT(sp.seed_disagreement, 1e-6);
}

TEST(Splitting, GeodesicLegsAreDetected) {
  const ZooModel g = geodesic_frame_model();
  const Splitting sp = compute_splitting(g.x, g.model);
  ASSERT_TRUE(sp.converged);
  EXPECT_LT((sp.e_u.at(Vec3::Zero()) - Vec3(0, 1, 0)).norm(), 1e-9);
  EXPECT_LT((sp.e_s.at(Vec3::Zero()) - Vec3(1, 0, 0)).norm(), 1e-9);
}

TEST(Splitting, TimeReversalExchangesDirections) {
  const ZooModel cat = cat_suspension(kCat, 16);
  const Splitting fwd = compute_splitting(cat.x, cat.model);
  const VecField minus_x = scaled(cat.x, ScalarField::constant(-1.0));
  const Splitting rev = compute_splitting(minus_x, cat.model);
  ASSERT_TRUE(rev.converged);
  for (std::size_t i = 0; i < fwd.eu_samples.size(); i += 131) {
    EXPECT_LT((rev.es_samples[i] - fwd.eu_samples[i]).norm(), 1e-7);
    EXPECT_LT((rev.eu_samples[i] - fwd.es_samples[i]).norm(), 1e-7);
  }
}

TEST(Splitting, InvarianceResidualDecaysUnderDoubling) {
  const ZooModel pert = perturb(cat_suspension(kCat, 16), 0.02, 7);
  SplittingParams prm;
  prm.tol = 1e-12;  // force the full horizon so the decay is visible
  prm.max_horizon_steps = 16;
  const Splitting sp = compute_splitting(pert.x, pert.model, prm);
  ASSERT_GE(sp.doubling_change.size(), 3u);
  // Geometric decay until the interpolation floor.
  for (std::size_t k = 1; k < sp.doubling_change.size(); ++k) {
    if (sp.doubling_change[k - 1] > 1e-6) {
      EXPECT_LE(sp.doubling_change[k], 0.7 * sp.doubling_change[k - 1]);
    }
  }
}

TEST(Rates, CatAndGeodesicMatchEigenOracle) {
  const ZooModel cat = cat_suspension(kCat, 16);
  const Splitting sp = compute_splitting(cat.x, cat.model);
  for (RateMethod m : {RateMethod::bracket, RateMethod::finite_time}) {
    const Rates r = expansion_rates(sp, m);
    for (std::size_t i = 0; i < r.ru.size(); i += 53) {
      EXPECT_NEAR(r.ru[i], std::log(kLambda), 1e-6);
      EXPECT_NEAR(r.rs[i], -std::log(kLambda), 1e-6);
      EXPECT_NEAR(r.qu[i], 0.0, 1e-6);
    }
  }
  const ZooModel g = geodesic_frame_model();
  const Splitting gs = compute_splitting(g.x, g.model);
  const Rates rb = expansion_rates(gs, RateMethod::bracket);
  EXPECT_NEAR(rb.ru[0], 1.0, 1e-9);
  EXPECT_NEAR(rb.rs[0], -1.0, 1e-9);
  EXPECT_NEAR(rb.qu[0], 0.0, 1e-9);
  EXPECT_NEAR(rb.qs[0], 0.0, 1e-9);
  const Rates rf = expansion_rates(gs, RateMethod::finite_time);
  EXPECT_NEAR(rf.ru[0], 1.0, 1e-3);
  EXPECT_NEAR(rf.rs[0], -1.0, 1e-3);
}

TEST(Rates, SquaredCatDoublesRate) {
  const ZooModel cat2 = cat_suspension(kCat * kCat, 16);
  const Rates r = expansion_rates(compute_splitting(cat2.x, cat2.model), RateMethod::bracket);
  EXPECT_NEAR(r.ru[0], 2.0 * std::log(kLambda), 1e-6);
}

TEST(Rates, ReparametrizationScalesRates) {
  const ZooModel cat = cat_suspension(kCat, 16);
  const Rates base = expansion_rates(compute_splitting(cat.x, cat.model), RateMethod::bracket);
  const ScalarField f = ScalarField::closed([](const JetPoint& p) { return 1.0 + 0.3 * sin(2 * kPi * p.z); },
                                            cat.model.get());
  const Rates scaled_rates = expansion_rates(compute_splitting(scaled(cat.x, f), cat.model), RateMethod::bracket);
  const Rates oracle = rescale_rates(base, cat.model, f);
  for (std::size_t i = 0; i < base.ru.size(); i += 37) {
    EXPECT_NEAR(scaled_rates.ru[i], oracle.ru[i], 1e-5);
    EXPECT_NEAR(scaled_rates.rs[i], oracle.rs[i], 1e-5);
  }
}

TEST(Rates, BracketAndFiniteTimeAgreeOnPerturbedCat) {
  const ZooModel pert = perturb(cat_suspension(kCat, 16), 0.02, 7);
  const Splitting sp = compute_splitting(pert.x, pert.model);
  ASSERT_TRUE(sp.converged);
  const Rates rb = expansion_rates(sp, RateMethod::bracket), rf = expansion_rates(sp, RateMethod::finite_time);
  const double tol = std::max(1e-3, 10 * pert.model->h());
  for (std::size_t i = 0; i < rb.ru.size(); ++i) {
    ASSERT_NEAR(rb.ru[i], rf.ru[i], tol);
    ASSERT_NEAR(rb.rs[i], rf.rs[i], tol);
  }
}

TEST(Classify, ConstantRatesAndZooModels) {
  const ZooModel g = geodesic_frame_model();
  const Verdict v = classify_flow(constant_rates(g.model, -1.0, 1.0, "frame-orthonormal"), 1e-6);
  EXPECT_EQ(v.classification, Classification::anosov);
  EXPECT_DOUBLE_EQ(v.projective_margin, 2.0);
  EXPECT_DOUBLE_EQ(v.anosov_margin, 1.0);

  const ZooModel cat = cat_suspension(kCat, 16);
  const Verdict vc =
      classify_flow(expansion_rates(compute_splitting(cat.x, cat.model), RateMethod::bracket), 1e-6);
  EXPECT_EQ(vc.classification, Classification::anosov);
  EXPECT_NEAR(vc.anosov_margin, std::log(kLambda), 1e-6);
}

TEST(Classify, PerturbedCatStaysAnosovAndMarginsDependOnSeed) {
  const ZooModel base = cat_suspension(kCat, 16);
  std::vector<double> margins;
  for (unsigned seed : {7u, 8u}) {
    const ZooModel pert = perturb(base, 0.02, seed);
    const Verdict v = classify_flow(expansion_rates(compute_splitting(pert.x, pert.model), RateMethod::bracket),
                                    pert.model->default_tolerance());
    EXPECT_EQ(v.classification, Classification::anosov);
    EXPECT_GT(v.anosov_margin, 0.8 * std::log(kLambda));
    margins.push_back(v.anosov_margin);
  }
  EXPECT_NE(margins[0], margins[1]);
  EXPECT_THROW((void)perturb(base, 0.2, 1), ModelError);
}

TEST(Classify, InvariantUnderPositiveReparametrization) {
  const ZooModel pert = perturb(cat_suspension(kCat, 16), 0.02, 7);
  const double tol = pert.model->default_tolerance();
  const Classification c0 =
      classify_flow(expansion_rates(compute_splitting(pert.x, pert.model), RateMethod::bracket), tol).classification;
  for (const ScalarField& f :
       {ScalarField::constant(0.5),
        ScalarField::closed([](const JetPoint& p) { return 1.0 + 0.3 * sin(2 * kPi * p.z); }, pert.model.get())}) {
    const Classification c =
        classify_flow(expansion_rates(compute_splitting(f * pert.x, pert.model), RateMethod::bracket), tol)
            .classification;
    EXPECT_EQ(c, c0);
  }
}

TEST(Classify, T3FlowIsProjectivelyAnosovButNotAnosov) {
  const ZooModel t3 = t3_model(1, 1, 0.1, 0.2);
  const Splitting sp = compute_splitting(t3.x, t3.model);
  EXPECT_TRUE(sp.converged) << sp.doubling_change.back();
  const Rates r = expansion_rates(sp, RateMethod::bracket, {.require_converged = false});
  const Verdict v = classify_flow(r, t3.model->default_tolerance());
  EXPECT_EQ(v.classification, Classification::projectively_anosov);
  EXPECT_LE(v.anosov_margin, 0.0);
  // Brute-force oracle: the minimum of r_u over the grid is non-positive.
  EXPECT_LE(*std::min_element(r.ru.begin(), r.ru.end()), 0.0);
}

TEST(AveragedMetric, InvariantMetricIsFixed) {
  const ZooModel g = geodesic_frame_model();
  Metric id;
  id.tag = "identity";
  id.at = [](const Vec3&) { return Mat3::Identity(); };
  // The frame metric is not invariant for the geodesic flow (e_s contracts), but the
  // zero-time limit returns g.
  const AveragedMetric small = averaged_metric(id, g.x, 1e-4, g.model);
  EXPECT_LT((small.metric.at(Vec3::Zero()) - Mat3::Identity()).norm(), 1e-3);
  // A metric invariant under the flow: translation on the torus.
  auto torus = std::make_shared<FrameModel>("torus", ModelKind::coordinate_grid, Domain{},
                                            std::array<int, 3>{8, 8, 8}, coordinate_frame());
  const AveragedMetric inv = averaged_metric(id, VecField::constant(Vec3(0, 0, 1)), 3.0, torus);
  EXPECT_LT((inv.metric.at(Vec3(0.3, 0.2, 0.1)) - Mat3::Identity()).norm(), 1e-9);
}

TEST(AveragedMetric, SkewedCatMetricBecomesStrictAfterAveraging) {
  const ZooModel cat = cat_suspension(kCat, 8);
  Metric skew;
  skew.tag = "skewed";
  skew.at = [](const Vec3& p) {
    const double k = 0.5 * std::sin(2 * kPi * p[2]);
    Mat3 g = Mat3::Identity();
    g(0, 0) = std::exp(-2 * k);
    g(1, 1) = std::exp(2 * k);
    return g;
  };
  SplittingParams prm;
  prm.metric = skew;
  const Rates skewed = expansion_rates(compute_splitting(cat.x, cat.model, prm), RateMethod::bracket);
  const Verdict before = classify_flow(skewed, 1e-6);
  EXPECT_NE(before.classification, Classification::anosov);

  const AveragedMetric avg = averaged_metric(skew, cat.x, 5.0, cat.model);
  prm.metric = avg.metric;
  const Rates averaged = expansion_rates(compute_splitting(cat.x, cat.model, prm), RateMethod::finite_time);
  const Verdict after = classify_flow(averaged, 1e-6);
  EXPECT_EQ(after.classification, Classification::anosov);
  EXPECT_TRUE(std::isfinite(avg.x_derivative_bound));
}
