#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace relu_lab;

TEST(Interpolator, DualBasisOfMneg) {
  const Dataset ds = example_family_Mneg(2, 0.5);
  const DualBasis b = dual_basis(ds);
  EXPECT_NEAR(b[0][0], 1.5, 1e-12);
  EXPECT_NEAR(b[0][1], -0.5, 1e-12);
  EXPECT_NEAR(b[1][0], -0.5, 1e-12);
  EXPECT_NEAR(b[1][1], 1.5, 1e-12);
}

TEST(Interpolator, DualBasisOfMpos) {
  const Dataset ds = example_family_Mpos(3, 11);
  const DualBasis b = dual_basis(ds);
  EXPECT_NEAR(b[1][0], 0.0, 1e-12);
  EXPECT_NEAR(b[1][1], -1.0 / (2.0 * std::sqrt(11.0)), 1e-12);
  EXPECT_NEAR(b[1][2], 0.5, 1e-12);
  EXPECT_NEAR(b[0][0], 1.0 / 11.0, 1e-12);
  EXPECT_NEAR(b[0][2], -1.0, 1e-12);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(b[k].dot(ds.point(i)), k == i ? 1.0 : 0.0, 1e-12);
}

TEST(Interpolator, DualBasisNeedsSquareData) {
  EXPECT_THROW(dual_basis(generate_centred(3, 4, 1)), LabError);
}

TEST(Interpolator, ProjectSimplex) {
  const Vec p = detail::project_simplex(fx::vec({0.5, 2.0, -1.0}));
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0, 1e-15);
  const Vec q = detail::project_simplex(fx::vec({0.2, 0.3, 0.5}));
  EXPECT_NEAR((q - fx::vec({0.2, 0.3, 0.5})).norm(), 0.0, 1e-15);
}

TEST(Interpolator, MnegValueAgreesWithGrid) {
  const Dataset ds = example_family_Mneg(2, 0.5);
  const DualBasis b = dual_basis(ds);
  const MResult r = compute_M(ds, b);
  EXPECT_NEAR(r.value(), -1.49443, 1e-5);
  ASSERT_TRUE(r.grid_value.has_value());
  EXPECT_NEAR(*r.grid_value, r.value(), 1e-4);
  EXPECT_TRUE(r.globally_certified);
  const InterpolatorReport rep = analyze_interpolators(ds);
  EXPECT_EQ(rep.verdict, Verdict::rank1_minimal);
  EXPECT_FALSE(rep.counterexample.has_value());
}

TEST(Interpolator, MnegNegativeAcrossFamily) {
  for (int d : {2, 3, 4})
    for (double frac : {0.3, 0.7, 1.0}) {
      const Dataset ds = example_family_Mneg(d, frac * mneg_xi_limit(d));
      EXPECT_LT(compute_M(ds, dual_basis(ds), 4).value(), 0.0) << d << " " << frac;
    }
  EXPECT_THROW(example_family_Mneg(2, 1.01 * mneg_xi_limit(2)), LabError);
}

TEST(Interpolator, MposCounterexampleBeatsRankOne) {
  const Dataset ds = example_family_Mpos(3, 11);
  const InterpolatorReport rep = analyze_interpolators(ds, 2, 8);
  EXPECT_NEAR(rep.M.value(), 0.0147980561, 1e-8);
  EXPECT_EQ(rep.verdict, Verdict::rank1_not_minimal);
  ASSERT_TRUE(rep.counterexample.has_value());
  const auto& ce = *rep.counterexample;
  EXPECT_LE(ce.cert.loss, 1e-12);
  EXPECT_LE(ce.cert.sq_norm, 2.0 - ce.xi * ce.xi + 1e-12);
  EXPECT_LT(ce.cert.sq_norm, rep.rank1_cert.sq_norm);
  EXPECT_NEAR(rep.rank1_cert.sq_norm, 2.0, 1e-12);
  EXPECT_LE(rep.rank1_cert.loss, 1e-12);
}

TEST(Interpolator, HandWitnessForMpos) {
  const Dataset ds = example_family_Mpos(3, 11);
  const DualBasis b = dual_basis(ds);
  MWitness w;
  w.K = {1};
  w.b = Vec::Unit(3, 1);
  w.c = Vec::Unit(3, 2);
  w.value = witness_objective(b, w, ds.teacher);
  EXPECT_GT(w.value, 0.0);
  const Counterexample ce = build_counterexample(ds, b, w);
  EXPECT_NEAR(ce.xi, 0.0216854663, 1e-9);
  EXPECT_LE(ce.cert.loss, 1e-12);
  EXPECT_LE(ce.cert.sq_norm, 2.0 - ce.xi * ce.xi + 1e-12);
}

TEST(Interpolator, NonPositiveWitnessRejected) {
  const Dataset ds = example_family_Mneg(2, 0.5);
  const DualBasis b = dual_basis(ds);
  const MResult r = compute_M(ds, b);
  EXPECT_THROW(build_counterexample(ds, b, r.witness), LabError);
}

TEST(Interpolator, RankOneSplitsAllInterpolate) {
  const Dataset ds = generate_centred(4, 4, 3);
  for (const auto& split : std::vector<std::vector<double>>{{1.0}, {0.5, 0.5}, {0.2, 0.3, 0.5}}) {
    const Certificate c = certify(build_rank1(ds, split), ds);
    EXPECT_LE(c.loss, 1e-25);
    EXPECT_NEAR(c.sq_norm, 2.0, 1e-12);
  }
  EXPECT_THROW(build_rank1(ds, {0.5, 0.6}), LabError);
}

TEST(Interpolator, MultistartDominatesRandomSamples) {
  const Dataset ds = generate_centred(4, 4, 8);
  const DualBasis b = dual_basis(ds);
  const MResult r = compute_M(ds, b, 8);
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> ex(1.0);
  for (int s = 0; s < 2000; ++s) {
    const unsigned mask = 1 + rng() % 14;
    MWitness w;
    w.b = Vec::Zero(4);
    w.c = Vec::Zero(4);
    for (int k = 0; k < 4; ++k) ((mask >> k) & 1u ? w.b : w.c)[k] = ex(rng);
    w.b /= w.b.sum();
    w.c /= w.c.sum();
    EXPECT_LE(witness_objective(b, w, ds.teacher), r.value() + 1e-9);
  }
}

TEST(Interpolator, ParallelAndSerialAgree) {
  const Dataset ds = generate_centred(5, 5, 2);
  const DualBasis b = dual_basis(ds);
  EXPECT_EQ(compute_M(ds, b, 4, 1, 1).value(), compute_M(ds, b, 4, 1, 3).value());
}

TEST(Interpolator, SizeGuard) { EXPECT_THROW(compute_M(generate_centred(13, 13, 1), DualBasis{Mat::Identity(13, 13)}), LabError); }
