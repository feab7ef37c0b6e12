#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace relu_lab;

TEST(Dataset, TinyGammaAndLabels) {
  const Dataset ds = fx::tiny();
  EXPECT_NEAR(ds.labels[0], 1.0, 1e-15);
  EXPECT_NEAR(ds.labels[1], 0.8, 1e-15);
  const Vec g = gamma_all(ds);
  EXPECT_NEAR(g[0], 0.82, 1e-15);
  EXPECT_NEAR(g[1], 0.24, 1e-15);
  EXPECT_EQ(gamma(ds, {}).norm(), 0.0);
}

TEST(Dataset, TinyEigenAnalysis) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  EXPECT_NEAR(ea.alphas[0], 0.9, 1e-12);
  EXPECT_NEAR(ea.alphas[1], 0.1, 1e-12);
  const double s10 = std::sqrt(10.0);
  EXPECT_NEAR(ea.u(0)[0], 3 / s10, 1e-12);
  EXPECT_NEAR(ea.u(0)[1], 1 / s10, 1e-12);
  EXPECT_NEAR(std::abs(ea.u(1)[0]), 1 / s10, 1e-12);
  EXPECT_NEAR(std::abs(ea.u(1)[1]), 3 / s10, 1e-12);
  EXPECT_NEAR(ea.nu_star[0], 3 / s10, 1e-12);
  EXPECT_NEAR(ea.nu_star[1], 1 / s10, 1e-12);
}

TEST(Dataset, RepeatedEigenvalueRejected) {
  Mat P = Mat::Identity(3, 3);
  EXPECT_THROW(eigen_analysis(make_dataset(P, Vec::Ones(3).normalized())), LabError);
}

TEST(Dataset, EigenReconstructionAndGammaIdentity) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Dataset ds = generate_centred(5, 5, seed);
    const EigenAnalysis ea = eigen_analysis(ds);
    const Mat S = second_moment(ds);
    const Mat R = ea.basis * ea.alphas.asDiagonal() * ea.basis.transpose();
    EXPECT_LE((S - R).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((gamma_all(ds) - S * ds.teacher).norm(), 1e-12);
    for (int k = 0; k + 1 < 5; ++k) EXPECT_GT(ea.alphas[k], ea.alphas[k + 1]);
    for (int k = 0; k < 5; ++k) EXPECT_GT(ea.nu_star[k], 0.0);
  }
}

TEST(Dataset, IndexSetsSigns) {
  Mat P(3, 2);
  P << 1, 0, 0, 1, -1, 0.5;
  Dataset ds;
  ds.points = P;
  const IndexSets s = index_sets(Vec::Unit(2, 0), ds);
  EXPECT_EQ(s.plus, IndexSet({0}));
  EXPECT_EQ(s.zero, IndexSet({1}));
  EXPECT_EQ(s.minus, IndexSet({2}));
  EXPECT_EQ(index_sets(Vec::Zero(2), ds).zero.size(), 3u);
}

TEST(Dataset, IndexSetsScaleInvariantAndBruteForce) {
  const Dataset ds = generate_centred(3, 5, 7);
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Vec v = detail::gaussian(3, rng);
    const IndexSets s = index_sets(v, ds), t = index_sets(3.7 * v, ds);
    EXPECT_EQ(s.plus, t.plus);
    EXPECT_EQ(s.minus, t.minus);
    IndexSet plus;
    for (int i = 0; i < ds.size(); ++i)
      if (v.dot(ds.point(i)) > 0) plus.push_back(i);
    EXPECT_EQ(s.plus, plus);
  }
}

TEST(Dataset, GeneratorsAreDeterministicAndCorrelated) {
  for (const char* scheme : {"centred", "uncentred"}) {
    const Dataset a = generate_scheme(scheme, 6, 6, 42), b = generate_scheme(scheme, 6, 6, 42);
    EXPECT_EQ(dataset_to_text(a), dataset_to_text(b));
    EXPECT_NEAR(a.teacher.norm(), 1.0, 1e-14);
    for (int i = 0; i < a.size(); ++i) {
      EXPECT_GT(a.labels[i], 0.0);
      if (a.mode == Correlation::strict) {
        EXPECT_GT(cos_angle(a.teacher, a.point(i)), 1.0 / std::sqrt(2.0));
      }
    }
  }
  EXPECT_NE(dataset_to_text(generate_centred(6, 6, 1)), dataset_to_text(generate_centred(6, 6, 2)));
}

TEST(Dataset, UncentredTeacherDistance) {
  double sum = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Dataset ds = generate_uncentred(16, 16, s);
    sum += (*ds.extra_point - *ds.centre).norm();
  }
  EXPECT_NEAR(sum / 200, std::sqrt(std::sqrt(2.0) - 1.0), 0.03);
}

TEST(Dataset, MorePointsThanDimension) {
  const Dataset ds = generate_centred(4, 6, 9);
  EXPECT_EQ(ds.size(), 6);
  EXPECT_EQ(numerical_rank(ds.points), 4);
}

TEST(Dataset, TextRoundTripIsExact) {
  const Dataset ds = generate_uncentred(5, 5, 3);
  const Dataset back = dataset_from_text(dataset_to_text(ds));
  EXPECT_EQ((ds.points - back.points).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((ds.teacher - back.teacher).norm(), 0.0);
  EXPECT_EQ(back.scheme, "uncentred");
  const InitConfig init = draw_init(5, 7, 0.01, 3);
  const InitConfig ib = init_from_text(init_to_text(init));
  EXPECT_EQ((init.directions - ib.directions).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(init.signs, ib.signs);
  EXPECT_EQ(init.lambda, ib.lambda);
}

TEST(Dataset, MalformedTextIsAnError) {
  EXPECT_THROW(dataset_from_text("2 2 custom 0\n1 0\n1 0 1\n"), LabError);
  EXPECT_THROW(dataset_from_text("garbage"), LabError);
}

TEST(Dataset, AssumptionViolationsReported) {
  const Dataset ds = fx::tiny();
  InitConfig init;
  init.directions = Mat(1, 2);
  init.directions << 1.0, 0.1;
  init.signs = {-1};
  const auto rep = validate_assumptions(ds, init);
  EXPECT_FALSE(rep.ok());
  ASSERT_NE(rep.find("J_+ nonempty"), nullptr);
  EXPECT_FALSE(rep.find("J_+ nonempty")->passed);

  Mat P(2, 2);
  P << 1.0, 0.2, 1.0, 0.2;
  Dataset dup;
  dup.points = P;
  dup.teacher = Vec::Unit(2, 0);
  dup.labels = Vec::Ones(2);
  init.signs = {1};
  const auto r2 = validate_assumptions(dup, init);
  EXPECT_FALSE(r2.find("distinct normalized points")->passed);
}

TEST(Dataset, GeneratedInstancePassesStaticChecks) {
  const Dataset ds = generate_centred(4, 4, 5);
  const InitConfig init = draw_init(4, 10, 1e-3, 5);
  EXPECT_TRUE(validate_assumptions(ds, init).ok());
}

TEST(Dataset, LambdaBoundLogValue) {
  const LambdaBound b = lambda_bound(2, 2, 0.5, 1.5, 0.25);
  EXPECT_NEAR(b.log_value, -24.0 * (std::log(2.0) + 36.0 * std::log(12.0)), 1e-9);
  EXPECT_LT(lambda_bound(2, 2, 0.5, 1.5, 0.1).log_value, lambda_bound(2, 2, 0.5, 1.5, 0.2).log_value);
  const LambdaBound one = lambda_bound(1, 3, 0.5, 0.5, 0.25);
  EXPECT_NEAR(one.log_value, -24.0 * 9.0 * std::log(12.0), 1e-9);
  EXPECT_FALSE(b.admits(1e-10));
}

TEST(Dataset, GammaNormBoundsOnSubsets) {
  const Dataset ds = fx::valid_centred(4, 6, 21);
  const EigenAnalysis ea = eigen_analysis(ds);
  const InitConfig init = draw_init(4, 8, 1e-3, 1);
  const auto traces = simulate_all(ds, init);
  const Measurements meas = measurements(ds, ea, init, traces);
  const int n = ds.size();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    IndexSet I;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) I.push_back(i);
    const double g = gamma(ds, I).norm(), k = static_cast<double>(I.size());
    EXPECT_GE(g, meas.delta * meas.delta * std::sqrt(k) / (std::sqrt(2.0) * n));
    EXPECT_LE(g, meas.Delta * meas.Delta * k / n);
  }
}
