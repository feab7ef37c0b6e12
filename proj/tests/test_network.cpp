#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace relu_lab;

namespace {

NetworkParams random_params(int m, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  NetworkParams p = NetworkParams::zeros(m, d);
  for (int j = 0; j < m; ++j) {
    p.a[j] = nd(rng);
    for (int k = 0; k < d; ++k) p.W(j, k) = nd(rng);
  }
  return p;
}

// Independent loop evaluation of the loss.
double loop_loss(const NetworkParams& p, const Dataset& ds) {
  double s = 0;
  for (int i = 0; i < ds.size(); ++i) {
    double h = 0;
    for (int j = 0; j < p.width(); ++j) {
      double pre = 0;
      for (int k = 0; k < p.dim(); ++k) pre += p.W(j, k) * ds.points(i, k);
      h += p.a[j] * std::max(pre, 0.0);
    }
    s += (ds.labels[i] - h) * (ds.labels[i] - h);
  }
  return s / (2.0 * ds.size());
}

}  // namespace

TEST(Network, ForwardBasics) {
  NetworkParams p = NetworkParams::zeros(1, 2);
  p.a[0] = 1;
  p.W.row(0) = Vec::Unit(2, 0).transpose();
  EXPECT_DOUBLE_EQ(forward(p, fx::vec({0.7, 0.3})), 0.7);
  p.W.row(0) = fx::vec({-1, -1}).transpose();
  EXPECT_DOUBLE_EQ(forward(p, fx::vec({0.7, 0.3})), 0.0);
}

TEST(Network, LossOfZeroAndTeacherNetworks) {
  const Dataset ds = generate_centred(4, 5, 3);
  EXPECT_NEAR(loss(NetworkParams::zeros(3, 4), ds), ds.labels.squaredNorm() / (2.0 * ds.size()), 1e-15);
  NetworkParams t = NetworkParams::zeros(2, 4);
  t.a << 1.0, 0.0;
  t.W.row(0) = ds.teacher.transpose();
  EXPECT_LE(loss(t, ds), 1e-12);
  const NetworkParams g = gradient(t, ds);
  EXPECT_LE(g.a.norm() + g.W.norm(), 1e-12);
}

TEST(Network, LossMatchesLoop) {
  const Dataset ds = generate_uncentred(5, 7, 4);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const NetworkParams p = random_params(6, 5, s);
    EXPECT_NEAR(loss(p, ds), loop_loss(p, ds), 1e-12 * std::max(1.0, loop_loss(p, ds)));
  }
}

TEST(Network, GradientMatchesFiniteDifferences) {
  const Dataset ds = generate_centred(4, 6, 8);
  const NetworkParams p = random_params(5, 4, 17);
  const NetworkParams g = gradient(p, ds);
  const double h = 1e-6;
  auto check = [&](double analytic, auto perturb) {
    NetworkParams up = p, dn = p;
    perturb(up, h);
    perturb(dn, -h);
    const double fd = (loss(up, ds) - loss(dn, ds)) / (2 * h);
    EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  };
  for (int j = 0; j < 5; ++j) {
    check(g.a[j], [j](NetworkParams& q, double e) { q.a[j] += e; });
    for (int k = 0; k < 4; ++k) check(g.W(j, k), [j, k](NetworkParams& q, double e) { q.W(j, k) += e; });
  }
}

TEST(Network, DeadNeuronHasZeroGradient) {
  const Dataset ds = generate_centred(3, 3, 1);
  NetworkParams p = random_params(2, 3, 2);
  p.W.row(1) = -ds.teacher.transpose();
  const NetworkParams g = gradient(p, ds);
  if (active_set(p.w(1), ds).empty()) {
    EXPECT_EQ(g.a[1], 0.0);
    EXPECT_EQ(g.W.row(1).norm(), 0.0);
  }
}

TEST(Network, BalancedInitialisation) {
  const InitConfig init = draw_init(4, 10, 0.01, 9);
  const NetworkParams p = init_balanced(init);
  for (int j = 0; j < 10; ++j) {
    EXPECT_NEAR(p.a[j] * p.a[j], p.w(j).squaredNorm(), 1e-18);
    EXPECT_EQ(p.a[j] > 0, init.signs[j] == 1);
  }
  EXPECT_THROW(init_balanced(0.0, init.directions, init.signs), LabError);
}

TEST(Network, MetricsAngles) {
  const Dataset ds = fx::tiny();
  NetworkParams p = NetworkParams::zeros(3, 2);
  p.a << 1, 1, 1;
  p.W << 1, 0, 0, 1, -1, -1;  // third neuron is dead
  const MetricsRecord r = metrics(p, ds);
  EXPECT_EQ(r.active_count, 2);
  EXPECT_TRUE(r.angles_defined);
  EXPECT_NEAR(r.max_angle_deg, 90.0, 1e-12);
  EXPECT_NEAR(r.nuclear_norm, 1.0 + std::sqrt(3.0), 1e-12);  // singular values of the 3x2 W
  p.W.row(1) << -1, -1;
  EXPECT_FALSE(metrics(p, ds).angles_defined);
}

TEST(Network, TrainingFromInterpolatorStopsImmediately) {
  const Dataset ds = generate_centred(3, 3, 2);
  NetworkParams t = NetworkParams::zeros(1, 3);
  t.a[0] = 1;
  t.W.row(0) = ds.teacher.transpose();
  TrainOptions opt;
  const TrainLog log = train(t, ds, opt);
  EXPECT_EQ(log.stop, StopReason::loss_tol);
  EXPECT_EQ(log.iterations, 0);
}

TEST(Network, SmallStepLossMonotoneAndBalanceConserved) {
  const Dataset ds = generate_centred(4, 4, 6);
  const InitConfig init = draw_init(4, 12, 0.1, 6);
  TrainOptions opt;
  opt.lr = 1e-3;
  opt.max_iters = 20000;
  opt.growth = 1.02;
  const TrainLog log = train(init_balanced(init), ds, opt);
  for (std::size_t q = 1; q < log.records.size(); ++q) EXPECT_LE(log.records[q].loss, log.records[q - 1].loss + 1e-15);
  const Vec& bal = log.last().balance;
  EXPECT_LE(bal.cwiseAbs().maxCoeff(), 1e-4);
  for (int j = 0; j < 12; ++j)
    if (std::abs(log.last().a[j]) > 1e-6) {
      EXPECT_EQ(log.last().a[j] > 0, init.signs[j] == 1);
    }
}

TEST(Network, TrainingIsDeterministic) {
  const Dataset ds = generate_uncentred(4, 4, 5);
  const InitConfig init = draw_init(4, 8, 0.01, 5);
  TrainOptions opt;
  opt.max_iters = 3000;
  const TrainLog a = train(init_balanced(init), ds, opt), b = train(init_balanced(init), ds, opt);
  EXPECT_EQ(trainlog_to_csv(a), trainlog_to_csv(b));
  EXPECT_EQ(events_to_csv(a.events), events_to_csv(b.events));
}

TEST(Network, DivergenceStops) {
  const Dataset ds = generate_centred(3, 3, 1);
  TrainOptions opt;
  opt.lr = 50.0;
  opt.max_iters = 10000;
  const TrainLog log = train(init_balanced(draw_init(3, 4, 1.0, 1)), ds, opt);
  EXPECT_EQ(log.stop, StopReason::divergence);
}

TEST(Network, CrossingEventsAreInterpolated) {
  const Dataset ds = generate_centred(4, 6, 12);
  const InitConfig init = draw_init(4, 10, 1e-4, 12);
  TrainOptions opt;
  opt.lr = 1e-3;
  opt.max_iters = 20000;
  const TrainLog log = train(init_balanced(init), ds, opt);
  ASSERT_FALSE(log.events.empty());
  for (const auto& e : log.events) {
    EXPECT_GE(e.iteration, 0.0);
    EXPECT_LE(e.iteration, static_cast<double>(log.iterations));
  }
}

TEST(Network, TextRoundTrips) {
  const Dataset ds = generate_centred(3, 3, 4);
  const EigenAnalysis ea = eigen_analysis(ds);
  TrainOptions opt;
  opt.max_iters = 500;
  opt.eigen = &ea;
  opt.tests = draw_test_set(ds.teacher, 16, 1);
  const TrainLog log = train(init_balanced(draw_init(3, 5, 0.1, 4)), ds, opt);
  const auto recs = records_from_csv(trainlog_to_csv(log));
  ASSERT_EQ(recs.size(), log.records.size());
  for (std::size_t q = 0; q < recs.size(); ++q) {
    EXPECT_EQ(recs[q].iteration, log.records[q].iteration);
    EXPECT_DOUBLE_EQ(recs[q].loss, log.records[q].loss);
    EXPECT_DOUBLE_EQ(recs[q].nu[2], log.records[q].nu[2]);
    EXPECT_DOUBLE_EQ(recs[q].test_loss, log.records[q].test_loss);
  }
  const NetworkParams back = params_from_text(params_to_text(log.final_params));
  EXPECT_EQ((back.W - log.final_params.W).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.a - log.final_params.a).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Network, TestLossOfTeacherIsZero) {
  const Vec v = fx::vec({0.6, 0.8});
  NetworkParams t = NetworkParams::zeros(1, 2);
  t.a[0] = 1;
  t.W.row(0) = v.transpose();
  EXPECT_EQ(test_loss(t, v, 100, 3), 0.0);
  EXPECT_GT(test_loss(NetworkParams::zeros(1, 2), v, 100, 3), 0.0);
}
