#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace relu_lab;

namespace {

MetricsRecord rec(long long it, double loss, const Vec& nu, double grad_sq = 0) {
  MetricsRecord r;
  r.iteration = it;
  r.loss = loss;
  r.nu = nu;
  r.grad_sq = grad_sq;
  return r;
}

double margin(const SliceMargins& sm, const std::string& name) {
  for (const auto& [k, v] : sm.margins)
    if (k == name) return v;
  ADD_FAILURE() << "no margin " << name;
  return 0;
}

}  // namespace

TEST(Phases, SmallMultipleOfGammaIsInS1) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  const SSetReport rep = s_membership(1e-3 * gamma_all(ds), ea, ds, 1e-4, 0.25);
  ASSERT_TRUE(rep.member);
  EXPECT_EQ(rep.best_ell, 1);
  for (const auto& [name, m] : rep.best()->margins) EXPECT_GT(m, 0.0) << name;
  EXPECT_TRUE(member_assertions(1e-3 * gamma_all(ds), rep, ea, ds).ok());
}

TEST(Phases, TeacherAndHalfTeacherAreNotMembers) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  const SSetReport at = s_membership(ds.teacher, ea, ds, 1e-4, 0.25);
  EXPECT_TRUE(at.degenerate);
  EXPECT_FALSE(at.member);
  EXPECT_TRUE(s_membership(Vec::Zero(2), ea, ds, 1e-4, 0.25).degenerate);

  const SSetReport half = s_membership(0.5 * ds.teacher, ea, ds, 1e-4, 0.25);
  EXPECT_FALSE(half.member);
  EXPECT_LT(margin(half.slices[0], "Psi_up_1,2"), 0.0);
  EXPECT_LT(margin(half.slices[1], "Omega_1"), 0.0);
}

TEST(Phases, XiCushionOverride) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  const Vec v = 1e-3 * gamma_all(ds);
  const double raw = normalized(v).dot(normalized(second_moment(ds) * (ds.teacher - v)));
  EXPECT_NEAR(s_membership(v, ea, ds, 1e-4, 0.25, 0.0, 0.0).xi_margin, raw, 1e-15);
  EXPECT_FALSE(s_membership(v, ea, ds, 1e-4, 0.25, 0.0, 1.0).member);
}

TEST(Phases, SignedPowIsOdd) {
  EXPECT_DOUBLE_EQ(signed_pow(4.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(signed_pow(-4.0, 0.5), -2.0);
  EXPECT_DOUBLE_EQ(signed_pow(0.0, 0.7), 0.0);
}

TEST(Phases, DetectT2) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  std::vector<MetricsRecord> recs;
  for (int q = 0; q < 60; ++q) {
    const double frac = q < 42 ? 0.4 * q / 42.0 : 0.5 + 0.01 * (q - 42);
    recs.push_back(rec(q * 10, 1.0, fx::vec({frac * ea.nu_star[0], 0.0})));
  }
  EXPECT_EQ(detect_T2(recs, ea).value(), 420);
  EXPECT_EQ(detect_T2(recs, ea, 500).value(), 500);
  recs.resize(42);
  EXPECT_FALSE(detect_T2(recs, ea).has_value());
}

TEST(Phases, PLBoundAndCheck) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  EXPECT_NEAR(pl_bound(ea, ds), 2 * 0.1 * std::hypot(0.82, 0.24) / (5 * 0.9), 1e-12);
  EXPECT_NEAR(pl_bound(ea, ds), 0.03797, 1e-5);
  std::vector<MetricsRecord> recs{rec(0, 1.0, {}, 0.5), rec(10, 0.1, {}, 0.01), rec(20, 1e-13, {}, 0)};
  PLCheck c = pl_check(recs, ea, ds, 0);
  EXPECT_EQ(c.considered, 2);
  EXPECT_NEAR(c.min_ratio, 0.1, 1e-15);
  EXPECT_TRUE(c.holds);
  c = pl_check(recs, ea, ds, 20);
  EXPECT_TRUE(c.vacuous);
}

TEST(Phases, EigenCrossingOrder) {
  const Dataset ds = generate_centred(3, 3, 4);
  const EigenAnalysis ea = eigen_analysis(ds);
  const Vec ns = ea.nu_star;
  std::vector<MetricsRecord> recs;
  // Coordinate 1 overshoots first, then 2; 3 never.
  const double f1[] = {0.0, 0.5, 1.2, 1.1, 1.05};
  const double f2[] = {0.0, 0.2, 0.6, 1.1, 1.02};
  for (int q = 0; q < 5; ++q) recs.push_back(rec(q, 1.0, fx::vec({f1[q] * ns[0], f2[q] * ns[1], 0.5 * ns[2]})));
  const EigenCrossing ec = eigencrossing_order(recs, ea);
  EXPECT_EQ(ec.order, std::vector<int>({1, 2}));
  EXPECT_EQ(ec.never, std::vector<int>({3}));
  EXPECT_TRUE(ec.prefix_order);
  EXPECT_NEAR(ec.times[0], 1.0 + 0.5 / 0.7, 1e-12);

  std::vector<MetricsRecord> frozen(4, rec(0, 1.0, 0.1 * ns));
  for (int q = 0; q < 4; ++q) frozen[q].iteration = q;
  EXPECT_TRUE(eigencrossing_order(frozen, ea).order.empty());
  EXPECT_FALSE(eigencrossing_order(frozen, ea).prefix_order);
}

TEST(Phases, CompareCrossingsUsesFirstEventInDirection) {
  const Dataset ds = fx::valid_centred(4, 6, 21);
  const InitConfig init = draw_init(4, 6, 1e-4, 21);
  const auto traces = simulate_all(ds, init);
  std::vector<CrossingEvent> events;
  const double lr = 1e-3;
  for (const auto& tr : traces)
    for (const auto& st : tr.stages) {
      events.push_back({tr.neuron, st.crossing, st.tau_exit / lr, tr.sign == 1});
      events.push_back({tr.neuron, st.crossing, st.tau_exit / lr + 5, tr.sign != 1});
    }
  const auto rows = compare_crossings(events, traces, 1e-4, 0.25, lr);
  ASSERT_EQ(rows.size(), traces.size());
  for (const auto& r : rows) {
    EXPECT_TRUE(r.order_agrees);
    EXPECT_TRUE(r.within_budget);
    EXPECT_EQ(r.missing, 0);
  }
  EXPECT_NEAR(crossing_budget(1e-4, 0.25, 1, 1), std::pow(1e-4, 1 - (1 + 2.0 / 3) * 0.25), 1e-15);
}

TEST(Phases, FirstPhaseAtLargeLambdaReportsWithoutThrowing) {
  const Dataset ds = fx::valid_centred(4, 4, 3);
  const InitConfig init = draw_init(4, 8, 1.0, 3);
  const auto traces = simulate_all(ds, init);
  const Measurements meas = measurements(ds, eigen_analysis(ds), init, traces);
  const TheoreticalTimes times = theoretical_times(ds, meas, 1.0, 0.25, 1e-9, traces);
  const NetworkParams p = init_balanced(init);
  const PhaseReport pr = first_phase_report(ds, init, traces, times, 1e-3, p, p);
  EXPECT_EQ(static_cast<int>(pr.neurons.size()), init.width());
}

TEST(Phases, FrozenNeuronsReported) {
  const Dataset ds = fx::valid_centred(4, 4, 3);
  InitConfig init = draw_init(4, 3, 1e-3, 3);
  init.directions.row(2) = -ds.teacher.transpose();
  const auto traces = simulate_all(ds, init);
  const Measurements meas = measurements(ds, eigen_analysis(ds), init, traces);
  const TheoreticalTimes times = theoretical_times(ds, meas, 1e-3, 0.25, 1e-9, traces);
  const NetworkParams p = init_balanced(init);
  const PhaseReport pr = first_phase_report(ds, init, traces, times, 1e-3, p, p);
  EXPECT_EQ(pr.neurons[2].group, "frozen");
}

TEST(Phases, MonitorWindow) {
  const Dataset ds = fx::tiny();
  const EigenAnalysis ea = eigen_analysis(ds);
  const Vec g = ea.coords(gamma_all(ds));
  std::vector<MetricsRecord> recs{rec(0, 0.5, 1e-6 * g), rec(1, 0.4, 1e-3 * g), rec(2, 0.3, 2e-3 * g),
                                  rec(3, 1e-7, ea.nu_star)};
  const SMonitor mon = s_monitor(recs, ea, ds, 1e-4, 0.25, 1LL);
  EXPECT_EQ(mon.considered, 2);
  EXPECT_EQ(mon.members, 2);
  EXPECT_EQ(mon.stop.value(), 3);
  EXPECT_EQ(mon.assertion_failures, 0);
}
