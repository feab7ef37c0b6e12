#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace relu_lab;

namespace {

SweepRow row(int lambda_exp, int trial, double angle) {
  SweepRow r;
  r.scheme = "centred";
  r.d = 3;
  r.m = 4;
  r.lambda_exp = lambda_exp;
  r.seed = trial;
  r.final_loss = 1e-3 * (trial + 1);
  r.iters = 100 * (trial + 1);
  r.max_angle_deg = angle;
  r.avg_angle_deg = angle / 2;
  r.nuclear_norm = 1.0;
  r.sq_norm = 2.0;
  r.test_loss = 0.5;
  return r;
}

}  // namespace

TEST(Experiments, MedianAndStd) {
  EXPECT_EQ(median({1, 2, 100}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_NEAR(population_std({2, 4, 4, 4, 5, 5, 7, 9}), 2.0, 1e-15);
  EXPECT_THROW(median({}), LabError);
}

TEST(Experiments, AggregateMatchesHandComputation) {
  std::vector<SweepRow> rows{row(-2, 0, 10), row(-2, 1, 30), row(-2, 2, 20), row(-4, 0, 1), row(-4, 1, 3)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 2u);
  const auto& cols = aggregate_columns();
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
  };
  // Groups are ordered by lambda_exp, so -4 comes first.
  EXPECT_EQ(agg[0].lambda_exp, -4);
  EXPECT_EQ(agg[0].trials, 2);
  EXPECT_DOUBLE_EQ(agg[0].medians[col("max_angle_deg")], 2.0);
  EXPECT_DOUBLE_EQ(agg[0].stds[col("max_angle_deg")], 1.0);
  EXPECT_DOUBLE_EQ(agg[1].medians[col("max_angle_deg")], 20.0);
  EXPECT_NEAR(agg[1].stds[col("max_angle_deg")], std::sqrt(200.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(agg[1].medians[col("iters")], 200.0);
  const auto by = median_by_lambda(agg, "max_angle_deg");
  EXPECT_EQ(by.at(-2), 20.0);
  EXPECT_EQ(by.at(-4), 2.0);
}

TEST(Experiments, RowCsvRoundTrip) {
  const SweepRow r = row(-3, 2, 12.5);
  const SweepRow b = row_from_csv(row_to_csv(r));
  EXPECT_EQ(b.key(), r.key());
  EXPECT_EQ(b.max_angle_deg, r.max_angle_deg);
  EXPECT_EQ(b.iters, r.iters);
  EXPECT_EQ(std::string(kSweepHeader).substr(0, 19), "scheme,d,m,lambda_e");
}

TEST(Experiments, ConfigParsing) {
  const SweepConfig c = parse_sweep_config(
      "# comment\nscheme = centred\ndims = 3, 4\nwidths = 10\nlambda_exps = -1,-2\ntrials = 2\nmax_iters = 1e4\n");
  EXPECT_EQ(c.scheme, "centred");
  EXPECT_EQ(c.dims, std::vector<int>({3, 4}));
  EXPECT_EQ(c.lambda_exps, std::vector<int>({-1, -2}));
  EXPECT_EQ(c.max_iters, 10000);
  EXPECT_EQ(sweep_cells(c).size(), 2u * 1 * 2 * 2);
  EXPECT_THROW(parse_sweep_config("bogus = 1\n"), LabError);
  EXPECT_THROW(parse_sweep_config("lr = -1\n"), LabError);
  EXPECT_THROW(parse_sweep_config("trials = x\n"), LabError);
}

TEST(Experiments, SeedsIgnoreLambda) {
  SweepConfig c;
  EXPECT_EQ(init_seed(c, 16, 200, 0), init_seed(c, 16, 200, 0));
  EXPECT_NE(init_seed(c, 16, 200, 0), init_seed(c, 16, 200, 1));
  EXPECT_NE(dataset_seed(c, 16, 0), dataset_seed(c, 8, 0));
}

TEST(Experiments, SweepIsDeterministicAndResumes) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "relu_lab_sweep_test";
  fs::remove_all(dir);
  SweepConfig c;
  c.scheme = "centred";
  c.dims = {3};
  c.widths = {5};
  c.lambda_exps = {-2, -3};
  c.trials = 2;
  c.max_iters = 1500;
  c.out_dir = dir.string();
  const SweepResult a = run_sweep(c);
  EXPECT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.resumed, 0);
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
  const std::string first = text::read_file((dir / "sweep.csv").string());

  c.jobs = 2;
  const SweepResult b = run_sweep(c);
  EXPECT_EQ(b.resumed, 4);
  EXPECT_EQ(text::read_file((dir / "sweep.csv").string()), first);

  fs::remove_all(dir);
  const SweepResult fresh = run_sweep(c);
  EXPECT_EQ(text::read_file((dir / "sweep.csv").string()), first);
  fs::remove_all(dir);

  c.out_dir.clear();
  const SweepResult mem = run_sweep(c);
  ASSERT_EQ(mem.rows.size(), 4u);
  for (std::size_t q = 0; q < 4; ++q) EXPECT_EQ(row_to_csv(mem.rows[q]), row_to_csv(a.rows[q]));
}
