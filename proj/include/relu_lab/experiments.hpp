// Experiment sweeps over (scheme, d, m, lambda, trial) with per-cell logs,
// resumable execution and median / standard deviation aggregation.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/network.hpp"
#include "relu_lab/text_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace relu_lab {

struct SweepConfig {
  std::string scheme = "uncentred";
  std::vector<int> dims{16};
  std::vector<int> widths{200};
  std::vector<int> lambda_exps{2, 1, 0, -1, -2, -3, -4, -5, -6, -7, -8, -9, -10, -11, -12, -13};
  int trials = 5;
  double lr = 0.01;
  long long max_iters = 20'000'000;
  double loss_tol = 1e-9;
  double eps = 0.25;
  int test_count = 64;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "sweep_out";
  int n_override = 0;  // 0 means n = d

  void validate() const {
    require(scheme == "centred" || scheme == "uncentred", ErrorKind::precondition, "scheme must be centred or uncentred");
    require(!dims.empty() && !widths.empty() && !lambda_exps.empty(), ErrorKind::precondition,
            "dims, widths and lambda_exps must be nonempty");
    require(lr > 0.0, ErrorKind::precondition, "lr must be positive");
    require(trials >= 1, ErrorKind::precondition, "trials must be at least 1");
    require(max_iters >= 0 && test_count >= 1 && jobs >= 1, ErrorKind::precondition, "invalid sweep sizes");
    for (int d : dims) require(d > 1, ErrorKind::precondition, "dims must exceed 1");
    for (int m : widths) require(m >= 1, ErrorKind::precondition, "widths must be positive");
  }
};

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& v, T (*conv)(const std::string&)) {
  std::vector<T> out;
  for (const auto& part : text::split(v, ',')) {
    const std::string t = text::trim(part);
    if (!t.empty()) out.push_back(conv(t));
  }
  return out;
}

inline int to_int(const std::string& s) {
  std::size_t pos = 0;
  const int v = std::stoi(s, &pos);
  require(pos == s.size(), ErrorKind::io, "not an integer: " + s);
  return v;
}

}  // namespace detail

// Flat `key = value` text; '#' starts a comment, lists are comma separated.
inline SweepConfig parse_sweep_config(const std::string& body) {
  SweepConfig c;
  int line_no = 0;
  for (const auto& raw : text::split(body, '\n')) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::io, "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = text::trim(line.substr(0, eq));
    const std::string val = text::trim(line.substr(eq + 1));
    try {
      if (key == "scheme") c.scheme = val;
      else if (key == "dims") c.dims = detail::parse_list<int>(val, detail::to_int);
      else if (key == "widths") c.widths = detail::parse_list<int>(val, detail::to_int);
      else if (key == "lambda_exps") c.lambda_exps = detail::parse_list<int>(val, detail::to_int);
      else if (key == "trials") c.trials = detail::to_int(val);
      else if (key == "lr") c.lr = std::stod(val);
      else if (key == "max_iters") c.max_iters = static_cast<long long>(std::stod(val));
      else if (key == "loss_tol") c.loss_tol = std::stod(val);
      else if (key == "eps") c.eps = std::stod(val);
      else if (key == "test_count") c.test_count = detail::to_int(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "jobs") c.jobs = detail::to_int(val);
      else if (key == "out_dir") c.out_dir = val;
      else throw LabError(ErrorKind::io, "unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw LabError(ErrorKind::io, "config line " + std::to_string(line_no) + ": bad value for " + key);
    } catch (const std::out_of_range&) {
      throw LabError(ErrorKind::io, "config line " + std::to_string(line_no) + ": value out of range for " + key);
    }
  }
  c.validate();
  return c;
}

struct SweepRow {
  std::string scheme;
  int d = 0, m = 0, lambda_exp = 0, seed = 0;  // seed is the trial index
  double final_loss = 0;
  long long iters = 0;
  double max_angle_deg = 0, avg_angle_deg = 0, nuclear_norm = 0, sq_norm = 0, test_loss = 0;
  std::string stop;

  auto key() const { return std::tie(scheme, d, m, lambda_exp, seed); }
};

inline const char* kSweepHeader =
    "scheme,d,m,lambda_exp,seed,final_loss,iters,max_angle_deg,avg_angle_deg,nuclear_norm,sq_norm,test_loss";

inline std::string row_to_csv(const SweepRow& r) {
  return r.scheme + "," + std::to_string(r.d) + "," + std::to_string(r.m) + "," + std::to_string(r.lambda_exp) + "," +
         std::to_string(r.seed) + "," + text::fmt(r.final_loss) + "," + std::to_string(r.iters) + "," +
         text::fmt(r.max_angle_deg) + "," + text::fmt(r.avg_angle_deg) + "," + text::fmt(r.nuclear_norm) + "," +
         text::fmt(r.sq_norm) + "," + text::fmt(r.test_loss);
}

inline SweepRow row_from_csv(const std::string& line) {
  const auto f = text::split(text::trim(line), ',');
  require(f.size() == 12, ErrorKind::io, "sweep row has wrong field count");
  SweepRow r;
  r.scheme = f[0];
  r.d = std::stoi(f[1]);
  r.m = std::stoi(f[2]);
  r.lambda_exp = std::stoi(f[3]);
  r.seed = std::stoi(f[4]);
  r.final_loss = std::stod(f[5]);
  r.iters = std::stoll(f[6]);
  r.max_angle_deg = std::stod(f[7]);
  r.avg_angle_deg = std::stod(f[8]);
  r.nuclear_norm = std::stod(f[9]);
  r.sq_norm = std::stod(f[10]);
  r.test_loss = std::stod(f[11]);
  return r;
}

inline std::uint64_t scheme_tag(const std::string& scheme) { return scheme == "centred" ? 1 : 2; }

inline std::uint64_t dataset_seed(const SweepConfig& c, int d, int trial) {
  return derive_seed(c.seed, scheme_tag(c.scheme), static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(trial));
}

// Independent of lambda so that cells differing only in lambda share z and s.
inline std::uint64_t init_seed(const SweepConfig& c, int d, int m, int trial) {
  return derive_seed(c.seed, scheme_tag(c.scheme), static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(m),
                     static_cast<std::uint64_t>(trial), 0x1a17ull);
}

inline std::uint64_t test_seed(const SweepConfig& c, int d, int trial) {
  return derive_seed(c.seed, scheme_tag(c.scheme), static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(trial),
                     0x7e57ull);
}

struct Cell {
  int d, m, lambda_exp, trial;
};

inline std::string cell_name(const SweepConfig& c, const Cell& cell) {
  return c.scheme + "_d" + std::to_string(cell.d) + "_m" + std::to_string(cell.m) + "_l" +
         std::to_string(cell.lambda_exp) + "_t" + std::to_string(cell.trial);
}

// Trains one cell; returns its row and the full log.
inline std::pair<SweepRow, TrainLog> run_cell(const SweepConfig& c, const Cell& cell) {
  const int n = c.n_override > 0 ? c.n_override : cell.d;
  const Dataset ds = generate_scheme(c.scheme, cell.d, n, dataset_seed(c, cell.d, cell.trial));
  const double lambda = std::pow(4.0, cell.lambda_exp);
  const InitConfig init = draw_init(cell.d, cell.m, lambda, init_seed(c, cell.d, cell.m, cell.trial), c.eps);
  TrainOptions opt;
  opt.lr = c.lr;
  opt.max_iters = c.max_iters;
  opt.loss_tol = c.loss_tol;
  opt.track_crossings = false;
  opt.tests = draw_test_set(ds.teacher, c.test_count, test_seed(c, cell.d, cell.trial));
  TrainLog log = train(init_balanced(init), ds, opt);
  const MetricsRecord& last = log.last();
  SweepRow row;
  row.scheme = c.scheme;
  row.d = cell.d;
  row.m = cell.m;
  row.lambda_exp = cell.lambda_exp;
  row.seed = cell.trial;
  row.final_loss = last.loss;
  row.iters = log.iterations;
  row.max_angle_deg = last.max_angle_deg;
  row.avg_angle_deg = last.avg_angle_deg;
  row.nuclear_norm = last.nuclear_norm;
  row.sq_norm = last.sq_norm;
  row.test_loss = last.test_loss;
  row.stop = to_string(log.stop);
  return {row, std::move(log)};
}

// ---------------------------------------------------------------------------
// Aggregation

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::precondition, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double population_std(const std::vector<double>& v) {
  require(!v.empty(), ErrorKind::precondition, "std of an empty set");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / v.size());
}

struct AggregateRow {
  std::string scheme;
  int d = 0, m = 0, lambda_exp = 0, trials = 0;
  std::vector<double> medians, stds;  // aligned with aggregate_columns()
};

inline const std::vector<std::string>& aggregate_columns() {
  static const std::vector<std::string> cols{"final_loss",   "iters",   "max_angle_deg", "avg_angle_deg",
                                             "nuclear_norm", "sq_norm", "test_loss"};
  return cols;
}

inline std::vector<double> numeric_fields(const SweepRow& r) {
  return {r.final_loss, static_cast<double>(r.iters), r.max_angle_deg, r.avg_angle_deg,
          r.nuclear_norm, r.sq_norm, r.test_loss};
}

// Groups by (scheme, d, m, lambda_exp).
inline std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<std::string, int, int, int>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.scheme, r.d, r.m, r.lambda_exp}].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow a;
    std::tie(a.scheme, a.d, a.m, a.lambda_exp) = key;
    a.trials = static_cast<int>(members.size());
    for (std::size_t col = 0; col < aggregate_columns().size(); ++col) {
      std::vector<double> vals;
      for (const auto* r : members) vals.push_back(numeric_fields(*r)[col]);
      a.medians.push_back(median(vals));
      a.stds.push_back(population_std(vals));
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::string aggregate_to_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "scheme,d,m,lambda_exp,trials";
  for (const auto& c : aggregate_columns()) out += "," + c + "_median," + c + "_std";
  out += "\n";
  for (const auto& a : rows) {
    out += a.scheme + "," + std::to_string(a.d) + "," + std::to_string(a.m) + "," + std::to_string(a.lambda_exp) + "," +
           std::to_string(a.trials);
    for (std::size_t c = 0; c < a.medians.size(); ++c) out += "," + text::fmt(a.medians[c]) + "," + text::fmt(a.stds[c]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep driver

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (scheme, d, m, lambda_exp, seed)
  std::vector<AggregateRow> aggregates;
  int resumed = 0;
};

inline std::vector<Cell> sweep_cells(const SweepConfig& c) {
  std::vector<Cell> cells;
  for (int d : c.dims)
    for (int m : c.widths)
      for (int e : c.lambda_exps)
        for (int t = 0; t < c.trials; ++t) cells.push_back({d, m, e, t});
  return cells;
}

// Runs every cell not already present under out_dir/cells, then writes
// sweep.csv and aggregate.csv. With an empty out_dir nothing is written.
inline SweepResult run_sweep(const SweepConfig& c, std::function<void(const SweepRow&)> progress = {}) {
  namespace fs = std::filesystem;
  c.validate();
  const bool persist = !c.out_dir.empty();
  const fs::path cell_dir = fs::path(c.out_dir) / "cells";
  if (persist) fs::create_directories(cell_dir);
  const auto cells = sweep_cells(c);
  std::vector<SweepRow> rows(cells.size());
  std::vector<char> resumed(cells.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      try {
        const std::string name = cell_name(c, cells[k]);
        const fs::path row_path = cell_dir / (name + ".row.csv");
        if (persist && fs::exists(row_path)) {
          const auto lines = text::split(text::read_file(row_path.string()), '\n');
          require(lines.size() >= 2, ErrorKind::io, "truncated cell file " + row_path.string());
          rows[k] = row_from_csv(lines[1]);
          resumed[k] = 1;
        } else {
          auto [row, log] = run_cell(c, cells[k]);
          rows[k] = row;
          if (persist) {
            text::write_file((cell_dir / (name + ".log.csv")).string(), trainlog_to_csv(log));
            // The row file is written last so that a partial cell is rerun.
            text::write_file(row_path.string(), std::string(kSweepHeader) + "\n" + row_to_csv(row) + "\n# stop=" +
                                                    row.stop + "\n");
          }
        }
        if (progress) {
          std::lock_guard lk(progress_mu);
          progress(rows[k]);
        }
      } catch (...) {
        std::lock_guard lk(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int jobs = std::min<int>(c.jobs, static_cast<int>(cells.size()));
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  SweepResult out;
  out.rows = std::move(rows);
  for (char r : resumed) out.resumed += r;
  std::sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.key() < b.key(); });
  out.aggregates = aggregate(out.rows);
  if (persist) {
    std::string csv = std::string(kSweepHeader) + "\n";
    for (const auto& r : out.rows) csv += row_to_csv(r) + "\n";
    text::write_file((fs::path(c.out_dir) / "sweep.csv").string(), csv);
    text::write_file((fs::path(c.out_dir) / "aggregate.csv").string(), aggregate_to_csv(out.aggregates));
  }
  return out;
}

// Median of a column per lambda exponent for one (scheme, d, m) group.
inline std::map<int, double> median_by_lambda(const std::vector<AggregateRow>& agg, const std::string& column) {
  const auto& cols = aggregate_columns();
  const auto it = std::find(cols.begin(), cols.end(), column);
  require(it != cols.end(), ErrorKind::precondition, "unknown column " + column);
  const std::size_t idx = static_cast<std::size_t>(it - cols.begin());
  std::map<int, double> out;
  for (const auto& a : agg) out[a.lambda_exp] = a.medians[idx];
  return out;
}

}  // namespace relu_lab
