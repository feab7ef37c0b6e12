// One-hidden-layer ReLU student network: balanced initialisation, loss,
// gradient with sigma'(0) = 0, instrumented gradient descent and metrics.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/text_io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace relu_lab {

struct Provenance {
  double lambda;
  Mat directions;  // z_j as rows
  std::vector<int> signs;
};

struct NetworkParams {
  Vec a;  // last layer, size m
  Mat W;  // hidden layer, m x d (row j is w_j)
  std::optional<Provenance> provenance;

  int width() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
  Vec w(int j) const { return W.row(j).transpose(); }
  double sq_norm() const { return a.squaredNorm() + W.squaredNorm(); }

  static NetworkParams zeros(int m, int d) { return {Vec::Zero(m), Mat::Zero(m, d), std::nullopt}; }
};

inline NetworkParams init_balanced(double lambda, const Mat& directions, const std::vector<int>& signs) {
  require(lambda > 0.0, ErrorKind::precondition, "lambda must be positive");
  require(static_cast<int>(signs.size()) == directions.rows(), ErrorKind::precondition, "one sign per neuron");
  NetworkParams p;
  p.W = lambda * directions;
  p.a.resize(directions.rows());
  for (int j = 0; j < directions.rows(); ++j) {
    const double zn = directions.row(j).norm();
    require(zn > 0.0, ErrorKind::precondition, "invalid init: z_" + std::to_string(j) + " is zero");
    require(signs[j] == 1 || signs[j] == -1, ErrorKind::precondition, "signs must be +1 or -1");
    p.a[j] = signs[j] * p.W.row(j).norm();
  }
  p.provenance = Provenance{lambda, directions, signs};
  return p;
}

inline NetworkParams init_balanced(const InitConfig& init) {
  return init_balanced(init.lambda, init.directions, init.signs);
}

inline double relu(double u) { return u > 0.0 ? u : 0.0; }

inline double forward(const NetworkParams& p, const Vec& x) {
  require(x.size() == p.dim(), ErrorKind::precondition, "input dimension mismatch");
  double h = 0.0;
  for (int j = 0; j < p.width(); ++j) h += p.a[j] * relu(p.W.row(j).dot(x));
  return h;
}

inline Vec forward_batch(const NetworkParams& p, const Mat& inputs) {
  const Mat pre = p.W * inputs.transpose();  // m x n
  return pre.cwiseMax(0.0).transpose() * p.a;
}

inline double loss(const NetworkParams& p, const Dataset& ds) {
  require(ds.dim() == p.dim(), ErrorKind::precondition, "dataset dimension mismatch");
  const Vec r = ds.labels - forward_batch(p, ds.points);
  return r.squaredNorm() / (2.0 * ds.size());
}

// Gradient of the loss. dL/da_j = -w_j^T g_j and dL/dw_j = -a_j g_j with
// g_j = (1/n) sum_i (y_i - h(x_i)) 1[w_j^T x_i > 0] x_i.
inline NetworkParams gradient(const NetworkParams& p, const Dataset& ds) {
  const int n = ds.size();
  const Mat pre = p.W * ds.points.transpose();
  const Vec res = ds.labels - pre.cwiseMax(0.0).transpose() * p.a;
  const Mat mask = (pre.array() > 0.0).cast<double>().matrix();
  const Mat G = (mask.array().rowwise() * res.transpose().array()).matrix() * ds.points / n;
  NetworkParams grad;
  grad.a = -(p.W.cwiseProduct(G)).rowwise().sum();
  grad.W = -(G.array().colwise() * p.a.array()).matrix();
  return grad;
}

// ---------------------------------------------------------------------------
// Test loss on an outside distribution

struct TestSet {
  Mat inputs;
  Vec labels;
};

inline TestSet draw_test_set(const Vec& teacher, int count, std::uint64_t seed) {
  require(count >= 1, ErrorKind::precondition, "test count must be positive");
  const int d = static_cast<int>(teacher.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  TestSet ts;
  ts.inputs.resize(count, d);
  ts.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < d; ++k) ts.inputs(i, k) = nd(rng);
    ts.labels[i] = relu(teacher.dot(ts.inputs.row(i).transpose()));
  }
  return ts;
}

inline double test_loss(const NetworkParams& p, const TestSet& ts) {
  const Vec r = ts.labels - forward_batch(p, ts.inputs);
  return r.squaredNorm() / (2.0 * ts.inputs.rows());
}

inline double test_loss(const NetworkParams& p, const Vec& teacher, int count, std::uint64_t seed) {
  return test_loss(p, draw_test_set(teacher, count, seed));
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricsRecord {
  long long iteration = 0;
  double loss = 0;
  double grad_sq = 0;
  Vec bundle;  // sum over J_+ of a_j w_j
  Vec nu;  // eigen-coordinates of the bundle (empty when not tracked)
  Vec a;  // last-layer weights
  Vec norms;  // ||w_j||
  Vec balance;  // a_j^2 - ||w_j||^2
  int active_count = 0;
  bool angles_defined = false;  // false when fewer than two active neurons
  double max_angle_deg = 0;
  double avg_angle_deg = 0;
  double bundle_min_cos = 1;  // smallest pairwise cosine among J_+ neurons
  double nuclear_norm = 0;
  double sq_norm = 0;
  double pl_ratio = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
};

// J_+ from the provenance when available, else the neurons with a_j > 0 that see a point.
inline IndexSet bundle_set(const NetworkParams& p, const Dataset& ds) {
  IndexSet out;
  for (int j = 0; j < p.width(); ++j) {
    if (p.provenance) {
      const auto& pv = *p.provenance;
      if (pv.signs[j] == 1 && !active_set(pv.directions.row(j).transpose(), ds).empty()) out.push_back(j);
    } else if (p.a[j] > 0.0 && !active_set(p.w(j), ds).empty()) {
      out.push_back(j);
    }
  }
  return out;
}

inline double nuclear_norm(const Mat& W) {
  if (W.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(W);
  return svd.singularValues().sum();
}

inline MetricsRecord metrics(const NetworkParams& p, const Dataset& ds, const EigenAnalysis* eigen,
                             const IndexSet& bundle, const NetworkParams* grad = nullptr,
                             const TestSet* tests = nullptr) {
  MetricsRecord r;
  r.loss = loss(p, ds);
  const NetworkParams g = grad ? *grad : gradient(p, ds);
  r.grad_sq = g.a.squaredNorm() + g.W.squaredNorm();
  r.bundle = Vec::Zero(p.dim());
  for (int j : bundle) r.bundle += p.a[j] * p.w(j);
  if (eigen) r.nu = eigen->coords(r.bundle);
  r.a = p.a;
  r.norms = p.W.rowwise().norm();
  r.balance = p.a.cwiseProduct(p.a) - r.norms.cwiseProduct(r.norms);

  std::vector<Vec> active;
  const Mat pre = p.W * ds.points.transpose();
  for (int j = 0; j < p.width(); ++j) {
    bool any = false;
    for (int i = 0; i < ds.size() && !any; ++i) any = pre(j, i) > kZeroBand * r.norms[j] * ds.points.row(i).norm();
    if (any) active.push_back(p.w(j) / r.norms[j]);
  }
  r.active_count = static_cast<int>(active.size());
  if (active.size() >= 2) {
    double mx = 0, sum = 0;
    long long pairs = 0;
    for (std::size_t u = 0; u < active.size(); ++u)
      for (std::size_t v = u + 1; v < active.size(); ++v) {
        const double ang = rad_to_deg(std::acos(std::clamp(active[u].dot(active[v]), -1.0, 1.0)));
        mx = std::max(mx, ang);
        sum += ang;
        ++pairs;
      }
    r.angles_defined = true;
    r.max_angle_deg = mx;
    r.avg_angle_deg = sum / pairs;
  }
  for (std::size_t u = 0; u < bundle.size(); ++u)
    for (std::size_t v = u + 1; v < bundle.size(); ++v)
      r.bundle_min_cos = std::min(r.bundle_min_cos, cos_angle(p.w(bundle[u]), p.w(bundle[v])));
  r.nuclear_norm = nuclear_norm(p.W);
  r.sq_norm = p.sq_norm();
  if (r.loss > 0.0) r.pl_ratio = r.grad_sq / r.loss;
  if (tests) r.test_loss = test_loss(p, *tests);
  return r;
}

inline MetricsRecord metrics(const NetworkParams& p, const Dataset& ds, const EigenAnalysis* eigen = nullptr) {
  return metrics(p, ds, eigen, bundle_set(p, ds));
}

// ---------------------------------------------------------------------------
// Training

enum class StopReason { loss_tol, max_iters, divergence };

inline const char* to_string(StopReason s) {
  switch (s) {
    case StopReason::loss_tol: return "loss_tol";
    case StopReason::max_iters: return "max_iters";
    case StopReason::divergence: return "divergence";
  }
  return "unknown";
}

struct CrossingEvent {
  int neuron;
  int point;
  double iteration;  // fractional, linearly interpolated between iterates
  bool entering;  // w_j^T x_i became positive
};

struct TrainOptions {
  double lr = 0.01;
  long long max_iters = 20'000'000;
  double loss_tol = 1e-9;
  // Geometric cadence: every iteration up to dense_until, then x growth.
  long long dense_until = 100;
  double growth = 1.05;
  std::set<long long> extra_log_iterations;
  std::set<long long> snapshot_iterations;
  bool track_crossings = true;
  double divergence_factor = 1e6;
  const EigenAnalysis* eigen = nullptr;
  std::optional<TestSet> tests;
};

struct TrainLog {
  double lr = 0;
  long long max_iters = 0;
  double loss_tol = 0;
  int width = 0, dim = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<MetricsRecord> records;
  std::vector<CrossingEvent> events;
  std::map<long long, NetworkParams> snapshots;
  NetworkParams final_params;
  StopReason stop = StopReason::max_iters;
  long long iterations = 0;

  const MetricsRecord& last() const { return records.back(); }
  // Record whose iteration is closest to the given one.
  const MetricsRecord& nearest(long long iteration) const {
    require(!records.empty(), ErrorKind::precondition, "empty log");
    const MetricsRecord* best = &records.front();
    for (const auto& r : records)
      if (std::llabs(r.iteration - iteration) < std::llabs(best->iteration - iteration)) best = &r;
    return *best;
  }
};

inline long long next_log_iteration(long long it, const TrainOptions& opt) {
  if (it < opt.dense_until) return it + 1;
  return std::max(it + 1, static_cast<long long>(std::ceil(static_cast<double>(it) * opt.growth)));
}

inline TrainLog train(NetworkParams params, const Dataset& ds, const TrainOptions& opt) {
  require(opt.lr > 0.0, ErrorKind::precondition, "learning rate must be positive");
  require(params.dim() == ds.dim(), ErrorKind::precondition, "dimension mismatch");
  const int n = ds.size(), m = params.width();
  const Mat Xt = ds.points.transpose();
  const IndexSet bundle = bundle_set(params, ds);
  const TestSet* tests = opt.tests ? &*opt.tests : nullptr;

  TrainLog log;
  log.lr = opt.lr;
  log.max_iters = opt.max_iters;
  log.loss_tol = opt.loss_tol;
  log.width = m;
  log.dim = ds.dim();
  if (params.provenance) log.lambda = params.provenance->lambda;

  Mat pre = params.W * Xt;
  Mat next_pre(m, n);
  Vec res(n);
  Mat G(m, ds.dim());
  NetworkParams grad{Vec(m), Mat(m, ds.dim()), std::nullopt};

  auto evaluate = [&]() {
    res = ds.labels - pre.cwiseMax(0.0).transpose() * params.a;
    const Mat weights = ((pre.array() > 0.0).cast<double>().rowwise() * res.transpose().array()).matrix();
    G.noalias() = weights * ds.points;
    G /= n;
    grad.a = -(params.W.cwiseProduct(G)).rowwise().sum();
    grad.W = -(G.array().colwise() * params.a.array()).matrix();
    return res.squaredNorm() / (2.0 * n);
  };

  double L = evaluate();
  const double L0 = L;
  long long it = 0;
  long long next_log = 0;
  for (;;) {
    std::optional<StopReason> stop;
    if (!std::isfinite(L) || !params.W.allFinite() || !params.a.allFinite() ||
        L > opt.divergence_factor * std::max(L0, 1e-300))
      stop = StopReason::divergence;
    else if (L < opt.loss_tol)
      stop = StopReason::loss_tol;
    else if (it >= opt.max_iters)
      stop = StopReason::max_iters;

    const bool due = it == next_log || opt.extra_log_iterations.count(it) || stop.has_value();
    if (due) {
      MetricsRecord rec = metrics(params, ds, opt.eigen, bundle, &grad, tests);
      rec.iteration = it;
      log.records.push_back(std::move(rec));
      if (it == next_log) next_log = next_log_iteration(it, opt);
    }
    if (opt.snapshot_iterations.count(it)) log.snapshots.emplace(it, params);
    if (stop) {
      log.stop = *stop;
      break;
    }

    params.a -= opt.lr * grad.a;
    params.W -= opt.lr * grad.W;
    next_pre.noalias() = params.W * Xt;
    if (opt.track_crossings) {
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) {
          const double before = pre(j, i), after = next_pre(j, i);
          if ((before > 0.0) != (after > 0.0)) {
            const double frac = before / (before - after);
            log.events.push_back({j, i, static_cast<double>(it) + frac, after > 0.0});
          }
        }
    }
    pre.swap(next_pre);
    ++it;
    L = evaluate();
  }
  log.iterations = it;
  log.final_params = std::move(params);
  return log;
}

// ---------------------------------------------------------------------------
// Text output

inline std::string trainlog_to_csv(const TrainLog& log) {
  const bool with_nu = !log.records.empty() && log.records.front().nu.size() > 0;
  const bool with_test = !log.records.empty() && !std::isnan(log.records.front().test_loss);
  std::string out = "iteration,loss,grad_sq,max_angle_deg,avg_angle_deg,nuclear_norm,sq_norm,pl_ratio";
  if (with_nu)
    for (int k = 1; k <= log.records.front().nu.size(); ++k) out += ",nu_" + std::to_string(k);
  if (with_test) out += ",test_loss";
  out += "\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.iteration) + "," + text::fmt(r.loss) + "," + text::fmt(r.grad_sq) + "," +
           text::fmt(r.max_angle_deg) + "," + text::fmt(r.avg_angle_deg) + "," + text::fmt(r.nuclear_norm) + "," +
           text::fmt(r.sq_norm) + "," + text::fmt(r.pl_ratio);
    if (with_nu) out += "," + text::join(r.nu, ',');
    if (with_test) out += "," + text::fmt(r.test_loss);
    out += "\n";
  }
  return out;
}

// Reads the columns written by trainlog_to_csv back into records.
inline std::vector<MetricsRecord> records_from_csv(const std::string& body) {
  const auto lines = text::split(body, '\n');
  require(!lines.empty(), ErrorKind::io, "empty log");
  const auto header = text::split(text::trim(lines[0]), ',');
  require(header.size() >= 8 && header[0] == "iteration" && header[1] == "loss", ErrorKind::io, "bad log header");
  int nu_count = 0;
  bool with_test = false;
  for (std::size_t c = 8; c < header.size(); ++c) {
    if (header[c].rfind("nu_", 0) == 0) ++nu_count;
    if (header[c] == "test_loss") with_test = true;
  }
  std::vector<MetricsRecord> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    require(f.size() == header.size(), ErrorKind::io, "log row " + std::to_string(li) + " has wrong field count");
    MetricsRecord r;
    r.iteration = std::stoll(f[0]);
    r.loss = std::stod(f[1]);
    r.grad_sq = std::stod(f[2]);
    r.max_angle_deg = std::stod(f[3]);
    r.avg_angle_deg = std::stod(f[4]);
    r.nuclear_norm = std::stod(f[5]);
    r.sq_norm = std::stod(f[6]);
    r.pl_ratio = std::stod(f[7]);
    if (nu_count) {
      r.nu.resize(nu_count);
      for (int k = 0; k < nu_count; ++k) r.nu[k] = std::stod(f[8 + k]);
    }
    if (with_test) r.test_loss = std::stod(f[8 + nu_count]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string events_to_csv(const std::vector<CrossingEvent>& events) {
  std::string out = "neuron,point,iteration,entering\n";
  for (const auto& e : events)
    out += std::to_string(e.neuron) + "," + std::to_string(e.point) + "," + text::fmt(e.iteration) + "," +
           (e.entering ? "1" : "0") + "\n";
  return out;
}

inline std::vector<CrossingEvent> events_from_csv(const std::string& body) {
  std::vector<CrossingEvent> out;
  const auto lines = text::split(body, '\n');
  require(!lines.empty() && text::trim(lines[0]) == "neuron,point,iteration,entering", ErrorKind::io,
          "bad events header");
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    require(f.size() == 4, ErrorKind::io, "bad events row");
    out.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2]), f[3] == "1"});
  }
  return out;
}

// Parameter dump: header `m d`, then one line per neuron `a_j w_j...`.
inline std::string params_to_text(const NetworkParams& p) {
  std::string out = std::to_string(p.width()) + " " + std::to_string(p.dim()) + "\n";
  for (int j = 0; j < p.width(); ++j) out += text::fmt(p.a[j]) + " " + text::join(p.w(j)) + "\n";
  return out;
}

inline NetworkParams params_from_text(const std::string& body, const std::string& origin = "params") {
  text::Tokens tok(body, origin);
  const long long m = tok.integer(), d = tok.integer();
  require(m >= 1 && d >= 1, ErrorKind::io, origin + ": bad header");
  NetworkParams p = NetworkParams::zeros(static_cast<int>(m), static_cast<int>(d));
  for (long long j = 0; j < m; ++j) {
    p.a[j] = tok.number();
    p.W.row(j) = tok.vector(static_cast<int>(d)).transpose();
  }
  require(tok.exhausted(), ErrorKind::io, origin + ": trailing data");
  return p;
}

}  // namespace relu_lab
