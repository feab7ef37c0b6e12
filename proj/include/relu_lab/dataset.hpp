// Teacher-labelled correlated datasets, their eigen-structure, and the
// balanced-initialisation configuration that the dynamics modules consume.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/text_io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace relu_lab {

enum class Correlation { strict, relaxed };

inline const char* to_string(Correlation c) { return c == Correlation::strict ? "strict" : "relaxed"; }

struct Dataset {
  Mat points;  // n x d, one training point per row
  Vec labels;  // y_i = max(v*^T x_i, 0)
  Vec teacher;  // unit v*
  std::string scheme = "custom";
  std::uint64_t seed = 0;
  Correlation mode = Correlation::strict;
  std::vector<double> angles;  // angle(v*, x_i) in radians
  std::vector<int> resamples;  // per-point redraw counts (generators only)
  std::vector<std::string> warnings;
  std::optional<Vec> centre;  // mu for generated data
  std::optional<Vec> extra_point;  // x_0 for the uncentred scheme

  int dim() const { return static_cast<int>(points.cols()); }
  int size() const { return static_cast<int>(points.rows()); }
  Vec point(int i) const { return points.row(i).transpose(); }
};

constexpr double kZeroBand = 1e-12;

inline int numerical_rank(const Mat& points) {
  Eigen::JacobiSVD<Mat> svd(points);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  const double thr = 1e-10 * sv[0];
  return static_cast<int>((sv.array() > thr).count());
}

// Builds a dataset from raw points and a teacher, computing labels and checking
// every invariant. Relaxed mode admits angles up to pi/2 and records a warning.
inline Dataset make_dataset(Mat points, Vec teacher, Correlation allowed = Correlation::strict,
                            std::string scheme = "custom", std::uint64_t seed = 0) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  require(n >= 1 && d >= 1, ErrorKind::precondition, "empty dataset");
  require(teacher.size() == d, ErrorKind::precondition, "teacher dimension mismatch");
  require(points.allFinite() && teacher.allFinite(), ErrorKind::precondition, "non-finite dataset entries");
  require(std::abs(teacher.norm() - 1.0) <= 1e-12, ErrorKind::assumption_violation, "teacher must have unit norm");

  Dataset ds;
  ds.points = std::move(points);
  ds.teacher = std::move(teacher);
  ds.scheme = std::move(scheme);
  ds.seed = seed;
  ds.labels.resize(n);
  bool strict = true;
  for (int i = 0; i < n; ++i) {
    const Vec x = ds.point(i);
    require(x.norm() > 0.0, ErrorKind::assumption_violation, "point " + std::to_string(i) + " is zero");
    const double proj = ds.teacher.dot(x);
    ds.labels[i] = std::max(proj, 0.0);
    require(ds.labels[i] > 0.0, ErrorKind::assumption_violation,
            "label of point " + std::to_string(i) + " is not positive");
    const double a = angle(ds.teacher, x);
    ds.angles.push_back(a);
    if (a >= std::numbers::pi / 4) strict = false;
  }
  if (!strict) {
    require(allowed == Correlation::relaxed, ErrorKind::assumption_violation,
            "some point is at angle >= pi/4 from the teacher (strict correlation mode)");
    ds.mode = Correlation::relaxed;
    ds.warnings.push_back("relaxed correlation: some angles to the teacher are in [pi/4, pi/2)");
  }
  require(numerical_rank(ds.points) == d, ErrorKind::assumption_violation, "points do not span R^d");
  return ds;
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

inline Vec gaussian(int d, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> nd(0.0, stddev);
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = nd(rng);
  return v;
}

inline Vec unit_sphere(int d, std::mt19937_64& rng) {
  Vec v;
  do {
    v = gaussian(d, rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

inline Dataset generate(int d, int n, std::uint64_t seed, bool uncentred) {
  require(d > 1, ErrorKind::precondition, "dimension must exceed 1");
  require(n >= d, ErrorKind::precondition, "need at least d points");
  const double rho = uncentred ? std::sqrt(2.0) - 1.0 : 1.0;
  const double sd = std::sqrt(rho / d);
  std::mt19937_64 rng(seed);

  const Vec mu = unit_sphere(d, rng);
  Vec teacher = mu;
  std::optional<Vec> x0;
  if (uncentred) {
    Vec extra;
    do {
      extra = mu + gaussian(d, rng, sd);
    } while (extra.norm() == 0.0);
    teacher = extra / extra.norm();
    x0 = extra;
  }

  Mat pts(n, d);
  std::vector<int> redraws(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      require(attempt < 100, ErrorKind::generation_failure,
              "point " + std::to_string(i) + " exceeded 100 resampling attempts");
      const Vec x = mu + gaussian(d, rng, sd);
      if (teacher.dot(x) > kZeroBand * x.norm()) {
        pts.row(i) = x.transpose();
        break;
      }
      ++redraws[i];
    }
  }
  Dataset ds = make_dataset(std::move(pts), teacher, Correlation::relaxed,
                            uncentred ? "uncentred" : "centred", seed);
  ds.resamples = std::move(redraws);
  ds.centre = mu;
  ds.extra_point = x0;
  return ds;
}

}  // namespace detail

inline Dataset generate_centred(int d, int n, std::uint64_t seed) { return detail::generate(d, n, seed, false); }

inline Dataset generate_uncentred(int d, int n, std::uint64_t seed) { return detail::generate(d, n, seed, true); }

inline Dataset generate_scheme(const std::string& scheme, int d, int n, std::uint64_t seed) {
  if (scheme == "centred") return generate_centred(d, n, seed);
  if (scheme == "uncentred") return generate_uncentred(d, n, seed);
  throw LabError(ErrorKind::precondition, "unknown scheme '" + scheme + "'");
}

// ---------------------------------------------------------------------------
// Index sets and gamma vectors

struct IndexSets {
  IndexSet plus, zero, minus;
};

inline IndexSets index_sets(const Vec& v, const Dataset& ds) {
  IndexSets out;
  const double vn = v.norm();
  for (int i = 0; i < ds.size(); ++i) {
    const Vec x = ds.point(i);
    const double p = v.dot(x);
    const double band = kZeroBand * vn * x.norm();
    if (p > band)
      out.plus.push_back(i);
    else if (p < -band)
      out.minus.push_back(i);
    else
      out.zero.push_back(i);
  }
  return out;
}

inline IndexSet active_set(const Vec& v, const Dataset& ds) { return index_sets(v, ds).plus; }

inline IndexSet all_indices(int n) {
  IndexSet out(n);
  for (int i = 0; i < n; ++i) out[i] = i;
  return out;
}

// (1/n) sum_{i in I} y_i x_i
inline Vec gamma(const Dataset& ds, const IndexSet& set) {
  Vec g = Vec::Zero(ds.dim());
  for (int i : set) g += ds.labels[i] * ds.point(i);
  return g / ds.size();
}

inline Vec gamma_all(const Dataset& ds) { return ds.points.transpose() * ds.labels / ds.size(); }

// (1/n) X X^T in the column-point convention, i.e. (1/n) P^T P for row storage.
inline Mat second_moment(const Dataset& ds) { return ds.points.transpose() * ds.points / ds.size(); }

// ---------------------------------------------------------------------------
// Eigen-analysis

struct EigenAnalysis {
  Vec alphas;  // strictly decreasing
  Mat basis;  // column k is u_k
  Vec nu_star;  // u_k^T v*, all positive

  int dim() const { return static_cast<int>(alphas.size()); }
  Vec u(int k) const { return basis.col(k); }
  Vec coords(const Vec& v) const { return basis.transpose() * v; }
  Vec from_coords(const Vec& nu) const { return basis * nu; }
};

inline EigenAnalysis eigen_analysis(const Dataset& ds) {
  const Mat S = second_moment(ds);
  Eigen::SelfAdjointEigenSolver<Mat> solver(S);
  require(solver.info() == Eigen::Success, ErrorKind::numerical_failure, "eigensolver did not converge");
  const int d = ds.dim();
  EigenAnalysis ea;
  ea.alphas.resize(d);
  ea.basis.resize(d, d);
  ea.nu_star.resize(d);
  // Eigen returns ascending order.
  for (int k = 0; k < d; ++k) {
    ea.alphas[k] = solver.eigenvalues()[d - 1 - k];
    Vec u = solver.eigenvectors().col(d - 1 - k);
    if (u.dot(ds.teacher) < 0.0) u = -u;
    ea.basis.col(k) = u;
    ea.nu_star[k] = u.dot(ds.teacher);
  }
  const double scale = std::max(1.0, ea.alphas[0]);
  require(ea.alphas[d - 1] > 0.0, ErrorKind::assumption_violation, "second-moment matrix is singular");
  for (int k = 0; k + 1 < d; ++k)
    require(ea.alphas[k] - ea.alphas[k + 1] > 1e-10 * scale, ErrorKind::assumption_violation,
            "eigenvalues " + std::to_string(k) + " and " + std::to_string(k + 1) + " are not distinct");
  for (int k = 0; k < d; ++k)
    require(ea.nu_star[k] > 1e-10, ErrorKind::assumption_violation,
            "teacher has no component along eigenvector " + std::to_string(k));

  const Vec g = gamma_all(ds);
  const Vec via_eigen = ea.basis * (ea.alphas.cwiseProduct(ea.nu_star));
  require((g - via_eigen).norm() <= 1e-9 * std::max(1.0, g.norm()), ErrorKind::numerical_failure,
          "gamma_[n] does not match its eigen expansion");
  return ea;
}

// ---------------------------------------------------------------------------
// Initialisation configuration

struct InitConfig {
  Mat directions;  // m x d, row j is z_j
  std::vector<int> signs;  // s_j in {-1, +1}
  double lambda = 1.0;
  double eps = 0.25;

  int width() const { return static_cast<int>(directions.rows()); }
  int dim() const { return static_cast<int>(directions.cols()); }
  Vec z(int j) const { return directions.row(j).transpose(); }
};

// z_j ~ N(0, I/(d m)), s_j ~ U{-1, +1}
inline InitConfig draw_init(int d, int m, double lambda, std::uint64_t seed, double eps = 0.25) {
  require(d >= 1 && m >= 1, ErrorKind::precondition, "width and dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(d) * m));
  std::bernoulli_distribution coin(0.5);
  InitConfig init;
  init.directions.resize(m, d);
  init.signs.resize(m);
  init.lambda = lambda;
  init.eps = eps;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < d; ++k) init.directions(j, k) = nd(rng);
    init.signs[j] = coin(rng) ? 1 : -1;
  }
  return init;
}

inline IndexSet j_plus(const InitConfig& init, const Dataset& ds) {
  IndexSet out;
  for (int j = 0; j < init.width(); ++j)
    if (init.signs[j] == 1 && !active_set(init.z(j), ds).empty()) out.push_back(j);
  return out;
}

inline IndexSet j_minus(const InitConfig& init, const Dataset& ds) {
  IndexSet out;
  for (int j = 0; j < init.width(); ++j)
    if (init.signs[j] == -1 && !active_set(init.z(j), ds).empty()) out.push_back(j);
  return out;
}

// ---------------------------------------------------------------------------
// Assumption checks

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct AssumptionReport {
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline AssumptionReport validate_assumptions(const Dataset& ds, const InitConfig& init) {
  AssumptionReport rep;
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  const int d = ds.dim(), n = ds.size();

  add("dimension > 1", d > 1);
  add("points span R^d", numerical_rank(ds.points) == d);
  add("unit teacher", std::abs(ds.teacher.norm() - 1.0) <= 1e-12);

  add("J_+ nonempty", !j_plus(init, ds).empty());
  {
    std::string bad;
    for (int j = 0; j < init.width(); ++j)
      if (!index_sets(init.z(j), ds).zero.empty()) bad += " " + std::to_string(j);
    add("no initial boundary points", bad.empty(), bad.empty() ? "" : "neurons:" + bad);
  }
  {
    const Vec g = gamma_all(ds);
    std::string bad;
    for (int j : j_minus(init, ds))
      if (angle(init.z(j), g) <= 1e-12) bad += " " + std::to_string(j);
    add("J_- not aligned with gamma_[n]", bad.empty(), bad.empty() ? "" : "neurons:" + bad);
  }
  {
    bool distinct = true;
    std::string detail;
    for (int i = 0; i < n && distinct; ++i)
      for (int k = i + 1; k < n; ++k)
        if ((normalized(ds.point(i)) - normalized(ds.point(k))).norm() <= 1e-12) {
          distinct = false;
          detail = "points " + std::to_string(i) + " and " + std::to_string(k);
          break;
        }
    add("distinct normalized points", distinct, detail);
  }
  try {
    eigen_analysis(ds);
    add("distinct eigenvalues and teacher in general position", true);
  } catch (const LabError& e) {
    add("distinct eigenvalues and teacher in general position", false, e.what());
  }
  rep.notes.push_back("no simultaneous yardstick crossings: verified along simulated trajectories only");
  rep.notes.push_back("deactivated neurons stay deactivated: verified along simulated trajectories only");
  if (ds.mode == Correlation::relaxed) rep.notes.push_back("dataset uses relaxed correlation (angles up to pi/2)");
  return rep;
}

// Upper bound on the initialisation scale required by the non-asymptotic
// analysis. Returned in log space because it underflows for any realistic input.
struct LambdaBound {
  double log_value;
  double value() const { return std::exp(log_value); }
  bool admits(double lambda) const { return std::log(lambda) <= log_value; }
};

inline LambdaBound lambda_bound(int m, int n, double delta, double Delta, double eps) {
  require(delta > 0 && Delta > 0, ErrorKind::precondition, "measurements must be positive");
  require(eps > 0 && eps <= 0.25, ErrorKind::precondition, "eps must be in (0, 1/4]");
  const double ratio = Delta / delta;
  const double inner = std::log(static_cast<double>(m)) +
                       static_cast<double>(n) * n * ratio * ratio * std::log(6.0 / delta);
  return {-(6.0 / eps) * inner};
}

// ---------------------------------------------------------------------------
// Text formats

inline std::string dataset_to_text(const Dataset& ds) {
  std::string out = std::to_string(ds.dim()) + " " + std::to_string(ds.size()) + " " + ds.scheme + " " +
                    std::to_string(ds.seed) + "\n";
  out += text::join(ds.teacher) + "\n";
  for (int i = 0; i < ds.size(); ++i) out += text::join(ds.point(i)) + " " + text::fmt(ds.labels[i]) + "\n";
  return out;
}

inline Dataset dataset_from_text(const std::string& body, const std::string& origin = "dataset") {
  text::Tokens tok(body, origin);
  const long long d = tok.integer();
  const long long n = tok.integer();
  require(d >= 1 && n >= 1, ErrorKind::io, origin + ": bad header");
  const std::string scheme = tok.word();
  const auto seed = tok.unsigned_integer();
  Vec teacher = tok.vector(static_cast<int>(d));
  Mat pts(n, d);
  Vec stored(n);
  for (long long i = 0; i < n; ++i) {
    pts.row(i) = tok.vector(static_cast<int>(d)).transpose();
    stored[i] = tok.number();
  }
  require(tok.exhausted(), ErrorKind::io, origin + ": trailing data");
  Dataset ds = make_dataset(std::move(pts), std::move(teacher), Correlation::relaxed, scheme, seed);
  for (long long i = 0; i < n; ++i)
    require(std::abs(ds.labels[i] - stored[i]) <= 1e-12 * std::max(1.0, std::abs(stored[i])),
            ErrorKind::assumption_violation, origin + ": label of point " + std::to_string(i) +
                                                  " does not match the teacher");
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) { text::write_file(path, dataset_to_text(ds)); }

inline Dataset load_dataset(const std::string& path) { return dataset_from_text(text::read_file(path), path); }

// Init file: header `m d lambda eps`, then one line per neuron `s_j z_j...`.
inline std::string init_to_text(const InitConfig& init) {
  std::string out = std::to_string(init.width()) + " " + std::to_string(init.dim()) + " " + text::fmt(init.lambda) +
                    " " + text::fmt(init.eps) + "\n";
  for (int j = 0; j < init.width(); ++j) out += std::to_string(init.signs[j]) + " " + text::join(init.z(j)) + "\n";
  return out;
}

inline InitConfig init_from_text(const std::string& body, const std::string& origin = "init") {
  text::Tokens tok(body, origin);
  const long long m = tok.integer();
  const long long d = tok.integer();
  require(m >= 1 && d >= 1, ErrorKind::io, origin + ": bad header");
  InitConfig init;
  init.lambda = tok.number();
  init.eps = tok.number();
  init.directions.resize(m, d);
  init.signs.resize(m);
  for (long long j = 0; j < m; ++j) {
    const long long s = tok.integer();
    require(s == 1 || s == -1, ErrorKind::io, origin + ": sign must be +1 or -1");
    init.signs[j] = static_cast<int>(s);
    init.directions.row(j) = tok.vector(static_cast<int>(d)).transpose();
  }
  require(tok.exhausted(), ErrorKind::io, origin + ": trailing data");
  return init;
}

inline void save_init(const InitConfig& init, const std::string& path) { text::write_file(path, init_to_text(init)); }

inline InitConfig load_init(const std::string& path) { return init_from_text(text::read_file(path), path); }

}  // namespace relu_lab
