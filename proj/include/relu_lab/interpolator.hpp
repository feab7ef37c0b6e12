// Interpolator norms: the dual basis of the points, the dichotomy quantity M,
// rank-1 interpolators and the counterexample networks with smaller norm.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/network.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace relu_lab {

struct DualBasis {
  Mat chi;  // row k is chi_k
  int dim() const { return static_cast<int>(chi.rows()); }
  Vec operator[](int k) const { return chi.row(k).transpose(); }
};

inline DualBasis dual_basis(const Dataset& ds) {
  require(ds.size() == ds.dim(), ErrorKind::unsupported, "dual basis needs n = d");
  Eigen::JacobiSVD<Mat> svd(ds.points);
  const Vec sv = svd.singularValues();
  require(sv[sv.size() - 1] > 0.0 && sv[0] / sv[sv.size() - 1] < 1e12, ErrorKind::numerical_failure,
          "point matrix is numerically singular");
  // Points are rows, so X = P^T and the chi_k are the rows of (P^T)^{-1}.
  DualBasis out{ds.points.transpose().inverse()};
  const Mat check = out.chi * ds.points.transpose();
  require((check - Mat::Identity(ds.dim(), ds.dim())).cwiseAbs().maxCoeff() <= 1e-9, ErrorKind::numerical_failure,
          "dual basis is not biorthogonal to the points");
  return out;
}

// ---------------------------------------------------------------------------
// The quantity M

struct MWitness {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<int> K;  // 0-based indices in K
  Vec b;  // length d, zero outside K, sums to one
  Vec c;  // length d, zero inside K, sums to one
};

inline Vec cone_vector(const DualBasis& basis, const Vec& coeffs) { return basis.chi.transpose() * coeffs; }

inline double m_objective(const Vec& p, const Vec& q, const Vec& teacher) {
  return cos_angle(p, q) - sin_angle(p, teacher);
}

inline double witness_objective(const DualBasis& basis, const MWitness& w, const Vec& teacher) {
  return m_objective(cone_vector(basis, w.b), cone_vector(basis, w.c), teacher);
}

namespace detail {

// Euclidean projection onto the probability simplex.
inline Vec project_simplex(const Vec& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (int k = 0; k < n; ++k) {
    css += u[k];
    const double t = (css - 1.0) / (k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

// Objective and gradient for coefficients restricted to K (x) and K^c (y).
struct ConeProblem {
  Mat A;  // columns chi_k, k in K
  Mat B;  // columns chi_k, k not in K
  Vec teacher;

  double value(const Vec& x, const Vec& y) const { return m_objective(A * x, B * y, teacher); }

  void gradient(const Vec& x, const Vec& y, Vec& gx, Vec& gy) const {
    const Vec p = A * x, q = B * y;
    const double np = p.norm(), nq = q.norm();
    const Vec ph = p / np, qh = q / nq;
    const double cpq = ph.dot(qh);
    const double cpv = ph.dot(teacher);
    const double spv = std::sqrt(std::max(0.0, 1.0 - cpv * cpv));
    Vec dp = (qh - cpq * ph) / np;
    if (spv > 1e-12) dp += (cpv / spv) * (teacher - cpv * ph) / np;
    const Vec dq = (ph - cpq * qh) / nq;
    gx = A.transpose() * dp;
    gy = B.transpose() * dq;
  }

  double ascend(Vec& x, Vec& y, int iters = 3000) const {
    double f = value(x, y);
    double step = 0.1;
    Vec gx, gy;
    for (int it = 0; it < iters && step > 1e-14; ++it) {
      gradient(x, y, gx, gy);
      for (;;) {
        const Vec nx = project_simplex(x + step * gx);
        const Vec ny = project_simplex(y + step * gy);
        const double nf = value(nx, ny);
        require(std::isfinite(nf), ErrorKind::numerical_failure, "M objective became non-finite");
        if (nf > f) {
          const bool tiny = nf - f < 1e-15;
          x = nx;
          y = ny;
          f = nf;
          step *= 1.5;
          if (tiny) it = iters;
          break;
        }
        step *= 0.5;
        if (step <= 1e-14) break;
      }
    }
    return f;
  }
};

inline ConeProblem cone_problem(const DualBasis& basis, const std::vector<int>& K, const std::vector<int>& Kc,
                                const Vec& teacher) {
  ConeProblem pr;
  pr.A.resize(basis.dim(), K.size());
  pr.B.resize(basis.dim(), Kc.size());
  for (std::size_t q = 0; q < K.size(); ++q) pr.A.col(q) = basis[K[q]];
  for (std::size_t q = 0; q < Kc.size(); ++q) pr.B.col(q) = basis[Kc[q]];
  pr.teacher = teacher;
  return pr;
}

inline MWitness make_witness(int d, const std::vector<int>& K, const std::vector<int>& Kc, const Vec& x, const Vec& y,
                             double value) {
  MWitness w;
  w.value = value;
  w.K = K;
  w.b = Vec::Zero(d);
  w.c = Vec::Zero(d);
  for (std::size_t q = 0; q < K.size(); ++q) w.b[K[q]] = x[q];
  for (std::size_t q = 0; q < Kc.size(); ++q) w.c[Kc[q]] = y[q];
  return w;
}

inline void split_mask(int d, unsigned mask, std::vector<int>& K, std::vector<int>& Kc) {
  K.clear();
  Kc.clear();
  for (int k = 0; k < d; ++k) ((mask >> k) & 1u ? K : Kc).push_back(k);
}

inline MWitness best_for_subset(const DualBasis& basis, const Vec& teacher, unsigned mask, int budget,
                                std::uint64_t seed) {
  const int d = basis.dim();
  std::vector<int> K, Kc;
  split_mask(d, mask, K, Kc);
  const ConeProblem pr = cone_problem(basis, K, Kc, teacher);
  const int nk = static_cast<int>(K.size()), nc = static_cast<int>(Kc.size());
  MWitness best;
  auto consider = [&](Vec x, Vec y) {
    const double f = pr.ascend(x, y);
    if (f > best.value) best = make_witness(d, K, Kc, x, y, f);
  };
  for (int a = 0; a < nk; ++a)
    for (int b = 0; b < nc; ++b) consider(Vec::Unit(nk, a), Vec::Unit(nc, b));
  consider(Vec::Constant(nk, 1.0 / nk), Vec::Constant(nc, 1.0 / nc));
  std::mt19937_64 rng(derive_seed(seed, mask));
  std::exponential_distribution<double> ex(1.0);
  for (int s = 0; s < budget; ++s) {
    Vec x(nk), y(nc);
    for (int q = 0; q < nk; ++q) x[q] = ex(rng);
    for (int q = 0; q < nc; ++q) y[q] = ex(rng);
    consider(x / x.sum(), y / y.sum());
  }
  return best;
}

// All points of the simplex of dimension k (k = 1 or 2 vertices) on a grid.
inline std::vector<Vec> simplex_grid(int k, double step) {
  std::vector<Vec> out;
  const int steps = static_cast<int>(std::lround(1.0 / step));
  if (k == 1) {
    out.push_back(Vec::Ones(1));
  } else if (k == 2) {
    for (int s = 0; s <= steps; ++s) {
      Vec v(2);
      v << static_cast<double>(s) / steps, 1.0 - static_cast<double>(s) / steps;
      out.push_back(v);
    }
  } else {
    throw LabError(ErrorKind::unsupported, "grid oracle supports cones with at most two generators");
  }
  return out;
}

}  // namespace detail

struct MResult {
  MWitness witness;
  bool globally_certified = false;  // true when the grid oracle confirmed the value
  std::optional<double> grid_value;
  double value() const { return witness.value; }
};

// Exhaustive grid search over both simplices; only for d <= 3.
inline MWitness compute_M_grid(const Dataset& ds, const DualBasis& basis, double step = 1e-3) {
  const int d = basis.dim();
  require(d <= 3, ErrorKind::unsupported, "grid oracle is limited to d <= 3");
  MWitness best;
  std::vector<int> K, Kc;
  for (unsigned mask = 1; mask + 1 < (1u << d); ++mask) {
    detail::split_mask(d, mask, K, Kc);
    const auto pr = detail::cone_problem(basis, K, Kc, ds.teacher);
    const auto xs = detail::simplex_grid(static_cast<int>(K.size()), step);
    const auto ys = detail::simplex_grid(static_cast<int>(Kc.size()), step);
    for (const auto& x : xs)
      for (const auto& y : ys) {
        const double f = pr.value(x, y);
        if (f > best.value) best = detail::make_witness(d, K, Kc, x, y, f);
      }
  }
  return best;
}

inline MResult compute_M(const Dataset& ds, const DualBasis& basis, int budget = 16, std::uint64_t seed = 0,
                         int jobs = 1) {
  const int d = basis.dim();
  require(d >= 2, ErrorKind::precondition, "M needs d >= 2");
  require(d <= 12, ErrorKind::precondition, "M enumeration is limited to d <= 12");
  require(budget >= 0, ErrorKind::precondition, "budget must be nonnegative");
  const unsigned full = 1u << d;
  std::vector<MWitness> per(full);
  auto run = [&](unsigned lo, unsigned stride) {
    for (unsigned mask = lo; mask + 1 < full; mask += stride)
      per[mask] = detail::best_for_subset(basis, ds.teacher, mask, budget, seed);
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    run(1, 1);
  } else {
    std::vector<std::future<void>> fs;
    for (int t = 0; t < jobs; ++t) fs.push_back(std::async(std::launch::async, run, 1u + t, static_cast<unsigned>(jobs)));
    for (auto& f : fs) f.get();
  }
  MResult out;
  for (unsigned mask = 1; mask + 1 < full; ++mask)
    if (per[mask].value > out.witness.value) out.witness = per[mask];
  if (d <= 3) {
    const MWitness g = compute_M_grid(ds, basis);
    out.grid_value = g.value;
    if (g.value > out.witness.value) out.witness = g;
    out.globally_certified = std::abs(g.value - out.witness.value) <= 1e-4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constructions

struct Certificate {
  double loss = 0;
  double sq_norm = 0;
};

inline Certificate certify(const NetworkParams& p, const Dataset& ds) { return {loss(p, ds), p.sq_norm()}; }

// Balanced rank-1 interpolator: w_j = sqrt(split_j) v*, a_j = sqrt(split_j).
inline NetworkParams build_rank1(const Dataset& ds, const std::vector<double>& split) {
  require(!split.empty(), ErrorKind::precondition, "split must be nonempty");
  double total = 0.0;
  for (double s : split) {
    require(s >= 0.0, ErrorKind::precondition, "split weights must be nonnegative");
    total += s;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::precondition, "split weights must sum to 1");
  const int m = static_cast<int>(split.size());
  NetworkParams p = NetworkParams::zeros(m, ds.dim());
  for (int j = 0; j < m; ++j) {
    const double s = std::sqrt(split[j]);
    p.a[j] = s;
    p.W.row(j) = s * ds.teacher.transpose();
  }
  return p;
}

struct Counterexample {
  NetworkParams params;
  double xi = 0;
  bool acute = true;  // angle(p, v*) <= pi/2 branch
  Certificate cert;
};

inline Counterexample build_counterexample(const Dataset& ds, const DualBasis& basis, const MWitness& witness,
                                           int m = 2) {
  require(m >= 2, ErrorKind::precondition, "counterexample needs m >= 2");
  const Vec& vs = ds.teacher;
  const Vec p = cone_vector(basis, witness.b);
  const Vec q = cone_vector(basis, witness.c);
  require(p.norm() > 0.0 && q.norm() > 0.0, ErrorKind::precondition, "witness cone vectors must be nonzero");
  require(m_objective(p, q, vs) > 0.0, ErrorKind::construction_unavailable,
          "witness objective is not positive; no counterexample");
  const Vec pb = p / p.norm();
  const Vec qb = q / q.norm();
  const Vec coeffs = witness.b / p.norm();  // pb = sum coeffs_k chi_k
  const Vec r = pb - qb * qb.dot(pb);
  const double nr = r.norm();
  require(nr > 0.0, ErrorKind::construction_unavailable, "p and q are parallel");
  const double cpv = cos_angle(p, vs);
  const double spq = sin_angle(p, q);

  Counterexample out;
  out.params = NetworkParams::zeros(m, ds.dim());
  out.acute = cpv >= 0.0;
  if (out.acute) {
    double xi = cpv - spq;
    for (int k = 0; k < ds.dim(); ++k)
      if (coeffs[k] != 0.0) xi = std::min(xi, ds.labels[k] / coeffs[k]);
    out.xi = xi;
  } else {
    out.xi = -cpv - spq;
  }
  require(out.xi > 0.0, ErrorKind::construction_unavailable, "witness does not separate: xi <= 0");
  const double xi = out.xi;
  out.params.a[0] = 1.0;
  out.params.W.row(0) = (vs + (out.acute ? -xi : xi) * pb).transpose();
  out.params.a[1] = (out.acute ? 1.0 : -1.0) * std::sqrt(xi * nr);
  out.params.W.row(1) = (std::sqrt(xi / nr) * r).transpose();
  out.cert = certify(out.params, ds);
  require(out.cert.loss <= 1e-10, ErrorKind::internal,
          "counterexample does not interpolate: loss " + text::fmt(out.cert.loss));
  require(out.cert.sq_norm <= 2.0 - xi * xi + 1e-9, ErrorKind::internal,
          "counterexample norm bound failed: " + text::fmt(out.cert.sq_norm));
  return out;
}

// ---------------------------------------------------------------------------
// Report

enum class Verdict { rank1_minimal, rank1_not_minimal, undecided };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::rank1_minimal: return "M<0: rank-1 interpolators are the minimum-norm interpolators";
    case Verdict::rank1_not_minimal: return "M>0: a smaller-norm interpolator exists";
    case Verdict::undecided: return "|M| <= 1e-6: undecided";
  }
  return "unknown";
}

struct InterpolatorReport {
  MResult M;
  NetworkParams rank1;
  Certificate rank1_cert;
  std::optional<Counterexample> counterexample;
  Verdict verdict = Verdict::undecided;
};

inline InterpolatorReport analyze_interpolators(const Dataset& ds, int m = 2, int budget = 16, std::uint64_t seed = 0,
                                                int jobs = 1) {
  require(m >= 1, ErrorKind::precondition, "m must be positive");
  InterpolatorReport rep;
  const DualBasis basis = dual_basis(ds);
  rep.M = compute_M(ds, basis, budget, seed, jobs);
  std::vector<double> split(m, 0.0);
  split[0] = 1.0;
  rep.rank1 = build_rank1(ds, split);
  rep.rank1_cert = certify(rep.rank1, ds);
  const double M = rep.M.value();
  if (M < -1e-6) rep.verdict = Verdict::rank1_minimal;
  if (M > 1e-6) {
    rep.verdict = Verdict::rank1_not_minimal;
    rep.counterexample = build_counterexample(ds, basis, rep.M.witness, std::max(m, 2));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Example families

inline double mneg_xi_limit(int d) { return std::sqrt(2.0 * (std::sqrt(2.0) - 1.0) / (d - 1)); }

inline Dataset example_family_Mneg(int d, double xi) {
  require(d >= 2, ErrorKind::precondition, "d must be at least 2");
  require(xi > 0.0 && xi <= mneg_xi_limit(d), ErrorKind::precondition,
          "xi must lie in (0, " + text::fmt(mneg_xi_limit(d)) + "]");
  Mat P = Mat::Constant(d, d, (1.0 - xi) / d);
  for (int i = 0; i < d; ++i) P(i, i) = 1.0 - (d - 1.0) / d * (1.0 - xi);
  Dataset ds = make_dataset(P, Vec::Ones(d).normalized(), Correlation::strict, "mneg", 0);
  return ds;
}

inline Dataset example_family_Mpos(int d, double b) {
  require(d > 2, ErrorKind::precondition, "d must exceed 2");
  require(b >= 11.0, ErrorKind::precondition, "b must be at least 11");
  Mat P = Mat::Zero(d, d);
  const double sb = std::sqrt(b);
  P(0, 0) = b;
  P(1, 0) = b;
  P(1, 1) = -sb;
  P(1, 2) = 1.0;
  P(2, 0) = b;
  P(2, 1) = sb;
  P(2, 2) = 1.0;
  for (int i = 3; i < d; ++i) {
    P(i, 0) = b;
    P(i, i) = 1.0;
  }
  Vec v = Vec::Zero(d);
  v[0] = 0.8;
  v[2] = 0.6;
  return make_dataset(P, v, Correlation::strict, "mpos", 0);
}

// Text rendering of a report as key = value lines.
inline std::string report_to_text(const InterpolatorReport& rep) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("M", text::fmt(rep.M.value()));
  std::string K;
  for (int k : rep.M.witness.K) K += (K.empty() ? "" : " ") + std::to_string(k + 1);
  kv("M.K", K);
  kv("M.b", text::join(rep.M.witness.b));
  kv("M.c", text::join(rep.M.witness.c));
  kv("M.grid", rep.M.grid_value ? text::fmt(*rep.M.grid_value) : "none");
  kv("M.global", rep.M.globally_certified ? "certified by grid" : "global optimum not guaranteed");
  kv("verdict", to_string(rep.verdict));
  kv("rank1.loss", text::fmt(rep.rank1_cert.loss));
  kv("rank1.sq_norm", text::fmt(rep.rank1_cert.sq_norm));
  if (rep.counterexample) {
    kv("counterexample.xi", text::fmt(rep.counterexample->xi));
    kv("counterexample.case", rep.counterexample->acute ? "acute" : "obtuse");
    kv("counterexample.loss", text::fmt(rep.counterexample->cert.loss));
    kv("counterexample.sq_norm", text::fmt(rep.counterexample->cert.sq_norm));
  }
  return out;
}

}  // namespace relu_lab
