// Phase-structure checks over training logs: S-set membership, crossing
// schedule comparison, T2, PL ratio and eigencoordinate crossing order.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/network.hpp"
#include "relu_lab/yardstick.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace relu_lab {

// ---------------------------------------------------------------------------
// S-set membership

struct SliceMargins {
  int ell = 0;  // 1-based
  std::vector<std::pair<std::string, double>> margins;
  double min_margin = std::numeric_limits<double>::infinity();
};

struct SSetReport {
  bool degenerate = false;  // v = 0 or XX^T(v* - v) = 0
  bool member = false;
  int best_ell = 0;  // slice with the largest minimum margin, 0 if degenerate
  double xi_margin = std::numeric_limits<double>::quiet_NaN();
  std::vector<SliceMargins> slices;
  const SliceMargins* best() const { return best_ell > 0 ? &slices[best_ell - 1] : nullptr; }
  double best_margin() const { return best_ell > 0 ? slices[best_ell - 1].min_margin : -std::numeric_limits<double>::infinity(); }
};

// Odd extension of x^p, used when the base of a fractional power goes negative.
inline double signed_pow(double x, double p) { return x >= 0.0 ? std::pow(x, p) : -std::pow(-x, p); }

// `tol` is the margin a constraint must exceed to count as holding: 0 for the
// strict definition, a small negative number when monitoring a discrete run.
// `xi_threshold` replaces the cushion lambda^(eps/3) of the Xi constraint.
inline SSetReport s_membership(const Vec& v, const EigenAnalysis& ea, const Dataset& ds, double lambda, double eps,
                               double tol = 0.0, std::optional<double> xi_threshold = std::nullopt) {
  require(v.allFinite(), ErrorKind::precondition, "vector must be finite");
  const int d = ea.dim();
  SSetReport rep;
  const Vec g = second_moment(ds) * (ds.teacher - v);
  if (v.norm() == 0.0 || g.norm() <= 1e-300) {
    rep.degenerate = true;
    return rep;
  }
  rep.xi_margin = normalized(v).dot(normalized(g)) - xi_threshold.value_or(std::pow(lambda, eps / 3.0));
  const Vec nu = ea.coords(v);
  Vec r(d);
  for (int k = 0; k < d; ++k) r[k] = nu[k] / ea.nu_star[k];
  const auto& al = ea.alphas;

  for (int ell = 1; ell <= d; ++ell) {
    SliceMargins sm;
    sm.ell = ell;
    auto add = [&](std::string name, double m) {
      sm.min_margin = std::min(sm.min_margin, m);
      sm.margins.emplace_back(std::move(name), m);
    };
    for (int k = 1; k < ell; ++k) add("Omega_" + std::to_string(k), r[k - 1] - 1.0);
    const double lower = ell == 1 ? 0.0 : al[ell - 1] / (2.0 * al[ell - 2]);
    add("Phi_" + std::to_string(ell) + " lower", r[ell - 1] - lower);
    add("Phi_" + std::to_string(ell) + " upper", 1.0 - r[ell - 1]);
    for (int k = ell; k <= d; ++k)
      for (int kp = k + 1; kp <= d; ++kp) {
        const double ratio = al[kp - 1] / al[k - 1];
        const std::string tag = "_" + std::to_string(k) + "," + std::to_string(kp);
        add("Psi_down" + tag, r[kp - 1] - 0.5 * ratio * r[k - 1]);
        add("Psi_up" + tag, 1.0 - signed_pow(1.0 - r[k - 1], 0.5 + 0.5 * ratio) - r[kp - 1]);
      }
    add("Xi", rep.xi_margin);
    rep.slices.push_back(std::move(sm));
  }
  for (const auto& sm : rep.slices)
    if (rep.best_ell == 0 || sm.min_margin > rep.slices[rep.best_ell - 1].min_margin) rep.best_ell = sm.ell;
  // The upper side of Phi is non-strict; a zero margin there is allowed.
  const SliceMargins& b = rep.slices[rep.best_ell - 1];
  rep.member = true;
  for (const auto& [name, m] : b.margins) {
    const bool nonstrict = name.size() > 6 && name.compare(name.size() - 6, 6, " upper") == 0;
    if (nonstrict ? m < tol : m <= tol) rep.member = false;
  }
  return rep;
}

// Properties every member of S must have.
struct MemberAssertions {
  double ball = 0;  // v^T (v* - v)
  double min_point_cos = 0;  // min_i cos angle(v, x_i)
  std::optional<double> s1_lhs, s1_rhs;  // only for members of S_1
  bool ok() const { return ball > 0.0 && min_point_cos > 0.0 && (!s1_lhs || *s1_lhs > *s1_rhs); }
};

inline MemberAssertions member_assertions(const Vec& v, const SSetReport& rep, const EigenAnalysis& ea,
                                          const Dataset& ds) {
  MemberAssertions out;
  out.ball = v.dot(ds.teacher - v);
  out.min_point_cos = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ds.size(); ++i) out.min_point_cos = std::min(out.min_point_cos, cos_angle(v, ds.point(i)));
  if (rep.best_ell == 1) {
    const int d = ea.dim();
    out.s1_lhs = normalized(v).dot(normalized(second_moment(ds) * (ds.teacher - v)));
    const double q = ea.alphas[d - 1] * ea.nu_star[d - 1] / gamma_all(ds).norm();
    out.s1_rhs = 0.5 * q * q;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crossing schedule comparison

struct CrossingRow {
  int neuron = -1;
  int sign = 1;
  IndexSet expected;  // yardstick order
  IndexSet observed;  // scheduled points sorted by observed first crossing time
  std::vector<double> tau;  // yardstick times, by stage
  std::vector<double> t;  // observed times, by stage (NaN when missing)
  std::vector<double> budget;  // allowed |tau - t|, by stage
  int missing = 0;
  bool order_agrees = false;
  bool within_budget = false;
};

inline double crossing_budget(double lambda, double eps, int stage, int n_stages) {
  return std::pow(lambda, 1.0 - (1.0 + (3.0 * stage - 1.0) / (3.0 * n_stages)) * eps);
}

inline std::vector<CrossingRow> compare_crossings(const std::vector<CrossingEvent>& events,
                                                  const std::vector<YardstickTrace>& traces, double lambda, double eps,
                                                  double lr) {
  // First crossing of each (neuron, point) in each direction.
  std::map<std::pair<int, int>, double> first_in, first_out;
  for (const auto& e : events) {
    auto& tbl = e.entering ? first_in : first_out;
    tbl.try_emplace({e.neuron, e.point}, e.iteration * lr);
  }
  std::vector<CrossingRow> rows;
  for (const auto& tr : traces) {
    CrossingRow row;
    row.neuron = tr.neuron;
    row.sign = tr.sign;
    row.expected = tr.order();
    const auto& tbl = tr.sign == 1 ? first_in : first_out;
    std::vector<std::pair<double, int>> seen;
    row.within_budget = true;
    for (int l = 0; l < tr.n_stages(); ++l) {
      const int i = tr.stages[l].crossing;
      row.tau.push_back(tr.stages[l].tau_exit);
      row.budget.push_back(crossing_budget(lambda, eps, l + 1, tr.n_stages()));
      auto it = tbl.find({tr.neuron, i});
      if (it == tbl.end()) {
        row.t.push_back(std::numeric_limits<double>::quiet_NaN());
        ++row.missing;
        row.within_budget = false;
        continue;
      }
      row.t.push_back(it->second);
      seen.emplace_back(it->second, i);
      if (std::abs(it->second - row.tau.back()) > row.budget.back()) row.within_budget = false;
    }
    std::sort(seen.begin(), seen.end());
    for (const auto& [t, i] : seen) row.observed.push_back(i);
    row.order_agrees = row.missing == 0 && row.observed == row.expected;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Second phase

// First logged iteration at or after `from` with nu_1 / nu*_1 >= 1/2.
inline std::optional<long long> detect_T2(const std::vector<MetricsRecord>& records, const EigenAnalysis& ea,
                                          long long from = 0) {
  for (const auto& r : records) {
    if (r.iteration < from) continue;
    require(r.nu.size() == ea.dim(), ErrorKind::precondition, "eigencoordinates were not tracked in this log");
    if (r.nu[0] / ea.nu_star[0] >= 0.5) return r.iteration;
  }
  return std::nullopt;
}

inline double pl_bound(const EigenAnalysis& ea, const Dataset& ds) {
  return 2.0 * ea.alphas[ea.dim() - 1] * gamma_all(ds).norm() / (5.0 * ea.alphas[0]);
}

struct PLCheck {
  double min_ratio = std::numeric_limits<double>::infinity();
  long long argmin = -1;
  double bound = 0;
  int considered = 0;
  bool vacuous = true;  // no record with loss above 1e-12
  bool holds = true;
};

// `until` bounds the range from above (inclusive); negative means no bound.
inline PLCheck pl_check(const std::vector<MetricsRecord>& records, const EigenAnalysis& ea, const Dataset& ds,
                        long long from, long long until = -1) {
  PLCheck out;
  out.bound = pl_bound(ea, ds);
  for (const auto& r : records) {
    if (r.iteration < from || (until >= 0 && r.iteration > until) || !(r.loss > 1e-12)) continue;
    ++out.considered;
    out.vacuous = false;
    const double ratio = r.grad_sq / r.loss;
    if (ratio < out.min_ratio) {
      out.min_ratio = ratio;
      out.argmin = r.iteration;
    }
  }
  out.holds = out.vacuous || out.min_ratio >= out.bound;
  return out;
}

struct NormCheck {
  double min_norm = std::numeric_limits<double>::infinity();
  double bound = 0;
  bool holds = true;
};

// ||v^t|| > ||gamma_[n]|| / (4 alpha_1) over the given iteration range.
inline NormCheck bundle_norm_check(const std::vector<MetricsRecord>& records, const EigenAnalysis& ea,
                                   const Dataset& ds, long long from, long long until = -1) {
  NormCheck out;
  out.bound = gamma_all(ds).norm() / (4.0 * ea.alphas[0]);
  for (const auto& r : records) {
    if (r.iteration < from || (until >= 0 && r.iteration > until)) continue;
    const double nv = r.nu.size() ? r.nu.norm() : r.bundle.norm();
    out.min_norm = std::min(out.min_norm, nv);
  }
  out.holds = out.min_norm > out.bound;
  return out;
}

struct EigenCrossing {
  std::vector<int> order;  // 1-based k sorted by crossing time
  std::vector<double> times;  // interpolated iteration, aligned with order
  std::vector<int> never;  // coordinates that never cross
  bool prefix_order = false;  // order is 1, 2, ..., K with K >= 1
};

// First sign change of nu*_k - nu_k^t from its initial sign, per coordinate.
inline EigenCrossing eigencrossing_order(const std::vector<MetricsRecord>& records, const EigenAnalysis& ea) {
  EigenCrossing out;
  const int d = ea.dim();
  std::vector<std::pair<double, int>> hits;
  for (int k = 0; k < d; ++k) {
    std::optional<double> when;
    for (std::size_t q = 1; q < records.size() && !when; ++q) {
      require(records[q].nu.size() == d && records[0].nu.size() == d, ErrorKind::precondition,
              "eigencoordinates were not tracked in this log");
      const double s0 = ea.nu_star[k] - records[0].nu[k];
      const double prev = ea.nu_star[k] - records[q - 1].nu[k];
      const double cur = ea.nu_star[k] - records[q].nu[k];
      if ((cur > 0.0) != (s0 > 0.0)) {
        const double frac = prev == cur ? 1.0 : prev / (prev - cur);
        when = records[q - 1].iteration + frac * (records[q].iteration - records[q - 1].iteration);
      }
    }
    if (when)
      hits.emplace_back(*when, k + 1);
    else
      out.never.push_back(k + 1);
  }
  std::sort(hits.begin(), hits.end());
  for (const auto& [t, k] : hits) {
    out.order.push_back(k);
    out.times.push_back(t);
  }
  out.prefix_order = !out.order.empty();
  for (std::size_t q = 0; q < out.order.size(); ++q)
    if (out.order[q] != static_cast<int>(q) + 1) out.prefix_order = false;
  return out;
}

// ---------------------------------------------------------------------------
// First phase

struct NeuronPhase {
  int neuron = -1;
  int sign = 0;
  std::string group;  // "J+", "J-" or "frozen"
  // J-
  double norm_T0 = 0, norm_cap = 0;
  bool deactivated = false;
  // J+
  double cos_T1 = 0, cos_needed = 0;
  double norm_T1 = 0, norm_limit = 0;
  double log_gap = std::numeric_limits<double>::quiet_NaN(), log_budget = 0;
  // frozen
  double drift = 0;
  bool ok = false;
};

struct PhaseReport {
  double T0 = 0, T1 = 0;
  long long iter_T0 = 0, iter_T1 = 0;
  std::vector<NeuronPhase> neurons;
  bool deactivation_ok = true, alignment_ok = true, norm_cap_ok = true, log_length_ok = true, frozen_ok = true;
  bool all_ok() const { return deactivation_ok && alignment_ok && norm_cap_ok && log_length_ok && frozen_ok; }
};

// `at_T0` and `at_T1` are the parameters at the iterates nearest T0 and T1.
// The log-length check needs full traces; it is skipped for traces read from CSV.
inline PhaseReport first_phase_report(const Dataset& ds, const InitConfig& init,
                                      const std::vector<YardstickTrace>& traces, const TheoreticalTimes& times,
                                      double lr, const NetworkParams& at_T0, const NetworkParams& at_T1) {
  PhaseReport rep;
  rep.T0 = times.T0;
  rep.T1 = times.T1;
  rep.iter_T0 = std::llround(times.T0 / lr);
  rep.iter_T1 = std::llround(times.T1 / lr);
  const double lambda = init.lambda, eps = init.eps;
  const Vec g = gamma_all(ds);
  std::map<int, const YardstickTrace*> by_neuron;
  for (const auto& tr : traces) by_neuron[tr.neuron] = &tr;

  for (int j = 0; j < init.width(); ++j) {
    NeuronPhase np;
    np.neuron = j;
    np.sign = init.signs[j];
    const Vec z = init.z(j);
    const bool sees = !active_set(z, ds).empty();
    if (!sees) {
      np.group = "frozen";
      np.drift = std::max((at_T1.w(j) - lambda * z).norm(), (at_T0.w(j) - lambda * z).norm());
      np.ok = np.drift == 0.0;
      rep.frozen_ok = rep.frozen_ok && np.ok;
    } else if (np.sign == -1) {
      np.group = "J-";
      np.norm_T0 = at_T0.w(j).norm();
      np.norm_cap = lambda * z.norm() * (1.0 + 1e-6);
      np.deactivated = active_set(at_T0.w(j), ds).empty();
      np.ok = np.deactivated && np.norm_T0 <= np.norm_cap;
      rep.deactivation_ok = rep.deactivation_ok && np.ok;
    } else {
      np.group = "J+";
      const Vec w = at_T1.w(j);
      np.cos_T1 = cos_angle(w, g);
      np.cos_needed = 1.0 - std::pow(lambda, eps);
      np.norm_T1 = w.norm();
      np.norm_limit = 2.0 * z.norm() * std::pow(lambda, 1.0 - eps);
      np.log_budget = std::pow(lambda, 1.0 - 3.0 * eps);
      const bool aligned = np.cos_T1 >= np.cos_needed;
      const bool capped = np.norm_T1 < np.norm_limit;
      bool tracked = true;
      auto it = by_neuron.find(j);
      if (it != by_neuron.end() && it->second->tail_dir.size() > 0) {
        const double omega = yardstick_state(*it->second, times.T1).norm();
        np.log_gap = std::abs(std::log(omega) - std::log(np.norm_T1 / lambda));
        tracked = np.log_gap <= np.log_budget;
      }
      np.ok = aligned && capped && tracked;
      rep.alignment_ok = rep.alignment_ok && aligned;
      rep.norm_cap_ok = rep.norm_cap_ok && capped;
      rep.log_length_ok = rep.log_length_ok && tracked;
    }
    rep.neurons.push_back(np);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// S-monitoring along a run

struct SMonitor {
  std::optional<long long> start;  // first aligned iterate
  std::optional<long long> stop;  // first iterate with loss < 1e-6
  int considered = 0;
  int members = 0;
  int assertion_failures = 0;
  double fraction() const { return considered ? static_cast<double>(members) / considered : 0.0; }
};

// When `start` is not given it is the first record whose bundle neurons all
// have pairwise cosines above 1 - 4 lambda^eps.
inline SMonitor s_monitor(const std::vector<MetricsRecord>& records, const EigenAnalysis& ea, const Dataset& ds,
                          double lambda, double eps, std::optional<long long> start = std::nullopt,
                          double tol = -1e-6, std::optional<double> xi_threshold = std::nullopt) {
  SMonitor out;
  if (start) {
    out.start = start;
  } else {
    const double need = 1.0 - 4.0 * std::pow(lambda, eps);
    for (const auto& r : records)
      if (r.bundle_min_cos > need) {
        out.start = r.iteration;
        break;
      }
  }
  if (!out.start) return out;
  for (const auto& r : records) {
    if (r.iteration < *out.start) continue;
    if (r.loss < 1e-6) {
      out.stop = r.iteration;
      break;
    }
    const Vec v = r.nu.size() ? ea.from_coords(r.nu) : r.bundle;
    ++out.considered;
    const SSetReport rep = s_membership(v, ea, ds, lambda, eps, tol, xi_threshold);
    if (!rep.member) continue;
    ++out.members;
    if (!member_assertions(v, rep, ea, ds).ok()) ++out.assertion_failures;
  }
  return out;
}

}  // namespace relu_lab
