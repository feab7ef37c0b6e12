// Yardstick trajectories: the idealised per-neuron dynamics
//   d omega / dt = s ||omega|| gamma_{I_+(omega)},   omega(0) = z,
// solved stage by stage in closed form, plus a fixed-step Euler integrator
// used as an independent check of the crossing schedule.
#pragma once

#include "relu_lab/common.hpp"
#include "relu_lab/dataset.hpp"
#include "relu_lab/text_io.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace relu_lab {

struct YardstickStage {
  int index = 0;  // 1-based stage number
  IndexSet active;  // active set during the stage
  int crossing = -1;  // point that reaches the boundary at tau_exit
  double tau_entry = 0, tau_exit = 0;
  double phi_entry = 0, phi_exit = 0;  // angle to the stage's gamma just after entry / before exit
  double norm_entry = 0, norm_exit = 0;
  Vec dir_entry;  // unit omega at tau_entry
  Vec gamma;  // gamma of the active set
  double continuity_residual = 0;  // | ||g_l|| cos phi_exit - ||g_{l+1}|| cos phi_entry' |
};

enum class Terminal { aligns_to_gamma, deactivates };

inline const char* to_string(Terminal t) {
  return t == Terminal::aligns_to_gamma ? "ALIGNS_TO_GAMMA" : "DEACTIVATES";
}

struct YardstickTrace {
  int neuron = -1;
  int sign = 1;
  Vec z;
  double phi0 = 0;  // angle(z, gamma_{I_+(z)})
  std::vector<YardstickStage> stages;
  Terminal terminal = Terminal::aligns_to_gamma;
  // State after the last crossing. For s = +1 this is the entry of the
  // closed-form tail towards gamma_[n]; for s = -1 omega is frozen there.
  double tail_tau = 0;
  Vec tail_dir;
  double tail_norm = 0;
  double tail_phi = 0;
  Vec tail_gamma;
  double tail_artanh = 0;  // artanh cos(tail_phi)

  int n_stages() const { return static_cast<int>(stages.size()); }
  double final_time() const { return stages.empty() ? 0.0 : stages.back().tau_exit; }
  IndexSet order() const {
    IndexSet out;
    for (const auto& st : stages) out.push_back(st.crossing);
    return out;
  }
};

namespace detail {

inline double safe_artanh(double c) {
  constexpr double cap = 1.0 - 1e-16;
  return std::atanh(std::clamp(c, -cap, cap));
}

// Closed-form motion inside a segment where gamma is constant.
struct Segment {
  Vec dir0;
  double norm0;
  Vec gamma;
  double phi0;
  int sign;

  double gamma_norm() const { return gamma.norm(); }

  double cos_phi(double dt) const {
    if (gamma_norm() == 0.0) return std::cos(phi0);
    return std::tanh(safe_artanh(std::cos(phi0)) + sign * gamma_norm() * dt);
  }

  Vec direction(double dt) const {
    const double s0 = std::sin(phi0);
    if (gamma_norm() == 0.0 || s0 < 1e-15) return dir0;
    const double phi = std::acos(std::clamp(cos_phi(dt), -1.0, 1.0));
    const Vec g = gamma / gamma_norm();
    Vec v = (std::sin(phi) * dir0 + std::sin(phi0 - phi) * g) / s0;
    return v / v.norm();
  }

  double norm(double dt) const {
    const double gn = gamma_norm();
    const double c = std::cos(phi0);
    return 0.5 * (1.0 + sign * c) * norm0 * std::exp(gn * dt) + 0.5 * (1.0 - sign * c) * norm0 * std::exp(-gn * dt);
  }

  Vec state(double dt) const { return norm(dt) * direction(dt); }
};

inline Segment stage_segment(const YardstickStage& st, int sign) {
  return {st.dir_entry, st.norm_entry, st.gamma, st.phi_entry, sign};
}

}  // namespace detail

inline YardstickTrace simulate_yardstick(const Dataset& ds, const Vec& z, int sign, int neuron = -1) {
  require(sign == 1 || sign == -1, ErrorKind::precondition, "sign must be +1 or -1");
  require(z.size() == ds.dim() && z.norm() > 0.0, ErrorKind::precondition, "z must be a nonzero d-vector");
  const IndexSets sets = index_sets(z, ds);
  require(!sets.plus.empty(), ErrorKind::precondition, "neuron is initially inactive");
  require(sets.zero.empty(), ErrorKind::assumption_violation, "a training point lies on the initial boundary");

  YardstickTrace tr;
  tr.neuron = neuron;
  tr.sign = sign;
  tr.z = z;

  IndexSet active = sets.plus;
  IndexSet candidates = sign == 1 ? sets.minus : sets.plus;
  Vec dir = z / z.norm();
  double norm = z.norm();
  double tau = 0.0;
  std::vector<Vec> unit_points(ds.size());
  for (int i = 0; i < ds.size(); ++i) unit_points[i] = normalized(ds.point(i));

  {
    const Vec g0 = gamma(ds, active);
    tr.phi0 = angle(dir, g0);
  }

  int stage_no = 0;
  while (!candidates.empty()) {
    ++stage_no;
    const Vec g = gamma(ds, active);
    const double gn = g.norm();
    require(gn > 0.0, ErrorKind::numerical_failure, "stage gamma vanished");
    const Vec gbar = g / gn;
    const double c0 = dir.dot(gbar);
    require(c0 > -1e-12 && c0 < 1.0, ErrorKind::numerical_failure, "stage entry cosine left [0, 1)");
    const double phi0 = std::acos(std::clamp(c0, 0.0, 1.0));
    const double s0 = std::sin(phi0);
    require(s0 > 1e-14, ErrorKind::assumption_violation, "omega is aligned with gamma at a stage entry");

    // Next point to reach the boundary: argmin of -s (omega^T x) / (gamma^T x).
    double best = std::numeric_limits<double>::infinity(), second = best;
    int best_i = -1;
    double best_ratio = 0.0;
    for (int i : candidates) {
      const double a = dir.dot(unit_points[i]);
      const double b = gbar.dot(unit_points[i]);
      require(b > 0.0, ErrorKind::assumption_violation,
              "stage gamma is not positively correlated with point " + std::to_string(i));
      const double key = -sign * a / b;
      if (key < best) {
        second = best;
        best = key;
        best_i = i;
        best_ratio = -a / b;
      } else if (key < second) {
        second = key;
      }
    }
    if (candidates.size() > 1)
      require(second - best > 1e-10 * std::max(1.0, std::abs(best)), ErrorKind::assumption_violation,
              "two points reach the boundary simultaneously");

    // sin(phi0 - phi) / sin(phi) = -a/b  =>  cot(phi) = (cos(phi0) - a/b) / sin(phi0)
    const double phi_exit = std::atan2(s0, c0 + best_ratio);
    const double c_exit = std::cos(phi_exit);
    require(c_exit > -1e-9 && c_exit < 1.0, ErrorKind::numerical_failure, "exit cosine left [0, 1)");
    const double dt = sign * (detail::safe_artanh(std::max(c_exit, 0.0)) - detail::safe_artanh(c0)) / gn;
    require(dt > 0.0, ErrorKind::numerical_failure, "non-increasing crossing time");

    YardstickStage st;
    st.index = stage_no;
    st.active = active;
    st.crossing = best_i;
    st.tau_entry = tau;
    st.tau_exit = tau + dt;
    st.phi_entry = phi0;
    st.phi_exit = phi_exit;
    st.norm_entry = norm;
    st.dir_entry = dir;
    st.gamma = g;
    const detail::Segment seg{dir, norm, g, phi0, sign};
    st.norm_exit = seg.norm(dt);
    Vec next_dir = (std::sin(phi_exit) * dir + std::sin(phi0 - phi_exit) * gbar) / s0;
    next_dir /= next_dir.norm();
    require(std::abs(next_dir.dot(unit_points[best_i])) <= 1e-8, ErrorKind::numerical_failure,
            "crossing point is not on the boundary at the computed time");

    if (sign == 1) {
      active.insert(std::upper_bound(active.begin(), active.end(), best_i), best_i);
    } else {
      active.erase(std::find(active.begin(), active.end(), best_i));
    }
    candidates.erase(std::find(candidates.begin(), candidates.end(), best_i));
    if (!active.empty()) {
      const Vec g_next = gamma(ds, active);
      st.continuity_residual = std::abs(gn * c_exit - next_dir.dot(g_next));
    } else {
      st.continuity_residual = std::abs(gn * c_exit);
    }
    tr.stages.push_back(std::move(st));
    dir = next_dir;
    norm = tr.stages.back().norm_exit;
    tau += dt;
  }

  tr.tail_tau = tau;
  tr.tail_dir = dir;
  tr.tail_norm = norm;
  if (sign == 1) {
    tr.terminal = Terminal::aligns_to_gamma;
    tr.tail_gamma = gamma_all(ds);
    const double c = std::clamp(dir.dot(normalized(tr.tail_gamma)), -1.0, 1.0);
    tr.tail_phi = std::acos(c);
    tr.tail_artanh = detail::safe_artanh(c);
  } else {
    tr.terminal = Terminal::deactivates;
    tr.tail_gamma = Vec::Zero(ds.dim());
    tr.tail_phi = tr.stages.empty() ? 0.0 : tr.stages.back().phi_exit;
    require(std::abs(tr.tail_phi - std::numbers::pi / 2) <= 1e-6, ErrorKind::numerical_failure,
            "deactivating trajectory does not exit at a right angle");
  }
  return tr;
}

// omega at time t (closed form).
inline Vec yardstick_state(const YardstickTrace& tr, double t) {
  for (const auto& st : tr.stages)
    if (t <= st.tau_exit) return detail::stage_segment(st, tr.sign).state(std::max(0.0, t - st.tau_entry));
  if (tr.sign == -1) return tr.tail_norm * tr.tail_dir;
  const detail::Segment tail{tr.tail_dir, tr.tail_norm, tr.tail_gamma, tr.tail_phi, 1};
  return tail.state(t - tr.tail_tau);
}

// Angle between omega and the gamma vector driving it at time t (s = +1 tail included).
inline double yardstick_phi(const YardstickTrace& tr, double t) {
  for (const auto& st : tr.stages)
    if (t <= st.tau_exit)
      return std::acos(std::clamp(detail::stage_segment(st, tr.sign).cos_phi(t - st.tau_entry), -1.0, 1.0));
  if (tr.sign == -1) return std::numbers::pi / 2;
  return std::acos(std::tanh(tr.tail_artanh + tr.tail_gamma.norm() * (t - tr.tail_tau)));
}

inline std::vector<YardstickTrace> simulate_all(const Dataset& ds, const InitConfig& init) {
  std::vector<YardstickTrace> out;
  for (int j = 0; j < init.width(); ++j)
    if (!active_set(init.z(j), ds).empty()) out.push_back(simulate_yardstick(ds, init.z(j), init.signs[j], j));
  return out;
}

// ---------------------------------------------------------------------------
// Euler oracle

struct OracleCrossing {
  int point;
  double time;
  bool entering;  // true when omega^T x_i went from negative to positive
  double norm;
};

struct OracleTrace {
  std::vector<OracleCrossing> crossings;
  bool partial = false;
  double end_time = 0;
  Vec final_state;

  IndexSet order() const {
    IndexSet out;
    for (const auto& c : crossings) out.push_back(c.point);
    return out;
  }
};

// Explicit Euler for d omega/dt = s ||omega|| gamma_{I_+(omega)}; crossings are
// sign changes of omega^T x_i, timed by linear interpolation between steps.
inline OracleTrace euler_oracle(const Dataset& ds, const Vec& z, int sign, double dt, double horizon) {
  require(dt > 0.0 && horizon > 0.0, ErrorKind::precondition, "dt and horizon must be positive");
  const int n = ds.size();
  const IndexSets sets = index_sets(z, ds);
  const std::size_t expected = sign == 1 ? sets.minus.size() : sets.plus.size();
  const Mat weighted = ds.points.array().colwise() * ds.labels.array() / static_cast<double>(n);

  OracleTrace out;
  Vec w = z;
  Vec proj = ds.points * w;
  Vec g(ds.dim());
  double t = 0.0;
  const auto steps = static_cast<long long>(std::ceil(horizon / dt));
  for (long long k = 0; k < steps && out.crossings.size() < expected; ++k) {
    g.setZero();
    for (int i = 0; i < n; ++i)
      if (proj[i] > 0.0) g += weighted.row(i).transpose();
    w += (dt * sign * w.norm()) * g;
    const Vec next = ds.points * w;
    for (int i = 0; i < n; ++i) {
      const bool was = proj[i] > 0.0, now = next[i] > 0.0;
      if (was != now) {
        const double frac = proj[i] / (proj[i] - next[i]);
        out.crossings.push_back({i, t + frac * dt, now, w.norm()});
      }
    }
    proj = next;
    t += dt;
  }
  out.partial = out.crossings.size() < expected;
  out.end_time = t;
  out.final_state = w;
  return out;
}

// ---------------------------------------------------------------------------
// Measurements delta and Delta

struct Measurements {
  double delta = 0;
  double Delta = 0;
  std::vector<std::pair<std::string, double>> delta_terms;
  std::vector<std::pair<std::string, double>> Delta_terms;

  double term(const std::string& name) const {
    for (const auto& [k, v] : delta_terms)
      if (k == name) return v;
    for (const auto& [k, v] : Delta_terms)
      if (k == name) return v;
    throw LabError(ErrorKind::precondition, "no measurement term '" + name + "'");
  }
};

// Minimum of |unit(omega)^T unit(x_i)| over a stage, sampled at `samples`
// interior points plus both endpoints, skipping the points that sit on the
// boundary at either end of the stage.
inline double stage_cosine_infimum(const Dataset& ds, const YardstickTrace& tr, int stage_pos, int samples) {
  const auto& st = tr.stages[stage_pos];
  const detail::Segment seg = detail::stage_segment(st, tr.sign);
  const int prev = stage_pos > 0 ? tr.stages[stage_pos - 1].crossing : -1;
  double best = std::numeric_limits<double>::infinity();
  const double span = st.tau_exit - st.tau_entry;
  for (int s = 0; s <= samples + 1; ++s) {
    const double dt = span * s / (samples + 1);
    const Vec u = seg.direction(dt);
    for (int i = 0; i < ds.size(); ++i) {
      if (i == st.crossing || i == prev) continue;
      best = std::min(best, std::abs(u.dot(normalized(ds.point(i)))));
    }
  }
  return best;
}

inline Measurements measurements(const Dataset& ds, const EigenAnalysis& ea, const InitConfig& init,
                                 const std::vector<YardstickTrace>& traces, int samples_per_stage = 1000) {
  require(samples_per_stage >= 1000, ErrorKind::precondition, "need at least 1000 samples per stage");
  Measurements m;
  const int n = ds.size(), d = ds.dim();
  auto add = [&](const std::string& name, double v) { m.delta_terms.emplace_back(name, v); };

  double min_norm = std::numeric_limits<double>::infinity(), max_norm = 0;
  for (int i = 0; i < n; ++i) {
    min_norm = std::min(min_norm, ds.point(i).norm());
    max_norm = std::max(max_norm, ds.point(i).norm());
  }
  add("min point norm", min_norm);

  double min_cos = 1.0;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) min_cos = std::min(min_cos, cos_angle(ds.point(i), ds.point(k)));
  add("min pairwise cosine", min_cos);

  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < d; ++k)
    gap = std::min(gap, (std::sqrt(ea.alphas[k]) - std::sqrt(ea.alphas[k + 1])) * (d - 1));
  add("eigen gap", gap);
  add("sqrt alpha_d", std::sqrt(ea.alphas[d - 1]));
  add("min nu* sqrt d", ea.nu_star.minCoeff() * std::sqrt(static_cast<double>(d)));

  double min_z = std::numeric_limits<double>::infinity(), max_z = 0;
  for (int j = 0; j < init.width(); ++j) {
    min_z = std::min(min_z, init.z(j).norm());
    max_z = std::max(max_z, init.z(j).norm());
  }
  add("min init norm", min_z);

  std::map<int, const YardstickTrace*> by_neuron;
  for (const auto& tr : traces) by_neuron[tr.neuron] = &tr;
  const IndexSet jp = j_plus(init, ds), jm = j_minus(init, ds);
  for (int j : jp) require(by_neuron.count(j), ErrorKind::precondition, "missing trace for neuron " + std::to_string(j));
  for (int j : jm) require(by_neuron.count(j), ErrorKind::precondition, "missing trace for neuron " + std::to_string(j));

  if (!jp.empty()) {
    double v = std::numeric_limits<double>::infinity();
    for (int j : jp) v = std::min(v, std::cos(by_neuron[j]->phi0));
    add("min cos phi0 over J+", v);
  }
  if (!jm.empty()) {
    double v = std::numeric_limits<double>::infinity();
    double first = std::numeric_limits<double>::infinity();
    for (int j : jm) {
      const auto* tr = by_neuron[j];
      v = std::min(v, std::sin(tr->phi0));
      first = std::min(first, cos_angle(tr->z, ds.point(tr->stages.front().crossing)));
    }
    add("min sin phi0 over J-", v);
    add("first-crossing cosine over J-", first);
  }
  double traj = std::numeric_limits<double>::infinity();
  double stage_gap = std::numeric_limits<double>::infinity();
  for (const auto& tr : traces) {
    if (std::find(jp.begin(), jp.end(), tr.neuron) == jp.end() &&
        std::find(jm.begin(), jm.end(), tr.neuron) == jm.end())
      continue;
    for (int s = 0; s < tr.n_stages(); ++s) {
      traj = std::min(traj, stage_cosine_infimum(ds, tr, s, samples_per_stage));
      stage_gap = std::min(stage_gap, tr.stages[s].tau_exit - tr.stages[s].tau_entry);
    }
  }
  if (std::isfinite(traj)) add("trajectory cosine infimum", traj);
  if (std::isfinite(stage_gap)) add("min stage gap", stage_gap);

  m.delta = std::numeric_limits<double>::infinity();
  for (const auto& [name, v] : m.delta_terms) {
    require(v > 0.0, ErrorKind::assumption_violation, "measurement term '" + name + "' is not positive");
    m.delta = std::min(m.delta, v);
  }
  m.Delta_terms = {{"max point norm", max_norm}, {"max init norm", max_z}, {"one", 1.0}};
  m.Delta = std::max({max_norm, max_z, 1.0});
  return m;
}

struct TheoreticalTimes {
  double T0 = 0;  // end of yardstick crossings, plus one
  double T1 = 0;  // end of the alignment phase
  double loss_time_bound = 0;  // time after which the loss is below zeta
};

inline TheoreticalTimes theoretical_times(const Dataset& ds, const Measurements& meas, double lambda, double eps,
                                          double zeta, const std::vector<YardstickTrace>& traces) {
  require(zeta > 0.0 && zeta <= 1.0, ErrorKind::precondition, "zeta must be in (0, 1]");
  require(lambda > 0.0, ErrorKind::precondition, "lambda must be positive");
  TheoreticalTimes out;
  double last = 0.0;
  for (const auto& tr : traces) last = std::max(last, tr.final_time());
  out.T0 = last + 1.0;
  out.T1 = eps * std::log(1.0 / lambda) / gamma_all(ds).norm();
  const double d = ds.dim();
  const double D2 = meas.Delta * meas.Delta;
  out.loss_time_bound = std::log(1.0 / lambda) * 2.0 * (2.0 + eps) * d * D2 / std::pow(meas.delta, 6) +
                        std::log(1.0 / zeta) * 5.0 * D2 / (2.0 * std::pow(meas.delta, 4));
  return out;
}

// ---------------------------------------------------------------------------
// Trace CSV: one stage-0 row per neuron describing the initial state, then
// one row per crossing. Indices are 0-based.

inline std::string traces_to_csv(const std::vector<YardstickTrace>& traces) {
  std::string out = "neuron,sign,stage,crossing_index,tau,phi_entry,phi_exit,omega_norm_exit\n";
  for (const auto& tr : traces) {
    out += std::to_string(tr.neuron) + "," + std::to_string(tr.sign) + ",0,-1,0," + text::fmt(tr.phi0) + "," +
           text::fmt(tr.phi0) + "," + text::fmt(tr.z.norm()) + "\n";
    for (const auto& st : tr.stages)
      out += std::to_string(tr.neuron) + "," + std::to_string(tr.sign) + "," + std::to_string(st.index) + "," +
             std::to_string(st.crossing) + "," + text::fmt(st.tau_exit) + "," + text::fmt(st.phi_entry) + "," +
             text::fmt(st.phi_exit) + "," + text::fmt(st.norm_exit) + "\n";
  }
  return out;
}

// Reads back the schedule part of a trace file (no direction vectors).
inline std::vector<YardstickTrace> traces_from_csv(const std::string& body) {
  std::vector<YardstickTrace> out;
  const auto lines = text::split(body, '\n');
  require(!lines.empty() && text::trim(lines[0]).rfind("neuron,sign,stage", 0) == 0, ErrorKind::io,
          "trace file lacks the expected header");
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    require(f.size() == 8, ErrorKind::io, "trace row " + std::to_string(li) + " has wrong field count");
    const int neuron = std::stoi(f[0]);
    const int stage = std::stoi(f[2]);
    if (stage == 0) {
      YardstickTrace tr;
      tr.neuron = neuron;
      tr.sign = std::stoi(f[1]);
      tr.phi0 = std::stod(f[5]);
      tr.terminal = tr.sign == 1 ? Terminal::aligns_to_gamma : Terminal::deactivates;
      out.push_back(std::move(tr));
      continue;
    }
    require(!out.empty() && out.back().neuron == neuron, ErrorKind::io, "trace rows out of order");
    YardstickStage st;
    st.index = stage;
    st.crossing = std::stoi(f[3]);
    st.tau_entry = out.back().final_time();
    st.tau_exit = std::stod(f[4]);
    st.phi_entry = std::stod(f[5]);
    st.phi_exit = std::stod(f[6]);
    st.norm_exit = std::stod(f[7]);
    out.back().stages.push_back(std::move(st));
  }
  return out;
}

}  // namespace relu_lab
