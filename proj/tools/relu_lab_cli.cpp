// Command line front end: gen, yardstick, train, phases, interp, sweep, verify.
#include "relu_lab/relu_lab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>

using namespace relu_lab;
namespace fs = std::filesystem;

namespace {

std::string kv(const std::string& k, const std::string& v) { return k + " = " + v + "\n"; }
std::string kv(const std::string& k, double v) { return kv(k, text::fmt(v)); }
std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::optional<std::string> read_if_exists(const std::string& path) {
  if (!fs::exists(path)) return std::nullopt;
  return text::read_file(path);
}

// Key = value sidecar written next to a training log.
std::map<std::string, std::string> parse_kv(const std::string& body) {
  std::map<std::string, std::string> out;
  for (const auto& line : text::split(body, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[text::trim(line.substr(0, eq))] = text::trim(line.substr(eq + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string scheme = "centred";
  int d = 0, n = 0;
  std::uint64_t seed = 0;
  std::string out;
  int m = 0;
  double lambda = 1.0;
  double eps = 0.25;
  std::uint64_t init_seed = 0;
  std::string init_out;
};

int cmd_gen(const GenArgs& a) {
  const Dataset ds = generate_scheme(a.scheme, a.d, a.n > 0 ? a.n : a.d, a.seed);
  save_dataset(ds, a.out);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << a.out << " (d=" << ds.dim() << ", n=" << ds.size() << ", mode " << to_string(ds.mode)
            << ", resamples " << std::accumulate(ds.resamples.begin(), ds.resamples.end(), 0) << ")\n";
  if (!a.init_out.empty()) {
    require(a.m >= 1, ErrorKind::precondition, "--init-out needs --m");
    save_init(draw_init(ds.dim(), a.m, a.lambda, a.init_seed, a.eps), a.init_out);
    std::cout << "wrote " << a.init_out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct YardstickArgs {
  std::string dataset, init, out;
  double horizon = -1;
  double oracle_dt = 0;
};

int cmd_yardstick(const YardstickArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const InitConfig init = load_init(a.init);
  const auto report = validate_assumptions(ds, init);
  for (const auto& c : report.checks)
    if (!c.passed) std::cerr << "assumption violated: " << c.name << " (" << c.detail << ")\n";
  const auto traces = simulate_all(ds, init);
  text::write_file(a.out, traces_to_csv(traces));
  const EigenAnalysis ea = eigen_analysis(ds);
  const Measurements meas = measurements(ds, ea, init, traces);
  const TheoreticalTimes times = theoretical_times(ds, meas, init.lambda, init.eps, 1e-9, traces);
  const double horizon = a.horizon > 0 ? a.horizon : times.T0;
  std::string summary;
  summary += kv("neurons_traced", std::to_string(traces.size()));
  summary += kv("delta", meas.delta);
  summary += kv("Delta", meas.Delta);
  for (const auto& [name, v] : meas.delta_terms) summary += kv("delta_term." + name, v);
  summary += kv("T0", times.T0);
  summary += kv("T1", times.T1);
  summary += kv("horizon", horizon);
  const LambdaBound lb = lambda_bound(init.width(), ds.size(), meas.delta, meas.Delta, init.eps);
  summary += kv("log_lambda_bound", lb.log_value);
  summary += kv("lambda_admitted", yes_no(lb.admits(init.lambda)));
  if (!lb.admits(init.lambda)) std::cerr << "warning: lambda exceeds the theoretical bound\n";
  for (const auto& tr : traces) {
    const std::string p = "neuron." + std::to_string(tr.neuron) + ".";
    summary += kv(p + "terminal", to_string(tr.terminal));
    summary += kv(p + "phi_at_horizon", yardstick_phi(tr, horizon));
    summary += kv(p + "norm_at_horizon", yardstick_state(tr, horizon).norm());
    if (a.oracle_dt > 0) {
      const OracleTrace orc = euler_oracle(ds, tr.z, tr.sign, a.oracle_dt, tr.final_time() * 1.05 + 0.1);
      double worst = 0;
      const bool same = !orc.partial && orc.order() == tr.order();
      if (same)
        for (int l = 0; l < tr.n_stages(); ++l)
          worst = std::max(worst, std::abs(orc.crossings[l].time - tr.stages[l].tau_exit) / tr.stages[l].tau_exit);
      summary += kv(p + "oracle_order_agrees", yes_no(same));
      summary += kv(p + "oracle_max_rel_error", worst);
    }
  }
  text::write_file(a.out + ".summary.txt", summary);
  std::cout << "wrote " << a.out << " and " << a.out << ".summary.txt (" << traces.size() << " neurons)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string dataset, log, init;
  int m = 0;
  double lambda = 1.0, lr = 0.01, loss_tol = 1e-9, eps = 0.25;
  std::uint64_t seed = 0;
  long long max_iters = 20'000'000;
  bool track_eigen = false;
  int test_loss = 0;
  bool no_crossings = false;
};

int cmd_train(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  InitConfig init;
  if (!a.init.empty()) {
    init = load_init(a.init);
    require(init.dim() == ds.dim(), ErrorKind::precondition, "init dimension does not match the dataset");
  } else {
    require(a.m >= 1, ErrorKind::precondition, "--m is required without --init");
    init = draw_init(ds.dim(), a.m, a.lambda, a.seed, a.eps);
  }
  std::optional<EigenAnalysis> ea;
  TrainOptions opt;
  opt.lr = a.lr;
  opt.max_iters = a.max_iters;
  opt.loss_tol = a.loss_tol;
  opt.track_crossings = !a.no_crossings;
  if (a.track_eigen) {
    ea = eigen_analysis(ds);
    opt.eigen = &*ea;
  }
  if (a.test_loss > 0) opt.tests = draw_test_set(ds.teacher, a.test_loss, derive_seed(a.seed, 0x7e57ull));

  // Snapshots at the iterates nearest T0 and T1 when the yardsticks are computable.
  std::optional<TheoreticalTimes> times;
  std::vector<YardstickTrace> traces;
  try {
    const EigenAnalysis e = ea ? *ea : eigen_analysis(ds);
    traces = simulate_all(ds, init);
    const Measurements meas = measurements(ds, e, init, traces);
    times = theoretical_times(ds, meas, init.lambda, init.eps, 1e-9, traces);
    for (double t : {times->T0, times->T1}) {
      const long long it = std::llround(t / a.lr);
      opt.snapshot_iterations.insert(it);
      opt.extra_log_iterations.insert(it);
    }
  } catch (const LabError& e) {
    std::cerr << "note: no phase snapshots (" << e.what() << ")\n";
  }

  const TrainLog log = train(init_balanced(init), ds, opt);
  text::write_file(a.log, trainlog_to_csv(log));
  text::write_file(a.log + ".events.csv", events_to_csv(log.events));
  save_init(init, a.log + ".init.txt");
  text::write_file(a.log + ".params.txt", params_to_text(log.final_params));
  std::string meta = kv("lr", a.lr) + kv("lambda", init.lambda) + kv("eps", init.eps) + kv("m", std::to_string(init.width())) +
                     kv("max_iters", std::to_string(a.max_iters)) + kv("loss_tol", a.loss_tol) +
                     kv("stop", to_string(log.stop)) + kv("iterations", std::to_string(log.iterations)) +
                     kv("final_loss", log.last().loss);
  if (times) {
    meta += kv("T0", times->T0) + kv("T1", times->T1);
    const auto write_snap = [&](const char* tag, double t) {
      const auto it = log.snapshots.find(std::llround(t / a.lr));
      if (it != log.snapshots.end()) text::write_file(a.log + "." + tag + ".params.txt", params_to_text(it->second));
    };
    write_snap("T0", times->T0);
    write_snap("T1", times->T1);
  }
  text::write_file(a.log + ".meta.txt", meta);
  std::cout << "stop " << to_string(log.stop) << " after " << log.iterations << " iterations, loss "
            << text::fmt(log.last().loss) << ", max angle " << text::fmt(log.last().max_angle_deg) << " deg\n";
  return log.stop == StopReason::divergence ? 3 : 0;
}

// ---------------------------------------------------------------------------

struct PhasesArgs {
  std::string log, dataset, traces, out;
  double lambda = -1, eps = 0.25, lr = -1;
};

int cmd_phases(const PhasesArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const EigenAnalysis ea = eigen_analysis(ds);
  const auto records = records_from_csv(text::read_file(a.log));
  require(!records.empty(), ErrorKind::io, "log has no records");
  const auto meta = read_if_exists(a.log + ".meta.txt");
  const auto meta_kv = meta ? parse_kv(*meta) : std::map<std::string, std::string>{};
  const double lr = a.lr > 0 ? a.lr : (meta_kv.count("lr") ? std::stod(meta_kv.at("lr")) : -1.0);
  require(lr > 0, ErrorKind::precondition, "learning rate unknown: pass --lr");
  const double lambda = a.lambda;
  const double eps = a.eps;

  // Full traces when the init sidecar is present, else the schedule from --traces.
  std::vector<YardstickTrace> traces = traces_from_csv(text::read_file(a.traces));
  std::optional<InitConfig> init;
  if (auto body = read_if_exists(a.log + ".init.txt")) {
    init = init_from_text(*body, a.log + ".init.txt");
    init->lambda = lambda;
    init->eps = eps;
    traces = simulate_all(ds, *init);
  }

  std::string rep;
  std::string neurons = "neuron,sign,group,stage,point,tau,t,budget,order_agrees\n";
  const auto events_body = read_if_exists(a.log + ".events.csv");
  if (events_body) {
    const auto rows = compare_crossings(events_from_csv(*events_body), traces, lambda, eps, lr);
    int agree = 0;
    for (const auto& row : rows) {
      agree += row.order_agrees;
      for (std::size_t l = 0; l < row.tau.size(); ++l)
        neurons += std::to_string(row.neuron) + "," + std::to_string(row.sign) + "," + (row.sign == 1 ? "J+" : "J-") +
                   "," + std::to_string(l + 1) + "," + std::to_string(row.expected[l]) + "," + text::fmt(row.tau[l]) +
                   "," + text::fmt(row.t[l]) + "," + text::fmt(row.budget[l]) + "," + yes_no(row.order_agrees) + "\n";
    }
    rep += kv("crossing_order_agrees", std::to_string(agree) + "/" + std::to_string(rows.size()));
  } else {
    rep += kv("crossing_order_agrees", "no events file");
  }

  if (init) {
    const Measurements meas = measurements(ds, ea, *init, traces);
    const TheoreticalTimes times = theoretical_times(ds, meas, lambda, eps, 1e-9, traces);
    rep += kv("T0", times.T0) + kv("T1", times.T1) + kv("loss_time_bound", times.loss_time_bound);
    const auto t0 = read_if_exists(a.log + ".T0.params.txt");
    const auto t1 = read_if_exists(a.log + ".T1.params.txt");
    if (t0 && t1) {
      const PhaseReport pr = first_phase_report(ds, *init, traces, times, lr, params_from_text(*t0), params_from_text(*t1));
      rep += kv("first_phase.deactivation", yes_no(pr.deactivation_ok));
      rep += kv("first_phase.alignment", yes_no(pr.alignment_ok));
      rep += kv("first_phase.norm_cap", yes_no(pr.norm_cap_ok));
      rep += kv("first_phase.log_length", yes_no(pr.log_length_ok));
      rep += kv("first_phase.frozen", yes_no(pr.frozen_ok));
      for (const auto& np : pr.neurons) {
        const std::string p = "neuron." + std::to_string(np.neuron) + ".";
        rep += kv(p + "group", np.group);
        if (np.group == "J+") rep += kv(p + "cos_T1", np.cos_T1) + kv(p + "norm_T1", np.norm_T1);
        if (np.group == "J-") rep += kv(p + "norm_T0", np.norm_T0) + kv(p + "deactivated", yes_no(np.deactivated));
      }
    } else {
      rep += kv("first_phase", "no snapshots");
    }
  }

  const bool have_nu = records.front().nu.size() == ea.dim();
  if (have_nu) {
    const long long from = meta_kv.count("T1") ? std::llround(std::stod(meta_kv.at("T1")) / lr) : 0;
    const auto T2 = detect_T2(records, ea, from);
    rep += kv("T2_iteration", T2 ? std::to_string(*T2) : "none");
    if (T2) {
      long long until = -1;
      for (const auto& r : records)
        if (r.loss < 1e-9) {
          until = r.iteration;
          break;
        }
      const PLCheck pl = pl_check(records, ea, ds, *T2, until);
      rep += kv("pl.min_ratio", pl.min_ratio) + kv("pl.bound", pl.bound) + kv("pl.vacuous", yes_no(pl.vacuous)) +
             kv("pl.holds", yes_no(pl.holds));
      const NormCheck nc = bundle_norm_check(records, ea, ds, *T2, until);
      rep += kv("bundle_norm.min", nc.min_norm) + kv("bundle_norm.bound", nc.bound) + kv("bundle_norm.holds", yes_no(nc.holds));
    }
    const EigenCrossing ec = eigencrossing_order(records, ea);
    std::string order, never;
    for (int k : ec.order) order += (order.empty() ? "" : " ") + std::to_string(k);
    for (int k : ec.never) never += (never.empty() ? "" : " ") + std::to_string(k);
    rep += kv("eigencrossing.order", order) + kv("eigencrossing.never", never) +
           kv("eigencrossing.increasing", yes_no(ec.prefix_order));
    // Without per-neuron directions in the CSV the monitor starts at T1.
    const SMonitor mon = s_monitor(records, ea, ds, lambda, eps, from);
    rep += kv("s_monitor.considered", std::to_string(mon.considered)) +
           kv("s_monitor.members", std::to_string(mon.members)) + kv("s_monitor.fraction", mon.fraction()) +
           kv("s_monitor.assertion_failures", std::to_string(mon.assertion_failures));
  } else {
    rep += kv("eigencoordinates", "not tracked (train with --track-eigen)");
  }
  text::write_file(a.out, rep);
  text::write_file(a.out + ".neurons.csv", neurons);
  std::cout << rep;
  return 0;
}

// ---------------------------------------------------------------------------

struct InterpArgs {
  std::string dataset, family, out;
  double xi = 0.5, b = 11;
  int d = 0;
  int budget = 16;
  int m = 2;
  int jobs = 1;
};

int cmd_interp(const InterpArgs& a) {
  Dataset ds;
  if (!a.family.empty()) {
    require(a.dataset.empty(), ErrorKind::precondition, "--dataset and --family are exclusive");
    if (a.family == "mneg")
      ds = example_family_Mneg(a.d > 0 ? a.d : 2, a.xi);
    else if (a.family == "mpos")
      ds = example_family_Mpos(a.d > 0 ? a.d : 3, a.b);
    else
      throw LabError(ErrorKind::precondition, "unknown family " + a.family);
  } else {
    require(!a.dataset.empty(), ErrorKind::precondition, "need --dataset or --family");
    ds = load_dataset(a.dataset);
  }
  const InterpolatorReport rep = analyze_interpolators(ds, a.m, a.budget, 0, a.jobs);
  text::write_file(a.out, report_to_text(rep));
  text::write_file(a.out + ".rank1.params.txt", params_to_text(rep.rank1));
  if (rep.counterexample) text::write_file(a.out + ".counterexample.params.txt", params_to_text(rep.counterexample->params));
  std::cout << report_to_text(rep);
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_sweep(const std::string& config, int jobs, const std::string& out_dir) {
  SweepConfig c = parse_sweep_config(text::read_file(config));
  if (jobs > 0) c.jobs = jobs;
  if (!out_dir.empty()) c.out_dir = out_dir;
  const auto res = run_sweep(c, [](const SweepRow& r) {
    std::cout << "cell d=" << r.d << " m=" << r.m << " lambda=4^" << r.lambda_exp << " trial " << r.seed
              << ": max angle " << text::fmt(r.max_angle_deg) << " deg, loss " << text::fmt(r.final_loss) << "\n";
  });
  std::cout << res.rows.size() << " cells (" << res.resumed << " resumed), wrote " << c.out_dir
            << "/sweep.csv and aggregate.csv\n";
  return 0;
}

int cmd_verify(bool fast, const std::string& only, int jobs) {
  acceptance::SuiteOptions o;
  o.fast = fast;
  o.jobs = std::max(1, jobs);
  if (!only.empty())
    for (const auto& part : text::split(only, ',')) o.only.push_back(std::stoi(part));
  const auto results = acceptance::run_suite(o, [](const acceptance::Result& r) { std::cout << r.line() << std::endl; });
  return acceptance::hard_failures(results) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relu_lab: training dynamics of shallow ReLU networks learning a single neuron"};
  app.require_subcommand(1);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "generate a teacher-labelled dataset");
  gen->add_option("--scheme", ga.scheme, "centred or uncentred")->check(CLI::IsMember({"centred", "uncentred"}));
  gen->add_option("--d", ga.d, "dimension")->required();
  gen->add_option("--n", ga.n, "number of points (default d)");
  gen->add_option("--seed", ga.seed, "rng seed");
  gen->add_option("--out", ga.out, "dataset file")->required();
  gen->add_option("--m", ga.m, "width of an init file to draw alongside");
  gen->add_option("--lambda", ga.lambda, "initialisation scale for --init-out");
  gen->add_option("--eps", ga.eps, "analysis parameter for --init-out");
  gen->add_option("--init-seed", ga.init_seed, "seed for --init-out");
  gen->add_option("--init-out", ga.init_out, "also write an init file");

  YardstickArgs ya;
  auto* ys = app.add_subcommand("yardstick", "closed-form yardstick schedules");
  ys->add_option("--dataset", ya.dataset)->required();
  ys->add_option("--init", ya.init)->required();
  ys->add_option("--out", ya.out)->required();
  ys->add_option("--horizon", ya.horizon, "tabulation time (default T0)");
  ys->add_option("--oracle-dt", ya.oracle_dt, "also run the Euler oracle with this step");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "gradient descent from a balanced initialisation");
  tr->add_option("--dataset", ta.dataset)->required();
  tr->add_option("--m", ta.m, "width");
  tr->add_option("--init", ta.init, "init file instead of drawing one");
  tr->add_option("--lambda", ta.lambda);
  tr->add_option("--lr", ta.lr);
  tr->add_option("--seed", ta.seed);
  tr->add_option("--max-iters", ta.max_iters);
  tr->add_option("--loss-tol", ta.loss_tol);
  tr->add_option("--eps", ta.eps);
  tr->add_option("--log", ta.log)->required();
  tr->add_flag("--track-eigen", ta.track_eigen, "log eigencoordinates of the bundle vector");
  tr->add_option("--test-loss", ta.test_loss, "number of Gaussian test inputs");
  tr->add_flag("--no-crossings", ta.no_crossings, "skip activation crossing events");

  PhasesArgs pa;
  auto* ph = app.add_subcommand("phases", "phase-structure report for a training log");
  ph->add_option("--log", pa.log)->required();
  ph->add_option("--dataset", pa.dataset)->required();
  ph->add_option("--traces", pa.traces)->required();
  ph->add_option("--lambda", pa.lambda)->required();
  ph->add_option("--eps", pa.eps);
  ph->add_option("--lr", pa.lr, "learning rate (default from the log's meta file)");
  ph->add_option("--out", pa.out)->required();

  InterpArgs ia;
  auto* ip = app.add_subcommand("interp", "dichotomy quantity M and interpolator constructions");
  ip->add_option("--dataset", ia.dataset);
  ip->add_option("--family", ia.family, "mneg or mpos");
  ip->add_option("--xi", ia.xi);
  ip->add_option("--b", ia.b);
  ip->add_option("--d", ia.d, "dimension of the family");
  ip->add_option("--budget", ia.budget, "random starts per subset");
  ip->add_option("--m", ia.m, "width of the constructed networks");
  ip->add_option("--jobs", ia.jobs);
  ip->add_option("--out", ia.out)->required();

  std::string sweep_config, sweep_out;
  int sweep_jobs = 0;
  auto* sw = app.add_subcommand("sweep", "run an experiment sweep");
  sw->add_option("--config", sweep_config)->required();
  sw->add_option("--jobs", sweep_jobs, "override the config's jobs");
  sw->add_option("--out-dir", sweep_out, "override the config's out_dir");

  bool fast = false;
  std::string only;
  int verify_jobs = 1;
  auto* vf = app.add_subcommand("verify", "run the acceptance checks");
  vf->add_flag("--fast", fast, "use the short sweep for the table check");
  vf->add_option("--only", only, "comma separated criterion numbers");
  vf->add_option("--jobs", verify_jobs);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(ga);
    if (*ys) return cmd_yardstick(ya);
    if (*tr) return cmd_train(ta);
    if (*ph) return cmd_phases(pa);
    if (*ip) return cmd_interp(ia);
    if (*sw) return cmd_sweep(sweep_config, sweep_jobs, sweep_out);
    if (*vf) return cmd_verify(fast, only, verify_jobs);
  } catch (const LabError& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
