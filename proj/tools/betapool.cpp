// betapool: sweeps, adaptive-vs-static comparisons, threshold sensitivity,
// controller simulation and instrumentation overhead.
//
// Exit codes: 0 ok, 2 usage or input error, 3 spin calibration failure,
// 4 runtime failure.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "betapool/bench.hpp"
#include "betapool/blocking_curve.hpp"
#include "betapool/controller.hpp"
#include "betapool/report.hpp"
#include "betapool/simulator.hpp"
#include "betapool/workload.hpp"

using namespace betapool;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitCalibration = 3;
constexpr int kExitRuntime = 4;

struct WorkloadArgs {
  std::string profile = "mixed-default";
  std::optional<double> t_cpu;
  std::optional<double> t_io;
  std::string gate = "gil";
  double jitter = 0.0;
  std::uint64_t seed = 1;
  long gate_interval_us = ExclusionGate::kDefaultSwitchInterval.count();

  WorkloadSpec spec() const {
    WorkloadSpec s = find_profile(profile);
    if (t_cpu) s.t_cpu_ms = *t_cpu;
    if (t_io) s.t_io_ms = *t_io;
    if (t_cpu || t_io) s.profile_name = "custom";
    s.gate = parse_gate_mode(gate);
    s.jitter_fraction = jitter;
    s.seed = seed;
    s.validate();
    return s;
  }
};

struct RunArgs {
  std::size_t runs = 10;
  double duration = 5.0;
  double warmup = 1.0;
  std::optional<std::size_t> cores;
};

struct OutputArgs {
  std::string format = "csv";
  std::string out;
};

struct Args {
  WorkloadArgs workload;
  RunArgs run;
  OutputArgs output;
  ControllerConfig controller;

  std::vector<std::size_t> threads{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::vector<std::size_t> search_threads{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::optional<std::size_t> best_threads;
  std::size_t naive_threads = 256;
  std::size_t scaler_min = 4;
  std::size_t scaler_max = 256;
  std::optional<double> scaler_interval;
  std::string decisions_out;
  std::string b_table_out;
  std::vector<double> grid{0.2, 0.3, 0.4, 0.5, 0.6, 0.7};

  std::string b_table;
  std::vector<double> piecewise;
  std::optional<std::size_t> steps;
  std::string load = "sustained";
  double noise = 0.0;
  std::uint64_t sim_seed = 1;

  std::uint64_t iterations = 1000000;
  std::size_t batch = 100;
};

void add_workload_options(CLI::App* cmd, WorkloadArgs& w) {
  cmd->add_option("--profile", w.profile, "Workload preset")->capture_default_str();
  cmd->add_option("--t-cpu", w.t_cpu, "CPU phase per task in ms (overrides the preset)");
  cmd->add_option("--t-io", w.t_io, "I/O phase per task in ms (overrides the preset)");
  cmd->add_option("--gate", w.gate, "Exclusion gate during CPU phases: gil|none")
      ->capture_default_str();
  cmd->add_option("--jitter", w.jitter, "Uniform multiplicative jitter fraction [0,0.5]")
      ->capture_default_str();
  cmd->add_option("--seed", w.seed, "Workload seed")->capture_default_str();
  cmd->add_option("--gate-interval", w.gate_interval_us, "Gate waiter timeout in microseconds")
      ->capture_default_str();
}

void add_run_options(CLI::App* cmd, RunArgs& r) {
  cmd->add_option("--runs", r.runs, "Independent runs per configuration")->capture_default_str();
  cmd->add_option("--duration", r.duration, "Measurement window per run in seconds")
      ->capture_default_str();
  cmd->add_option("--warmup", r.warmup, "Warmup before the window in seconds")
      ->capture_default_str();
  cmd->add_option("--cores", r.cores, "Restrict the process to this many cores");
}

void add_controller_options(CLI::App* cmd, ControllerConfig& c) {
  cmd->add_option("--n-min", c.n_min, "Controller lower bound")->capture_default_str();
  cmd->add_option("--n-max", c.n_max, "Controller upper bound")->capture_default_str();
  cmd->add_option("--beta-thresh", c.beta_thresh, "Veto threshold on the blocking estimate")
      ->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "EWMA smoothing factor")->capture_default_str();
  cmd->add_option("--hysteresis", c.hysteresis, "Consecutive signals before scaling up")
      ->capture_default_str();
  cmd->add_option("--interval", c.interval, "Controller tick in seconds")->capture_default_str();
}

void add_output_options(CLI::App* cmd, OutputArgs& o) {
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Report file (stdout when omitted)");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path);
}

void emit(const OutputArgs& o, const std::string& csv, const ordered_json& json) {
  write_text(o.out, o.format == "json" ? json.dump(2) + "\n" : csv);
}

void progress(const std::string& msg) { std::cerr << msg << std::endl; }

HostDescriptor prepare_host(const RunArgs& r, bool calibrate) {
  HostDescriptor host = describe_host();
  if (r.cores) {
    host.affinity = set_core_affinity(*r.cores);
    if (!host.affinity->warning.empty()) std::cerr << "warning: " << host.affinity->warning << "\n";
  }
  if (calibrate) host.calibration = calibrate_spin();
  return host;
}

RunOptions run_options(const Args& a) {
  RunOptions o;
  o.workload = a.workload.spec();
  o.warmup_s = a.run.warmup;
  o.duration_s = a.run.duration;
  if (a.workload.gate_interval_us <= 0) throw std::invalid_argument("--gate-interval must be positive");
  o.gate_interval = std::chrono::microseconds(a.workload.gate_interval_us);
  return o;
}

ordered_json run_parameters(const Args& a, const RunOptions& o) {
  return {{"workload", workload_json(o.workload)},
          {"gate_interval_us", a.workload.gate_interval_us},
          {"runs", a.run.runs},
          {"duration_s", a.run.duration},
          {"warmup_s", a.run.warmup},
          {"backlog", o.backlog}};
}

int cmd_sweep(const Args& a) {
  if (a.threads.empty()) throw std::invalid_argument("--threads needs at least one value");
  const RunOptions opts = run_options(a);
  RunManifest m;
  m.subcommand = "sweep";
  m.parameters = run_parameters(a, opts);
  m.parameters["threads"] = a.threads;
  m.host = prepare_host(a.run, opts.workload.t_cpu_ms > 0.0);

  const auto rows = run_sweep(a.threads, opts, a.run.runs, m.host.calibration.value_or(SpinCalibration{}),
                              progress);
  const SweepSummary s = summarize_sweep(rows);
  emit(a.output, sweep_csv(m, rows, s), sweep_json(m, rows, s));
  if (!a.b_table_out.empty()) write_text(a.b_table_out, sweep_b_table(rows));
  return 0;
}

int cmd_adaptive(const Args& a) {
  const RunOptions opts = run_options(a);
  a.controller.validate();
  RunManifest m;
  m.subcommand = "adaptive";
  m.parameters = run_parameters(a, opts);
  m.parameters["controller"] = controller_json(a.controller);
  m.parameters["naive_threads"] = a.naive_threads;
  m.parameters["scaler"] = {{"min", a.scaler_min},
                            {"max", a.scaler_max},
                            {"interval_s", a.scaler_interval.value_or(a.controller.interval)}};
  m.host = prepare_host(a.run, opts.workload.t_cpu_ms > 0.0);
  const SpinCalibration cal = m.host.calibration.value_or(SpinCalibration{});

  std::size_t best = 0;
  if (a.best_threads) {
    best = *a.best_threads;
    m.parameters["best_threads"] = best;
  } else {
    if (a.search_threads.empty()) throw std::invalid_argument("--threads needs at least one value");
    progress("no --best-threads given; sweeping for the best static size");
    const auto rows = run_sweep(a.search_threads, opts, a.run.runs, cal, progress);
    best = summarize_sweep(rows).peak_n;
    m.parameters["best_threads_sweep"] = a.search_threads;
    m.parameters["best_threads"] = best;
  }

  PoolConfig naive;
  naive.mode = StaticFixed{a.naive_threads};
  PoolConfig best_cfg;
  best_cfg.mode = StaticFixed{best};
  PoolConfig adaptive;
  adaptive.controller = a.controller;
  PoolConfig scaler;
  scaler.controller = a.controller;
  if (a.scaler_interval) scaler.controller.interval = *a.scaler_interval;
  scaler.mode = QueueDepthScaler{a.scaler_min, a.scaler_max};

  std::vector<ComparisonEntry> entries;
  entries.push_back({run_config("static-naive", naive, opts, a.run.runs, cal, progress), {}});
  entries.push_back({run_config("static-best", best_cfg, opts, a.run.runs, cal, progress), {}});
  entries.push_back({run_config("adaptive", adaptive, opts, a.run.runs, cal, progress), {}});
  entries.push_back({run_config("queue-depth", scaler, opts, a.run.runs, cal, progress), {}});
  const double best_tps = entries[1].result.tps.mean;
  if (best_tps > 0.0) {
    for (auto& e : entries) e.efficiency = efficiency(e.result.tps.mean, best_tps);
  }

  emit(a.output, comparison_csv(m, entries), comparison_json(m, entries));
  if (!a.decisions_out.empty()) write_text(a.decisions_out, decisions_csv(entries[2].result.decisions));
  return 0;
}

int cmd_sensitivity(const Args& a) {
  if (a.grid.empty()) throw std::invalid_argument("--grid needs at least one threshold");
  const RunOptions opts = run_options(a);
  a.controller.validate();
  RunManifest m;
  m.subcommand = "sensitivity";
  m.parameters = run_parameters(a, opts);
  m.parameters["controller"] = controller_json(a.controller);
  m.parameters["grid"] = a.grid;
  m.host = prepare_host(a.run, opts.workload.t_cpu_ms > 0.0);
  const SpinCalibration cal = m.host.calibration.value_or(SpinCalibration{});

  std::vector<SensitivityRow> rows;
  for (double thresh : a.grid) {
    PoolConfig cfg;
    cfg.controller = a.controller;
    cfg.controller.beta_thresh = thresh;
    cfg.controller.validate();
    SensitivityRow row;
    row.beta_thresh = thresh;
    row.result = run_config("adaptive@" + csv_number(thresh), cfg, opts, a.run.runs, cal, progress);
    for (double t : row.result.run_tps) row.best_tps = std::max(row.best_tps, t);
    rows.push_back(std::move(row));
  }
  emit(a.output, sensitivity_csv(m, rows), sensitivity_json(m, rows));
  return 0;
}

LoadSchedule parse_load(const std::string& text) {
  if (text == "sustained") return LoadSchedule::sustained();
  std::vector<std::size_t> lengths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("--load: bad queue length '" + item + "'");
    lengths.push_back(static_cast<std::size_t>(v));
  }
  return LoadSchedule::from_lengths(std::move(lengths));
}

int cmd_simulate(const Args& a) {
  a.controller.validate();
  if (a.b_table.empty() == a.piecewise.empty()) {
    throw std::invalid_argument("give exactly one of --b-table or --piecewise");
  }
  std::optional<BlockingCharacteristic> curve;
  if (!a.b_table.empty()) {
    std::ifstream f(a.b_table);
    if (!f) throw std::invalid_argument("cannot open b-table " + a.b_table);
    curve = BlockingCharacteristic::parse_csv(f);
  } else {
    if (a.piecewise.size() != 4) {
      throw std::invalid_argument("--piecewise takes beta_low,beta_peak,n_critical,slope");
    }
    PiecewiseParams p;
    p.beta_low = a.piecewise[0];
    p.beta_peak = a.piecewise[1];
    if (!(a.piecewise[2] >= 1.0) || a.piecewise[2] != std::floor(a.piecewise[2])) {
      throw std::invalid_argument("--piecewise n_critical must be a positive integer");
    }
    p.n_critical = static_cast<std::size_t>(a.piecewise[2]);
    p.decline_slope = a.piecewise[3];
    curve = BlockingCharacteristic::piecewise(p, a.controller.n_min, a.controller.n_max);
  }
  if (a.noise < 0.0) throw std::invalid_argument("--noise must be non-negative");

  const std::size_t steps =
      a.steps.value_or(2 * (a.controller.n_max - a.controller.n_min + 1) * a.controller.hysteresis + 20);
  const LoadSchedule load = parse_load(a.load);
  std::optional<NoiseSpec> noise;
  if (a.noise > 0.0) noise = NoiseSpec{a.noise, a.sim_seed};

  RunManifest m;
  m.subcommand = "simulate";
  m.parameters["controller"] = controller_json(a.controller);
  m.parameters["curve_source"] = a.b_table.empty() ? "piecewise" : a.b_table;
  m.parameters["curve"] = curve->to_csv();
  m.parameters["steps"] = steps;
  m.parameters["load"] = a.load;
  m.parameters["noise_stddev"] = a.noise;
  m.parameters["seed"] = a.sim_seed;
  m.host = describe_host();

  const Trajectory traj = simulate_controller(*curve, a.controller, steps, load, noise);
  const ConvergenceSummary s = summarize_convergence(traj, *curve, a.controller);
  emit(a.output, simulate_csv(m, traj, s), simulate_json(m, traj, s));
  std::cerr << "terminal_n=" << s.terminal_n << " fixed_point=" << s.predicted_n
            << " agreement=" << (s.agreement ? "true" : "false") << "\n";
  return 0;
}

int cmd_overhead(const Args& a) {
  if (a.iterations == 0) throw std::invalid_argument("--iterations must be positive");
  RunManifest m;
  m.subcommand = "overhead";
  m.parameters["iterations"] = a.iterations;
  m.parameters["batch"] = a.batch;
  m.host = prepare_host(a.run, false);
  const OverheadReport r = measure_overhead(a.iterations, a.batch);
  emit(a.output, overhead_csv(m, r), overhead_json(m, r));
  std::cerr << "median overhead " << r.overhead_median_ns / 1e3 << " us per task ("
            << r.fraction_of_10ms * 100.0 << "% of a 10 ms CPU phase)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blocking-ratio adaptive thread pool: benchmarks and simulation"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Args a;

  auto* sweep = app.add_subcommand("sweep", "Throughput and tail latency across static pool sizes");
  add_workload_options(sweep, a.workload);
  add_run_options(sweep, a.run);
  add_output_options(sweep, a.output);
  sweep->add_option("--threads", a.threads, "Pool sizes to sweep")->delimiter(',')->capture_default_str();
  sweep->add_option("--b-table-out", a.b_table_out, "Also write measured mean beta per N as n,beta");

  auto* adaptive = app.add_subcommand("adaptive", "Adaptive pool against static and queue-depth baselines");
  add_workload_options(adaptive, a.workload);
  add_run_options(adaptive, a.run);
  add_controller_options(adaptive, a.controller);
  add_output_options(adaptive, a.output);
  adaptive->add_option("--threads", a.search_threads, "Sweep used to find the best static size")
      ->delimiter(',')
      ->capture_default_str();
  adaptive->add_option("--best-threads", a.best_threads, "Best static size (skips the sweep)");
  adaptive->add_option("--naive-threads", a.naive_threads, "Naive static size")->capture_default_str();
  adaptive->add_option("--scaler-min", a.scaler_min, "Queue-depth scaler lower bound")->capture_default_str();
  adaptive->add_option("--scaler-max", a.scaler_max, "Queue-depth scaler upper bound")->capture_default_str();
  adaptive->add_option("--scaler-interval", a.scaler_interval,
                       "Queue-depth scaler tick in seconds (defaults to --interval)");
  adaptive->add_option("--decisions-out", a.decisions_out, "Write the adaptive decision log as CSV");

  auto* sens = app.add_subcommand("sensitivity", "Adaptive pool across a grid of veto thresholds");
  add_workload_options(sens, a.workload);
  add_run_options(sens, a.run);
  add_controller_options(sens, a.controller);
  add_output_options(sens, a.output);
  sens->add_option("--grid", a.grid, "Threshold values")->delimiter(',')->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Run the controller against a blocking curve");
  add_controller_options(sim, a.controller);
  add_output_options(sim, a.output);
  sim->add_option("--b-table", a.b_table, "CSV file with header n,beta");
  sim->add_option("--piecewise", a.piecewise, "beta_low,beta_peak,n_critical,slope")->delimiter(',');
  sim->add_option("--steps", a.steps, "Controller ticks to simulate");
  sim->add_option("--load", a.load, "'sustained' or comma-separated queue lengths")->capture_default_str();
  sim->add_option("--noise", a.noise, "Gaussian noise stddev added to each sample")->capture_default_str();
  sim->add_option("--seed", a.sim_seed, "Noise seed")->capture_default_str();

  auto* over = app.add_subcommand("overhead", "Cost of the per-task timing capture");
  add_output_options(over, a.output);
  over->add_option("--iterations", a.iterations, "Operations timed per kind")->capture_default_str();
  over->add_option("--batch", a.batch, "Operations per timed batch")->capture_default_str();
  over->add_option("--cores", a.run.cores, "Restrict the process to this many cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sweep) return cmd_sweep(a);
    if (*adaptive) return cmd_adaptive(a);
    if (*sens) return cmd_sensitivity(a);
    if (*sim) return cmd_simulate(a);
    if (*over) return cmd_overhead(a);
  } catch (const CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << "\n";
    return kExitCalibration;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
