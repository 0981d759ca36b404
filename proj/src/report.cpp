#include "betapool/report.hpp"

#include <algorithm>
#include <cstdio>

namespace betapool {

using nlohmann::ordered_json;

HostDescriptor describe_host() {
  HostDescriptor h;
  h.visible_cores = visible_cores();
  return h;
}

ordered_json RunManifest::to_json() const {
  ordered_json host_json;
  host_json["visible_cores"] = host.visible_cores;
  if (host.affinity) {
    host_json["affinity"] = {{"applied", host.affinity->applied},
                             {"cores", host.affinity->cores},
                             {"available", host.affinity->available},
                             {"warning", host.affinity->warning}};
  }
  if (host.calibration) {
    host_json["spin_iterations_per_ms"] = host.calibration->iterations_per_ms;
    host_json["calibration_error"] = host.calibration->calibration_error;
  }
  ordered_json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["parameters"] = parameters;
  j["host"] = std::move(host_json);
  return j;
}

ordered_json workload_json(const WorkloadSpec& spec) {
  return {{"profile", spec.profile_name},   {"t_cpu_ms", spec.t_cpu_ms},
          {"t_io_ms", spec.t_io_ms},        {"gate", std::string(to_string(spec.gate))},
          {"jitter", spec.jitter_fraction}, {"seed", spec.seed}};
}

ordered_json controller_json(const ControllerConfig& c) {
  return {{"n_min", c.n_min},         {"n_max", c.n_max},
          {"beta_thresh", c.beta_thresh}, {"alpha", c.alpha},
          {"hysteresis", c.hysteresis},   {"interval_s", c.interval}};
}

ordered_json run_stats_json(const RunStats& s) {
  return {{"runs", s.n_runs},
          {"mean", s.mean},
          {"stddev", s.stddev},
          {"ci95_half_width", s.ci_half_width},
          {"pooled_p99_ms", s.pooled_p99},
          {"p99_run_median_ms", s.per_run_p99_median},
          {"p99_run_iqr_ms", s.per_run_p99_iqr}};
}

ordered_json decisions_json(const std::vector<DecisionRecord>& log) {
  ordered_json arr = ordered_json::array();
  for (const auto& d : log) {
    ordered_json row;
    row["tick"] = d.tick;
    row["time_s"] = d.time;
    row["queue_len"] = d.queue_len;
    row["beta_sample"] = d.beta_sample ? ordered_json(*d.beta_sample) : ordered_json(nullptr);
    row["beta_ewma"] = d.beta_ewma;
    row["decision"] = std::string(to_string(d.decision.kind));
    row["n_before"] = d.decision.n_before;
    row["n_after"] = d.decision.n_after;
    arr.push_back(std::move(row));
  }
  return arr;
}

ordered_json config_result_json(const ConfigResult& r) {
  ordered_json j;
  j["label"] = r.label;
  j["mode"] = r.mode;
  j["run_tps"] = r.run_tps;
  j["tps"] = run_stats_json(r.tps);
  j["mean_beta"] = r.mean_beta ? ordered_json(*r.mean_beta) : ordered_json(nullptr);
  j["final_n"] = r.final_n;
  j["veto_count"] = r.veto_count;
  j["warnings"] = r.warnings;
  return j;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

std::string join_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  line += '\n';
  return line;
}

}  // namespace

std::string csv_preamble(const RunManifest& manifest,
                         const std::vector<std::pair<std::string, std::string>>& summary) {
  std::string out = "# manifest: " + manifest.to_json().dump() + "\n";
  for (const auto& [k, v] : summary) out += "# " + k + "=" + v + "\n";
  return out;
}

std::string sweep_csv(const RunManifest& manifest, const std::vector<SweepRow>& rows,
                      const SweepSummary& summary) {
  std::string out = csv_preamble(manifest, {{"peak_n", std::to_string(summary.peak_n)},
                                            {"peak_tps", csv_number(summary.peak_tps)},
                                            {"degradation", csv_number(summary.degradation)}});
  out += "n,runs,tps_mean,tps_stddev,tps_ci95,pooled_p99_ms,p99_run_median_ms,p99_run_iqr_ms,"
         "mean_beta\n";
  for (const auto& row : rows) {
    const RunStats& s = row.result.tps;
    out += join_row({std::to_string(row.n), std::to_string(s.n_runs), csv_number(s.mean),
                     csv_number(s.stddev), csv_number(s.ci_half_width), csv_number(s.pooled_p99),
                     csv_number(s.per_run_p99_median), csv_number(s.per_run_p99_iqr),
                     opt_number(row.result.mean_beta)});
  }
  return out;
}

ordered_json sweep_json(const RunManifest& manifest, const std::vector<SweepRow>& rows,
                        const SweepSummary& summary) {
  ordered_json j;
  j["manifest"] = manifest.to_json();
  j["summary"] = {{"peak_n", summary.peak_n},
                  {"peak_tps", summary.peak_tps},
                  {"degradation", summary.degradation}};
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r = config_result_json(row.result);
    r["n"] = row.n;
    arr.push_back(std::move(r));
  }
  j["rows"] = std::move(arr);
  return j;
}

std::string sweep_b_table(const std::vector<SweepRow>& rows) {
  std::vector<const SweepRow*> sorted;
  for (const auto& r : rows) {
    if (r.result.mean_beta) sorted.push_back(&r);
  }
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->n < b->n; });
  std::string out = "n,beta\n";
  for (const auto* r : sorted) {
    out += std::to_string(r->n) + "," + csv_number(*r->result.mean_beta) + "\n";
  }
  return out;
}

std::string comparison_csv(const RunManifest& manifest,
                           const std::vector<ComparisonEntry>& entries) {
  std::string out = csv_preamble(manifest);
  out += "label,mode,runs,tps_mean,tps_stddev,tps_ci95,pooled_p99_ms,p99_run_median_ms,"
         "p99_run_iqr_ms,mean_beta,efficiency,final_n,veto_count\n";
  for (const auto& e : entries) {
    const ConfigResult& r = e.result;
    out += join_row({r.label, r.mode, std::to_string(r.tps.n_runs), csv_number(r.tps.mean),
                     csv_number(r.tps.stddev), csv_number(r.tps.ci_half_width),
                     csv_number(r.tps.pooled_p99), csv_number(r.tps.per_run_p99_median),
                     csv_number(r.tps.per_run_p99_iqr), opt_number(r.mean_beta),
                     opt_number(e.efficiency), std::to_string(r.final_n),
                     std::to_string(r.veto_count)});
  }
  return out;
}

ordered_json comparison_json(const RunManifest& manifest,
                             const std::vector<ComparisonEntry>& entries) {
  ordered_json j;
  j["manifest"] = manifest.to_json();
  ordered_json arr = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json r = config_result_json(e.result);
    r["efficiency"] = e.efficiency ? ordered_json(*e.efficiency) : ordered_json(nullptr);
    r["decisions"] = decisions_json(e.result.decisions);
    arr.push_back(std::move(r));
  }
  j["configurations"] = std::move(arr);
  return j;
}

std::string decisions_csv(const std::vector<DecisionRecord>& log) {
  std::string out = "tick,time_s,queue_len,beta_sample,beta_ewma,decision,n_before,n_after\n";
  for (const auto& d : log) {
    out += join_row({std::to_string(d.tick), csv_number(d.time), std::to_string(d.queue_len),
                     opt_number(d.beta_sample), csv_number(d.beta_ewma),
                     std::string(to_string(d.decision.kind)), std::to_string(d.decision.n_before),
                     std::to_string(d.decision.n_after)});
  }
  return out;
}

double sensitivity_spread(const std::vector<SensitivityRow>& rows) {
  if (rows.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(
      rows.begin(), rows.end(),
      [](const SensitivityRow& a, const SensitivityRow& b) { return a.best_tps < b.best_tps; });
  return hi->best_tps > 0.0 ? (hi->best_tps - lo->best_tps) / hi->best_tps : 0.0;
}

std::string sensitivity_csv(const RunManifest& manifest, const std::vector<SensitivityRow>& rows) {
  std::string out = csv_preamble(manifest, {{"best_tps_spread", csv_number(sensitivity_spread(rows))}});
  out += "beta_thresh,runs,tps_mean,tps_ci95,best_tps,pooled_p99_ms,settled_n,mean_beta,veto_count\n";
  for (const auto& row : rows) {
    const ConfigResult& r = row.result;
    out += join_row({csv_number(row.beta_thresh), std::to_string(r.tps.n_runs),
                     csv_number(r.tps.mean), csv_number(r.tps.ci_half_width),
                     csv_number(row.best_tps), csv_number(r.tps.pooled_p99),
                     std::to_string(r.final_n), opt_number(r.mean_beta),
                     std::to_string(r.veto_count)});
  }
  return out;
}

ordered_json sensitivity_json(const RunManifest& manifest, const std::vector<SensitivityRow>& rows) {
  ordered_json j;
  j["manifest"] = manifest.to_json();
  j["summary"] = {{"best_tps_spread", sensitivity_spread(rows)}};
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r = config_result_json(row.result);
    r["beta_thresh"] = row.beta_thresh;
    r["best_tps"] = row.best_tps;
    arr.push_back(std::move(r));
  }
  j["rows"] = std::move(arr);
  return j;
}

ConvergenceSummary summarize_convergence(const Trajectory& trajectory,
                                         const BlockingCharacteristic& curve,
                                         const ControllerConfig& config) {
  ConvergenceSummary s;
  s.terminal_n = trajectory.terminal_n();
  s.predicted_n = fixed_point(curve, config);
  s.agreement = s.terminal_n == s.predicted_n;
  s.veto_count = static_cast<std::size_t>(
      std::count_if(trajectory.points.begin(), trajectory.points.end(),
                    [](const TrajectoryPoint& p) { return p.decision == DecisionKind::Veto; }));
  return s;
}

std::string simulate_csv(const RunManifest& manifest, const Trajectory& trajectory,
                         const ConvergenceSummary& summary) {
  return csv_preamble(manifest, {{"terminal_n", std::to_string(summary.terminal_n)},
                                 {"fixed_point", std::to_string(summary.predicted_n)},
                                 {"agreement", summary.agreement ? "true" : "false"},
                                 {"veto_count", std::to_string(summary.veto_count)}}) +
         trajectory_csv(trajectory);
}

ordered_json simulate_json(const RunManifest& manifest, const Trajectory& trajectory,
                           const ConvergenceSummary& summary) {
  ordered_json j;
  j["manifest"] = manifest.to_json();
  j["summary"] = {{"terminal_n", summary.terminal_n},
                  {"fixed_point", summary.predicted_n},
                  {"agreement", summary.agreement},
                  {"veto_count", summary.veto_count}};
  ordered_json arr = ordered_json::array();
  for (const auto& p : trajectory.points) {
    arr.push_back({{"step", p.step},
                   {"n", p.n},
                   {"beta_ewma", p.beta_ewma},
                   {"decision", std::string(to_string(p.decision))}});
  }
  j["trajectory"] = std::move(arr);
  return j;
}

namespace {

ordered_json op_json(const OpCost& c) {
  return {{"mean_ns", c.mean_ns}, {"median_ns", c.median_ns}, {"p99_ns", c.p99_ns}};
}

}  // namespace

std::string overhead_csv(const RunManifest& manifest, const OverheadReport& r) {
  std::string out = csv_preamble(
      manifest, {{"iterations", std::to_string(r.iterations)},
                 {"overhead_median_us", csv_number(r.overhead_median_ns / 1e3)},
                 {"fraction_of_10ms_cpu_phase", csv_number(r.fraction_of_10ms)}});
  out += "operation,mean_ns,median_ns,p99_ns\n";
  auto row = [&](const char* name, const OpCost& c) {
    out += join_row({name, csv_number(c.mean_ns), csv_number(c.median_ns), csv_number(c.p99_ns)});
  };
  row("wall_clock_read", r.wall_read);
  row("thread_cpu_clock_read", r.cpu_read);
  row("noop_task", r.baseline_task);
  row("instrumented_noop_task", r.instrumented_task);
  return out;
}

ordered_json overhead_json(const RunManifest& manifest, const OverheadReport& r) {
  ordered_json j;
  j["manifest"] = manifest.to_json();
  j["summary"] = {{"iterations", r.iterations},
                  {"batch", r.batch},
                  {"overhead_median_us", r.overhead_median_ns / 1e3},
                  {"fraction_of_10ms_cpu_phase", r.fraction_of_10ms}};
  j["operations"] = {{"wall_clock_read", op_json(r.wall_read)},
                     {"thread_cpu_clock_read", op_json(r.cpu_read)},
                     {"noop_task", op_json(r.baseline_task)},
                     {"instrumented_noop_task", op_json(r.instrumented_task)}};
  return j;
}

}  // namespace betapool
