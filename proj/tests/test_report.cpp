#include <doctest.h>

#include "betapool/bench.hpp"
#include "betapool/report.hpp"

using namespace betapool;

namespace {

SweepRow row(std::size_t n, double tps, std::optional<double> beta = std::nullopt) {
  SweepRow r;
  r.n = n;
  r.result.tps.mean = tps;
  r.result.tps.n_runs = 1;
  r.result.mean_beta = beta;
  return r;
}

}  // namespace

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("queue_depth(4,256)") == "\"queue_depth(4,256)\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(csv_number(0.5) == "0.5");
}

TEST_CASE("sweep summary") {
  auto s = summarize_sweep({row(1, 16), row(8, 95), row(32, 90), row(1024, 7)});
  CHECK(s.peak_n == 8);
  CHECK(s.peak_tps == 95);
  CHECK(s.degradation == doctest::Approx(1.0 - 7.0 / 95.0));
  s = summarize_sweep({row(4, 50)});
  CHECK(s.peak_n == 4);
  CHECK(s.degradation == 0.0);
  s = summarize_sweep({row(1, 20), row(4, 80), row(16, 320)});
  CHECK(s.peak_n == 16);
  CHECK(s.degradation == 0.0);
}

TEST_CASE("sweep reports embed the manifest and agree with each other") {
  RunManifest m;
  m.subcommand = "sweep";
  m.parameters["threads"] = {1, 8};
  m.host.visible_cores = 1;
  const std::vector<SweepRow> rows{row(1, 16, 0.83), row(8, 95, 0.88)};
  const SweepSummary s = summarize_sweep(rows);
  const std::string csv = sweep_csv(m, rows, s);
  CHECK(csv.rfind("# manifest: {\"subcommand\":\"sweep\"", 0) == 0);
  CHECK(csv.find("# peak_n=8\n") != std::string::npos);
  CHECK(csv.find("\n1,1,16,") != std::string::npos);
  const auto j = sweep_json(m, rows, s);
  CHECK(j["manifest"]["subcommand"] == "sweep");
  CHECK(j["summary"]["peak_n"] == 8);
  CHECK(j["rows"][1]["n"] == 8);
  CHECK(j["rows"][1]["mean_beta"].get<double>() == 0.88);

  CHECK(sweep_b_table(rows) == "n,beta\n1,0.83\n8,0.88\n");
}

TEST_CASE("simulate report") {
  ControllerConfig cfg;
  cfg.n_max = 40;
  const auto curve = BlockingCharacteristic::piecewise({0.5, 0.9, 16, 0.02}, cfg.n_min, cfg.n_max);
  const auto t = simulate_controller(curve, cfg, 300, LoadSchedule::sustained());
  const auto s = summarize_convergence(t, curve, cfg);
  CHECK(s.terminal_n == t.terminal_n());
  CHECK(s.predicted_n == fixed_point(curve, cfg));
  CHECK(s.agreement == (s.terminal_n == s.predicted_n));
  RunManifest m;
  m.subcommand = "simulate";
  const std::string csv = simulate_csv(m, t, s);
  CHECK(csv.find("\nstep,n,beta_ewma,decision\n") != std::string::npos);
  const auto j = simulate_json(m, t, s);
  CHECK(j["trajectory"].size() == 300);
  CHECK(j["summary"]["fixed_point"] == s.predicted_n);
}

TEST_CASE("overhead measurement") {
  CHECK_THROWS_AS(measure_overhead(0), std::invalid_argument);
  const OverheadReport r = measure_overhead(20000, 100);
  CHECK(r.wall_read.median_ns > 0.0);
  CHECK(r.cpu_read.median_ns > 0.0);
  CHECK(r.instrumented_task.median_ns > r.baseline_task.median_ns);
  CHECK(r.fraction_of_10ms < 0.01);
  RunManifest m;
  CHECK(overhead_csv(m, r).find("instrumented_noop_task,") != std::string::npos);
}

TEST_CASE("pure io run scales with pool size") {
  RunOptions o;
  o.workload.t_cpu_ms = 0.0;
  o.workload.t_io_ms = 50.0;
  o.workload.gate = GateMode::None;
  o.warmup_s = 0.2;
  o.duration_s = 1.0;
  PoolConfig c1;
  c1.mode = StaticFixed{1};
  PoolConfig c8;
  c8.mode = StaticFixed{8};
  const RunResult r1 = run_once(c1, o, SpinCalibration{});
  const RunResult r8 = run_once(c8, o, SpinCalibration{});
  CHECK(r1.tps == doctest::Approx(20.0).epsilon(0.15));
  CHECK(r8.tps == doctest::Approx(160.0).epsilon(0.15));
  CHECK(*r8.mean_beta > 0.98);
  CHECK(r8.latencies_ms.size() == r8.completed_in_window);
  CHECK(r8.final_n == 8);
}
