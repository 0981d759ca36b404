#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "betapool/pool.hpp"
#include "betapool/stats.hpp"
#include "betapool/workload.hpp"

namespace betapool {

struct RunOptions {
  WorkloadSpec workload;
  double warmup_s = 1.0;
  double duration_s = 5.0;
  std::size_t backlog = 16;  // queued tasks the feeder keeps topped up
  std::chrono::microseconds gate_interval = ExclusionGate::kDefaultSwitchInterval;
};

/// One measured run. Only tasks completing inside the measurement window
/// (after warmup) contribute to the throughput, latency and beta figures.
struct RunResult {
  double tps = 0.0;
  std::uint64_t completed_in_window = 0;
  std::vector<double> latencies_ms;  // enqueue to completion
  std::optional<double> mean_beta;   // wall-time weighted over the window
  std::size_t final_n = 0;
  std::uint64_t veto_count = 0;
  int max_gate_occupancy = 0;
  std::uint64_t futile_wakeups = 0;
  std::vector<DecisionRecord> decisions;
  std::vector<std::string> warnings;
};

/// Runs the workload on a freshly built pool under sustained load: a feeder
/// thread keeps `backlog` tasks queued for warmup + duration seconds.
RunResult run_once(const PoolConfig& pool_config, const RunOptions& options,
                   const SpinCalibration& calibration);

/// Aggregate of repeated runs of one configuration.
struct ConfigResult {
  std::string label;
  std::string mode;
  std::vector<double> run_tps;
  RunStats tps;
  double pooled_p99_ms = 0.0;
  std::optional<double> mean_beta;
  std::size_t final_n = 0;       // median over runs
  std::uint64_t veto_count = 0;  // summed over runs
  std::vector<DecisionRecord> decisions;  // from the last run
  std::vector<std::string> warnings;
};

using ProgressFn = std::function<void(const std::string&)>;

/// `runs` repetitions; run r uses workload seed `options.workload.seed + r`.
ConfigResult run_config(const std::string& label, const PoolConfig& pool_config,
                        const RunOptions& options, std::size_t runs,
                        const SpinCalibration& calibration, const ProgressFn& progress = {});

struct SweepRow {
  std::size_t n = 0;
  ConfigResult result;
};

struct SweepSummary {
  std::size_t peak_n = 0;
  double peak_tps = 0.0;
  double degradation = 0.0;  // 1 - TPS(largest N) / TPS(peak)
};

SweepSummary summarize_sweep(const std::vector<SweepRow>& rows);

std::vector<SweepRow> run_sweep(const std::vector<std::size_t>& thread_counts,
                                const RunOptions& options, std::size_t runs,
                                const SpinCalibration& calibration,
                                const ProgressFn& progress = {});

/// Per-operation cost distribution in nanoseconds.
struct OpCost {
  double mean_ns = 0.0;
  double median_ns = 0.0;
  double p99_ns = 0.0;
};

struct OverheadReport {
  std::uint64_t iterations = 0;
  std::size_t batch = 0;
  OpCost wall_read;
  OpCost cpu_read;
  OpCost baseline_task;      // uninstrumented no-op task
  OpCost instrumented_task;  // no-op task under the full capture pattern
  double overhead_median_ns = 0.0;  // instrumented - baseline
  double fraction_of_10ms = 0.0;
};

/// Times `iterations` operations of each kind in batches of `batch`.
/// Throws std::invalid_argument when iterations is zero.
OverheadReport measure_overhead(std::uint64_t iterations, std::size_t batch = 100);

}  // namespace betapool
