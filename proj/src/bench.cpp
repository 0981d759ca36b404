#include "betapool/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "betapool/metrics.hpp"

namespace betapool {
namespace {

struct WindowCollector {
  double start = 0.0;
  double end = 0.0;
  std::mutex mutex;
  std::uint64_t count = 0;
  std::vector<double> latencies_ms;
  double sum_wall = 0.0;
  double sum_weighted = 0.0;

  void add(const CompletionRecord& rec) {
    if (rec.completed_at < start || rec.completed_at >= end) return;
    const double beta = blocking_ratio(rec.timing);
    std::lock_guard lock(mutex);
    ++count;
    latencies_ms.push_back(rec.latency() * 1e3);
    sum_wall += rec.timing.wall_time;
    sum_weighted += rec.timing.wall_time * beta;
  }
};

std::size_t median_size(std::vector<std::size_t> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

RunResult run_once(const PoolConfig& pool_config, const RunOptions& options,
                   const SpinCalibration& calibration) {
  options.workload.validate();
  if (!(options.duration_s > 0.0) || !(options.warmup_s >= 0.0)) {
    throw std::invalid_argument("run needs a positive duration and non-negative warmup");
  }
  if (options.backlog == 0) throw std::invalid_argument("feeder backlog must be positive");

  ExclusionGate gate(options.gate_interval);
  auto cancel = std::make_shared<std::atomic<bool>>(false);
  TaskFactory factory(options.workload, WorkloadContext{calibration, &gate, cancel});

  WindowCollector window;
  const double t0 = wall_seconds();
  window.start = t0 + options.warmup_s;
  window.end = window.start + options.duration_s;

  PoolConfig config = pool_config;
  config.on_complete = [&window, user = pool_config.on_complete](const CompletionRecord& rec) {
    if (user) user(rec);
    window.add(rec);
  };

  RunResult result;
  WorkerPool pool(std::move(config));

  std::atomic<bool> feeding{true};
  std::thread feeder([&] {
    while (feeding.load()) {
      try {
        while (pool.status().queue_len < options.backlog) pool.submit(factory.next_task());
      } catch (const QueueFull&) {
      } catch (const PoolRejected&) {
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  });

  const double end = window.end;
  while (wall_seconds() < end) {
    const double left = end - wall_seconds();
    std::this_thread::sleep_for(std::chrono::duration<double>(std::clamp(left, 0.0, 0.05)));
  }

  const PoolStatus st = pool.status();
  result.final_n = st.target_workers;
  result.veto_count = st.veto_count;
  result.decisions = pool.decision_log();

  cancel->store(true);
  feeding.store(false);
  feeder.join();
  pool.shutdown(ShutdownMode::Immediate);

  result.warnings = pool.warnings();
  result.max_gate_occupancy = gate.max_occupancy();
  result.futile_wakeups = gate.futile_wakeups();

  std::lock_guard lock(window.mutex);
  result.completed_in_window = window.count;
  result.tps = static_cast<double>(window.count) / options.duration_s;
  result.latencies_ms = std::move(window.latencies_ms);
  if (window.sum_wall > 0.0) result.mean_beta = window.sum_weighted / window.sum_wall;
  if (window.count == 0) result.warnings.push_back("no task completed inside the window");
  return result;
}

ConfigResult run_config(const std::string& label, const PoolConfig& pool_config,
                        const RunOptions& options, std::size_t runs,
                        const SpinCalibration& calibration, const ProgressFn& progress) {
  if (runs == 0) throw std::invalid_argument("at least one run is required");
  ConfigResult out;
  out.label = label;
  out.mode = describe(pool_config.mode);

  std::vector<std::vector<double>> latencies;
  std::vector<std::size_t> finals;
  double beta_sum = 0.0;
  std::size_t beta_runs = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    RunOptions opts = options;
    opts.workload.seed = options.workload.seed + r;
    RunResult rr = run_once(pool_config, opts, calibration);
    if (progress) {
      progress(label + " run " + std::to_string(r + 1) + "/" + std::to_string(runs) +
               ": tps=" + std::to_string(rr.tps) + " final_n=" + std::to_string(rr.final_n));
    }
    out.run_tps.push_back(rr.tps);
    latencies.push_back(std::move(rr.latencies_ms));
    finals.push_back(rr.final_n);
    out.veto_count += rr.veto_count;
    if (rr.mean_beta) {
      beta_sum += *rr.mean_beta;
      ++beta_runs;
    }
    for (auto& w : rr.warnings) out.warnings.push_back("run " + std::to_string(r) + ": " + w);
    if (r + 1 == runs) out.decisions = std::move(rr.decisions);
  }
  out.tps = summarize_runs(out.run_tps, latencies);
  out.pooled_p99_ms = out.tps.pooled_p99;
  out.warnings.insert(out.warnings.end(), out.tps.warnings.begin(), out.tps.warnings.end());
  if (beta_runs > 0) out.mean_beta = beta_sum / static_cast<double>(beta_runs);
  out.final_n = median_size(finals);
  return out;
}

SweepSummary summarize_sweep(const std::vector<SweepRow>& rows) {
  SweepSummary s;
  if (rows.empty()) return s;
  for (const auto& row : rows) {
    if (row.result.tps.mean > s.peak_tps || s.peak_n == 0) {
      s.peak_tps = row.result.tps.mean;
      s.peak_n = row.n;
    }
  }
  const auto last = std::max_element(rows.begin(), rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) { return a.n < b.n; });
  if (s.peak_tps > 0.0) {
    s.degradation = std::clamp(1.0 - last->result.tps.mean / s.peak_tps, 0.0, 1.0);
  }
  return s;
}

std::vector<SweepRow> run_sweep(const std::vector<std::size_t>& thread_counts,
                                const RunOptions& options, std::size_t runs,
                                const SpinCalibration& calibration, const ProgressFn& progress) {
  std::vector<SweepRow> rows;
  for (std::size_t n : thread_counts) {
    PoolConfig config;
    config.mode = StaticFixed{n};
    rows.push_back({n, run_config("static-" + std::to_string(n), config, options, runs,
                                  calibration, progress)});
  }
  return rows;
}

namespace {

template <class Op>
OpCost time_op(std::uint64_t iterations, std::size_t batch, Op&& op) {
  using clock = std::chrono::steady_clock;
  const std::uint64_t batches = (iterations + batch - 1) / batch;
  std::vector<double> per_op;
  per_op.reserve(batches);
  for (std::uint64_t b = 0; b < batches; ++b) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < batch; ++i) op();
    const auto t1 = clock::now();
    per_op.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() /
                     static_cast<double>(batch));
  }
  OpCost c;
  c.mean_ns = std::accumulate(per_op.begin(), per_op.end(), 0.0) / static_cast<double>(batches);
  std::vector<double> sorted = per_op;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  c.median_ns = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  c.p99_ns = nearest_rank_percentile(per_op, 99);
  return c;
}

}  // namespace

OverheadReport measure_overhead(std::uint64_t iterations, std::size_t batch) {
  if (iterations == 0) throw std::invalid_argument("overhead: iterations must be positive");
  if (batch == 0) throw std::invalid_argument("overhead: batch must be positive");
  batch = static_cast<std::size_t>(std::min<std::uint64_t>(batch, iterations));

  volatile double sink = 0.0;
  std::function<void()> noop = [] {};
  ConcurrentAggregate agg;

  OverheadReport r;
  r.iterations = iterations;
  r.batch = batch;
  r.wall_read = time_op(iterations, batch, [&] { sink = sink + wall_seconds(); });
  r.cpu_read = time_op(iterations, batch, [&] { sink = sink + thread_cpu_seconds(); });
  r.baseline_task = time_op(iterations, batch, [&] { noop(); });
  r.instrumented_task = time_op(iterations, batch, [&] {
    const double start = wall_seconds();
    const double c0 = thread_cpu_seconds();
    noop();
    const double c1 = thread_cpu_seconds();
    const double end = wall_seconds();
    agg.record(TaskTiming{std::max(0.0, c1 - c0), std::max(end - start, 1e-9), 0.0});
  });
  r.overhead_median_ns = std::max(0.0, r.instrumented_task.median_ns - r.baseline_task.median_ns);
  r.fraction_of_10ms = r.overhead_median_ns / 10e6;
  return r;
}

}  // namespace betapool
