#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>

namespace betapool {

/// Raised for timings or samples that violate the metric preconditions.
class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-task timing captured by the pool instrumentor. All values in seconds.
///
/// `wall_time` spans task execution only; time spent queued is tracked
/// separately in `queue_latency` so that scheduling delay does not read as
/// blocking.
struct TaskTiming {
  double cpu_time = 0.0;
  double wall_time = 0.0;
  double queue_latency = 0.0;
};

/// 1 - cpu/wall, clamped to [0, 1]. Throws MetricError if wall_time <= 0.
double blocking_ratio(const TaskTiming& timing);

/// Running sums for the wall-time-weighted blocking ratio of one interval.
struct IntervalAggregate {
  double sum_wall = 0.0;
  double sum_weighted_beta = 0.0;
  std::uint64_t task_count = 0;

  bool empty() const { return task_count == 0; }
  friend bool operator==(const IntervalAggregate&, const IntervalAggregate&) = default;
};

/// Adds one completed task. Constant time.
IntervalAggregate aggregate_record(IntervalAggregate agg, const TaskTiming& timing);

/// Σ(wall·β) / Σwall, or nullopt for an interval with no completions.
std::optional<double> weighted_beta(const IntervalAggregate& agg);

/// Thread-safe interval aggregate shared by pool workers and the monitor.
/// `record` and `snapshot_reset` are linearizable: each recorded task lands in
/// exactly one snapshot.
class ConcurrentAggregate {
 public:
  void record(const TaskTiming& timing);
  IntervalAggregate snapshot_reset();
  IntervalAggregate peek() const;

 private:
  mutable std::mutex mutex_;
  IntervalAggregate agg_;
};

/// Exponentially weighted moving average over samples in [0, 1].
class EwmaFilter {
 public:
  EwmaFilter(double alpha, double initial);

  /// value <- alpha*sample + (1-alpha)*value. Throws MetricError if the
  /// sample lies outside [0, 1].
  double update(double sample);

  double value() const { return value_; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  double value_;
};

/// Exact EWMA time constant -interval / ln(1 - alpha), in seconds.
/// Throws MetricError unless 0 < alpha < 1 and interval > 0.
double ewma_time_constant(double alpha, double interval);

// Clocks used by the instrumentor.

/// Monotonic wall clock, seconds since an arbitrary epoch.
double wall_seconds();

/// CPU time consumed by the calling thread, in seconds.
double thread_cpu_seconds();

/// True when the platform exposes a usable per-thread CPU clock.
bool thread_cpu_clock_available();

}  // namespace betapool
