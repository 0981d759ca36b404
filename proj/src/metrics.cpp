#include "betapool/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#if defined(__unix__) || defined(__APPLE__)
#include <time.h>
#endif

namespace betapool {

double blocking_ratio(const TaskTiming& timing) {
  if (!(timing.wall_time > 0.0)) {
    throw MetricError("blocking_ratio: wall_time must be positive, got " +
                      std::to_string(timing.wall_time));
  }
  // Per-thread CPU and wall clocks are not synchronized; cpu may slightly
  // exceed wall on short tasks.
  return std::clamp(1.0 - timing.cpu_time / timing.wall_time, 0.0, 1.0);
}

IntervalAggregate aggregate_record(IntervalAggregate agg, const TaskTiming& timing) {
  const double beta = blocking_ratio(timing);
  agg.sum_wall += timing.wall_time;
  agg.sum_weighted_beta += timing.wall_time * beta;
  agg.task_count += 1;
  return agg;
}

std::optional<double> weighted_beta(const IntervalAggregate& agg) {
  if (agg.task_count == 0 || !(agg.sum_wall > 0.0)) {
    return std::nullopt;
  }
  return std::clamp(agg.sum_weighted_beta / agg.sum_wall, 0.0, 1.0);
}

void ConcurrentAggregate::record(const TaskTiming& timing) {
  const double beta = blocking_ratio(timing);
  std::lock_guard lock(mutex_);
  agg_.sum_wall += timing.wall_time;
  agg_.sum_weighted_beta += timing.wall_time * beta;
  agg_.task_count += 1;
}

IntervalAggregate ConcurrentAggregate::snapshot_reset() {
  std::lock_guard lock(mutex_);
  return std::exchange(agg_, IntervalAggregate{});
}

IntervalAggregate ConcurrentAggregate::peek() const {
  std::lock_guard lock(mutex_);
  return agg_;
}

EwmaFilter::EwmaFilter(double alpha, double initial) : alpha_(alpha), value_(initial) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw MetricError("EwmaFilter: alpha must lie in (0, 1]");
  }
  if (!(initial >= 0.0 && initial <= 1.0)) {
    throw MetricError("EwmaFilter: initial value must lie in [0, 1]");
  }
}

double EwmaFilter::update(double sample) {
  if (!(sample >= 0.0 && sample <= 1.0)) {
    throw MetricError("EwmaFilter: sample outside [0, 1]: " + std::to_string(sample));
  }
  value_ = alpha_ * sample + (1.0 - alpha_) * value_;
  return value_;
}

double ewma_time_constant(double alpha, double interval) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw MetricError("ewma_time_constant: alpha must lie in (0, 1)");
  }
  if (!(interval > 0.0)) {
    throw MetricError("ewma_time_constant: interval must be positive");
  }
  return -interval / std::log1p(-alpha);
}

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

#if defined(CLOCK_THREAD_CPUTIME_ID)

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

bool thread_cpu_clock_available() {
  timespec ts{};
  return clock_getres(CLOCK_THREAD_CPUTIME_ID, &ts) == 0 &&
         clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) == 0;
}

#else

double thread_cpu_seconds() { return 0.0; }
bool thread_cpu_clock_available() { return false; }

#endif

}  // namespace betapool
