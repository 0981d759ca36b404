#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "betapool/controller.hpp"
#include "betapool/metrics.hpp"

namespace betapool {

/// Submission refused because the pool is shut down (also delivered through
/// handles of queued tasks discarded by an immediate shutdown).
class PoolRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Submission refused because a bounded queue is full.
class QueueFull : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Adaptive {};
struct StaticFixed {
  std::size_t threads = 1;
};
struct QueueDepthScaler {
  std::size_t min_threads = 4;
  std::size_t max_threads = 256;
};
using PoolMode = std::variant<Adaptive, StaticFixed, QueueDepthScaler>;

std::string describe(const PoolMode& mode);

/// Timing of a finished task together with its queue timestamps, handed to
/// `PoolConfig::on_complete` on the worker thread.
struct CompletionRecord {
  TaskTiming timing;
  double enqueued_at = 0.0;   // wall_seconds() at submit
  double completed_at = 0.0;  // wall_seconds() after the task body returned

  double latency() const { return completed_at - enqueued_at; }
};

struct PoolConfig {
  ControllerConfig controller;
  PoolMode mode = Adaptive{};
  std::optional<std::size_t> queue_capacity;  // unbounded when empty
  std::function<void(const CompletionRecord&)> on_complete;
  bool start_monitor = true;  // when false, drive the loop with monitor_tick()

  void validate() const;
};

struct PoolStatus {
  std::size_t live_workers = 0;
  std::size_t target_workers = 0;
  std::size_t queue_len = 0;
  std::uint64_t completed = 0;
  double current_beta_ewma = 0.5;
  std::uint64_t veto_count = 0;
};

struct DecisionRecord {
  std::uint64_t tick = 0;
  double time = 0.0;  // seconds since pool construction
  std::size_t queue_len = 0;
  std::optional<double> beta_sample;
  double beta_ewma = 0.0;
  Decision decision;
};

/// Baseline that sizes the pool from queue depth alone: +1 while work is
/// queued, -1 when the queue is empty, within [min_threads, max_threads].
Decision queue_depth_scaler_step(const PoolStatus& status, const QueueDepthScaler& bounds);

template <class T>
struct TaskOutcome {
  T value;
  TaskTiming timing;
};

template <class T>
class TaskHandle {
 public:
  explicit TaskHandle(std::future<TaskOutcome<T>> future) : future_(std::move(future)) {}

  /// Blocks for the result; rethrows whatever the task threw.
  TaskOutcome<T> get() { return future_.get(); }
  void wait() const { future_.wait(); }
  template <class Rep, class Period>
  std::future_status wait_for(const std::chrono::duration<Rep, Period>& d) const {
    return future_.wait_for(d);
  }

 private:
  std::future<TaskOutcome<T>> future_;
};

enum class ShutdownMode { Drain, Immediate };

/// Resizable FIFO worker pool. Each task is timed (per-thread CPU clock and
/// monotonic wall clock around execution) and folded into an interval
/// aggregate that the monitor loop turns into blocking-ratio samples.
///
/// In Adaptive and QueueDepthScaler modes a monitor thread ticks every
/// `controller.interval` seconds and resizes the pool one thread at a time.
/// Shrinking is cooperative: surplus workers exit after their current task.
class WorkerPool {
 public:
  static constexpr std::size_t kMaxThreads = 16384;

  explicit WorkerPool(PoolConfig config);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  /// Enqueues `fn`. Throws PoolRejected after shutdown and QueueFull when a
  /// bounded queue is at capacity. `fn` must be copy-constructible.
  template <class F>
  auto submit(F&& fn) {
    using R = std::invoke_result_t<std::decay_t<F>&>;
    using V = std::conditional_t<std::is_void_v<R>, std::monostate, R>;

    auto promise = std::make_shared<std::promise<TaskOutcome<V>>>();
    auto slot = std::make_shared<std::optional<V>>();
    TaskHandle<V> handle(promise->get_future());

    Job job;
    job.body = [fn = std::forward<F>(fn), slot]() mutable {
      if constexpr (std::is_void_v<R>) {
        fn();
        slot->emplace();
      } else {
        slot->emplace(fn());
      }
    };
    job.finish = [promise, slot](const TaskTiming& timing, std::exception_ptr error) {
      if (error) {
        promise->set_exception(error);
      } else {
        promise->set_value(TaskOutcome<V>{std::move(**slot), timing});
      }
    };
    enqueue(std::move(job));
    return handle;
  }

  /// Sets the worker target, clamped to the mode's bounds (a warning is
  /// recorded when clamping). Returns the effective target.
  std::size_t resize(std::size_t target);

  /// One monitor iteration: read queue length, snapshot-reset the interval
  /// aggregate, decide, resize. Called by the monitor thread every interval.
  Decision monitor_tick();

  PoolStatus status() const;
  ControllerState controller_state() const;
  std::vector<DecisionRecord> decision_log() const;
  std::vector<std::string> warnings() const;
  const PoolConfig& config() const { return config_; }

  /// Stops accepting work. Drain runs every queued task first; Immediate
  /// discards queued tasks (their handles fail with PoolRejected). In-flight
  /// tasks always finish. Idempotent.
  void shutdown(ShutdownMode mode = ShutdownMode::Drain);

 private:
  struct Job {
    std::function<void()> body;
    std::function<void(const TaskTiming&, std::exception_ptr)> finish;
    double enqueued_at = 0.0;
  };

  void enqueue(Job job);
  void worker_main(std::size_t id);
  void monitor_main();
  void spawn_locked(std::size_t count);
  void reap_retired();
  std::size_t upper_bound() const;
  void warn(std::string message);

  PoolConfig config_;
  const double created_at_;

  mutable std::mutex mutex_;
  std::condition_variable work_cv_;
  std::deque<Job> queue_;
  std::unordered_map<std::size_t, std::thread> workers_;
  std::vector<std::size_t> retired_;
  std::size_t next_worker_id_ = 0;
  bool accepting_ = true;
  bool stopping_ = false;

  std::atomic<std::size_t> live_{0};
  std::atomic<std::size_t> target_{0};
  std::atomic<std::size_t> queue_len_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<double> beta_ewma_{0.5};
  std::atomic<std::uint64_t> veto_count_{0};

  ConcurrentAggregate aggregate_;

  mutable std::mutex control_mutex_;
  ControllerState controller_;
  std::uint64_t tick_count_ = 0;
  std::vector<DecisionRecord> log_;

  mutable std::mutex warn_mutex_;
  std::vector<std::string> warnings_;

  std::mutex monitor_mutex_;
  std::condition_variable monitor_cv_;
  bool monitor_stop_ = false;
  std::thread monitor_;

  std::once_flag shutdown_once_;
};

}  // namespace betapool
