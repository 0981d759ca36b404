#include "betapool/pool.hpp"

#include <algorithm>
#include <chrono>
#include <system_error>

namespace betapool {

std::string describe(const PoolMode& mode) {
  return std::visit(
      [](const auto& m) -> std::string {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Adaptive>) {
          return "adaptive";
        } else if constexpr (std::is_same_v<M, StaticFixed>) {
          return "static(" + std::to_string(m.threads) + ")";
        } else {
          return "queue_depth(" + std::to_string(m.min_threads) + "," +
                 std::to_string(m.max_threads) + ")";
        }
      },
      mode);
}

void PoolConfig::validate() const {
  controller.validate();
  if (queue_capacity && *queue_capacity == 0) {
    throw ConfigError("queue capacity must be positive when bounded");
  }
  if (const auto* s = std::get_if<StaticFixed>(&mode)) {
    if (s->threads < 1 || s->threads > WorkerPool::kMaxThreads) {
      throw ConfigError("static thread count must lie in [1, " +
                        std::to_string(WorkerPool::kMaxThreads) + "]");
    }
  } else if (const auto* q = std::get_if<QueueDepthScaler>(&mode)) {
    if (q->min_threads < 1 || q->max_threads < q->min_threads ||
        q->max_threads > WorkerPool::kMaxThreads) {
      throw ConfigError("queue-depth scaler needs 1 <= min <= max");
    }
  } else if (!thread_cpu_clock_available()) {
    throw ConfigError("adaptive mode requires a per-thread CPU clock");
  }
}

Decision queue_depth_scaler_step(const PoolStatus& status, const QueueDepthScaler& bounds) {
  const std::size_t n = std::clamp(status.target_workers, bounds.min_threads, bounds.max_threads);
  Decision d{DecisionKind::Hold, n, n};
  if (status.queue_len > 0) {
    if (n < bounds.max_threads) {
      d.kind = DecisionKind::ScaleUp;
      d.n_after = n + 1;
    }
  } else if (n > bounds.min_threads) {
    d.kind = DecisionKind::ScaleDown;
    d.n_after = n - 1;
  }
  return d;
}

WorkerPool::WorkerPool(PoolConfig config)
    : config_(std::move(config)), created_at_(wall_seconds()) {
  config_.validate();

  std::size_t initial = config_.controller.n_min;
  if (const auto* s = std::get_if<StaticFixed>(&config_.mode)) {
    initial = s->threads;
  } else if (const auto* q = std::get_if<QueueDepthScaler>(&config_.mode)) {
    initial = q->min_threads;
  }
  controller_ = ControllerState::initial(config_.controller);
  controller_.n_current = initial;

  {
    std::lock_guard lock(mutex_);
    target_ = initial;
    spawn_locked(initial);
  }
  if (config_.start_monitor && !std::holds_alternative<StaticFixed>(config_.mode)) {
    monitor_ = std::thread([this] { monitor_main(); });
  }
}

WorkerPool::~WorkerPool() { shutdown(ShutdownMode::Drain); }

void WorkerPool::enqueue(Job job) {
  job.enqueued_at = wall_seconds();
  {
    std::lock_guard lock(mutex_);
    if (!accepting_) throw PoolRejected("pool is shut down");
    if (config_.queue_capacity && queue_.size() >= *config_.queue_capacity) {
      throw QueueFull("task queue is at capacity (" + std::to_string(*config_.queue_capacity) +
                      ")");
    }
    queue_.push_back(std::move(job));
    queue_len_.store(queue_.size());
  }
  work_cv_.notify_one();
}

void WorkerPool::spawn_locked(std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t id = next_worker_id_++;
    try {
      workers_.emplace(id, std::thread([this, id] { worker_main(id); }));
    } catch (const std::system_error& e) {
      warn(std::string("worker spawn failed: ") + e.what());
      break;
    }
    live_.fetch_add(1);
  }
}

void WorkerPool::worker_main(std::size_t id) {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mutex_);
      work_cv_.wait(lock, [&] {
        return stopping_ || !queue_.empty() || live_.load() > target_.load();
      });
      if (live_.load() > target_.load() || (queue_.empty() && stopping_)) {
        live_.fetch_sub(1);
        retired_.push_back(id);
        return;
      }
      job = std::move(queue_.front());
      queue_.pop_front();
      queue_len_.store(queue_.size());
    }

    const double start = wall_seconds();
    const double cpu0 = thread_cpu_seconds();
    std::exception_ptr error;
    try {
      job.body();
    } catch (...) {
      error = std::current_exception();
    }
    const double cpu1 = thread_cpu_seconds();
    const double end = wall_seconds();

    TaskTiming timing;
    timing.cpu_time = std::max(0.0, cpu1 - cpu0);
    timing.wall_time = std::max(end - start, 1e-9);
    timing.queue_latency = std::max(0.0, start - job.enqueued_at);
    aggregate_.record(timing);
    completed_.fetch_add(1);
    if (config_.on_complete) {
      config_.on_complete(CompletionRecord{timing, job.enqueued_at, end});
    }
    job.finish(timing, error);
  }
}

std::size_t WorkerPool::upper_bound() const {
  if (const auto* q = std::get_if<QueueDepthScaler>(&config_.mode)) return q->max_threads;
  if (std::holds_alternative<Adaptive>(config_.mode)) return config_.controller.n_max;
  return kMaxThreads;
}

void WorkerPool::warn(std::string message) {
  std::lock_guard lock(warn_mutex_);
  warnings_.push_back(std::move(message));
}

std::size_t WorkerPool::resize(std::size_t target) {
  const std::size_t hi = upper_bound();
  const std::size_t clamped = std::clamp<std::size_t>(target, 1, hi);
  if (clamped != target) {
    warn("resize target " + std::to_string(target) + " clamped to " + std::to_string(clamped));
  }
  {
    std::lock_guard lock(control_mutex_);
    controller_.n_current = clamped;
  }
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return target_.load();
    target_.store(clamped);
    const std::size_t live = live_.load();
    if (live < clamped) {
      spawn_locked(clamped - live);
    }
  }
  work_cv_.notify_all();
  reap_retired();
  return clamped;
}

void WorkerPool::reap_retired() {
  std::vector<std::thread> done;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t id : retired_) {
      auto it = workers_.find(id);
      if (it != workers_.end()) {
        done.push_back(std::move(it->second));
        workers_.erase(it);
      }
    }
    retired_.clear();
  }
  for (auto& t : done) t.join();
}

Decision WorkerPool::monitor_tick() {
  // Queue length is read just before the snapshot; a task completing in
  // between is counted in this interval but not reflected in Q.
  const std::size_t q = queue_len_.load();
  const IntervalAggregate snap = aggregate_.snapshot_reset();
  const std::optional<double> sample = weighted_beta(snap);

  Decision decision;
  DecisionRecord record;
  {
    std::lock_guard lock(control_mutex_);
    if (std::holds_alternative<Adaptive>(config_.mode)) {
      const StepResult r = controller_step(controller_, q, sample, config_.controller);
      controller_ = r.state;
      decision = r.decision;
    } else {
      // The baseline ignores beta; the estimate is still tracked for reports.
      if (sample) {
        controller_.beta_ewma =
            controller_.primed ? config_.controller.alpha * *sample +
                                     (1.0 - config_.controller.alpha) * controller_.beta_ewma
                               : *sample;
        controller_.primed = true;
      }
      PoolStatus s;
      s.queue_len = q;
      s.target_workers = target_.load();
      if (const auto* bounds = std::get_if<QueueDepthScaler>(&config_.mode)) {
        decision = queue_depth_scaler_step(s, *bounds);
      } else {
        decision = Decision{DecisionKind::Hold, s.target_workers, s.target_workers};
      }
      controller_.n_current = decision.n_after;
    }
    beta_ewma_.store(controller_.beta_ewma);
    veto_count_.store(controller_.veto_count);

    record.tick = tick_count_++;
    record.time = wall_seconds() - created_at_;
    record.queue_len = q;
    record.beta_sample = sample;
    record.beta_ewma = controller_.beta_ewma;
    record.decision = decision;
    log_.push_back(record);
  }
  if (decision.n_after != target_.load()) {
    resize(decision.n_after);
  } else {
    reap_retired();
  }
  return decision;
}

void WorkerPool::monitor_main() {
  using clock = std::chrono::steady_clock;
  const auto interval = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(config_.controller.interval));
  auto next = clock::now() + interval;
  std::unique_lock lock(monitor_mutex_);
  while (!monitor_stop_) {
    if (monitor_cv_.wait_until(lock, next, [&] { return monitor_stop_; })) break;
    lock.unlock();
    monitor_tick();
    lock.lock();
    next += interval;
    const auto now = clock::now();
    if (next < now) next = now + interval;
  }
}

PoolStatus WorkerPool::status() const {
  PoolStatus s;
  s.live_workers = live_.load();
  s.target_workers = target_.load();
  s.queue_len = queue_len_.load();
  s.completed = completed_.load();
  s.current_beta_ewma = beta_ewma_.load();
  s.veto_count = veto_count_.load();
  return s;
}

ControllerState WorkerPool::controller_state() const {
  std::lock_guard lock(control_mutex_);
  return controller_;
}

std::vector<DecisionRecord> WorkerPool::decision_log() const {
  std::lock_guard lock(control_mutex_);
  return log_;
}

std::vector<std::string> WorkerPool::warnings() const {
  std::lock_guard lock(warn_mutex_);
  return warnings_;
}

void WorkerPool::shutdown(ShutdownMode mode) {
  std::call_once(shutdown_once_, [&] {
    {
      std::lock_guard lock(monitor_mutex_);
      monitor_stop_ = true;
    }
    monitor_cv_.notify_all();
    if (monitor_.joinable()) monitor_.join();

    std::deque<Job> discarded;
    {
      std::lock_guard lock(mutex_);
      accepting_ = false;
      stopping_ = true;
      if (mode == ShutdownMode::Immediate) {
        discarded.swap(queue_);
        queue_len_.store(0);
      }
    }
    work_cv_.notify_all();
    for (auto& job : discarded) {
      job.finish(TaskTiming{},
                 std::make_exception_ptr(PoolRejected("pool shut down before task ran")));
    }

    std::vector<std::thread> all;
    {
      std::lock_guard lock(mutex_);
      for (auto& [id, t] : workers_) all.push_back(std::move(t));
      workers_.clear();
      retired_.clear();
    }
    for (auto& t : all) t.join();
  });
}

}  // namespace betapool
