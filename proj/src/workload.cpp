#include "betapool/workload.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "betapool/metrics.hpp"

#if defined(__linux__)
#include <dirent.h>
#include <sched.h>
#include <unistd.h>

#include <cstdlib>
#endif

namespace betapool {
namespace {

std::atomic<std::uint64_t> g_spin_sink{0};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view to_string(GateMode mode) {
  return mode == GateMode::EmulatedGil ? "gil" : "none";
}

GateMode parse_gate_mode(std::string_view text) {
  if (text == "gil" || text == "on" || text == "emulated") return GateMode::EmulatedGil;
  if (text == "none" || text == "off") return GateMode::None;
  throw std::invalid_argument("unknown gate mode: " + std::string(text));
}

void WorkloadSpec::validate() const {
  if (!(t_cpu_ms >= 0.0) || !(t_io_ms >= 0.0)) {
    throw std::invalid_argument("workload phases must be non-negative");
  }
  if (t_cpu_ms == 0.0 && t_io_ms == 0.0) {
    throw std::invalid_argument("workload needs a CPU or an I/O phase");
  }
  if (!(jitter_fraction >= 0.0 && jitter_fraction <= 0.5)) {
    throw std::invalid_argument("jitter fraction must lie in [0, 0.5]");
  }
}

std::vector<WorkloadSpec> profile_catalog() {
  // CPU work is expressed in milliseconds at 1000 loop iterations per ms;
  // the phase ratios follow the workload-sweep rows.
  auto make = [](std::string name, double cpu, double io) {
    WorkloadSpec s;
    s.profile_name = std::move(name);
    s.t_cpu_ms = cpu;
    s.t_io_ms = io;
    return s;
  };
  return {
      make("mixed-default", 10.0, 50.0), make("io-heavy", 0.1, 1.0),
      make("io-dominant", 0.5, 0.5),     make("balanced", 1.0, 0.1),
      make("cpu-leaning", 2.0, 0.05),    make("cpu-heavy", 5.0, 0.01),
      make("cpu-dominant", 10.0, 0.001),
  };
}

WorkloadSpec find_profile(std::string_view name) {
  for (auto& spec : profile_catalog()) {
    if (spec.profile_name == name) return spec;
  }
  throw std::invalid_argument("unknown workload profile: " + std::string(name));
}

std::uint64_t SpinCalibration::iterations_for(double ms) const {
  if (ms <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::llround(ms * iterations_per_ms));
}

std::uint64_t spin(std::uint64_t iterations) {
  std::uint64_t acc = 0x9E3779B97F4A7C15ULL;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    acc ^= acc << 13;
    acc ^= acc >> 7;
    acc ^= acc << 17;
    acc += i;
  }
  g_spin_sink.fetch_xor(acc, std::memory_order_relaxed);
  return acc;
}

SpinCalibration calibrate_spin(const CalibrationOptions& options) {
  if (options.batches < 3 || options.attempts < 1 || !(options.batch_ms > 0.0)) {
    throw CalibrationError("calibration options out of range");
  }
  // Size a batch so one takes roughly batch_ms of CPU time.
  std::uint64_t probe = 1 << 14;
  double probe_ms = 0.0;
  for (;;) {
    const double c0 = thread_cpu_seconds();
    spin(probe);
    probe_ms = (thread_cpu_seconds() - c0) * 1e3;
    if (probe_ms >= 1.0 || probe > (std::uint64_t{1} << 40)) break;
    probe *= 2;
  }
  if (!(probe_ms > 0.0)) throw CalibrationError("CPU clock did not advance during spin");
  const auto batch_iters = static_cast<std::uint64_t>(
      std::max(1.0, static_cast<double>(probe) * options.batch_ms / probe_ms));

  double best_spread = 0.0;
  for (int attempt = 0; attempt < options.attempts; ++attempt) {
    std::vector<double> rates;
    rates.reserve(static_cast<std::size_t>(options.batches));
    for (int b = 0; b < options.batches; ++b) {
      const double c0 = thread_cpu_seconds();
      spin(batch_iters);
      const double ms = (thread_cpu_seconds() - c0) * 1e3;
      if (ms > 0.0) rates.push_back(static_cast<double>(batch_iters) / ms);
    }
    if (rates.size() < 3) continue;
    const double med = median_of(rates);
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    const double spread = (*hi - *lo) / med;
    if (spread <= options.max_spread) {
      return {med, spread};
    }
    best_spread = attempt == 0 ? spread : std::min(best_spread, spread);
  }
  throw CalibrationError("spin calibration unstable: spread " + std::to_string(best_spread) +
                         " exceeds " + std::to_string(options.max_spread));
}

ExclusionGate::ExclusionGate(std::chrono::microseconds switch_interval)
    : switch_interval_(switch_interval) {
  if (switch_interval_.count() <= 0) {
    throw std::invalid_argument("gate switch interval must be positive");
  }
}

bool ExclusionGate::acquire(const std::atomic<bool>* cancel) {
  std::unique_lock lock(mutex_);
  while (held_) {
    if (cancel && cancel->load(std::memory_order_relaxed)) return false;
    cv_.wait_for(lock, switch_interval_);
    if (held_) futile_wakeups_.fetch_add(1, std::memory_order_relaxed);
  }
  held_ = true;
  lock.unlock();

  const int now = occupancy_.fetch_add(1) + 1;
  int prev = max_occupancy_.load();
  while (now > prev && !max_occupancy_.compare_exchange_weak(prev, now)) {
  }
  acquisitions_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

void ExclusionGate::release() {
  occupancy_.fetch_sub(1);
  {
    std::lock_guard lock(mutex_);
    held_ = false;
  }
  cv_.notify_one();
}

void ExclusionGate::reset_counters() {
  max_occupancy_.store(occupancy_.load());
  acquisitions_.store(0);
  futile_wakeups_.store(0);
}

ExclusionGate& ExclusionGate::global() {
  static ExclusionGate gate;
  return gate;
}

TaskPlan plan_task(const WorkloadSpec& spec, const SpinCalibration& calibration,
                   std::mt19937_64& rng) {
  double cpu_ms = spec.t_cpu_ms;
  double io_ms = spec.t_io_ms;
  if (spec.jitter_fraction > 0.0) {
    std::uniform_real_distribution<double> factor(1.0 - spec.jitter_fraction,
                                                  1.0 + spec.jitter_fraction);
    cpu_ms *= factor(rng);
    io_ms *= factor(rng);
  }
  TaskPlan plan;
  plan.cpu_ms = cpu_ms;
  plan.io_ms = io_ms;
  plan.cpu_iterations = calibration.iterations_for(cpu_ms);
  plan.io = std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(io_ms * 1e6)));
  return plan;
}

void execute_task(const TaskPlan& plan, GateMode gate_mode, const WorkloadContext& ctx) {
  const std::atomic<bool>* cancel = ctx.cancel.get();
  auto cancelled = [cancel] { return cancel && cancel->load(std::memory_order_relaxed); };

  if (plan.cpu_iterations > 0) {
    if (gate_mode == GateMode::EmulatedGil) {
      ExclusionGate& gate = ctx.gate ? *ctx.gate : ExclusionGate::global();
      if (!gate.acquire(cancel)) return;
      spin(plan.cpu_iterations);
      gate.release();
    } else {
      if (cancelled()) return;
      spin(plan.cpu_iterations);
    }
  }
  if (plan.io.count() > 0 && !cancelled()) {
    std::this_thread::sleep_for(plan.io);
  }
}

std::function<void()> make_task(const WorkloadSpec& spec, std::mt19937_64& rng,
                                const WorkloadContext& ctx) {
  const TaskPlan plan = plan_task(spec, ctx.calibration, rng);
  if (plan.cpu_iterations > 0 && ctx.calibration.iterations_per_ms <= 0.0) {
    throw std::invalid_argument("make_task: spin calibration required for a CPU phase");
  }
  return [plan, mode = spec.gate, ctx] { execute_task(plan, mode, ctx); };
}

TaskFactory::TaskFactory(WorkloadSpec spec, WorkloadContext ctx)
    : spec_(std::move(spec)), ctx_(std::move(ctx)), rng_(spec_.seed) {
  spec_.validate();
  if (spec_.t_cpu_ms > 0.0 && ctx_.calibration.iterations_per_ms <= 0.0) {
    throw std::invalid_argument("TaskFactory: spin calibration required for a CPU phase");
  }
}

TaskPlan TaskFactory::next_plan() { return plan_task(spec_, ctx_.calibration, rng_); }

std::function<void()> TaskFactory::next_task() { return make_task(spec_, rng_, ctx_); }

#if defined(__linux__)

std::size_t visible_cores() {
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof(set), &set) != 0) {
    return std::max(1u, std::thread::hardware_concurrency());
  }
  return static_cast<std::size_t>(CPU_COUNT(&set));
}

AffinityResult set_core_affinity(std::size_t cores) {
  AffinityResult result;
  if (cores < 1) throw std::invalid_argument("set_core_affinity: need at least one core");

  cpu_set_t current;
  CPU_ZERO(&current);
  if (sched_getaffinity(0, sizeof(current), &current) != 0) {
    result.warning = "sched_getaffinity failed; running without affinity";
    return result;
  }
  result.available = static_cast<std::size_t>(CPU_COUNT(&current));
  if (cores > result.available) {
    result.warning = "requested " + std::to_string(cores) + " cores but only " +
                     std::to_string(result.available) + " are available; clamped";
    cores = result.available;
  }

  cpu_set_t wanted;
  CPU_ZERO(&wanted);
  std::size_t taken = 0;
  for (int cpu = 0; cpu < CPU_SETSIZE && taken < cores; ++cpu) {
    if (CPU_ISSET(cpu, &current)) {
      CPU_SET(cpu, &wanted);
      ++taken;
    }
  }

  // Apply to every existing thread of the process, not only the caller.
  bool ok = sched_setaffinity(0, sizeof(wanted), &wanted) == 0;
  if (DIR* dir = opendir("/proc/self/task")) {
    while (dirent* entry = readdir(dir)) {
      const int tid = std::atoi(entry->d_name);
      if (tid > 0) sched_setaffinity(tid, sizeof(wanted), &wanted);
    }
    closedir(dir);
  }
  if (!ok) {
    if (!result.warning.empty()) result.warning += "; ";
    result.warning += "sched_setaffinity refused; running without affinity";
    return result;
  }
  result.applied = true;
  result.cores = taken;
  return result;
}

#else

std::size_t visible_cores() { return std::max(1u, std::thread::hardware_concurrency()); }

AffinityResult set_core_affinity(std::size_t cores) {
  if (cores < 1) throw std::invalid_argument("set_core_affinity: need at least one core");
  AffinityResult result;
  result.available = visible_cores();
  result.warning = "core affinity is not supported on this platform; gate-only run";
  return result;
}

#endif

}  // namespace betapool
