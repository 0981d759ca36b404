#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace betapool {

enum class GateMode { EmulatedGil, None };

std::string_view to_string(GateMode mode);
GateMode parse_gate_mode(std::string_view text);

/// Synthetic mixed task: a CPU phase (optionally under the global gate)
/// followed by an off-CPU I/O phase.
struct WorkloadSpec {
  double t_cpu_ms = 10.0;
  double t_io_ms = 50.0;
  GateMode gate = GateMode::EmulatedGil;
  double jitter_fraction = 0.0;  // uniform multiplicative, in [0, 0.5]
  std::uint64_t seed = 1;
  std::string profile_name = "mixed-default";

  void validate() const;
};

/// Named presets spanning I/O-heavy to CPU-dominant phase ratios, plus the
/// 10 ms / 50 ms mixed default.
std::vector<WorkloadSpec> profile_catalog();

/// Looks up a preset by name; throws std::invalid_argument if unknown.
WorkloadSpec find_profile(std::string_view name);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpinCalibration {
  double iterations_per_ms = 0.0;
  double calibration_error = 0.0;  // (max - min) / median across batches

  std::uint64_t iterations_for(double ms) const;
};

struct CalibrationOptions {
  int batches = 9;
  double batch_ms = 5.0;
  int attempts = 5;
  double max_spread = 0.10;
};

/// Integer arithmetic spin. The result is published to a process-wide sink so
/// the loop cannot be removed.
std::uint64_t spin(std::uint64_t iterations);

/// Measures spin iterations per CPU millisecond over repeated timed batches.
/// Throws CalibrationError when no attempt reaches the spread bound.
SpinCalibration calibrate_spin(const CalibrationOptions& options = {});

/// Process-wide mutual exclusion standing in for an interpreter lock.
///
/// Waiters park on a condition variable with a timeout of `switch_interval`
/// and re-check the gate on every wakeup, as a GIL waiter does. With many
/// waiters the futile wake/re-park cycles consume CPU that the holder needs,
/// which is what produces the throughput cliff at high thread counts.
class ExclusionGate {
 public:
  static constexpr std::chrono::microseconds kDefaultSwitchInterval{5000};

  explicit ExclusionGate(std::chrono::microseconds switch_interval = kDefaultSwitchInterval);

  ExclusionGate(const ExclusionGate&) = delete;
  ExclusionGate& operator=(const ExclusionGate&) = delete;

  /// Blocks until the gate is held. Returns false without acquiring if
  /// `cancel` becomes true while waiting.
  bool acquire(const std::atomic<bool>* cancel = nullptr);
  void release();

  std::chrono::microseconds switch_interval() const { return switch_interval_; }
  int occupancy() const { return occupancy_.load(); }
  int max_occupancy() const { return max_occupancy_.load(); }
  std::uint64_t acquisitions() const { return acquisitions_.load(); }
  std::uint64_t futile_wakeups() const { return futile_wakeups_.load(); }
  void reset_counters();

  static ExclusionGate& global();

 private:
  std::chrono::microseconds switch_interval_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool held_ = false;
  std::atomic<int> occupancy_{0};
  std::atomic<int> max_occupancy_{0};
  std::atomic<std::uint64_t> acquisitions_{0};
  std::atomic<std::uint64_t> futile_wakeups_{0};
};

/// Concrete phase lengths for one task after jitter.
struct TaskPlan {
  std::uint64_t cpu_iterations = 0;
  std::chrono::nanoseconds io{0};
  double cpu_ms = 0.0;
  double io_ms = 0.0;

  friend bool operator==(const TaskPlan&, const TaskPlan&) = default;
};

struct WorkloadContext {
  SpinCalibration calibration;
  ExclusionGate* gate = nullptr;  // required when the spec uses the gate
  // Set by a harness to end a run early: pending gate waits give up and the
  // remaining phases are skipped.
  std::shared_ptr<std::atomic<bool>> cancel;
};

/// Draws phase lengths from `rng` according to the spec's jitter.
TaskPlan plan_task(const WorkloadSpec& spec, const SpinCalibration& calibration,
                   std::mt19937_64& rng);

/// Runs one planned task: gate acquire, CPU spin, gate release, sleep.
void execute_task(const TaskPlan& plan, GateMode gate_mode, const WorkloadContext& ctx);

/// Returns an executable work item for the next task drawn from `rng`.
std::function<void()> make_task(const WorkloadSpec& spec, std::mt19937_64& rng,
                                const WorkloadContext& ctx);

/// Seeded task source; identical seeds give identical plan sequences.
class TaskFactory {
 public:
  TaskFactory(WorkloadSpec spec, WorkloadContext ctx);

  TaskPlan next_plan();
  std::function<void()> next_task();
  const WorkloadSpec& spec() const { return spec_; }

 private:
  WorkloadSpec spec_;
  WorkloadContext ctx_;
  std::mt19937_64 rng_;
};

struct AffinityResult {
  bool applied = false;
  std::size_t cores = 0;       // cores the process is restricted to when applied
  std::size_t available = 0;   // cores visible before the call
  std::string warning;
};

/// Best-effort restriction of the calling thread (and threads it creates
/// afterwards) to the first `cores` allowed CPUs.
AffinityResult set_core_affinity(std::size_t cores);

/// Number of CPUs the process may currently run on.
std::size_t visible_cores();

}  // namespace betapool
