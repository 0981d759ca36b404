#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "betapool/blocking_curve.hpp"
#include "betapool/controller.hpp"

namespace betapool {

/// Gate acquisition rate (lambda) and release rate (mu), both per second.
struct UtilizationModel {
  double lambda_rate = 1.0;
  double mu_rate = 1.0;
};

/// lambda / (lambda + (n - 1) * mu). Throws std::domain_error for n < 1 or
/// non-positive rates.
double utilization(const UtilizationModel& model, double n);

/// Queue length presented to the controller at each step. Sustained load
/// keeps one task queued forever; a schedule repeats its last entry once
/// exhausted.
class LoadSchedule {
 public:
  static LoadSchedule sustained();
  static LoadSchedule from_lengths(std::vector<std::size_t> lengths);

  std::size_t at(std::size_t step) const;
  bool is_sustained() const { return lengths_.empty(); }

 private:
  std::vector<std::size_t> lengths_;
};

struct NoiseSpec {
  double stddev = 0.0;
  std::uint64_t seed = 1;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  std::size_t n = 0;  // thread count after this step's decision
  double beta_ewma = 0.0;
  DecisionKind decision = DecisionKind::Hold;
  std::size_t queue_len = 0;
  double beta_sample = 0.0;
};

struct Trajectory {
  std::size_t n_start = 0;
  std::vector<TrajectoryPoint> points;

  std::size_t terminal_n() const { return points.empty() ? n_start : points.back().n; }
};

/// Iterates controller_step from n_min, feeding clamp(B(N) + noise, 0, 1) as
/// each step's sample. Throws CurveError if `curve` does not cover
/// [n_min, n_max].
Trajectory simulate_controller(const BlockingCharacteristic& curve, const ControllerConfig& config,
                               std::size_t steps, const LoadSchedule& load,
                               std::optional<NoiseSpec> noise = std::nullopt);

struct MonotonicityViolation {
  std::size_t step = 0;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
};

/// Checks that N never decreases inside any maximal stretch of non-empty
/// queue lasting longer than `hysteresis` steps. Returns the first offending
/// step, or nullopt when the trajectory passes.
std::optional<MonotonicityViolation> verify_monotonicity(const Trajectory& trajectory,
                                                         const LoadSchedule& load,
                                                         std::uint32_t hysteresis);

/// "step,n,beta_ewma,decision" with six decimals for the estimate.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace betapool
