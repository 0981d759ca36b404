#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "betapool/blocking_curve.hpp"

namespace betapool {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ControllerConfig {
  std::size_t n_min = 4;
  std::size_t n_max = 128;
  double beta_thresh = 0.3;
  double alpha = 0.2;
  std::uint32_t hysteresis = 3;
  double interval = 0.5;  // seconds between controller ticks

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

enum class DecisionKind { ScaleUp, ScaleDown, Hold, Veto };

std::string_view to_string(DecisionKind kind);

struct Decision {
  DecisionKind kind = DecisionKind::Hold;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
};

/// Scalar controller state (N, beta_ewma, c_up) plus the veto tally.
///
/// A fresh state reports beta_ewma = 0.5 but is not yet `primed`; the first
/// available sample replaces the estimate outright instead of being blended
/// with the placeholder.
struct ControllerState {
  std::size_t n_current = 0;
  double beta_ewma = 0.5;
  bool primed = false;
  std::uint32_t c_up = 0;
  std::uint64_t veto_count = 0;

  static ControllerState initial(const ControllerConfig& config);
};

struct StepResult {
  ControllerState state;
  Decision decision;
};

/// One control tick. Pure: the same inputs always give the same output.
///
/// `beta_sample` is absent when no task completed during the interval; the
/// estimate is then held and only the queue-driven branches run.
StepResult controller_step(const ControllerState& state, std::size_t queue_len,
                           std::optional<double> beta_sample, const ControllerConfig& config);

/// Predicted resting thread count: min{N : B(N) <= beta_thresh} - 1 over
/// [n_min, n_max], with n_min for CPU-bound curves and n_max when B never
/// drops to the threshold.
std::size_t fixed_point(const BlockingCharacteristic& curve, const ControllerConfig& config);

}  // namespace betapool
