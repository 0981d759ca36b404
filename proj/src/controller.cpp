#include "betapool/controller.hpp"

#include <algorithm>
#include <string>

namespace betapool {

void ControllerConfig::validate() const {
  if (n_min < 1) throw ConfigError("n_min must be at least 1");
  if (n_max < n_min) throw ConfigError("n_max must be >= n_min");
  if (!(beta_thresh > 0.0 && beta_thresh < 1.0)) {
    throw ConfigError("beta_thresh must lie in (0, 1)");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (hysteresis < 1) throw ConfigError("hysteresis must be at least 1");
  if (!(interval > 0.0)) throw ConfigError("interval must be positive");
}

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::ScaleUp:
      return "scale_up";
    case DecisionKind::ScaleDown:
      return "scale_down";
    case DecisionKind::Hold:
      return "hold";
    case DecisionKind::Veto:
      return "veto";
  }
  return "unknown";
}

ControllerState ControllerState::initial(const ControllerConfig& config) {
  ControllerState s;
  s.n_current = config.n_min;
  return s;
}

StepResult controller_step(const ControllerState& state, std::size_t queue_len,
                           std::optional<double> beta_sample, const ControllerConfig& config) {
  ControllerState next = state;
  next.n_current = std::clamp(next.n_current, config.n_min, config.n_max);
  Decision decision{DecisionKind::Hold, next.n_current, next.n_current};

  if (beta_sample) {
    const double sample = std::clamp(*beta_sample, 0.0, 1.0);
    if (next.primed) {
      next.beta_ewma = config.alpha * sample + (1.0 - config.alpha) * next.beta_ewma;
    } else {
      next.beta_ewma = sample;
      next.primed = true;
    }
  }

  if (queue_len > 0) {
    if (next.beta_ewma > config.beta_thresh) {
      next.c_up += 1;
      if (next.c_up >= config.hysteresis) {
        next.c_up = 0;
        if (next.n_current < config.n_max) {
          next.n_current += 1;
          decision.kind = DecisionKind::ScaleUp;
        }
      }
    } else {
      decision.kind = DecisionKind::Veto;
      next.c_up = 0;
      next.veto_count += 1;
    }
  } else if (next.n_current > config.n_min) {
    // c_up is deliberately left as is: only ScaleUp and Veto reset it.
    next.n_current -= 1;
    decision.kind = DecisionKind::ScaleDown;
  }

  decision.n_after = next.n_current;
  return {next, decision};
}

std::size_t fixed_point(const BlockingCharacteristic& curve, const ControllerConfig& config) {
  if (!curve.defined_on(config.n_min, config.n_max)) {
    throw CurveError("fixed_point: blocking curve not defined on [" +
                     std::to_string(config.n_min) + ", " + std::to_string(config.n_max) + "]");
  }
  for (std::size_t n = config.n_min; n <= config.n_max; ++n) {
    if (curve.at(n) <= config.beta_thresh) {
      return n == config.n_min ? config.n_min : n - 1;
    }
  }
  return config.n_max;
}

}  // namespace betapool
