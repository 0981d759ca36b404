#include "betapool/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace betapool {

double utilization(const UtilizationModel& model, double n) {
  if (!(n >= 1.0)) throw std::domain_error("utilization: thread count must be >= 1");
  if (!(model.lambda_rate > 0.0) || !(model.mu_rate > 0.0)) {
    throw std::domain_error("utilization: rates must be positive");
  }
  return model.lambda_rate / (model.lambda_rate + (n - 1.0) * model.mu_rate);
}

LoadSchedule LoadSchedule::sustained() { return {}; }

LoadSchedule LoadSchedule::from_lengths(std::vector<std::size_t> lengths) {
  if (lengths.empty()) throw std::invalid_argument("load schedule needs at least one entry");
  LoadSchedule s;
  s.lengths_ = std::move(lengths);
  return s;
}

std::size_t LoadSchedule::at(std::size_t step) const {
  if (lengths_.empty()) return 1;
  return lengths_[std::min(step, lengths_.size() - 1)];
}

Trajectory simulate_controller(const BlockingCharacteristic& curve, const ControllerConfig& config,
                               std::size_t steps, const LoadSchedule& load,
                               std::optional<NoiseSpec> noise) {
  config.validate();
  if (!curve.defined_on(config.n_min, config.n_max)) {
    throw CurveError("simulate_controller: blocking curve not defined on [" +
                     std::to_string(config.n_min) + ", " + std::to_string(config.n_max) + "]");
  }
  std::mt19937_64 rng(noise ? noise->seed : 0);
  std::normal_distribution<double> gauss(0.0, noise && noise->stddev > 0.0 ? noise->stddev : 1.0);
  const bool noisy = noise && noise->stddev > 0.0;

  Trajectory traj;
  traj.n_start = config.n_min;
  traj.points.reserve(steps);
  ControllerState state = ControllerState::initial(config);
  for (std::size_t k = 0; k < steps; ++k) {
    double sample = curve.at(state.n_current);
    if (noisy) sample += gauss(rng);
    sample = std::clamp(sample, 0.0, 1.0);
    const std::size_t q = load.at(k);
    const StepResult r = controller_step(state, q, sample, config);
    state = r.state;
    traj.points.push_back({k, state.n_current, state.beta_ewma, r.decision.kind, q, sample});
  }
  return traj;
}

std::optional<MonotonicityViolation> verify_monotonicity(const Trajectory& trajectory,
                                                         const LoadSchedule& load,
                                                         std::uint32_t hysteresis) {
  const auto& pts = trajectory.points;
  std::size_t i = 0;
  while (i < pts.size()) {
    if (load.at(pts[i].step) == 0) {
      ++i;
      continue;
    }
    // Maximal run [i, j) of steps with queued work.
    std::size_t j = i;
    while (j < pts.size() && load.at(pts[j].step) > 0) ++j;
    if (j - i > hysteresis) {
      std::size_t prev = i == 0 ? trajectory.n_start : pts[i - 1].n;
      for (std::size_t k = i; k < j; ++k) {
        if (pts[k].n < prev) return MonotonicityViolation{pts[k].step, prev, pts[k].n};
        prev = pts[k].n;
      }
    }
    i = j;
  }
  return std::nullopt;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = "step,n,beta_ewma,decision\n";
  char buf[96];
  for (const auto& p : trajectory.points) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,", p.step, p.n, p.beta_ewma);
    out += buf;
    out += to_string(p.decision);
    out += '\n';
  }
  return out;
}

}  // namespace betapool
