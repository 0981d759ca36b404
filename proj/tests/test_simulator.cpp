#include <doctest.h>

#include <random>

#include "betapool/simulator.hpp"

using namespace betapool;

namespace {

BlockingCharacteristic table(std::size_t first, std::vector<double> values) {
  std::map<std::size_t, double> m;
  for (std::size_t i = 0; i < values.size(); ++i) m[first + i] = values[i];
  return BlockingCharacteristic::from_table(m);
}

}  // namespace

TEST_CASE("utilization") {
  CHECK(utilization({3.0, 3.0}, 1) == 1.0);
  CHECK(utilization({2.0, 1.0}, 3) == doctest::Approx(0.5));
  CHECK(utilization({1.0, 1.0}, 1e6) < 1e-5);
  CHECK_THROWS_AS(utilization({1.0, 1.0}, 0.5), std::domain_error);
  CHECK_THROWS_AS(utilization({0.0, 1.0}, 2), std::domain_error);
  for (int n = 2; n < 200; ++n) CHECK(utilization({5.0, 0.7}, n) < utilization({5.0, 0.7}, n - 1));
}

TEST_CASE("load schedule repeats its tail") {
  const auto s = LoadSchedule::from_lengths({3, 0, 2});
  CHECK(s.at(0) == 3);
  CHECK(s.at(1) == 0);
  CHECK(s.at(2) == 2);
  CHECK(s.at(100) == 2);
  CHECK(LoadSchedule::sustained().at(12345) > 0);
  CHECK_THROWS_AS(LoadSchedule::from_lengths({}), std::invalid_argument);
}

TEST_CASE("step table under sustained load") {
  ControllerConfig cfg;
  cfg.n_min = 1;
  cfg.n_max = 6;
  const auto curve = table(1, {0.8, 0.8, 0.7, 0.5, 0.25, 0.2});
  const auto t = simulate_controller(curve, cfg, (cfg.n_max - cfg.n_min) * cfg.hysteresis + 40,
                                     LoadSchedule::sustained());
  // Hand trace: one ScaleUp per three ticks while the estimate stays above
  // 0.3. At N=5 the estimate decays 0.55 -> 0.49 -> 0.44 -> 0.40 and a third
  // signal fires before it reaches 0.3, so the first veto happens at N=6.
  CHECK(t.points[1].n == 1);
  CHECK(t.points[2].n == 2);
  CHECK(t.points[5].n == 3);
  CHECK(t.points[8].n == 4);
  CHECK(t.points[11].n == 5);
  CHECK(t.points[14].n == 6);
  CHECK(t.terminal_n() == 6);
  CHECK(fixed_point(curve, cfg) == 4);
  bool vetoed = false;
  for (const auto& p : t.points) {
    if (p.decision == DecisionKind::Veto) vetoed = true;
    if (vetoed) CHECK(p.decision != DecisionKind::ScaleUp);
  }
  CHECK(vetoed);
}

TEST_CASE("cpu-bound curve stays at n_min") {
  ControllerConfig cfg;
  const auto curve = table(cfg.n_min, std::vector<double>(cfg.n_max - cfg.n_min + 1, 0.2));
  const auto t = simulate_controller(curve, cfg, 500, LoadSchedule::sustained());
  for (const auto& p : t.points) {
    CHECK(p.n == cfg.n_min);
    CHECK(p.decision == DecisionKind::Veto);
  }
}

TEST_CASE("idle queue decays to n_min") {
  ControllerConfig cfg;
  cfg.n_max = 32;
  const auto curve = table(cfg.n_min, std::vector<double>(cfg.n_max - cfg.n_min + 1, 0.9));
  std::vector<std::size_t> q(120, 5);
  q.push_back(0);
  const auto load = LoadSchedule::from_lengths(q);
  const auto t = simulate_controller(curve, cfg, 200, load);
  const std::size_t peak = t.points[119].n;
  CHECK(peak > cfg.n_min + 10);
  for (std::size_t k = 120; k < 200; ++k) {
    const std::size_t expect = peak > (k - 119) + cfg.n_min ? peak - (k - 119) : cfg.n_min;
    CHECK(t.points[k].n == expect);
  }
  CHECK(t.terminal_n() == cfg.n_min);
}

TEST_CASE("trajectory invariants over random curves with noise") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    ControllerConfig cfg;
    cfg.n_min = 1 + rng() % 6;
    cfg.n_max = cfg.n_min + 5 + rng() % 60;
    cfg.hysteresis = 1 + rng() % 4;
    std::map<std::size_t, double> m;
    for (std::size_t n = cfg.n_min; n <= cfg.n_max; ++n) m[n] = unit(rng);
    const auto curve = BlockingCharacteristic::from_table(m);
    const NoiseSpec noise{0.1 * unit(rng), rng()};
    const auto t = simulate_controller(curve, cfg, 400, LoadSchedule::sustained(), noise);
    std::size_t prev = t.n_start;
    for (const auto& p : t.points) {
      REQUIRE(p.n >= cfg.n_min);
      REQUIRE(p.n <= cfg.n_max);
      REQUIRE((p.n == prev || p.n == prev + 1 || p.n + 1 == prev));
      REQUIRE(p.beta_sample >= 0.0);
      REQUIRE(p.beta_sample <= 1.0);
      prev = p.n;
    }
    CHECK_FALSE(verify_monotonicity(t, LoadSchedule::sustained(), cfg.hysteresis).has_value());
  }
}

TEST_CASE("seeded simulation is reproducible") {
  ControllerConfig cfg;
  const auto curve = BlockingCharacteristic::piecewise({0.5, 0.9, 16, 0.008}, cfg.n_min, cfg.n_max);
  const NoiseSpec noise{0.05, 1234};
  const auto a = simulate_controller(curve, cfg, 600, LoadSchedule::sustained(), noise);
  const auto b = simulate_controller(curve, cfg, 600, LoadSchedule::sustained(), noise);
  CHECK(trajectory_csv(a) == trajectory_csv(b));
  const auto c = simulate_controller(curve, cfg, 600, LoadSchedule::sustained(), NoiseSpec{0.05, 1235});
  CHECK(trajectory_csv(a) != trajectory_csv(c));
}

TEST_CASE("simulation rejects a curve that does not cover the bounds") {
  ControllerConfig cfg;
  CHECK_THROWS_AS(simulate_controller(table(4, {0.5, 0.5}), cfg, 10, LoadSchedule::sustained()),
                  CurveError);
}

TEST_CASE("monotonicity checker") {
  Trajectory t;
  t.n_start = 4;
  auto push = [&](std::size_t n) {
    t.points.push_back({t.points.size(), n, 0.5, DecisionKind::Hold, 1, 0.5});
  };
  for (std::size_t n : {4, 5, 5, 6, 7, 6, 7}) push(n);
  const auto v = verify_monotonicity(t, LoadSchedule::sustained(), 3);
  REQUIRE(v.has_value());
  CHECK(v->step == 5);
  CHECK(v->n_before == 7);
  CHECK(v->n_after == 6);

  // Decreases only while the queue is empty are allowed.
  const auto load = LoadSchedule::from_lengths({1, 1, 1, 1, 1, 0, 1});
  CHECK_FALSE(verify_monotonicity(t, load, 3).has_value());

  // A busy stretch no longer than the hysteresis is not sustained load.
  const auto brief = LoadSchedule::from_lengths({0, 0, 0, 1, 1, 1, 0});
  CHECK_FALSE(verify_monotonicity(t, brief, 3).has_value());
}

TEST_CASE("trajectory csv format") {
  Trajectory t;
  t.n_start = 4;
  t.points.push_back({0, 4, 0.5, DecisionKind::Hold, 1, 0.5});
  t.points.push_back({1, 5, 1.0 / 3.0, DecisionKind::ScaleUp, 1, 0.2});
  CHECK(trajectory_csv(t) ==
        "step,n,beta_ewma,decision\n0,4,0.500000,hold\n1,5,0.333333,scale_up\n");
}
