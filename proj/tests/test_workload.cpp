#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "betapool/metrics.hpp"
#include "betapool/pool.hpp"
#include "betapool/workload.hpp"

using namespace betapool;

namespace {

const SpinCalibration& calibration() {
  static const SpinCalibration c = calibrate_spin();
  return c;
}

TaskTiming time_inline(const std::function<void()>& fn) {
  const double w0 = wall_seconds();
  const double c0 = thread_cpu_seconds();
  fn();
  const double c1 = thread_cpu_seconds();
  const double w1 = wall_seconds();
  return {c1 - c0, w1 - w0, 0.0};
}

}  // namespace

TEST_CASE("spec validation and gate parsing") {
  WorkloadSpec s;
  CHECK_NOTHROW(s.validate());
  s.t_cpu_ms = 0;
  s.t_io_ms = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.t_cpu_ms = -1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.jitter_fraction = 0.6;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK(parse_gate_mode("gil") == GateMode::EmulatedGil);
  CHECK(parse_gate_mode("none") == GateMode::None);
  CHECK_THROWS_AS(parse_gate_mode("maybe"), std::invalid_argument);
}

TEST_CASE("profile catalog") {
  const auto mixed = find_profile("mixed-default");
  CHECK(mixed.t_cpu_ms == 10.0);
  CHECK(mixed.t_io_ms == 50.0);
  CHECK(mixed.gate == GateMode::EmulatedGil);
  const auto io = find_profile("io-heavy");
  CHECK(io.t_cpu_ms * 5 < io.t_io_ms);
  const auto cpu = find_profile("cpu-dominant");
  CHECK(cpu.t_io_ms < 0.01 * cpu.t_cpu_ms);
  for (const auto& p : profile_catalog()) CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS(find_profile("nope"), std::invalid_argument);
}

TEST_CASE("spin calibration") {
  const SpinCalibration& a = calibration();
  CHECK(a.iterations_per_ms > 0.0);
  CHECK(a.calibration_error <= 0.10);
  const SpinCalibration b = calibrate_spin();
  CHECK(std::abs(b.iterations_per_ms - a.iterations_per_ms) / a.iterations_per_ms <= 0.15);

  const TaskTiming t = time_inline([&] { spin(a.iterations_for(10.0)); });
  CHECK(t.cpu_time == doctest::Approx(0.010).epsilon(0.15));
  CHECK(a.iterations_for(0.0) == 0);
}

TEST_CASE("mixed task timing on one worker") {
  WorkloadSpec spec;
  spec.gate = GateMode::None;
  ExclusionGate gate;
  std::mt19937_64 rng(1);
  const auto task = make_task(spec, rng, {calibration(), &gate, nullptr});
  const TaskTiming t = time_inline(task);
  CHECK(t.wall_time == doctest::Approx(0.060).epsilon(0.10));
  CHECK(blocking_ratio(t) == doctest::Approx(50.0 / 60.0).epsilon(0.10));

  spec.t_cpu_ms = 0.0;
  const auto io_only = make_task(spec, rng, {calibration(), &gate, nullptr});
  CHECK(blocking_ratio(time_inline(io_only)) > 0.99);
}

TEST_CASE("gated cpu tasks serialize to about 100 per second on 4 workers") {
  WorkloadSpec spec;
  spec.t_cpu_ms = 10.0;
  spec.t_io_ms = 0.0;
  ExclusionGate gate;
  TaskFactory factory(spec, {calibration(), &gate, nullptr});
  PoolConfig cfg;
  cfg.mode = StaticFixed{4};
  WorkerPool pool(cfg);
  std::vector<TaskHandle<std::monostate>> handles;
  const double t0 = wall_seconds();
  for (int i = 0; i < 100; ++i) handles.push_back(pool.submit(factory.next_task()));
  for (auto& h : handles) h.get();
  const double tps = 100.0 / (wall_seconds() - t0);
  CHECK(tps == doctest::Approx(100.0).epsilon(0.15));
  CHECK(gate.max_occupancy() == 1);
  CHECK(gate.acquisitions() == 100);
}

TEST_CASE("gate excludes and honours cancellation") {
  ExclusionGate gate(std::chrono::microseconds(1000));
  std::atomic<int> inside{0};
  std::atomic<int> worst{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 16; ++t) {
    ts.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        gate.acquire();
        const int now = ++inside;
        int w = worst.load();
        while (now > w && !worst.compare_exchange_weak(w, now)) {
        }
        spin(200);
        --inside;
        gate.release();
      }
    });
  }
  for (auto& t : ts) t.join();
  CHECK(worst.load() == 1);
  CHECK(gate.max_occupancy() == 1);
  CHECK(gate.acquisitions() == 800);

  std::atomic<bool> cancel{false};
  REQUIRE(gate.acquire());
  std::thread waiter([&] { CHECK_FALSE(gate.acquire(&cancel)); });
  std::this_thread::sleep_for(std::chrono::milliseconds(10));
  cancel = true;
  waiter.join();
  CHECK(gate.futile_wakeups() > 0);
  gate.release();
  CHECK_THROWS_AS(ExclusionGate(std::chrono::microseconds(0)), std::invalid_argument);
}

TEST_CASE("seeded plans are reproducible and jitter stays in range") {
  WorkloadSpec spec;
  spec.jitter_fraction = 0.2;
  spec.seed = 77;
  ExclusionGate gate;
  TaskFactory a(spec, {calibration(), &gate, nullptr});
  TaskFactory b(spec, {calibration(), &gate, nullptr});
  bool varied = false;
  for (int i = 0; i < 500; ++i) {
    const TaskPlan pa = a.next_plan();
    CHECK(pa == b.next_plan());
    CHECK(pa.cpu_ms >= 8.0 - 1e-9);
    CHECK(pa.cpu_ms <= 12.0 + 1e-9);
    CHECK(pa.io_ms >= 40.0 - 1e-9);
    CHECK(pa.io_ms <= 60.0 + 1e-9);
    if (pa.cpu_ms != 10.0) varied = true;
  }
  CHECK(varied);

  spec.jitter_fraction = 0.0;
  TaskFactory flat(spec, {calibration(), &gate, nullptr});
  CHECK(flat.next_plan().io == std::chrono::milliseconds(50));
  CHECK_THROWS_AS(TaskFactory(spec, {SpinCalibration{}, &gate, nullptr}), std::invalid_argument);
}

TEST_CASE("cancelled tasks skip their remaining phases") {
  WorkloadSpec spec;
  ExclusionGate gate;
  auto cancel = std::make_shared<std::atomic<bool>>(true);
  std::mt19937_64 rng(3);
  const auto task = make_task(spec, rng, {calibration(), &gate, cancel});
  CHECK(time_inline(task).wall_time < 0.045);
}

TEST_CASE("core affinity") {
  const std::size_t avail = visible_cores();
  CHECK(avail >= 1);
  const AffinityResult one = set_core_affinity(1);
#if defined(__linux__)
  CHECK(one.applied);
  CHECK(one.cores == 1);
  CHECK(visible_cores() == 1);
  const AffinityResult four = set_core_affinity(4);
  CHECK(four.available == 1);
  if (avail < 4) CHECK_FALSE(four.warning.empty());
#else
  CHECK_FALSE(one.applied);
  CHECK_FALSE(one.warning.empty());
#endif
  CHECK_THROWS_AS(set_core_affinity(0), std::invalid_argument);
}
