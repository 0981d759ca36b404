#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "betapool/bench.hpp"
#include "betapool/simulator.hpp"
#include "betapool/workload.hpp"

namespace betapool {

inline constexpr const char* kToolVersion = "0.1.0";

struct HostDescriptor {
  std::size_t visible_cores = 0;
  std::optional<AffinityResult> affinity;
  std::optional<SpinCalibration> calibration;
};

HostDescriptor describe_host();

/// Everything needed to re-run a report: subcommand, parameters, host.
struct RunManifest {
  std::string subcommand;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  HostDescriptor host;
  std::string tool_version = kToolVersion;

  nlohmann::ordered_json to_json() const;
};

nlohmann::ordered_json workload_json(const WorkloadSpec& spec);
nlohmann::ordered_json controller_json(const ControllerConfig& config);
nlohmann::ordered_json run_stats_json(const RunStats& stats);
nlohmann::ordered_json config_result_json(const ConfigResult& result);
nlohmann::ordered_json decisions_json(const std::vector<DecisionRecord>& log);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(const std::string& text);
std::string csv_number(double value);

/// Leading "# manifest: {...}" comment followed by any summary lines.
std::string csv_preamble(const RunManifest& manifest,
                         const std::vector<std::pair<std::string, std::string>>& summary = {});

std::string sweep_csv(const RunManifest& manifest, const std::vector<SweepRow>& rows,
                      const SweepSummary& summary);
nlohmann::ordered_json sweep_json(const RunManifest& manifest, const std::vector<SweepRow>& rows,
                                  const SweepSummary& summary);

/// Measured mean beta per thread count in the "n,beta" table format.
std::string sweep_b_table(const std::vector<SweepRow>& rows);

struct ComparisonEntry {
  ConfigResult result;
  std::optional<double> efficiency;  // against the best static configuration
};

std::string comparison_csv(const RunManifest& manifest, const std::vector<ComparisonEntry>& entries);
nlohmann::ordered_json comparison_json(const RunManifest& manifest,
                                       const std::vector<ComparisonEntry>& entries);
std::string decisions_csv(const std::vector<DecisionRecord>& log);

struct SensitivityRow {
  double beta_thresh = 0.0;
  ConfigResult result;
  double best_tps = 0.0;  // highest single-run throughput
};

double sensitivity_spread(const std::vector<SensitivityRow>& rows);
std::string sensitivity_csv(const RunManifest& manifest, const std::vector<SensitivityRow>& rows);
nlohmann::ordered_json sensitivity_json(const RunManifest& manifest,
                                        const std::vector<SensitivityRow>& rows);

struct ConvergenceSummary {
  std::size_t terminal_n = 0;
  std::size_t predicted_n = 0;
  bool agreement = false;
  std::size_t veto_count = 0;
};

ConvergenceSummary summarize_convergence(const Trajectory& trajectory,
                                         const BlockingCharacteristic& curve,
                                         const ControllerConfig& config);
std::string simulate_csv(const RunManifest& manifest, const Trajectory& trajectory,
                         const ConvergenceSummary& summary);
nlohmann::ordered_json simulate_json(const RunManifest& manifest, const Trajectory& trajectory,
                                     const ConvergenceSummary& summary);

std::string overhead_csv(const RunManifest& manifest, const OverheadReport& report);
nlohmann::ordered_json overhead_json(const RunManifest& manifest, const OverheadReport& report);

}  // namespace betapool
