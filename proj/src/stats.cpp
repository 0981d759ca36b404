#include "betapool/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace betapool {
namespace {

// t_{0.975, df} for df = 1..30.
constexpr std::array<double, 30> kT975 = {
    12.706204736, 4.302652730, 3.182446305, 2.776445105, 2.570581836,
    2.446911851,  2.364624252, 2.306004135, 2.262157163, 2.228138852,
    2.200985160,  2.178812830, 2.160368656, 2.144786688, 2.131449546,
    2.119905299,  2.109815578, 2.100922040, 2.093024054, 2.085963447,
    2.079613845,  2.073873068, 2.068657610, 2.063898562, 2.059538553,
    2.055529439,  2.051830516, 2.048407142, 2.045229642, 2.042272456,
};

double median_sorted(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

double t_quantile_975(std::size_t df) {
  if (df == 0) throw StatsError("t quantile needs at least one degree of freedom");
  if (df <= kT975.size()) return kT975[df - 1];
  return 1.96;
}

MeanCi mean_ci(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw StatsError("mean_ci needs at least 2 samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double hw = t_quantile_975(n - 1) * sd / std::sqrt(static_cast<double>(n));
  return {mean, sd, hw};
}

double nearest_rank_percentile(std::span<const double> samples, unsigned percent) {
  if (samples.empty()) throw StatsError("percentile of an empty sample set");
  if (percent == 0 || percent > 100) throw StatsError("percentile must lie in 1..100");
  const std::size_t n = samples.size();
  // ceil(percent * n / 100) in exact integer arithmetic.
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> copy(samples.begin(), samples.end());
  auto kth = copy.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(copy.begin(), kth, copy.end());
  return *kth;
}

double pooled_p99(std::span<const double> samples) { return nearest_rank_percentile(samples, 99); }

Spread median_iqr(std::vector<double> values) {
  if (values.empty()) throw StatsError("median_iqr of an empty set");
  std::sort(values.begin(), values.end());
  Spread out;
  out.runs_used = values.size();
  out.median = median_sorted(values);
  const std::size_t n = values.size();
  if (n == 1) return out;
  const std::size_t half = n / 2;
  const std::span<const double> all(values);
  const double q1 = median_sorted(all.subspan(0, half));
  const double q3 = median_sorted(all.subspan(n - half, half));
  out.iqr = q3 - q1;
  return out;
}

Spread per_run_p99_spread(const std::vector<std::vector<double>>& runs) {
  std::vector<double> p99s;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].empty()) {
      warnings.push_back("run " + std::to_string(i) + " has no latency samples; excluded");
      continue;
    }
    p99s.push_back(pooled_p99(runs[i]));
  }
  if (p99s.size() < 2) throw StatsError("per-run P99 spread needs at least 2 non-empty runs");
  Spread out = median_iqr(std::move(p99s));
  out.warnings = std::move(warnings);
  return out;
}

double efficiency(double adaptive_tps, double optimal_tps) {
  if (!(optimal_tps > 0.0)) throw StatsError("efficiency: optimal throughput must be positive");
  return adaptive_tps / optimal_tps;
}

RunStats summarize_runs(std::span<const double> per_run_metric,
                        const std::vector<std::vector<double>>& per_run_latencies_ms) {
  RunStats rs;
  rs.n_runs = per_run_metric.size();
  if (rs.n_runs >= 2) {
    const MeanCi ci = mean_ci(per_run_metric);
    rs.mean = ci.mean;
    rs.stddev = ci.stddev;
    rs.ci_half_width = ci.half_width;
  } else if (rs.n_runs == 1) {
    rs.mean = per_run_metric[0];
  }

  std::vector<double> pooled;
  std::size_t non_empty = 0;
  for (const auto& run : per_run_latencies_ms) {
    pooled.insert(pooled.end(), run.begin(), run.end());
    if (!run.empty()) ++non_empty;
  }
  if (!pooled.empty()) rs.pooled_p99 = pooled_p99(pooled);
  if (pooled.size() < 100) {
    rs.warnings.push_back("pooled P99 over " + std::to_string(pooled.size()) +
                          " samples (fewer than 100)");
  }
  if (non_empty >= 2) {
    const Spread s = per_run_p99_spread(per_run_latencies_ms);
    rs.per_run_p99_median = s.median;
    rs.per_run_p99_iqr = s.iqr;
    rs.warnings.insert(rs.warnings.end(), s.warnings.begin(), s.warnings.end());
  } else if (non_empty == 1) {
    rs.per_run_p99_median = rs.pooled_p99;
  }
  return rs;
}

}  // namespace betapool
