#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace betapool {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two-sided 95% Student-t quantile t_{0.975, df}. Tabulated for df 1..30;
/// larger df fall back to the normal quantile 1.96.
double t_quantile_975(std::size_t df);

struct MeanCi {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1 denominator)
  double half_width = 0.0;
};

/// Mean and t-based 95% CI half-width. Throws StatsError for fewer than 2 samples.
MeanCi mean_ci(std::span<const double> samples);

/// Nearest-rank percentile: the ceil(p/100 * n)-th order statistic, with p
/// given in whole percent. Throws StatsError on empty input.
double nearest_rank_percentile(std::span<const double> samples, unsigned percent);

/// Nearest-rank P99 over latency samples pooled from every run.
double pooled_p99(std::span<const double> samples);

struct Spread {
  double median = 0.0;
  double iqr = 0.0;
  std::size_t runs_used = 0;
  std::vector<std::string> warnings;
};

/// Median and IQR of a set of values; quartiles are medians of the lower and
/// upper halves, with the overall median excluded when the count is odd.
Spread median_iqr(std::vector<double> values);

/// Per-run nearest-rank P99 values summarized by median and IQR. Runs with
/// no samples are skipped with a warning. Throws StatsError if fewer than two
/// runs remain.
Spread per_run_p99_spread(const std::vector<std::vector<double>>& runs);

/// adaptive / optimal. Throws StatsError if optimal_tps <= 0.
double efficiency(double adaptive_tps, double optimal_tps);

struct RunStats {
  std::size_t n_runs = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_half_width = 0.0;
  double pooled_p99 = 0.0;
  double per_run_p99_median = 0.0;
  double per_run_p99_iqr = 0.0;
  std::vector<std::string> warnings;
};

/// Builds RunStats from per-run metric values and per-run latency samples (ms).
/// A single run yields a zero-width interval rather than an error.
RunStats summarize_runs(std::span<const double> per_run_metric,
                        const std::vector<std::vector<double>>& per_run_latencies_ms);

}  // namespace betapool
