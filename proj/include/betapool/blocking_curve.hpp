#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace betapool {

class CurveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters of the rise-then-decline piecewise-linear blocking curve.
/// B rises linearly from `beta_low` at n_min to `beta_peak` at `n_critical`,
/// then falls by `decline_slope` per added thread.
struct PiecewiseParams {
  double beta_low = 0.5;
  double beta_peak = 0.9;
  std::size_t n_critical = 16;
  double decline_slope = 0.01;
};

/// Expected blocking ratio as a function of pool size, defined on a closed
/// thread-count domain [n_min, n_max].
class BlockingCharacteristic {
 public:
  /// Explicit N -> beta table. Keys must cover a contiguous range; values are
  /// clamped to [0, 1].
  static BlockingCharacteristic from_table(const std::map<std::size_t, double>& table);

  /// Throws CurveError unless 0 <= low <= peak <= 1, slope > 0,
  /// n_min <= n_critical <= n_max, and the curve stays non-negative on the
  /// domain (so the declining branch is strictly decreasing).
  static BlockingCharacteristic piecewise(const PiecewiseParams& params, std::size_t n_min,
                                          std::size_t n_max);

  /// Reads the "n,beta" CSV format. Errors carry the offending line number.
  static BlockingCharacteristic parse_csv(std::istream& in);

  double at(std::size_t n) const;
  bool defined_on(std::size_t lo, std::size_t hi) const;
  std::size_t n_min() const { return n_min_; }
  std::size_t n_max() const { return n_min_ + values_.size() - 1; }
  const std::vector<double>& values() const { return values_; }

  std::string to_csv() const;

 private:
  BlockingCharacteristic(std::size_t n_min, std::vector<double> values)
      : n_min_(n_min), values_(std::move(values)) {}

  std::size_t n_min_;
  std::vector<double> values_;
};

}  // namespace betapool
