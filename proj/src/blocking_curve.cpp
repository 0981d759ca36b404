#include "betapool/blocking_curve.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>
#include <string_view>

namespace betapool {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw CurveError("b-table line " + std::to_string(line) + ": " + what);
}

}  // namespace

BlockingCharacteristic BlockingCharacteristic::from_table(
    const std::map<std::size_t, double>& table) {
  if (table.empty()) {
    throw CurveError("blocking table is empty");
  }
  const std::size_t lo = table.begin()->first;
  if (lo == 0) {
    throw CurveError("blocking table: thread counts start at 1");
  }
  std::vector<double> values;
  values.reserve(table.size());
  std::size_t expected = lo;
  for (const auto& [n, beta] : table) {
    if (n != expected) {
      throw CurveError("blocking table: missing entry for N=" + std::to_string(expected));
    }
    values.push_back(std::clamp(beta, 0.0, 1.0));
    ++expected;
  }
  return BlockingCharacteristic(lo, std::move(values));
}

BlockingCharacteristic BlockingCharacteristic::piecewise(const PiecewiseParams& p,
                                                         std::size_t n_min, std::size_t n_max) {
  if (n_min < 1 || n_max < n_min) {
    throw CurveError("piecewise curve: need 1 <= n_min <= n_max");
  }
  if (!(p.beta_low >= 0.0 && p.beta_low <= p.beta_peak && p.beta_peak <= 1.0)) {
    throw CurveError("piecewise curve: need 0 <= beta_low <= beta_peak <= 1");
  }
  if (!(p.decline_slope > 0.0)) {
    throw CurveError("piecewise curve: decline_slope must be positive");
  }
  if (p.n_critical < n_min || p.n_critical > n_max) {
    throw CurveError("piecewise curve: n_critical outside [n_min, n_max]");
  }
  const double tail =
      p.beta_peak - p.decline_slope * static_cast<double>(n_max - p.n_critical);
  if (tail < 0.0) {
    throw CurveError("piecewise curve: decline reaches below 0 before n_max");
  }

  std::vector<double> values;
  values.reserve(n_max - n_min + 1);
  for (std::size_t n = n_min; n <= n_max; ++n) {
    double b;
    if (n <= p.n_critical) {
      const double span = static_cast<double>(p.n_critical - n_min);
      const double t = span > 0.0 ? static_cast<double>(n - n_min) / span : 1.0;
      b = p.beta_low + (p.beta_peak - p.beta_low) * t;
    } else {
      b = p.beta_peak - p.decline_slope * static_cast<double>(n - p.n_critical);
    }
    values.push_back(std::clamp(b, 0.0, 1.0));
  }
  return BlockingCharacteristic(n_min, std::move(values));
}

BlockingCharacteristic BlockingCharacteristic::parse_csv(std::istream& in) {
  std::map<std::size_t, double> table;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "n,beta") {
        fail_line(line_no, "expected header \"n,beta\"");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      fail_line(line_no, "expected two fields \"n,beta\"");
    }
    const std::string_view n_field = trim(line.substr(0, comma));
    const std::string_view b_field = trim(line.substr(comma + 1));

    std::size_t n = 0;
    auto [np, nec] = std::from_chars(n_field.data(), n_field.data() + n_field.size(), n);
    if (nec != std::errc{} || np != n_field.data() + n_field.size() || n == 0) {
      fail_line(line_no, "thread count must be a positive integer");
    }
    double beta = 0.0;
    try {
      std::size_t used = 0;
      beta = std::stod(std::string(b_field), &used);
      if (used != b_field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail_line(line_no, "beta must be a number");
    }
    if (!table.emplace(n, beta).second) {
      fail_line(line_no, "duplicate entry for N=" + std::to_string(n));
    }
  }
  if (!header_seen) {
    throw CurveError("b-table: missing header \"n,beta\"");
  }
  return from_table(table);
}

double BlockingCharacteristic::at(std::size_t n) const {
  if (n < n_min() || n > n_max()) {
    throw CurveError("blocking curve undefined at N=" + std::to_string(n));
  }
  return values_[n - n_min_];
}

bool BlockingCharacteristic::defined_on(std::size_t lo, std::size_t hi) const {
  return lo >= n_min() && hi <= n_max() && lo <= hi;
}

std::string BlockingCharacteristic::to_csv() const {
  std::ostringstream out;
  out << "n,beta\n";
  out.precision(9);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out << (n_min_ + i) << ',' << values_[i] << '\n';
  }
  return out.str();
}

}  // namespace betapool
