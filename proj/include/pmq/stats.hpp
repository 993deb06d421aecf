#pragma once

// Small-sample statistics for replication output analysis.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "pmq/errors.hpp"

namespace pmq {

// Two-sided 95% Student-t critical value. Table for 1..30 degrees of
// freedom, harmonic interpolation in 1/df up to 120, then the normal limit.
inline double student_t_975(std::size_t df) {
  static constexpr double table[30] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) throw ConfigError("t quantile needs at least 1 degree of freedom");
  if (df <= 30) return table[df - 1];
  if (df >= 120) return 1.96;
  const double t30 = table[29], t120 = 1.98;
  const double w = (1.0 / 30.0 - 1.0 / static_cast<double>(df)) / (1.0 / 30.0 - 1.0 / 120.0);
  return t30 + w * (t120 - t30);
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n - 1 denominator

  double stddev() const { return std::sqrt(variance); }

  // half width of the 95% confidence interval for the mean
  double ci_halfwidth() const {
    if (count < 2) return std::numeric_limits<double>::infinity();
    return student_t_975(count - 1) * stddev() / std::sqrt(static_cast<double>(count));
  }
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / static_cast<double>(xs.size() - 1);
  return s;
}

}  // namespace pmq
