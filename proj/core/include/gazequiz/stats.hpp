#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace gazequiz::stats {

double mean(std::span<const double> x);
/// Population standard deviation (divides by n).
double stdev_population(std::span<const double> x);
double median(std::span<const double> x);

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::span<const double> x, double q);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> x);

struct MannWhitneyResult {
  double u = 0.0;  // for the first sample: R1 - n1(n1+1)/2
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Exact null distribution when min(n1, n2) <= 8, otherwise the normal
/// approximation with tie and continuity correction. Throws
/// InsufficientData on an empty sample.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

/// Exact two-sided p: 2 * min(P(U <= u), P(U >= u)) capped at 1, counting
/// every assignment of the pooled midranks to the first sample.
MannWhitneyResult mann_whitney_exact(std::span<const double> x, std::span<const double> y);
MannWhitneyResult mann_whitney_asymptotic(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kExactMannWhitneyMaxN = 8;

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, t distribution with n - 2 df
  std::size_t n = 0;
};

/// Throws InsufficientData for n < 3 or mismatched lengths and
/// DegenerateInput when either input has zero variance.
Correlation pearson_r(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of the midranks.
Correlation spearman_rho(std::span<const double> x, std::span<const double> y);

struct ZScoreOutliers {
  double mean = 0.0;
  double stdev = 0.0;           // population
  std::vector<double> z;        // per input
  std::vector<std::size_t> flagged;  // indices with |z| > threshold
  bool zero_spread = false;     // stdev == 0: nothing flagged
};

/// Throws InsufficientData for n < 3.
ZScoreOutliers zscore_outliers(std::span<const double> values, double threshold = 3.0);

struct BoxStats {
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;   // most extreme data within 1.5 IQR of the box
  double whisker_high = 0.0;
  std::size_t n_beyond_whiskers = 0;
};

BoxStats box_stats(std::span<const double> x);

}  // namespace gazequiz::stats
