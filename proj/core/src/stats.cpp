#include "gazequiz/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "gazequiz/error.hpp"

namespace gazequiz::stats {

namespace {

void require_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw Error(ErrorCode::InsufficientData, std::string(what) + " is empty");
}

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double u_statistic(std::span<const double> x, std::span<const double> y) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);
  const double n1 = static_cast<double>(x.size());
  return r1 - n1 * (n1 + 1.0) / 2.0;
}

}  // namespace

double mean(std::span<const double> x) {
  require_nonempty(x, "sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stdev_population(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double quantile(std::span<const double> x, double q) {
  require_nonempty(x, "sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::ValidationError, "quantile outside [0, 1]");
  return quantile_sorted(sorted_copy(x), q);
}

std::vector<double> midranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  require_nonempty(x, "first sample");
  require_nonempty(y, "second sample");
  if (std::min(x.size(), y.size()) <= kExactMannWhitneyMaxN) return mann_whitney_exact(x, y);
  return mann_whitney_asymptotic(x, y);
}

MannWhitneyResult mann_whitney_exact(std::span<const double> x, std::span<const double> y) {
  require_nonempty(x, "first sample");
  require_nonempty(y, "second sample");
  MannWhitneyResult res;
  res.exact = true;
  res.u = u_statistic(x, y);

  // Distribute the smaller sample over the pooled doubled midranks (always
  // integers) and count subsets by rank sum.
  const bool x_small = x.size() <= y.size();
  std::vector<double> pooled(x_small ? x.begin() : y.begin(), x_small ? x.end() : y.end());
  const std::size_t k = pooled.size();
  pooled.insert(pooled.end(), x_small ? y.begin() : x.begin(), x_small ? y.end() : x.end());
  const auto ranks = midranks(pooled);
  std::vector<long> doubled(ranks.size());
  std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double r) { return std::lround(2.0 * r); });

  long observed = 0;
  for (std::size_t i = 0; i < k; ++i) observed += doubled[i];
  const long max_sum = std::accumulate(doubled.begin(), doubled.end(), 0L);

  // ways[j][s]: subsets of size j with doubled rank sum s, rolled over items
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t item = 0; item < doubled.size(); ++item) {
    const auto w = static_cast<std::size_t>(doubled[item]);
    for (std::size_t j = std::min(k, item + 1); j >= 1; --j) {
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      for (std::size_t s = dst.size(); s-- > w;) dst[s] += src[s - w];
    }
  }
  double total = 0.0;
  double below = 0.0;
  double above = 0.0;
  for (std::size_t s = 0; s < ways[k].size(); ++s) {
    const double c = ways[k][s];
    total += c;
    if (static_cast<long>(s) <= observed) below += c;
    if (static_cast<long>(s) >= observed) above += c;
  }
  res.p = std::min(1.0, 2.0 * std::min(below, above) / total);
  return res;
}

MannWhitneyResult mann_whitney_asymptotic(std::span<const double> x, std::span<const double> y) {
  require_nonempty(x, "first sample");
  require_nonempty(y, "second sample");
  MannWhitneyResult res;
  res.u = u_statistic(x, y);

  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double n = n1 + n2;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i + 1;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) {
    res.p = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(res.u - n1 * n2 / 2.0) - 0.5) / std::sqrt(variance);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InsufficientData, "correlation inputs differ in length");
  if (x.size() < 3) throw Error(ErrorCode::InsufficientData, "correlation needs at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateInput, "correlation input has zero variance");

  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(c.n) - 2.0;
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else if (df > 0.0) {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    const boost::math::students_t dist(df);
    c.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return c;
}

Correlation spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InsufficientData, "correlation inputs differ in length");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson_r(rx, ry);
}

ZScoreOutliers zscore_outliers(std::span<const double> values, double threshold) {
  if (values.size() < 3) throw Error(ErrorCode::InsufficientData, "z-scores need at least 3 values");
  ZScoreOutliers out;
  out.mean = mean(values);
  out.stdev = stdev_population(values);
  out.z.assign(values.size(), 0.0);
  if (out.stdev == 0.0) {
    out.zero_spread = true;
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.z[i] = (values[i] - out.mean) / out.stdev;
    if (std::abs(out.z[i]) > threshold) out.flagged.push_back(i);
  }
  return out;
}

BoxStats box_stats(std::span<const double> x) {
  require_nonempty(x, "sample");
  const auto v = sorted_copy(x);
  BoxStats b;
  b.n = v.size();
  b.mean = mean(v);
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::find_if(v.begin(), v.end(), [&](double e) { return e >= lo_fence; });
  b.whisker_high = *std::find_if(v.rbegin(), v.rend(), [&](double e) { return e <= hi_fence; });
  b.n_beyond_whiskers = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double e) {
    return e < lo_fence || e > hi_fence;
  }));
  return b;
}

}  // namespace gazequiz::stats
