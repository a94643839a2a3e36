#include "ialpha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ialpha::stats {

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double PopulationStd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean = Mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double Pearson(std::span<const double> lhs, std::span<const double> rhs) {
  const std::size_t n = lhs.size();
  if (n < 2 || n != rhs.size()) return std::numeric_limits<double>::quiet_NaN();
  const auto [lmin, lmax] = std::minmax_element(lhs.begin(), lhs.end());
  const auto [rmin, rmax] = std::minmax_element(rhs.begin(), rhs.end());
  if (*lmin == *lmax || *rmin == *rmax) return std::numeric_limits<double>::quiet_NaN();
  const double lm = Mean(lhs);
  const double rm = Mean(rhs);
  double cov = 0.0, lv = 0.0, rv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lhs[i] - lm;
    const double b = rhs[i] - rm;
    cov += a * b;
    lv += a * a;
    rv += b * b;
  }
  if (lv <= 0.0 || rv <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(lv * rv);
}

}  // namespace ialpha::stats
