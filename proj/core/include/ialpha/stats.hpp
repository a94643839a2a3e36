#pragma once

#include <span>
#include <vector>

namespace ialpha::stats {

double Mean(std::span<const double> values);

// Population standard deviation (divides by n).
double PopulationStd(std::span<const double> values);

// 1-based ranks, ascending; tied values share the average of their ranks.
std::vector<double> AverageRanks(std::span<const double> values);

// Pearson correlation; NaN when either side has zero variance or n < 2.
double Pearson(std::span<const double> lhs, std::span<const double> rhs);

}  // namespace ialpha::stats
