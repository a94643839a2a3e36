#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ialpha {

// Pearson correlation of one cross-section; nullopt when N < 2 or either side
// is constant.
std::optional<double> InformationCoefficient(std::span<const double> y, std::span<const double> prediction);

// Pearson correlation of average-tie ranks.
std::optional<double> RankInformationCoefficient(std::span<const double> y, std::span<const double> prediction);

enum class RatioFlag { kFinite, kInfinite, kUndefined };

struct RatioSummary {
  double mean = 0.0;
  // mean / population std; ±infinity when the std is zero and mean ≠ 0 (0 when
  // both are zero), NaN when fewer than two values were given.
  double ratio = 0.0;
  RatioFlag flag = RatioFlag::kUndefined;
};

RatioSummary Aggregate(std::span<const double> per_date);

struct CrossSection {
  std::string date;
  std::vector<double> y;
  std::vector<double> prediction;
};

struct MetricReport {
  double ic = 0.0;
  double icir = 0.0;
  double rankic = 0.0;
  double rankicir = 0.0;
  RatioFlag icir_flag = RatioFlag::kUndefined;
  RatioFlag rankicir_flag = RatioFlag::kUndefined;
  std::vector<std::string> dates;  // included dates, aligned with the vectors below
  std::vector<double> per_date_ic;
  std::vector<double> per_date_rankic;
  std::size_t num_dates = 0;
  std::vector<std::string> excluded_dates;

  std::string ToJson() const;
};

MetricReport EvaluateCrossSections(std::span<const CrossSection> sections);

std::string_view RatioFlagName(RatioFlag flag);

}  // namespace ialpha
