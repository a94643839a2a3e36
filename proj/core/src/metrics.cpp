#include "ialpha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ialpha/error.hpp"
#include "ialpha/stats.hpp"
#include "json.hpp"

namespace ialpha {

namespace {

bool IsConstant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

bool Degenerate(std::span<const double> y, std::span<const double> prediction) {
  if (y.size() != prediction.size()) throw ContractError("metric inputs differ in length");
  return y.size() < 2 || IsConstant(y) || IsConstant(prediction);
}

// JSON has no infinities; they are written as strings.
nlohmann::ordered_json Number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::optional<double> InformationCoefficient(std::span<const double> y, std::span<const double> prediction) {
  if (Degenerate(y, prediction)) return std::nullopt;
  return std::clamp(stats::Pearson(y, prediction), -1.0, 1.0);
}

std::optional<double> RankInformationCoefficient(std::span<const double> y, std::span<const double> prediction) {
  if (Degenerate(y, prediction)) return std::nullopt;
  const auto ry = stats::AverageRanks(y);
  const auto rp = stats::AverageRanks(prediction);
  return std::clamp(stats::Pearson(ry, rp), -1.0, 1.0);
}

RatioSummary Aggregate(std::span<const double> per_date) {
  RatioSummary out;
  if (per_date.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = stats::Mean(per_date);
  if (per_date.size() < 2) {
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    out.flag = RatioFlag::kUndefined;
    return out;
  }
  if (IsConstant(per_date)) {
    out.flag = RatioFlag::kInfinite;
    out.ratio = out.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), out.mean);
    return out;
  }
  out.ratio = out.mean / stats::PopulationStd(per_date);
  out.flag = RatioFlag::kFinite;
  return out;
}

std::string_view RatioFlagName(RatioFlag flag) {
  switch (flag) {
    case RatioFlag::kFinite:
      return "finite";
    case RatioFlag::kInfinite:
      return "infinite";
    case RatioFlag::kUndefined:
      return "undefined";
  }
  return "undefined";
}

MetricReport EvaluateCrossSections(std::span<const CrossSection> sections) {
  MetricReport report;
  for (const auto& s : sections) {
    const auto ic = InformationCoefficient(s.y, s.prediction);
    const auto ric = RankInformationCoefficient(s.y, s.prediction);
    if (!ic || !ric) {
      report.excluded_dates.push_back(s.date);
      continue;
    }
    report.dates.push_back(s.date);
    report.per_date_ic.push_back(*ic);
    report.per_date_rankic.push_back(*ric);
  }
  report.num_dates = report.dates.size();
  const RatioSummary ic = Aggregate(report.per_date_ic);
  const RatioSummary ric = Aggregate(report.per_date_rankic);
  report.ic = ic.mean;
  report.icir = ic.ratio;
  report.icir_flag = ic.flag;
  report.rankic = ric.mean;
  report.rankicir = ric.ratio;
  report.rankicir_flag = ric.flag;
  return report;
}

std::string MetricReport::ToJson() const {
  nlohmann::ordered_json j;
  j["ic"] = Number(ic);
  j["icir"] = Number(icir);
  j["rankic"] = Number(rankic);
  j["rankicir"] = Number(rankicir);
  j["icir_flag"] = std::string(RatioFlagName(icir_flag));
  j["rankicir_flag"] = std::string(RatioFlagName(rankicir_flag));
  j["num_dates"] = num_dates;
  j["excluded_date_count"] = excluded_dates.size();
  j["excluded_dates"] = excluded_dates;
  j["dates"] = dates;
  j["per_date_ic"] = per_date_ic;
  j["per_date_rankic"] = per_date_rankic;
  return j.dump(2) + "\n";
}

}  // namespace ialpha
