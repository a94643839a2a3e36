#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ialpha {

enum class Market { kChina, kUS, kSynthetic };

Market ParseMarket(std::string_view name);
std::string_view MarketName(Market market);

// Column order of the 26-feature China layout.
const std::vector<std::string>& ChinaFeatureNames();
// open, high, low, close, volume, ratio of price change.
const std::vector<std::string>& UsFeatureNames();

// Inclusive ISO-8601 date range.
struct DateRange {
  std::string first;
  std::string last;

  bool Contains(std::string_view date) const { return date >= first && date <= last; }
};

// date × stock × feature panel. Storage is row-major [date][stock][feature].
struct PanelDataset {
  Market market = Market::kUS;
  std::vector<std::string> dates;
  std::vector<std::string> stocks;
  std::vector<std::string> feature_names;
  std::vector<double> features;
  std::vector<std::uint8_t> valid;
  // Synthetic panels carry their target explicitly ([date][stock]); empty otherwise.
  std::vector<double> target_column;

  std::size_t num_dates() const { return dates.size(); }
  std::size_t num_stocks() const { return stocks.size(); }
  std::size_t num_features() const { return feature_names.size(); }

  double Feature(std::size_t d, std::size_t s, std::size_t f) const {
    return features[(d * num_stocks() + s) * num_features() + f];
  }
  double& Feature(std::size_t d, std::size_t s, std::size_t f) {
    return features[(d * num_stocks() + s) * num_features() + f];
  }
  bool IsValid(std::size_t d, std::size_t s) const { return valid[d * num_stocks() + s] != 0; }

  std::optional<std::size_t> FeatureIndex(std::string_view name) const;
  std::optional<std::size_t> DateIndex(std::string_view date) const;
};

// Per-date realized return targets, [date][stock].
struct TargetPanel {
  std::size_t num_dates = 0;
  std::size_t num_stocks = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double Value(std::size_t d, std::size_t s) const { return values[d * num_stocks + s]; }
  bool IsValid(std::size_t d, std::size_t s) const { return valid[d * num_stocks + s] != 0; }
};

// Reads one or more CSV sources (`stock_id,date,<features...>`) and aligns them
// into a panel. For the synthetic market the feature columns are taken from the
// header and a trailing `target` column is required.
PanelDataset IngestCsv(std::span<const std::filesystem::path> files, Market market);
PanelDataset IngestCsv(std::istream& in, Market market, std::string_view source_name = "<stream>");

// Emits the canonical CSV; ingesting it reproduces the panel bit-exactly.
void WritePanelCsv(const PanelDataset& panel, std::ostream& out);

TargetPanel ComputeTargets(const PanelDataset& panel);

// Cross-sectional per-date z-score over valid stocks (population std).
PanelDataset Normalize(const PanelDataset& panel);

// Validates `YYYY-MM-DD`; returns {year, month, day}.
struct CalendarDate {
  int year;
  int month;
  int day;
};
CalendarDate ParseIsoDate(std::string_view text);

// One-hot environment codes. Calendar codes are month (12) ⊕ year; regime codes
// replace both blocks with a single regime one-hot (synthetic panels).
class EnvironmentEncoder {
 public:
  static EnvironmentEncoder Calendar(std::span<const std::string> training_dates);
  // Regimes are floor(date_index / period); labels outside [first, last] map
  // to the nearest trained regime.
  static EnvironmentEncoder Regime(std::size_t period, std::size_t first_regime,
                                   std::size_t last_regime);

  std::size_t dim() const;
  Eigen::RowVectorXd Encode(std::string_view date, std::size_t date_index) const;

  bool is_calendar() const { return calendar_; }
  std::size_t period() const { return period_; }
  const std::vector<int>& years() const { return years_; }

 private:
  bool calendar_ = true;
  std::vector<int> years_;
  std::size_t period_ = 1;
  std::size_t first_regime_ = 0;
  std::size_t last_regime_ = 0;
};

struct WindowBatch {
  std::string date;
  std::size_t date_index = 0;
  std::size_t lookback = 0;
  std::size_t num_features = 0;
  std::vector<std::string> stock_ids;
  // N × (T·D); column block t holds step t, oldest first, last block is `date`.
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::RowVectorXd env;

  std::size_t size() const { return stock_ids.size(); }
};

std::vector<WindowBatch> MakeWindows(const PanelDataset& panel, const TargetPanel& targets,
                                     const EnvironmentEncoder& encoder, std::size_t lookback,
                                     const DateRange& split);

}  // namespace ialpha
