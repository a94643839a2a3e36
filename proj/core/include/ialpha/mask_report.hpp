#pragma once

#include <Eigen/Dense>

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ialpha/backtest.hpp"
#include "ialpha/panel.hpp"
#include "ialpha/trainer.hpp"

namespace ialpha {

struct MaskSummary {
  Eigen::MatrixXd mean_mask;  // T × D
  std::vector<std::string> feature_names;
  std::size_t sample_count = 0;

  void WriteCsv(std::ostream& out) const;
};

// Row r of an N × (T·D) mask reshaped to T × D.
Eigen::MatrixXd WindowMask(const Eigen::MatrixXd& masks, Eigen::Index row, std::size_t lookback,
                           std::size_t num_features);

// Arithmetic mean of the realized per-window masks over every window of `data`.
MaskSummary MeanMask(const InferenceModel& model, std::span<const WindowBatch> data,
                     std::span<const std::string> feature_names);

struct RoundTrip {
  std::string stock;
  std::string entry_date;
  std::string exit_date;
  double entry_price = 0.0;
  double exit_price = 0.0;
  bool is_long = true;
  double realized_return = 0.0;  // exit/entry − 1, negated for shorts
};

// Completed trips: a position opened from flat and later returned to flat.
std::vector<RoundTrip> ExtractRoundTrips(const TradeLedger& ledger);

struct TradeMask {
  RoundTrip trip;
  Eigen::MatrixXd mask;  // T × D, realized on the entry date
};

struct TopTrades {
  std::vector<TradeMask> trades;
  std::size_t closed_trades = 0;
  std::string note;

  std::string ToJson(std::span<const std::string> feature_names) const;
};

// The n round trips with highest realized return, each with the mask the model
// produced for that stock on the entry date.
TopTrades TopTradeMasks(const InferenceModel& model, const TradeLedger& ledger,
                        std::span<const WindowBatch> data, std::size_t n);

}  // namespace ialpha
