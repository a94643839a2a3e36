#include "ialpha/mask_report.hpp"

#include <algorithm>
#include <map>

#include "ialpha/error.hpp"
#include "json.hpp"

namespace ialpha {

namespace {

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void MaskSummary::WriteCsv(std::ostream& out) const {
  for (std::size_t d = 0; d < feature_names.size(); ++d) out << (d ? "," : "") << feature_names[d];
  out << '\n';
  for (Eigen::Index t = 0; t < mean_mask.rows(); ++t) {
    for (Eigen::Index d = 0; d < mean_mask.cols(); ++d) out << (d ? "," : "") << Num(mean_mask(t, d));
    out << '\n';
  }
}

Eigen::MatrixXd WindowMask(const Eigen::MatrixXd& masks, Eigen::Index row, std::size_t lookback,
                           std::size_t num_features) {
  const auto t_count = static_cast<Eigen::Index>(lookback);
  const auto d_count = static_cast<Eigen::Index>(num_features);
  Eigen::MatrixXd out(t_count, d_count);
  for (Eigen::Index t = 0; t < t_count; ++t) out.row(t) = masks.block(row, t * d_count, 1, d_count);
  return out;
}

MaskSummary MeanMask(const InferenceModel& model, std::span<const WindowBatch> data,
                     std::span<const std::string> feature_names) {
  const std::size_t lookback = model.config().lookback;
  const std::size_t features = model.config().num_features;
  if (feature_names.size() != features) throw ContractError("feature names disagree with the checkpoint D");
  MaskSummary summary;
  summary.feature_names.assign(feature_names.begin(), feature_names.end());
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(lookback * features));
  for (const auto& batch : data) {
    const Inference out = model.Infer(batch);
    for (Eigen::Index r = 0; r < out.mask.rows(); ++r) sum += out.mask.row(r);
    summary.sample_count += static_cast<std::size_t>(out.mask.rows());
  }
  if (summary.sample_count == 0) throw DataError("mean_mask: split contains no windows");
  sum /= static_cast<double>(summary.sample_count);
  summary.mean_mask = WindowMask(sum, 0, lookback, features);
  return summary;
}

std::vector<RoundTrip> ExtractRoundTrips(const TradeLedger& ledger) {
  struct Open {
    double quantity = 0.0;
    std::string date;
    double price = 0.0;
  };
  std::map<std::string, Open> open;
  std::vector<RoundTrip> trips;
  for (const auto& r : ledger.records) {
    if (r.event != LedgerEvent::kFill) continue;
    Open& pos = open[r.stock];
    const double before = pos.quantity;
    const double after = before + r.quantity;
    if (before != 0.0 && (after == 0.0 || (after > 0) != (before > 0))) {
      RoundTrip trip;
      trip.stock = r.stock;
      trip.entry_date = pos.date;
      trip.exit_date = r.date;
      trip.entry_price = pos.price;
      trip.exit_price = r.price;
      trip.is_long = before > 0;
      const double gross = r.price / pos.price - 1.0;
      trip.realized_return = trip.is_long ? gross : -gross;
      trips.push_back(std::move(trip));
    }
    if (after != 0.0 && (before == 0.0 || (after > 0) != (before > 0))) {
      pos.date = r.date;
      pos.price = r.price;
    }
    pos.quantity = after;
  }
  return trips;
}

TopTrades TopTradeMasks(const InferenceModel& model, const TradeLedger& ledger,
                        std::span<const WindowBatch> data, std::size_t n) {
  TopTrades out;
  std::vector<RoundTrip> trips = ExtractRoundTrips(ledger);
  out.closed_trades = trips.size();
  if (n == 0) return out;
  std::stable_sort(trips.begin(), trips.end(), [](const RoundTrip& a, const RoundTrip& b) {
    if (a.realized_return != b.realized_return) return a.realized_return > b.realized_return;
    if (a.entry_date != b.entry_date) return a.entry_date < b.entry_date;
    return a.stock < b.stock;
  });
  if (trips.size() < n) {
    out.note = "only " + std::to_string(trips.size()) + " closed trades available (requested " +
               std::to_string(n) + ")";
    n = trips.size();
  }
  std::map<std::string, const WindowBatch*> by_date;
  for (const auto& b : data) by_date[b.date] = &b;
  std::map<std::string, Inference> cache;
  for (std::size_t i = 0; i < n; ++i) {
    TradeMask tm;
    tm.trip = trips[i];
    const auto it = by_date.find(tm.trip.entry_date);
    if (it == by_date.end()) throw DataError("no window data for entry date " + tm.trip.entry_date);
    const WindowBatch& batch = *it->second;
    const auto row = std::find(batch.stock_ids.begin(), batch.stock_ids.end(), tm.trip.stock);
    if (row == batch.stock_ids.end()) {
      throw DataError("no window for " + tm.trip.stock + " on " + tm.trip.entry_date);
    }
    auto cached = cache.find(batch.date);
    if (cached == cache.end()) cached = cache.emplace(batch.date, model.Infer(batch)).first;
    tm.mask = WindowMask(cached->second.mask, row - batch.stock_ids.begin(), batch.lookback, batch.num_features);
    out.trades.push_back(std::move(tm));
  }
  return out;
}

std::string TopTrades::ToJson(std::span<const std::string> feature_names) const {
  nlohmann::ordered_json j;
  j["closed_trades"] = closed_trades;
  j["returned"] = trades.size();
  if (!note.empty()) j["note"] = note;
  j["feature_names"] = std::vector<std::string>(feature_names.begin(), feature_names.end());
  auto& list = j["trades"];
  list = nlohmann::ordered_json::array();
  for (const auto& t : trades) {
    nlohmann::ordered_json e;
    e["stock_id"] = t.trip.stock;
    e["entry_date"] = t.trip.entry_date;
    e["exit_date"] = t.trip.exit_date;
    e["side"] = t.trip.is_long ? "long" : "short";
    e["entry_price"] = t.trip.entry_price;
    e["exit_price"] = t.trip.exit_price;
    e["realized_return"] = t.trip.realized_return;
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < t.mask.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < t.mask.cols(); ++c) row.push_back(t.mask(r, c));
      rows.push_back(std::move(row));
    }
    e["mask"] = rows;
    list.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace ialpha
