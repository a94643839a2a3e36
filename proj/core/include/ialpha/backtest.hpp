#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ialpha/metrics.hpp"
#include "ialpha/panel.hpp"

namespace ialpha {

struct BacktestConfig {
  std::size_t k = 100;
  double commission_rate = 0.0015;
  Market market = Market::kChina;
  double initial_capital = 1.0;
  double main_board_limit = 0.10;
  double second_board_limit = 0.20;
  // Equal-weight long position in every stock of each cross-section (k ignored).
  bool hold_all = false;

  void Validate() const;
  bool allows_short() const { return market == Market::kUS && !hold_all; }
};

struct Selection {
  std::vector<std::size_t> longs;   // indices into the cross-section
  std::vector<std::size_t> shorts;
};

// Highest-k longs and (if allowed) lowest-k shorts; when 2k > N both sides
// shrink to floor(N/2). Ties go to the lexicographically smaller stock id.
Selection SelectTopK(std::span<const double> predictions, std::span<const std::string> stock_ids,
                     std::size_t k, bool allow_short);

// Execution prices for one decision step. `reference_close` is the close that
// precedes the execution instant; used for China price-limit checks.
struct PriceBook {
  std::map<std::string, double> execution;
  std::map<std::string, double> reference_close;
};

struct DecisionDay {
  std::string date;
  std::vector<std::string> stock_ids;
  std::vector<double> predictions;
  PriceBook prices;
};

enum class LedgerEvent { kFill, kReject, kWarning };
std::string_view LedgerEventName(LedgerEvent event);

struct LedgerRecord {
  std::string date;
  std::string stock;
  LedgerEvent event = LedgerEvent::kFill;
  double quantity = 0.0;  // signed order quantity; positive buys
  double price = 0.0;
  double notional = 0.0;  // signed quantity × price
  double commission = 0.0;
  std::string reason;
};

struct DaySummary {
  std::string date;
  double equity = 0.0;  // before trading, marked at this step's execution prices
  double cash = 0.0;    // after trading
  double holdings_value = 0.0;
  double commission = 0.0;
  double turnover = 0.0;  // traded notional / equity
  std::map<std::string, double> target_weights;
  std::map<std::string, double> holdings;  // quantities after trading
};

struct TradeLedger {
  std::vector<LedgerRecord> records;
  std::vector<DaySummary> days;
  std::vector<std::string> equity_dates;
  std::vector<double> equity;  // days.size() + 1 points; last is the terminal mark

  void WriteCsv(std::ostream& out) const;
  void WriteEquityCsv(std::ostream& out) const;
};

// Path-dependent simulator. Call ExecuteDay per decision date in order, then
// Close with the prices that mark the final portfolio.
class Backtester {
 public:
  explicit Backtester(const BacktestConfig& config);

  void ExecuteDay(const DecisionDay& day);
  void Close(const std::string& date, const PriceBook& prices);

  const TradeLedger& ledger() const { return ledger_; }
  double cash() const { return cash_; }
  const std::map<std::string, double>& holdings() const { return holdings_; }

 private:
  double Mark(const std::string& date, const PriceBook& prices, bool record_warnings);
  double LimitFor(const std::string& stock) const;

  BacktestConfig config_;
  double cash_;
  std::map<std::string, double> holdings_;
  std::map<std::string, double> last_price_;
  TradeLedger ledger_;
};

// (end/start)^(periods/(len−1)) − 1.
double AnnualizedReturn(std::span<const double> equity, double periods_per_year = 252.0);
// min_t equity[t]/max_{s≤t} equity[s] − 1.
double MaxDrawdown(std::span<const double> equity);
// mean/population-std of simple returns × √periods; `ratio` carries the value.
RatioSummary SharpeRatio(std::span<const double> equity, double periods_per_year = 252.0);

struct BacktestReport {
  double arr = 0.0;
  double mdd = 0.0;
  RatioSummary sr;
  std::vector<std::string> dates;
  std::vector<double> cumulative_returns;
  std::vector<double> turnover;
  double final_equity = 0.0;
  std::size_t rejected_orders = 0;
  std::size_t warnings = 0;

  std::string ToJson() const;
};

BacktestReport Summarize(const TradeLedger& ledger);

// Equal-weight, zero-commission reference: cumulative product of
// (1 + mean_i(P_{s+1,i}/P_{s,i} − 1)) over each step's cross-section.
std::vector<double> DatasetBenchmark(std::span<const DecisionDay> days, const PriceBook& terminal,
                                     double initial_capital = 1.0);

// Execution prices for decision date index `t`: China executes at open[t+1]
// with close[t] as reference; US executes at close[t].
PriceBook PricesAt(const PanelDataset& panel, std::size_t t);

struct DatedBook {
  std::string date;
  PriceBook prices;
};
// Prices that mark the portfolio after the last decision date index `t`.
DatedBook TerminalPrices(const PanelDataset& panel, std::size_t t);

struct BacktestRun {
  TradeLedger ledger;
  BacktestReport report;
  std::vector<double> benchmark;
};

BacktestRun RunBacktest(std::span<const DecisionDay> days, const DatedBook& terminal,
                        const BacktestConfig& config);

}  // namespace ialpha
