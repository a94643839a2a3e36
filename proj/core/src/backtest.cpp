#include "ialpha/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ialpha/error.hpp"
#include "ialpha/stats.hpp"
#include "json.hpp"

namespace ialpha {

namespace {

// Absorbs representation error when a price change sits exactly on a limit.
constexpr double kLimitTolerance = 1e-12;

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::ordered_json JsonNumber(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void RequirePositive(std::span<const double> equity, const char* what) {
  for (double e : equity) {
    if (!(e > 0.0)) throw NumericError(std::string(what) + ": equity must be positive");
  }
}

}  // namespace

void BacktestConfig::Validate() const {
  if (k < 1) throw ConfigError("backtest k must be >= 1");
  if (!(commission_rate >= 0.0 && commission_rate < 1.0)) throw ConfigError("commission_rate must lie in [0, 1)");
  if (!(initial_capital > 0.0)) throw ConfigError("initial_capital must be > 0");
  if (market == Market::kSynthetic) throw ConfigError("synthetic panels carry no prices; backtest needs china or us");
}

Selection SelectTopK(std::span<const double> predictions, std::span<const std::string> stock_ids,
                     std::size_t k, bool allow_short) {
  const std::size_t n = predictions.size();
  if (stock_ids.size() != n) throw ContractError("select_topk: predictions and ids differ in length");
  Selection out;
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t per_side = std::min(k, n);
  if (allow_short && 2 * per_side > n) per_side = n / 2;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (predictions[a] != predictions[b]) return predictions[a] > predictions[b];
    return stock_ids[a] < stock_ids[b];
  });
  out.longs.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(per_side));
  if (allow_short) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (predictions[a] != predictions[b]) return predictions[a] < predictions[b];
      return stock_ids[a] < stock_ids[b];
    });
    out.shorts.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(per_side));
  }
  return out;
}

std::string_view LedgerEventName(LedgerEvent event) {
  switch (event) {
    case LedgerEvent::kFill:
      return "fill";
    case LedgerEvent::kReject:
      return "reject";
    case LedgerEvent::kWarning:
      return "warning";
  }
  return "fill";
}

void TradeLedger::WriteCsv(std::ostream& out) const {
  out << "date,stock_id,event,side,quantity,price,notional,commission,reason\n";
  for (const auto& r : records) {
    const char* side = r.quantity > 0 ? "buy" : (r.quantity < 0 ? "sell" : "");
    out << r.date << ',' << r.stock << ',' << LedgerEventName(r.event) << ',' << side << ',' << Num(r.quantity)
        << ',' << Num(r.price) << ',' << Num(r.notional) << ',' << Num(r.commission) << ',' << r.reason << '\n';
  }
}

void TradeLedger::WriteEquityCsv(std::ostream& out) const {
  out << "date,equity,cumulative_return\n";
  for (std::size_t i = 0; i < equity.size(); ++i) {
    out << equity_dates[i] << ',' << Num(equity[i]) << ',' << Num(equity[i] / equity.front() - 1.0) << '\n';
  }
}

Backtester::Backtester(const BacktestConfig& config) : config_(config), cash_(config.initial_capital) {
  config_.Validate();
}

double Backtester::LimitFor(const std::string& stock) const {
  return stock.rfind("300", 0) == 0 ? config_.second_board_limit : config_.main_board_limit;
}

double Backtester::Mark(const std::string& date, const PriceBook& prices, bool record_warnings) {
  for (const auto& [stock, price] : prices.execution) last_price_[stock] = price;
  double value = cash_;
  for (const auto& [stock, qty] : holdings_) {
    const auto it = prices.execution.find(stock);
    if (it == prices.execution.end() && record_warnings) {
      LedgerRecord w;
      w.date = date;
      w.stock = stock;
      w.event = LedgerEvent::kWarning;
      w.price = last_price_.at(stock);
      w.reason = "missing execution price; carried at last known price";
      ledger_.records.push_back(std::move(w));
    }
    value += qty * last_price_.at(stock);
  }
  return value;
}

void Backtester::ExecuteDay(const DecisionDay& day) {
  if (day.predictions.size() != day.stock_ids.size()) {
    throw ContractError("execute_day: predictions and ids differ in length on " + day.date);
  }
  const double equity = Mark(day.date, day.prices, true);
  ledger_.equity.push_back(equity);
  ledger_.equity_dates.push_back(day.date);

  Selection sel;
  if (config_.hold_all) {
    sel.longs.resize(day.stock_ids.size());
    std::iota(sel.longs.begin(), sel.longs.end(), std::size_t{0});
  } else {
    sel = SelectTopK(day.predictions, day.stock_ids, config_.k, config_.allows_short());
  }
  DaySummary summary;
  summary.date = day.date;
  summary.equity = equity;
  for (std::size_t i : sel.longs) {
    summary.target_weights[day.stock_ids[i]] = 1.0 / static_cast<double>(sel.longs.size());
  }
  for (std::size_t i : sel.shorts) {
    summary.target_weights[day.stock_ids[i]] = -1.0 / static_cast<double>(sel.shorts.size());
  }

  std::map<std::string, double> orders;
  for (const auto& [stock, qty] : holdings_) orders[stock] = 0.0;
  for (const auto& [stock, w] : summary.target_weights) orders[stock] = w;

  double traded = 0.0;
  for (const auto& [stock, weight] : orders) {
    const auto price_it = day.prices.execution.find(stock);
    const auto held_it = holdings_.find(stock);
    const double held = held_it == holdings_.end() ? 0.0 : held_it->second;
    if (price_it == day.prices.execution.end()) {
      if (held == 0.0) {
        LedgerRecord r;
        r.date = day.date;
        r.stock = stock;
        r.event = LedgerEvent::kReject;
        r.reason = "no execution price";
        ledger_.records.push_back(std::move(r));
      }
      continue;
    }
    const double price = price_it->second;
    const double delta = weight * equity / price - held;
    if (delta == 0.0) continue;
    LedgerRecord r;
    r.date = day.date;
    r.stock = stock;
    r.quantity = delta;
    r.price = price;
    r.notional = delta * price;
    if (config_.market == Market::kChina) {
      const auto ref_it = day.prices.reference_close.find(stock);
      if (ref_it != day.prices.reference_close.end() && ref_it->second > 0.0) {
        const double change = (price - ref_it->second) / ref_it->second;
        const double limit = LimitFor(stock);
        if (delta > 0 && change >= limit - kLimitTolerance) r.reason = "limit-up";
        if (delta < 0 && change <= -limit + kLimitTolerance) r.reason = "limit-down";
      }
    }
    if (!r.reason.empty()) {
      r.event = LedgerEvent::kReject;
      ledger_.records.push_back(std::move(r));
      continue;
    }
    r.event = LedgerEvent::kFill;
    r.commission = config_.commission_rate * std::abs(r.notional);
    cash_ -= r.notional + r.commission;
    summary.commission += r.commission;
    traded += std::abs(r.notional);
    const double after = held + delta;
    if (after == 0.0) {
      holdings_.erase(stock);
    } else {
      holdings_[stock] = after;
    }
    ledger_.records.push_back(std::move(r));
  }
  summary.cash = cash_;
  for (const auto& [stock, qty] : holdings_) summary.holdings_value += qty * last_price_.at(stock);
  summary.holdings = holdings_;
  summary.turnover = equity != 0.0 ? traded / equity : 0.0;
  ledger_.days.push_back(std::move(summary));
}

void Backtester::Close(const std::string& date, const PriceBook& prices) {
  ledger_.equity.push_back(Mark(date, prices, true));
  ledger_.equity_dates.push_back(date);
}

double AnnualizedReturn(std::span<const double> equity, double periods_per_year) {
  if (equity.size() < 2) throw ContractError("annualized_return needs at least two points");
  RequirePositive(equity, "annualized_return");
  const double growth = equity.back() / equity.front();
  return std::pow(growth, periods_per_year / static_cast<double>(equity.size() - 1)) - 1.0;
}

double MaxDrawdown(std::span<const double> equity) {
  if (equity.empty()) throw ContractError("max_drawdown needs at least one point");
  RequirePositive(equity, "max_drawdown");
  double peak = equity.front();
  double worst = 0.0;
  for (double e : equity) {
    peak = std::max(peak, e);
    worst = std::min(worst, e / peak - 1.0);
  }
  return worst;
}

RatioSummary SharpeRatio(std::span<const double> equity, double periods_per_year) {
  RatioSummary out;
  if (equity.size() < 3) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  RequirePositive(equity, "sharpe_ratio");
  std::vector<double> returns(equity.size() - 1);
  for (std::size_t i = 0; i + 1 < equity.size(); ++i) returns[i] = equity[i + 1] / equity[i] - 1.0;
  out.mean = stats::Mean(returns);
  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  if (*lo == *hi) {
    out.flag = RatioFlag::kInfinite;
    out.ratio = out.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), out.mean);
    return out;
  }
  out.flag = RatioFlag::kFinite;
  out.ratio = out.mean / stats::PopulationStd(returns) * std::sqrt(periods_per_year);
  return out;
}

BacktestReport Summarize(const TradeLedger& ledger) {
  BacktestReport report;
  const auto& e = ledger.equity;
  report.dates = ledger.equity_dates;
  const bool positive = !e.empty() && std::all_of(e.begin(), e.end(), [](double v) { return v > 0.0; });
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.arr = positive && e.size() >= 2 ? AnnualizedReturn(e) : nan;
  report.mdd = positive ? MaxDrawdown(e) : nan;
  if (positive) {
    report.sr = SharpeRatio(e);
  } else {
    report.sr.mean = nan;
    report.sr.ratio = nan;
  }
  for (double v : e) report.cumulative_returns.push_back(v / e.front() - 1.0);
  for (const auto& d : ledger.days) report.turnover.push_back(d.turnover);
  report.final_equity = e.empty() ? nan : e.back();
  for (const auto& r : ledger.records) {
    if (r.event == LedgerEvent::kReject) ++report.rejected_orders;
    if (r.event == LedgerEvent::kWarning) ++report.warnings;
  }
  return report;
}

std::string BacktestReport::ToJson() const {
  nlohmann::ordered_json j;
  j["arr"] = JsonNumber(arr);
  j["mdd"] = JsonNumber(mdd);
  j["sr"] = JsonNumber(sr.ratio);
  j["sr_flag"] = std::string(RatioFlagName(sr.flag));
  j["final_equity"] = JsonNumber(final_equity);
  j["mean_turnover"] = JsonNumber(turnover.empty() ? 0.0 : stats::Mean(turnover));
  j["rejected_orders"] = rejected_orders;
  j["warnings"] = warnings;
  j["dates"] = dates;
  j["cumulative_returns"] = cumulative_returns;
  j["turnover"] = turnover;
  return j.dump(2) + "\n";
}

std::vector<double> DatasetBenchmark(std::span<const DecisionDay> days, const PriceBook& terminal,
                                     double initial_capital) {
  std::vector<double> curve{initial_capital};
  for (std::size_t s = 0; s < days.size(); ++s) {
    const PriceBook& next = s + 1 < days.size() ? days[s + 1].prices : terminal;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& stock : days[s].stock_ids) {
      const auto now = days[s].prices.execution.find(stock);
      const auto later = next.execution.find(stock);
      if (now == days[s].prices.execution.end() || later == next.execution.end()) continue;
      sum += later->second / now->second - 1.0;
      ++count;
    }
    const double mean = count == 0 ? 0.0 : sum / static_cast<double>(count);
    curve.push_back(curve.back() * (1.0 + mean));
  }
  return curve;
}

PriceBook PricesAt(const PanelDataset& panel, std::size_t t) {
  PriceBook book;
  if (panel.market == Market::kSynthetic) throw ConfigError("synthetic panels carry no prices");
  const auto open = panel.FeatureIndex("open");
  const auto close = panel.FeatureIndex("close");
  if (!open || !close) throw DataError("panel lacks open/close columns needed for execution prices");
  for (std::size_t s = 0; s < panel.num_stocks(); ++s) {
    const std::string& id = panel.stocks[s];
    if (panel.market == Market::kChina) {
      if (t + 1 >= panel.num_dates() || !panel.IsValid(t + 1, s)) continue;
      book.execution[id] = panel.Feature(t + 1, s, *open);
      if (t < panel.num_dates() && panel.IsValid(t, s)) book.reference_close[id] = panel.Feature(t, s, *close);
    } else {
      if (t >= panel.num_dates() || !panel.IsValid(t, s)) continue;
      book.execution[id] = panel.Feature(t, s, *close);
    }
  }
  return book;
}

DatedBook TerminalPrices(const PanelDataset& panel, std::size_t t) {
  DatedBook out;
  out.date = t + 1 < panel.num_dates() ? panel.dates[t + 1] : "terminal";
  out.prices = PricesAt(panel, t + 1);
  return out;
}

BacktestRun RunBacktest(std::span<const DecisionDay> days, const DatedBook& terminal,
                        const BacktestConfig& config) {
  Backtester bt(config);
  for (const auto& d : days) bt.ExecuteDay(d);
  bt.Close(terminal.date, terminal.prices);
  BacktestRun run;
  run.ledger = bt.ledger();
  run.report = Summarize(run.ledger);
  run.benchmark = DatasetBenchmark(days, terminal.prices, config.initial_capital);
  return run;
}

}  // namespace ialpha
