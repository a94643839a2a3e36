#include "ialpha/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "ialpha/error.hpp"
#include "ialpha/stats.hpp"

namespace ialpha {

namespace {

std::vector<std::string_view> SplitCsvLine(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& cell : cells) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
  }
  return cells;
}

bool ParseDouble(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
  return result.ec == std::errc() && result.ptr == text.data() + text.size();
}

std::string FormatDouble(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

struct RawRow {
  std::string date;
  std::string stock;
  std::vector<double> values;
  double target = 0.0;
};

struct ParsedSource {
  std::vector<std::string> feature_names;
  std::vector<RawRow> rows;
};

ParsedSource ParseSource(std::istream& in, Market market, std::string_view source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty dataset: " + std::string(source_name) + " has no header");
  }
  const auto header = SplitCsvLine(line);
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);

  auto require = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) {
      throw DataError("schema error: " + std::string(source_name) + " missing required column '" +
                      name + "'");
    }
    return it->second;
  };

  ParsedSource parsed;
  const std::size_t stock_col = require("stock_id");
  const std::size_t date_col = require("date");
  std::optional<std::size_t> target_col;
  if (market == Market::kSynthetic) {
    target_col = require("target");
    for (auto name : header) {
      if (name != "stock_id" && name != "date" && name != "target") {
        parsed.feature_names.emplace_back(name);
      }
    }
    if (parsed.feature_names.empty()) {
      throw DataError("schema error: " + std::string(source_name) + " declares no feature columns");
    }
  } else {
    parsed.feature_names = market == Market::kChina ? ChinaFeatureNames() : UsFeatureNames();
  }
  std::vector<std::size_t> feature_cols;
  for (const auto& name : parsed.feature_names) feature_cols.push_back(require(name));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw DataError("parse error at " + std::string(source_name) + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    RawRow row;
    row.stock = std::string(cells[stock_col]);
    row.date = std::string(cells[date_col]);
    try {
      ParseIsoDate(row.date);
    } catch (const Error& e) {
      throw DataError("parse error at " + std::string(source_name) + ":" + std::to_string(line_no) +
                      ": " + e.what());
    }
    row.values.resize(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      if (!ParseDouble(cells[feature_cols[f]], row.values[f]) || !std::isfinite(row.values[f])) {
        throw DataError("parse error at " + std::string(source_name) + ":" +
                        std::to_string(line_no) + " column '" + parsed.feature_names[f] +
                        "': non-numeric value '" + std::string(cells[feature_cols[f]]) + "'");
      }
    }
    if (target_col) {
      if (!ParseDouble(cells[*target_col], row.target) || !std::isfinite(row.target)) {
        throw DataError("parse error at " + std::string(source_name) + ":" +
                        std::to_string(line_no) + " column 'target': non-numeric value");
      }
    }
    parsed.rows.push_back(std::move(row));
  }
  return parsed;
}

PanelDataset Assemble(std::vector<ParsedSource> sources, Market market) {
  PanelDataset panel;
  panel.market = market;
  std::size_t total_rows = 0;
  for (const auto& src : sources) {
    if (!panel.feature_names.empty() && src.feature_names != panel.feature_names) {
      throw DataError("schema error: input files declare different feature columns");
    }
    panel.feature_names = src.feature_names;
    total_rows += src.rows.size();
  }
  if (total_rows == 0) throw DataError("empty dataset: no data rows");

  std::vector<RawRow> rows;
  rows.reserve(total_rows);
  for (auto& src : sources) {
    for (auto& row : src.rows) rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return std::tie(a.date, a.stock) < std::tie(b.date, b.stock);
  });

  std::map<std::string, std::size_t> stock_index;
  for (const auto& row : rows) stock_index.emplace(row.stock, 0);
  for (auto& [id, idx] : stock_index) {
    idx = panel.stocks.size();
    panel.stocks.push_back(id);
  }
  for (const auto& row : rows) {
    if (panel.dates.empty() || panel.dates.back() != row.date) panel.dates.push_back(row.date);
  }

  const std::size_t nd = panel.dates.size();
  const std::size_t ns = panel.stocks.size();
  const std::size_t nf = panel.feature_names.size();
  panel.features.assign(nd * ns * nf, 0.0);
  panel.valid.assign(nd * ns, 0);
  if (market == Market::kSynthetic) panel.target_column.assign(nd * ns, 0.0);

  std::size_t d = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0 && rows[r].date != rows[r - 1].date) ++d;
    const std::size_t s = stock_index[rows[r].stock];
    if (panel.valid[d * ns + s]) {
      throw DataError("duplicate row for stock '" + rows[r].stock + "' on " + rows[r].date);
    }
    panel.valid[d * ns + s] = 1;
    std::copy(rows[r].values.begin(), rows[r].values.end(), panel.features.begin() + (d * ns + s) * nf);
    if (market == Market::kSynthetic) panel.target_column[d * ns + s] = rows[r].target;
  }
  return panel;
}

int DaysInMonth(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace

Market ParseMarket(std::string_view name) {
  if (name == "china" || name == "China" || name == "CN" || name == "cn") return Market::kChina;
  if (name == "us" || name == "US") return Market::kUS;
  if (name == "synthetic") return Market::kSynthetic;
  throw ConfigError("unknown market '" + std::string(name) + "' (expected china, us, synthetic)");
}

std::string_view MarketName(Market market) {
  switch (market) {
    case Market::kChina:
      return "china";
    case Market::kUS:
      return "us";
    case Market::kSynthetic:
      return "synthetic";
  }
  return "unknown";
}

const std::vector<std::string>& ChinaFeatureNames() {
  static const std::vector<std::string> kNames = {
      "open",          "high",         "low",          "close",           "pre_close",
      "change",        "pct_chg",      "volume",       "amount",          "turnover_rate",
      "turnover_rate_cmc", "volume_ratio", "pe",       "pe_ttm",          "pb",
      "ps",            "ps_ttm",       "dv_ratio",     "dv_ttm",          "total_share",
      "float_share",   "free_share",   "market_cap",   "total_cap",       "next_open",
      "overnight_change"};
  return kNames;
}

const std::vector<std::string>& UsFeatureNames() {
  static const std::vector<std::string> kNames = {"open", "high", "low", "close", "volume",
                                                  "pct_change"};
  return kNames;
}

std::optional<std::size_t> PanelDataset::FeatureIndex(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PanelDataset::DateIndex(std::string_view date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == dates.end() || *it != date) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

CalendarDate ParseIsoDate(std::string_view text) {
  auto bad = [&] { return DataError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto number = [&](std::size_t pos, std::size_t len) {
    int value = 0;
    const auto r = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (r.ec != std::errc() || r.ptr != text.data() + pos + len) throw bad();
    return value;
  };
  CalendarDate date{number(0, 4), number(5, 2), number(8, 2)};
  if (date.month < 1 || date.month > 12 || date.day < 1 ||
      date.day > DaysInMonth(date.year, date.month)) {
    throw bad();
  }
  return date;
}

PanelDataset IngestCsv(std::istream& in, Market market, std::string_view source_name) {
  std::vector<ParsedSource> sources;
  sources.push_back(ParseSource(in, market, source_name));
  return Assemble(std::move(sources), market);
}

PanelDataset IngestCsv(std::span<const std::filesystem::path> files, Market market) {
  if (files.empty()) throw DataError("empty dataset: no input files");
  std::vector<ParsedSource> sources;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    sources.push_back(ParseSource(in, market, path.string()));
  }
  return Assemble(std::move(sources), market);
}

void WritePanelCsv(const PanelDataset& panel, std::ostream& out) {
  out << "stock_id,date";
  for (const auto& name : panel.feature_names) out << ',' << name;
  if (panel.market == Market::kSynthetic) out << ",target";
  out << '\n';
  for (std::size_t d = 0; d < panel.num_dates(); ++d) {
    for (std::size_t s = 0; s < panel.num_stocks(); ++s) {
      if (!panel.IsValid(d, s)) continue;
      out << panel.stocks[s] << ',' << panel.dates[d];
      for (std::size_t f = 0; f < panel.num_features(); ++f) {
        out << ',' << FormatDouble(panel.Feature(d, s, f));
      }
      if (panel.market == Market::kSynthetic) {
        out << ',' << FormatDouble(panel.target_column[d * panel.num_stocks() + s]);
      }
      out << '\n';
    }
  }
}

TargetPanel ComputeTargets(const PanelDataset& panel) {
  TargetPanel targets;
  targets.num_dates = panel.num_dates();
  targets.num_stocks = panel.num_stocks();
  targets.values.assign(targets.num_dates * targets.num_stocks, 0.0);
  targets.valid.assign(targets.num_dates * targets.num_stocks, 0);
  const std::size_t ns = panel.num_stocks();

  switch (panel.market) {
    case Market::kSynthetic: {
      if (panel.target_column.size() != panel.valid.size()) {
        throw ConfigError("synthetic panel carries no target column");
      }
      for (std::size_t i = 0; i < panel.valid.size(); ++i) {
        targets.values[i] = panel.target_column[i];
        targets.valid[i] = panel.valid[i];
      }
      return targets;
    }
    case Market::kChina: {
      const auto open = panel.FeatureIndex("open");
      if (!open) throw ConfigError("china targets need an 'open' feature");
      for (std::size_t d = 0; d + 2 < panel.num_dates(); ++d) {
        for (std::size_t s = 0; s < ns; ++s) {
          if (!panel.IsValid(d, s) || !panel.IsValid(d + 1, s) || !panel.IsValid(d + 2, s)) continue;
          const double p1 = panel.Feature(d + 1, s, *open);
          const double p2 = panel.Feature(d + 2, s, *open);
          if (p1 <= 0.0) continue;
          targets.values[d * ns + s] = (p2 - p1) / p1;
          targets.valid[d * ns + s] = 1;
        }
      }
      return targets;
    }
    case Market::kUS: {
      const auto close = panel.FeatureIndex("close");
      if (!close) throw ConfigError("us targets need a 'close' feature");
      for (std::size_t d = 0; d + 1 < panel.num_dates(); ++d) {
        for (std::size_t s = 0; s < ns; ++s) {
          if (!panel.IsValid(d, s) || !panel.IsValid(d + 1, s)) continue;
          const double p0 = panel.Feature(d, s, *close);
          const double p1 = panel.Feature(d + 1, s, *close);
          if (p0 <= 0.0) continue;
          targets.values[d * ns + s] = (p1 - p0) / p0;
          targets.valid[d * ns + s] = 1;
        }
      }
      return targets;
    }
  }
  throw ConfigError("unknown market");
}

PanelDataset Normalize(const PanelDataset& panel) {
  PanelDataset out = panel;
  const std::size_t ns = panel.num_stocks();
  const std::size_t nf = panel.num_features();
  std::vector<double> column;
  for (std::size_t d = 0; d < panel.num_dates(); ++d) {
    for (std::size_t f = 0; f < nf; ++f) {
      column.clear();
      for (std::size_t s = 0; s < ns; ++s) {
        if (panel.IsValid(d, s)) column.push_back(panel.Feature(d, s, f));
      }
      const double mean = stats::Mean(column);
      const double sd = stats::PopulationStd(column);
      for (std::size_t s = 0; s < ns; ++s) {
        double& v = out.Feature(d, s, f);
        v = (!panel.IsValid(d, s) || !(sd > 0.0)) ? 0.0 : (v - mean) / sd;
      }
    }
  }
  return out;
}

EnvironmentEncoder EnvironmentEncoder::Calendar(std::span<const std::string> training_dates) {
  EnvironmentEncoder enc;
  enc.calendar_ = true;
  for (const auto& d : training_dates) enc.years_.push_back(ParseIsoDate(d).year);
  std::sort(enc.years_.begin(), enc.years_.end());
  enc.years_.erase(std::unique(enc.years_.begin(), enc.years_.end()), enc.years_.end());
  if (enc.years_.empty()) throw ConfigError("environment encoder needs at least one training date");
  return enc;
}

EnvironmentEncoder EnvironmentEncoder::Regime(std::size_t period, std::size_t first_regime,
                                              std::size_t last_regime) {
  if (period == 0) throw ConfigError("regime period must be >= 1");
  if (last_regime < first_regime) throw ConfigError("regime range is empty");
  EnvironmentEncoder enc;
  enc.calendar_ = false;
  enc.period_ = period;
  enc.first_regime_ = first_regime;
  enc.last_regime_ = last_regime;
  return enc;
}

std::size_t EnvironmentEncoder::dim() const {
  return calendar_ ? 12 + years_.size() : last_regime_ - first_regime_ + 1;
}

Eigen::RowVectorXd EnvironmentEncoder::Encode(std::string_view date, std::size_t date_index) const {
  Eigen::RowVectorXd code = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dim()));
  if (calendar_) {
    const CalendarDate cd = ParseIsoDate(date);
    code(cd.month - 1) = 1.0;
    // Nearest trained year; ties resolve to the earlier year.
    std::size_t best = 0;
    for (std::size_t i = 1; i < years_.size(); ++i) {
      if (std::abs(years_[i] - cd.year) < std::abs(years_[best] - cd.year)) best = i;
    }
    code(static_cast<Eigen::Index>(12 + best)) = 1.0;
  } else {
    const std::size_t regime = std::clamp(date_index / period_, first_regime_, last_regime_);
    code(static_cast<Eigen::Index>(regime - first_regime_)) = 1.0;
  }
  return code;
}

std::vector<WindowBatch> MakeWindows(const PanelDataset& panel, const TargetPanel& targets,
                                     const EnvironmentEncoder& encoder, std::size_t lookback,
                                     const DateRange& split) {
  if (lookback == 0) throw ConfigError("look-back length T must be >= 1");
  if (lookback > panel.num_dates()) {
    throw ConfigError("look-back length T=" + std::to_string(lookback) +
                      " exceeds panel length " + std::to_string(panel.num_dates()));
  }
  if (targets.num_dates != panel.num_dates() || targets.num_stocks != panel.num_stocks()) {
    throw ContractError("target panel does not match feature panel shape");
  }
  const std::size_t ns = panel.num_stocks();
  const std::size_t nf = panel.num_features();
  std::vector<WindowBatch> batches;
  for (std::size_t d = lookback - 1; d < panel.num_dates(); ++d) {
    if (!split.Contains(panel.dates[d])) continue;
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < ns; ++s) {
      if (!targets.IsValid(d, s)) continue;
      bool full = true;
      for (std::size_t k = 0; k < lookback && full; ++k) full = panel.IsValid(d - k, s);
      if (full) members.push_back(s);
    }
    if (members.empty()) continue;

    WindowBatch batch;
    batch.date = panel.dates[d];
    batch.date_index = d;
    batch.lookback = lookback;
    batch.num_features = nf;
    const auto n = static_cast<Eigen::Index>(members.size());
    batch.x.resize(n, static_cast<Eigen::Index>(lookback * nf));
    batch.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t s = members[static_cast<std::size_t>(i)];
      batch.stock_ids.push_back(panel.stocks[s]);
      for (std::size_t t = 0; t < lookback; ++t) {
        const std::size_t src = d + 1 + t - lookback;
        for (std::size_t f = 0; f < nf; ++f) {
          batch.x(i, static_cast<Eigen::Index>(t * nf + f)) = panel.Feature(src, s, f);
        }
      }
      batch.y(i) = targets.Value(d, s);
    }
    batch.env = encoder.Encode(panel.dates[d], d);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace ialpha
