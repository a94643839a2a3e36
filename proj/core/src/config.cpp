#include "ialpha/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ialpha/error.hpp"
#include "json.hpp"

namespace ialpha {

namespace {

using Json = nlohmann::json;

void RejectUnknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void Read(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

DateRange ReadRange(const Json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("split '" + name + "' must be [first, last]");
  DateRange r{j[0].get<std::string>(), j[1].get<std::string>()};
  ParseIsoDate(r.first);
  ParseIsoDate(r.last);
  if (r.last < r.first) throw ConfigError("split '" + name + "' ends before it starts");
  return r;
}

}  // namespace

RunConfig RunConfig::FromJson(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    const Json j = Json::parse(text);
    RejectUnknown(j, {"market", "data", "features", "splits", "environment", "model", "train", "backtest", "synth",
                      "output_dir", "seed"},
                  "config");
    Read(j, "seed", c.seed);
    if (j.contains("market")) c.market = ParseMarket(j.at("market").get<std::string>());
    if (j.contains("data")) {
      const auto& data = j.at("data");
      const auto paths = data.is_string() ? std::vector<std::string>{data.get<std::string>()}
                                          : data.get<std::vector<std::string>>();
      for (const auto& p : paths) {
        std::filesystem::path path(p);
        c.data_paths.push_back(path.is_absolute() || base_dir.empty() ? path : base_dir / path);
      }
    }
    Read(j, "features", c.expected_features);
    {
      std::filesystem::path out = j.contains("output_dir") ? std::filesystem::path(j.at("output_dir").get<std::string>()) : c.output_dir;
      c.output_dir = out.is_absolute() || base_dir.empty() ? out : base_dir / out;
    }
    if (j.contains("splits")) {
      const auto& s = j.at("splits");
      RejectUnknown(s, {"train", "valid", "test"}, "splits");
      if (!s.contains("train")) throw ConfigError("splits.train is required");
      c.splits.train = ReadRange(s.at("train"), "train");
      if (s.contains("valid")) c.splits.valid = ReadRange(s.at("valid"), "valid");
      if (s.contains("test")) c.splits.test = ReadRange(s.at("test"), "test");
      c.ValidateSplits();
    }
    if (j.contains("environment")) {
      const auto& e = j.at("environment");
      RejectUnknown(e, {"kind", "period"}, "environment");
      const std::string kind = e.value("kind", "calendar");
      if (kind == "calendar") {
        c.environment = EnvironmentKind::kCalendar;
      } else if (kind == "regime") {
        c.environment = EnvironmentKind::kRegime;
        Read(e, "period", c.regime_period);
        if (c.regime_period == 0) throw ConfigError("environment.period must be >= 1 for regime environments");
      } else {
        throw ConfigError("environment.kind must be calendar or regime");
      }
    } else if (c.market == Market::kSynthetic) {
      c.environment = EnvironmentKind::kRegime;
    }

    c.train.seed = c.seed;
    c.synth.seed = c.seed;
    if (j.contains("model")) {
      const auto& m = j.at("model");
      RejectUnknown(m, {"T", "H", "K", "head_hidden", "mask_hidden", "recon_hidden", "binarize_mode", "mask_init_bias"},
                    "model");
      Read(m, "T", c.model.lookback);
      Read(m, "H", c.model.hidden);
      Read(m, "K", c.model.latent);
      Read(m, "head_hidden", c.model.head_hidden);
      Read(m, "mask_hidden", c.model.mask_hidden);
      Read(m, "recon_hidden", c.model.recon_hidden);
      Read(m, "mask_init_bias", c.model.mask_init_bias);
      if (m.contains("binarize_mode")) c.model.binarize_mode = ParseBinarizeMode(m.at("binarize_mode").get<std::string>());
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      RejectUnknown(t, {"epochs", "lr", "pct_start", "alpha", "beta", "theta", "grad_clip", "mask_enabled",
                        "pair_limit", "seed"},
                    "train");
      Read(t, "epochs", c.train.epochs);
      Read(t, "lr", c.train.lr);
      Read(t, "pct_start", c.train.pct_start);
      Read(t, "alpha", c.train.coefficients.alpha);
      Read(t, "beta", c.train.coefficients.beta);
      Read(t, "theta", c.train.coefficients.theta);
      Read(t, "grad_clip", c.train.grad_clip);
      Read(t, "mask_enabled", c.train.mask_enabled);
      Read(t, "pair_limit", c.train.pair_limit);
      Read(t, "seed", c.train.seed);
      c.train.Validate();
    }
    c.backtest.market = c.market;
    if (j.contains("backtest")) {
      const auto& b = j.at("backtest");
      RejectUnknown(b, {"k", "commission_rate", "initial_capital", "main_board_limit", "second_board_limit"},
                    "backtest");
      Read(b, "k", c.backtest.k);
      Read(b, "commission_rate", c.backtest.commission_rate);
      Read(b, "initial_capital", c.backtest.initial_capital);
      Read(b, "main_board_limit", c.backtest.main_board_limit);
      Read(b, "second_board_limit", c.backtest.second_board_limit);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      RejectUnknown(s, {"num_stocks", "num_dates", "d_invariant", "d_spurious", "d_noise", "env_period", "seed",
                        "noise_std", "start_date"},
                    "synth");
      Read(s, "num_stocks", c.synth.num_stocks);
      Read(s, "num_dates", c.synth.num_dates);
      Read(s, "d_invariant", c.synth.d_invariant);
      Read(s, "d_spurious", c.synth.d_spurious);
      Read(s, "d_noise", c.synth.d_noise);
      Read(s, "env_period", c.synth.env_period);
      Read(s, "seed", c.synth.seed);
      Read(s, "noise_std", c.synth.noise_std);
      Read(s, "start_date", c.synth.start_date);
    }
    if (c.environment == EnvironmentKind::kRegime && c.regime_period == 0) c.regime_period = c.synth.env_period;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str(), path.parent_path());
}

void RunConfig::ValidateSplits() const {
  const auto ordered = [](const DateRange& a, const DateRange& b, const char* an, const char* bn) {
    if (!(a.last < b.first)) {
      throw ConfigError(std::string("split ") + an + " must end before " + bn + " starts");
    }
  };
  if (splits.valid) ordered(splits.train, *splits.valid, "train", "valid");
  if (splits.test) ordered(splits.valid ? *splits.valid : splits.train, *splits.test,
                           splits.valid ? "valid" : "train", "test");
}

void RunConfig::ValidateDataPaths() const {
  if (data_paths.empty()) throw ConfigError("config lists no data paths");
  for (const auto& p : data_paths) {
    if (!std::filesystem::exists(p)) throw ConfigError("data path does not exist: " + p.string());
  }
}

PreparedData PrepareData(const RunConfig& config) {
  config.ValidateDataPaths();
  return PrepareData(IngestCsv(config.data_paths, config.market), config);
}

PreparedData PrepareData(PanelDataset raw, const RunConfig& config) {
  if (!config.expected_features.empty() && config.expected_features != raw.feature_names) {
    throw DataError("data columns do not match the configured feature schema");
  }
  PreparedData out;
  out.targets = ComputeTargets(raw);
  out.normalized = Normalize(raw);
  std::vector<std::string> train_dates;
  std::optional<std::size_t> first, last;
  for (std::size_t d = 0; d < raw.num_dates(); ++d) {
    if (config.splits.train.Contains(raw.dates[d])) {
      train_dates.push_back(raw.dates[d]);
      if (!first) first = d;
      last = d;
    }
  }
  if (train_dates.empty()) throw DataError("training split contains no dates present in the data");
  if (config.environment == EnvironmentKind::kCalendar) {
    out.encoder = EnvironmentEncoder::Calendar(train_dates);
  } else {
    out.encoder = EnvironmentEncoder::Regime(config.regime_period, *first / config.regime_period,
                                             *last / config.regime_period);
  }
  out.raw = std::move(raw);
  return out;
}

std::vector<WindowBatch> SplitWindows(const PreparedData& data, const RunConfig& config, const DateRange& range) {
  return MakeWindows(data.normalized, data.targets, data.encoder, config.model.lookback, range);
}

}  // namespace ialpha
