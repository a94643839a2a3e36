#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ialpha/backtest.hpp"
#include "ialpha/checkpoint.hpp"
#include "ialpha/config.hpp"
#include "ialpha/error.hpp"
#include "ialpha/mask_report.hpp"
#include "ialpha/synth.hpp"
#include "ialpha/trainer.hpp"
#include "ialpha/workflow.hpp"

namespace fs = std::filesystem;

namespace {

using ialpha::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

struct TrainFlags {
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::string> binarize_mode;
  bool no_mask = false;
  std::optional<std::size_t> lookback;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> latent;
};

void AddCommon(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("-c,--config", flags.config_path, "Run config (JSON)")->required();
  cmd.add_option("-o,--output-dir", flags.output_dir, "Output directory (overrides config)");
  cmd.add_option("--seed", flags.seed, "Seed (overrides config)");
}

RunConfig LoadConfig(const CommonFlags& flags) {
  RunConfig config = RunConfig::Load(flags.config_path);
  if (flags.output_dir) config.output_dir = *flags.output_dir;
  if (flags.seed) {
    config.seed = *flags.seed;
    config.train.seed = *flags.seed;
    config.synth.seed = *flags.seed;
  }
  return config;
}

void ApplyTrainFlags(const TrainFlags& flags, RunConfig& config) {
  if (flags.epochs) config.train.epochs = *flags.epochs;
  if (flags.lr) config.train.lr = *flags.lr;
  if (flags.binarize_mode) config.model.binarize_mode = ialpha::ParseBinarizeMode(*flags.binarize_mode);
  if (flags.no_mask) config.train.mask_enabled = false;
  if (flags.lookback) config.model.lookback = *flags.lookback;
  if (flags.hidden) config.model.hidden = *flags.hidden;
  if (flags.latent) config.model.latent = *flags.latent;
  config.train.Validate();
}

fs::path PrepareOutput(const RunConfig& config, const CommonFlags& flags) {
  fs::create_directories(config.output_dir);
  const fs::path copy = config.output_dir / "config.json";
  if (!fs::exists(copy) || !fs::equivalent(copy, flags.config_path)) {
    fs::copy_file(flags.config_path, copy, fs::copy_options::overwrite_existing);
  }
  return config.output_dir;
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ialpha::DataError("cannot write " + path.string());
  out << content;
}

template <typename Fn>
void WriteWith(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ialpha::DataError("cannot write " + path.string());
  fn(out);
}

const ialpha::DateRange& RequireTest(const RunConfig& config) {
  if (!config.splits.test) throw ialpha::ConfigError("config has no test split");
  return *config.splits.test;
}

struct LoadedModel {
  ialpha::PreparedData data;
  ialpha::Checkpoint checkpoint;
  std::optional<ialpha::InferenceModel> model;
  std::vector<ialpha::WindowBatch> test;
};

LoadedModel LoadForEvaluation(const RunConfig& config, const std::string& checkpoint_path) {
  LoadedModel out;
  out.data = ialpha::PrepareData(config);
  out.checkpoint = ialpha::Checkpoint::Load(checkpoint_path);
  ialpha::CheckCompatible(out.checkpoint, out.data.raw.feature_names, out.checkpoint.config.lookback);
  out.model.emplace(out.checkpoint);
  RunConfig windows_config = config;
  windows_config.model.lookback = out.checkpoint.config.lookback;
  out.test = ialpha::SplitWindows(out.data, windows_config, RequireTest(config));
  if (out.test.empty()) throw ialpha::DataError("test split produced no windows");
  return out;
}

int RunSynth(const CommonFlags& flags) {
  RunConfig config = LoadConfig(flags);
  const ialpha::SynthData synth = ialpha::GenerateSynthetic(config.synth);
  const fs::path dir = PrepareOutput(config, flags);
  WriteWith(dir / "panel.csv", [&](std::ostream& out) { ialpha::WritePanelCsv(synth.panel, out); });
  WriteWith(dir / "truth.json", [&](std::ostream& out) { ialpha::WriteTruthJson(synth.truth, out); });
  std::cout << "wrote " << (dir / "panel.csv").string() << " (" << synth.panel.num_dates() << " dates, "
            << synth.panel.num_stocks() << " stocks, " << synth.panel.num_features() << " features)\n";
  return 0;
}

int RunTrain(const CommonFlags& flags, const TrainFlags& train_flags) {
  RunConfig config = LoadConfig(flags);
  ApplyTrainFlags(train_flags, config);
  const ialpha::PreparedData data = ialpha::PrepareData(config);
  const fs::path dir = PrepareOutput(config, flags);
  const ialpha::TrainingOutcome outcome = ialpha::TrainFromConfig(config, data);
  outcome.fit.checkpoint.Save(dir / "checkpoint.json");
  WriteWith(dir / "train_log.csv", [&](std::ostream& out) { ialpha::WriteTrainingLog(outcome.fit.log, out); });
  std::cout << "trained " << config.train.epochs << " epochs on " << outcome.train_batches
            << " dates; best validation RankIC " << outcome.fit.best_valid_rankic << " at epoch "
            << outcome.fit.best_epoch << "\n";
  return 0;
}

int RunEvaluate(const CommonFlags& flags, const std::string& checkpoint_path, bool oracle) {
  const RunConfig config = LoadConfig(flags);
  const LoadedModel loaded = LoadForEvaluation(config, checkpoint_path);
  const ialpha::MetricReport report =
      ialpha::EvaluateBatches(*loaded.model, loaded.test, RequireTest(config), oracle);
  const fs::path dir = PrepareOutput(config, flags);
  WriteFile(dir / "metrics.json", report.ToJson());
  std::cout << "IC " << report.ic << "  ICIR " << report.icir << "  RankIC " << report.rankic << "  RankICIR "
            << report.rankicir << "  (" << report.num_dates << " dates, " << report.excluded_dates.size()
            << " excluded)\n";
  return 0;
}

void WriteBacktest(const fs::path& dir, const std::string& suffix, const ialpha::BacktestRun& run) {
  WriteWith(dir / ("ledger" + suffix + ".csv"), [&](std::ostream& out) { run.ledger.WriteCsv(out); });
  WriteWith(dir / ("equity" + suffix + ".csv"), [&](std::ostream& out) { run.ledger.WriteEquityCsv(out); });
  WriteFile(dir / ("report" + suffix + ".json"), run.report.ToJson());
}

int RunBacktestCmd(const CommonFlags& flags, const std::string& checkpoint_path, std::optional<std::size_t> k,
                   std::optional<double> commission, const std::vector<std::size_t>& sweep, bool benchmark) {
  RunConfig config = LoadConfig(flags);
  if (k) config.backtest.k = *k;
  if (commission) config.backtest.commission_rate = *commission;
  config.backtest.market = config.market;
  if (benchmark) {
    config.backtest.hold_all = true;
    config.backtest.commission_rate = 0.0;
  }
  config.backtest.Validate();
  const LoadedModel loaded = LoadForEvaluation(config, checkpoint_path);
  const std::vector<ialpha::DecisionDay> days =
      ialpha::BuildDecisionDays(loaded.data.raw, *loaded.model, loaded.test);
  const ialpha::DatedBook terminal = ialpha::TerminalPrices(loaded.data.raw, loaded.test.back().date_index);
  const fs::path dir = PrepareOutput(config, flags);
  if (sweep.empty() || benchmark) {
    const ialpha::BacktestRun run = ialpha::RunBacktest(days, terminal, config.backtest);
    WriteBacktest(dir, "", run);
    std::cout << "ARR " << run.report.arr << "  MDD " << run.report.mdd << "  SR " << run.report.sr.ratio << "\n";
    return 0;
  }
  std::vector<ialpha::BacktestRun> runs(sweep.size());
  ialpha::ParallelFor(sweep.size(), [&](std::size_t i) {
    ialpha::BacktestConfig bc = config.backtest;
    bc.k = sweep[i];
    runs[i] = ialpha::RunBacktest(days, terminal, bc);
  });
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    WriteBacktest(dir, "_k" + std::to_string(sweep[i]), runs[i]);
    std::cout << "k=" << sweep[i] << "  ARR " << runs[i].report.arr << "  MDD " << runs[i].report.mdd << "  SR "
              << runs[i].report.sr.ratio << "\n";
  }
  return 0;
}

int RunMaskReport(const CommonFlags& flags, const std::string& checkpoint_path, std::size_t top_n) {
  const RunConfig config = LoadConfig(flags);
  const LoadedModel loaded = LoadForEvaluation(config, checkpoint_path);
  const ialpha::MaskSummary summary =
      ialpha::MeanMask(*loaded.model, loaded.test, loaded.checkpoint.feature_names);
  const fs::path dir = PrepareOutput(config, flags);
  WriteWith(dir / "mean_mask.csv", [&](std::ostream& out) { summary.WriteCsv(out); });
  ialpha::TopTrades top;
  if (config.market == ialpha::Market::kSynthetic) {
    top.note = "synthetic panels carry no prices; no trades to report";
  } else {
    ialpha::BacktestConfig bc = config.backtest;
    bc.market = config.market;
    const auto days = ialpha::BuildDecisionDays(loaded.data.raw, *loaded.model, loaded.test);
    const auto terminal = ialpha::TerminalPrices(loaded.data.raw, loaded.test.back().date_index);
    const ialpha::BacktestRun run = ialpha::RunBacktest(days, terminal, bc);
    top = ialpha::TopTradeMasks(*loaded.model, run.ledger, loaded.test, top_n);
  }
  WriteFile(dir / "top_trades.json", top.ToJson(loaded.checkpoint.feature_names));
  std::cout << "mean mask over " << summary.sample_count << " windows; " << top.trades.size()
            << " top trades\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant feature selection for cross-sectional stock return prediction"};
  app.require_subcommand(1);

  CommonFlags common;
  TrainFlags train_flags;
  std::string checkpoint_path;
  bool oracle = false;
  std::optional<std::size_t> k;
  std::optional<double> commission;
  std::vector<std::size_t> sweep;
  bool benchmark = false;
  std::size_t top_n = 10;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel and its ground truth");
  AddCommon(*synth, common);

  auto* train = app.add_subcommand("train", "Train a model and write checkpoint.json + train_log.csv");
  AddCommon(*train, common);
  train->add_option("--epochs", train_flags.epochs, "Epoch count");
  train->add_option("--lr", train_flags.lr, "Peak learning rate");
  train->add_option("--binarize-mode", train_flags.binarize_mode, "binary or weighted");
  train->add_flag("--no-mask", train_flags.no_mask, "Ablation: mask fixed at all-ones, selection epochs skipped");
  train->add_option("--lookback", train_flags.lookback, "Window length T");
  train->add_option("--hidden", train_flags.hidden, "State width H");
  train->add_option("--latent", train_flags.latent, "Latent factors K");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split (metrics.json)");
  AddCommon(*evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  evaluate->add_flag("--oracle-predictions", oracle, "Debug: use realized targets as predictions");

  auto* backtest = app.add_subcommand("backtest", "TopK backtest on the test split");
  AddCommon(*backtest, common);
  backtest->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  backtest->add_option("--k", k, "Stocks per side");
  backtest->add_option("--commission", commission, "Commission rate per fill");
  backtest->add_option("--k-sweep", sweep, "List of k values; writes report_k<k>.json per value")->delimiter(',');
  backtest->add_flag("--dataset-benchmark", benchmark, "Equal-weight all stocks, zero commission");

  auto* mask_report = app.add_subcommand("mask-report", "Mean mask and top-trade masks on the test split");
  AddCommon(*mask_report, common);
  mask_report->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  mask_report->add_option("--top", top_n, "Number of top trades");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return ialpha::ExitCodeFor(ialpha::ErrorKind::kConfig);
  }

  try {
    if (*synth) return RunSynth(common);
    if (*train) return RunTrain(common, train_flags);
    if (*evaluate) return RunEvaluate(common, checkpoint_path, oracle);
    if (*backtest) return RunBacktestCmd(common, checkpoint_path, k, commission, sweep, benchmark);
    if (*mask_report) return RunMaskReport(common, checkpoint_path, top_n);
  } catch (const ialpha::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ialpha::ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
