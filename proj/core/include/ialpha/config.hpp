#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ialpha/backtest.hpp"
#include "ialpha/models.hpp"
#include "ialpha/panel.hpp"
#include "ialpha/synth.hpp"
#include "ialpha/trainer.hpp"

namespace ialpha {

enum class EnvironmentKind { kCalendar, kRegime };

struct SplitConfig {
  DateRange train;
  std::optional<DateRange> valid;
  std::optional<DateRange> test;
};

// One JSON document drives every subcommand; see README for the grammar.
// Relative paths resolve against the directory holding the config file.
struct RunConfig {
  Market market = Market::kSynthetic;
  std::vector<std::filesystem::path> data_paths;
  std::vector<std::string> expected_features;  // optional schema check
  SplitConfig splits;
  EnvironmentKind environment = EnvironmentKind::kCalendar;
  std::size_t regime_period = 0;
  ModelConfig model;
  TrainConfig train;
  BacktestConfig backtest;
  SynthSpec synth;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  // Parses and validates the document; seed is propagated into train/synth
  // unless they set their own.
  static RunConfig FromJson(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);

  // Splits are disjoint and ordered train < valid < test.
  void ValidateSplits() const;
  void ValidateDataPaths() const;
};

// Raw panel (prices for backtests), normalized panel (model inputs), targets
// and the environment encoder fitted on the training split.
struct PreparedData {
  PanelDataset raw;
  PanelDataset normalized;
  TargetPanel targets;
  EnvironmentEncoder encoder;
};

PreparedData PrepareData(const RunConfig& config);
PreparedData PrepareData(PanelDataset raw, const RunConfig& config);

std::vector<WindowBatch> SplitWindows(const PreparedData& data, const RunConfig& config, const DateRange& range);

}  // namespace ialpha
