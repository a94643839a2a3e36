#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ialpha/backtest.hpp"
#include "ialpha/config.hpp"
#include "ialpha/metrics.hpp"
#include "ialpha/trainer.hpp"

namespace ialpha {

// Worker cap from INVARIANT_ALPHA_THREADS (default: hardware concurrency, ≥ 1).
std::size_t WorkerLimit();

// Runs fn(i) for i in [0, n) on up to WorkerLimit() threads. The first
// exception thrown by any task is rethrown after all workers finish.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

// Model hyperparameters completed with the data's D and environment width.
ModelConfig ResolveModelConfig(const RunConfig& config, const PreparedData& data);

struct TrainingOutcome {
  FitResult fit;
  std::size_t train_batches = 0;
  std::size_t valid_batches = 0;
};

TrainingOutcome TrainFromConfig(const RunConfig& config, const PreparedData& data);

// Metrics over `batches`, every one of which must fall inside `allowed`.
// With `oracle` the realized targets stand in for the predictions.
MetricReport EvaluateBatches(const InferenceModel& model, std::span<const WindowBatch> batches,
                             const DateRange& allowed, bool oracle = false);

// Per-date predictions paired with execution prices from the raw panel.
std::vector<DecisionDay> BuildDecisionDays(const PanelDataset& raw, const InferenceModel& model,
                                           std::span<const WindowBatch> batches);

}  // namespace ialpha
