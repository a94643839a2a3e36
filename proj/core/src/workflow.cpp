#include "ialpha/workflow.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "ialpha/error.hpp"

namespace ialpha {

std::size_t WorkerLimit() {
  std::size_t limit = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INVARIANT_ALPHA_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) limit = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("INVARIANT_ALPHA_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return limit;
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(WorkerLimit(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

ModelConfig ResolveModelConfig(const RunConfig& config, const PreparedData& data) {
  ModelConfig m = config.model;
  m.num_features = data.normalized.num_features();
  m.env_dim = data.encoder.dim();
  m.Validate();
  return m;
}

TrainingOutcome TrainFromConfig(const RunConfig& config, const PreparedData& data) {
  const std::vector<WindowBatch> train = SplitWindows(data, config, config.splits.train);
  if (train.empty()) throw DataError("training split produced no windows");
  std::vector<WindowBatch> valid;
  if (config.splits.valid) valid = SplitWindows(data, config, *config.splits.valid);
  Trainer trainer(ResolveModelConfig(config, data), config.train);
  TrainingOutcome out;
  out.train_batches = train.size();
  out.valid_batches = valid.size();
  out.fit = trainer.Fit(train, valid, {data.raw.market, data.raw.feature_names});
  return out;
}

MetricReport EvaluateBatches(const InferenceModel& model, std::span<const WindowBatch> batches,
                             const DateRange& allowed, bool oracle) {
  for (const auto& b : batches) {
    if (!allowed.Contains(b.date)) {
      throw ContractError("evaluation touched date " + b.date + " outside the test split [" + allowed.first + ", " +
                          allowed.last + "]");
    }
  }
  std::vector<CrossSection> sections(batches.size());
  ParallelFor(batches.size(), [&](std::size_t i) {
    const WindowBatch& b = batches[i];
    sections[i].date = b.date;
    sections[i].y.assign(b.y.data(), b.y.data() + b.y.size());
    if (oracle) {
      sections[i].prediction = sections[i].y;
    } else {
      const Inference out = model.Infer(b);
      sections[i].prediction.assign(out.prediction.data(), out.prediction.data() + out.prediction.size());
    }
  });
  return EvaluateCrossSections(sections);
}

std::vector<DecisionDay> BuildDecisionDays(const PanelDataset& raw, const InferenceModel& model,
                                           std::span<const WindowBatch> batches) {
  std::vector<DecisionDay> days(batches.size());
  ParallelFor(batches.size(), [&](std::size_t i) {
    const WindowBatch& b = batches[i];
    const Inference out = model.Infer(b);
    days[i].date = b.date;
    days[i].stock_ids = b.stock_ids;
    days[i].predictions.assign(out.prediction.data(), out.prediction.data() + out.prediction.size());
    days[i].prices = PricesAt(raw, b.date_index);
  });
  return days;
}

}  // namespace ialpha
