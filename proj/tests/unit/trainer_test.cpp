#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "ialpha/error.hpp"
#include "ialpha/trainer.hpp"

namespace ialpha {
namespace {

std::vector<WindowBatch> Dataset(std::uint64_t seed, std::size_t dates, std::size_t n = 8) {
  std::mt19937_64 rng(seed);
  const ModelConfig c = fixture::TinyConfig();
  std::vector<WindowBatch> out;
  for (std::size_t d = 0; d < dates; ++d) {
    char date[16];
    std::snprintf(date, sizeof(date), "2020-02-%02zu", d + 1);
    WindowBatch b = fixture::RandomBatch(rng, c, n, date, d / 2);
    b.date_index = d;
    // A learnable signal on the last step.
    b.y += 0.5 * b.x.col(static_cast<Eigen::Index>(3 * c.num_features));
    out.push_back(std::move(b));
  }
  return out;
}

TrainConfig Tiny(std::size_t epochs = 9) {
  TrainConfig t;
  t.epochs = epochs;
  t.lr = 1e-2;
  t.seed = 3;
  return t;
}

SchemaInfo Schema() { return {Market::kSynthetic, {"a", "b", "c", "d", "e"}}; }

struct Checksums {
  std::uint64_t selection, invariant, environment;
  bool operator==(const Checksums&) const = default;
};

Checksums Sums(const InvariantModel& m) {
  return {m.SelectionParameters().Checksum(), m.InvariantParameters().Checksum(),
          m.EnvironmentParameters().Checksum()};
}

TEST(Phase, CycleOrder) {
  EXPECT_EQ(PhaseForEpoch(0), Phase::kSelection);
  EXPECT_EQ(PhaseForEpoch(1), Phase::kInvariant);
  EXPECT_EQ(PhaseForEpoch(2), Phase::kEnvironment);
  EXPECT_EQ(PhaseForEpoch(3), Phase::kSelection);
  EXPECT_EQ(PhaseName(Phase::kEnvironment), "environment");
}

TEST(Trainer, ExactlyOneGroupChangesPerEpoch) {
  const auto data = Dataset(1, 4);
  Trainer trainer(fixture::TinyConfig(), Tiny());
  for (std::size_t e = 0; e < 9; ++e) {
    const Checksums before = Sums(trainer.model());
    const EpochLog log = trainer.TrainEpoch(data);
    const Checksums after = Sums(trainer.model());
    EXPECT_EQ(log.epoch, e);
    EXPECT_EQ(log.phase, PhaseForEpoch(e));
    EXPECT_EQ(before.selection != after.selection, log.phase == Phase::kSelection) << e;
    EXPECT_EQ(before.invariant != after.invariant, log.phase == Phase::kInvariant) << e;
    EXPECT_EQ(before.environment != after.environment, log.phase == Phase::kEnvironment) << e;
  }
}

TEST(Trainer, SeededRunsReproduceLossesBitForBit) {
  const auto data = Dataset(2, 3);
  Trainer a(fixture::TinyConfig(), Tiny());
  Trainer b(fixture::TinyConfig(), Tiny());
  for (int e = 0; e < 6; ++e) {
    const EpochLog la = a.TrainEpoch(data);
    const EpochLog lb = b.TrainEpoch(data);
    EXPECT_EQ(la.loss.total, lb.loss.total);
    EXPECT_EQ(la.loss.kld, lb.loss.kld);
  }
  EXPECT_EQ(Sums(a.model()), Sums(b.model()));
}

TEST(Trainer, AblationSkipsSelectionAndKeepsMaskFixed) {
  const auto data = Dataset(3, 3);
  TrainConfig t = Tiny();
  t.mask_enabled = false;
  Trainer trainer(fixture::TinyConfig(), t);
  const auto before = trainer.model().SelectionParameters().Checksum();
  const EpochLog first = trainer.TrainEpoch(data);
  EXPECT_TRUE(first.skipped);
  trainer.TrainEpoch(data);
  trainer.TrainEpoch(data);
  EXPECT_EQ(trainer.model().SelectionParameters().Checksum(), before);
  // The schedule advances through skipped epochs.
  EXPECT_EQ(trainer.lr_history().size(), 9u);
}

TEST(Trainer, FitThreeEpochsLogsOneCycle) {
  const auto data = Dataset(4, 3);
  Trainer trainer(fixture::TinyConfig(), Tiny(3));
  const FitResult r = trainer.Fit(data, Dataset(5, 2), Schema());
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_TRUE(std::isnan(r.log[0].valid_rankic));
  EXPECT_FALSE(std::isnan(r.log[2].valid_rankic));
  std::ostringstream csv;
  WriteTrainingLog(r.log, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "epoch,phase,L_pred,L_rank,L_KL,L_recon,total,valid_rankic");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 3u);
}

TEST(Trainer, LearningRatePeaksAtConfiguredValue) {
  const auto data = Dataset(6, 4);
  Trainer trainer(fixture::TinyConfig(), Tiny(9));
  const FitResult r = trainer.Fit(data, {}, Schema());
  ASSERT_EQ(r.lr_history.size(), 36u);
  const double peak = *std::max_element(r.lr_history.begin(), r.lr_history.end());
  EXPECT_NEAR(peak, 1e-2, 1e-9);
  EXPECT_LT(r.lr_history.front(), 1e-2);
  EXPECT_LT(r.lr_history.back(), 1e-2);
}

TEST(Trainer, CheckpointBytesAreDeterministic) {
  const auto train = Dataset(7, 3);
  const auto valid = Dataset(8, 2);
  Trainer a(fixture::TinyConfig(), Tiny(6));
  Trainer b(fixture::TinyConfig(), Tiny(6));
  EXPECT_EQ(a.Fit(train, valid, Schema()).checkpoint.ToJson(), b.Fit(train, valid, Schema()).checkpoint.ToJson());
}

TEST(Trainer, Errors) {
  Trainer trainer(fixture::TinyConfig(), Tiny());
  try {
    trainer.Fit({}, {}, Schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_THROW(trainer.TrainEpoch({}), Error);
  TrainConfig bad = Tiny();
  bad.epochs = 2;
  EXPECT_THROW(bad.Validate(), Error);
  bad = Tiny();
  bad.lr = 0.0;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(Trainer, NonFiniteLossNamesBatchDate) {
  auto data = Dataset(9, 2);
  data[1].y(0) = 1e300;
  Trainer trainer(fixture::TinyConfig(), Tiny());
  trainer.TrainEpoch(Dataset(10, 2));  // Θ epoch
  try {
    trainer.TrainEpoch(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find(data[1].date), std::string::npos) << e.what();
  }
}

class InferenceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Trainer trainer(fixture::TinyConfig(), Tiny(3));
    fit_ = trainer.Fit(Dataset(11, 3), Dataset(12, 2), Schema());
  }
  FitResult fit_;
};

TEST_F(InferenceTest, IgnoresTargetsAndEnvironment) {
  const InferenceModel model(fit_.checkpoint);
  WindowBatch batch = Dataset(13, 1).front();
  const Inference base = model.Infer(batch);
  EXPECT_EQ(base.mask.rows(), static_cast<Eigen::Index>(batch.size()));
  EXPECT_EQ(base.mask.cols(), 20);
  batch.y.setRandom();
  batch.env.setConstant(7.0);
  const Inference perturbed = model.Infer(batch);
  EXPECT_EQ(perturbed.prediction, base.prediction);
  EXPECT_EQ(perturbed.mask, base.mask);
  EXPECT_EQ(model.Infer(batch).prediction, base.prediction);
}

TEST_F(InferenceTest, FootprintExcludesTrainingOnlyModules) {
  for (const auto& [name, value] : fit_.checkpoint.tensors) {
    EXPECT_TRUE(name.rfind("mask.", 0) == 0 || name.rfind("inv.", 0) == 0) << name;
  }
}

TEST_F(InferenceTest, CheckpointRoundTrip) {
  const std::string json = fit_.checkpoint.ToJson();
  const Checkpoint back = Checkpoint::FromJson(json);
  EXPECT_EQ(back.ToJson(), json);
  const WindowBatch batch = Dataset(14, 1).front();
  EXPECT_EQ(InferenceModel(back).Infer(batch).prediction, InferenceModel(fit_.checkpoint).Infer(batch).prediction);
}

TEST_F(InferenceTest, SchemaMismatchIsIncompatible) {
  const auto kind_of = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kConfig;
  };
  const std::vector<std::string> renamed = {"a", "b", "c", "d", "z"};
  EXPECT_EQ(kind_of([&] { CheckCompatible(fit_.checkpoint, renamed, 4); }), ErrorKind::kIncompatibleCheckpoint);
  EXPECT_EQ(kind_of([&] { CheckCompatible(fit_.checkpoint, Schema().feature_names, 5); }),
            ErrorKind::kIncompatibleCheckpoint);
  EXPECT_NO_THROW(CheckCompatible(fit_.checkpoint, Schema().feature_names, 4));

  Checkpoint tampered = fit_.checkpoint;
  tampered.fingerprint = "0000000000000000";
  EXPECT_EQ(kind_of([&] { Checkpoint::FromJson(tampered.ToJson()); }), ErrorKind::kIncompatibleCheckpoint);

  WindowBatch batch = Dataset(15, 1).front();
  batch.lookback = 5;
  EXPECT_EQ(kind_of([&] { InferenceModel(fit_.checkpoint).Infer(batch); }), ErrorKind::kIncompatibleCheckpoint);

  Checkpoint missing = fit_.checkpoint;
  missing.tensors.erase(missing.tensors.begin());
  EXPECT_EQ(kind_of([&] { InferenceModel{missing}; }), ErrorKind::kIncompatibleCheckpoint);
}

}  // namespace
}  // namespace ialpha
