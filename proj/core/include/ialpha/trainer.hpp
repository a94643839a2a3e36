#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ialpha/checkpoint.hpp"
#include "ialpha/models.hpp"
#include "ialpha/objectives.hpp"
#include "ialpha/optimizer.hpp"
#include "ialpha/panel.hpp"

namespace ialpha {

enum class Phase { kSelection, kInvariant, kEnvironment };

std::string_view PhaseName(Phase phase);
// Epoch e updates Θ when e % 3 == 0, Φ^inv when 1 and Φ^env when 2.
Phase PhaseForEpoch(std::size_t epoch);

struct TrainConfig {
  std::size_t epochs = 90;
  double lr = 5e-4;
  double pct_start = 0.3;
  LossCoefficients coefficients;
  std::uint64_t seed = 0;
  double grad_clip = 5.0;
  // When false the mask is fixed at all-ones and selection epochs are skipped.
  bool mask_enabled = true;
  Eigen::Index pair_limit = 512;

  void Validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  Phase phase = Phase::kSelection;
  bool skipped = false;
  LossBundle loss;  // mean over batches
  double valid_rankic = std::numeric_limits<double>::quiet_NaN();
};

// Every trainable component. Parameter groups: Θ = mask + reconstruction,
// Φ^inv, Φ^env.
class InvariantModel {
 public:
  InvariantModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const MaskModel& mask() const { return mask_; }
  const ReconstructionModel& recon() const { return recon_; }
  const PredictionModule& invariant() const { return inv_; }
  const PredictionModule& environment() const { return env_; }

  nn::ParameterList SelectionParameters() const;
  nn::ParameterList InvariantParameters() const;
  nn::ParameterList EnvironmentParameters() const;

  // Mask and Φ^inv tensors by name: the inference footprint.
  std::map<std::string, Eigen::MatrixXd> InferenceTensors() const;

 private:
  ModelConfig config_;
  MaskModel mask_;
  ReconstructionModel recon_;
  PredictionModule inv_;
  PredictionModule env_;
};

// Θ objective for one batch given the masked features (N × T·D); both modules
// predict through their prior path.
EvaluatedLoss SelectionObjective(const InvariantModel& model, const WindowBatch& batch, const ag::Var& features,
                                 const LossCoefficients& coefficients, const ag::HingeOptions& hinge);

// Φ objective for one module with fixed reparameterization noise: eps_z is
// 1 × K, eps_alpha is N × 1.
EvaluatedLoss PredictionObjective(const PredictionModule& module, const WindowBatch& batch,
                                  const ag::Var& features, const Eigen::RowVectorXd& eps_z,
                                  const Eigen::VectorXd& eps_alpha, const LossCoefficients& coefficients,
                                  const ag::HingeOptions& hinge);

struct Inference {
  Eigen::VectorXd prediction;  // N
  Eigen::MatrixXd mask;        // N × (T·D)
};

// Mask model + environment-agnostic module restored from a checkpoint. Reads
// only the batch's feature windows.
class InferenceModel {
 public:
  explicit InferenceModel(const Checkpoint& checkpoint);
  InferenceModel(const ModelConfig& config, bool mask_enabled,
                 const std::map<std::string, Eigen::MatrixXd>& tensors);

  Inference Infer(const WindowBatch& batch) const;
  Inference Infer(const Eigen::MatrixXd& x) const;

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  bool mask_enabled_ = true;
  MaskModel mask_;
  PredictionModule inv_;
};

// Throws an incompatible-checkpoint error when the data schema disagrees.
void CheckCompatible(const Checkpoint& checkpoint, std::span<const std::string> feature_names,
                     std::size_t lookback);

struct FitResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  std::vector<double> lr_history;
  double best_valid_rankic = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_epoch = 0;
};

struct SchemaInfo {
  Market market = Market::kUS;
  std::vector<std::string> feature_names;
};

class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config);

  // Runs the next epoch of the alternating schedule over `data` in order.
  EpochLog TrainEpoch(std::span<const WindowBatch> data);

  FitResult Fit(std::span<const WindowBatch> train, std::span<const WindowBatch> valid,
                const SchemaInfo& schema);

  // Mean validation RankIC of the current inference path.
  double ValidationRankIc(std::span<const WindowBatch> valid) const;

  const InvariantModel& model() const { return model_; }
  std::size_t epoch() const { return epoch_; }
  const std::vector<double>& lr_history() const { return lr_history_; }
  // Sets the total step count of the one-cycle schedule; Fit calls this.
  void PlanSchedule(std::size_t total_steps);

 private:
  EvaluatedLoss PredictionLoss(const PredictionModule& module, const WindowBatch& batch, std::uint64_t hinge_seed);
  ag::Var MaskedFeatures(const WindowBatch& batch) const;
  void SetPhase(std::optional<Phase> phase) const;

  ModelConfig model_config_;
  TrainConfig config_;
  InvariantModel model_;
  Adam selection_opt_;
  Adam invariant_opt_;
  Adam environment_opt_;
  std::optional<OneCycleSchedule> schedule_;
  nn::Rng noise_rng_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
  std::vector<double> lr_history_;
};

void WriteTrainingLog(std::span<const EpochLog> log, std::ostream& out);

}  // namespace ialpha
