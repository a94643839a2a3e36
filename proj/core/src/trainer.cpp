#include "ialpha/trainer.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "ialpha/error.hpp"
#include "ialpha/metrics.hpp"

namespace ialpha {

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::MatrixXd StandardNormal(nn::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  }
  return out;
}

void CheckFinite(const LossBundle& b, const std::string& date, Phase phase) {
  const std::pair<const char*, double> parts[] = {
      {"L_pred", b.pred}, {"L_rank", b.rank}, {"L_KL", b.kld}, {"L_recon", b.recon}, {"total", b.total}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite " + std::string(name) + " on batch " + date + " during " +
                         std::string(PhaseName(phase)) + " epoch");
    }
  }
}

void CheckBatch(const WindowBatch& batch, const ModelConfig& config) {
  if (batch.lookback != config.lookback || batch.num_features != config.num_features ||
      batch.x.cols() != static_cast<Eigen::Index>(config.lookback * config.num_features)) {
    throw ContractError("batch " + batch.date + " has shape T=" + std::to_string(batch.lookback) +
                        ", D=" + std::to_string(batch.num_features) + "; model expects T=" +
                        std::to_string(config.lookback) + ", D=" + std::to_string(config.num_features));
  }
  if (batch.size() == 0) throw ContractError("batch " + batch.date + " is empty");
}

void LoadInto(const nn::ParameterList& params, const std::map<std::string, Eigen::MatrixXd>& tensors) {
  for (const auto& p : params.items()) {
    const auto it = tensors.find(p.name);
    if (it == tensors.end()) {
      throw Error(ErrorKind::kIncompatibleCheckpoint, "checkpoint is missing tensor '" + p.name + "'");
    }
    if (it->second.rows() != p.node->value.rows() || it->second.cols() != p.node->value.cols()) {
      throw Error(ErrorKind::kIncompatibleCheckpoint, "tensor '" + p.name + "' has the wrong shape");
    }
    p.node->value = it->second;
  }
}

}  // namespace

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kSelection:
      return "selection";
    case Phase::kInvariant:
      return "invariant";
    case Phase::kEnvironment:
      return "environment";
  }
  return "selection";
}

Phase PhaseForEpoch(std::size_t epoch) {
  switch (epoch % 3) {
    case 0:
      return Phase::kSelection;
    case 1:
      return Phase::kInvariant;
    default:
      return Phase::kEnvironment;
  }
}

void TrainConfig::Validate() const {
  if (epochs < 3) throw ConfigError("epochs must be >= 3 (one full phase cycle)");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be >= 0");
  if (pair_limit < 2) throw ConfigError("pair_limit must be >= 2");
}

InvariantModel::InvariantModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.Validate();
  nn::Rng rng(seed);
  mask_ = MaskModel(config_, rng);
  recon_ = ReconstructionModel(config_, rng);
  inv_ = PredictionModule("inv", config_, false, rng);
  env_ = PredictionModule("env", config_, true, rng);
}

nn::ParameterList InvariantModel::SelectionParameters() const {
  nn::ParameterList list = mask_.Parameters();
  list.Append(recon_.Parameters());
  return list;
}

nn::ParameterList InvariantModel::InvariantParameters() const { return inv_.Parameters(); }
nn::ParameterList InvariantModel::EnvironmentParameters() const { return env_.Parameters(); }

std::map<std::string, Eigen::MatrixXd> InvariantModel::InferenceTensors() const {
  std::map<std::string, Eigen::MatrixXd> out;
  nn::ParameterList params = mask_.Parameters();
  params.Append(inv_.Parameters());
  for (const auto& p : params.items()) out.emplace(p.name, p.node->value);
  return out;
}

EvaluatedLoss SelectionObjective(const InvariantModel& model, const WindowBatch& batch, const ag::Var& features,
                                 const LossCoefficients& coefficients, const ag::HingeOptions& hinge) {
  const ag::Var y = ag::Var::Constant(batch.y);
  const PredictionModule& inv = model.invariant();
  const PredictionModule& env = model.environment();
  const ag::Var h_inv = inv.ExtractState(features, std::nullopt);
  const ag::Var h_env = env.ExtractState(features, batch.env);
  SelectionInputs in;
  in.prior_inv = inv.PredictPrior(h_inv);
  in.prior_env = env.PredictPrior(h_env);
  in.posterior_inv = inv.Encode(y, h_inv);
  in.posterior_env = env.Encode(y, h_env);
  in.prediction_inv = inv.Decode(h_inv, in.prior_inv.mu, std::nullopt);
  in.prediction_env = env.Decode(h_env, in.prior_env.mu, std::nullopt);
  in.x = ag::Var::Constant(batch.x);
  in.reconstruction = model.recon().Forward(features);
  return TotalSelectionLoss(in, SampleWeights(batch.y), coefficients, hinge);
}

EvaluatedLoss PredictionObjective(const PredictionModule& module, const WindowBatch& batch,
                                  const ag::Var& features, const Eigen::RowVectorXd& eps_z,
                                  const Eigen::VectorXd& eps_alpha, const LossCoefficients& coefficients,
                                  const ag::HingeOptions& hinge) {
  const ag::Var y = ag::Var::Constant(batch.y);
  std::optional<Eigen::RowVectorXd> env;
  if (module.env_aware()) env = batch.env;
  const ag::Var state = module.ExtractState(features, env);
  const GaussianLatent posterior = module.Encode(y, state);
  const GaussianLatent prior = module.PredictPrior(state);
  const ag::Var z = ag::Add(posterior.mu, ag::Mul(posterior.sigma, ag::Var::Constant(eps_z)));
  const ag::Var prediction = module.Decode(state, z, eps_alpha);
  return TotalPredictionLoss(y, prediction, posterior, prior, SampleWeights(batch.y), coefficients, hinge);
}

InferenceModel::InferenceModel(const Checkpoint& checkpoint)
    : InferenceModel(checkpoint.config, checkpoint.mask_enabled, checkpoint.tensors) {}

InferenceModel::InferenceModel(const ModelConfig& config, bool mask_enabled,
                               const std::map<std::string, Eigen::MatrixXd>& tensors)
    : config_(config), mask_enabled_(mask_enabled) {
  config_.env_dim = 0;
  config_.Validate();
  nn::Rng rng(0);
  mask_ = MaskModel(config_, rng);
  inv_ = PredictionModule("inv", config_, false, rng);
  LoadInto(mask_.Parameters(), tensors);
  LoadInto(inv_.Parameters(), tensors);
  mask_.Parameters().SetTrainable(false);
  inv_.Parameters().SetTrainable(false);
}

Inference InferenceModel::Infer(const WindowBatch& batch) const {
  if (batch.lookback != config_.lookback || batch.num_features != config_.num_features) {
    throw Error(ErrorKind::kIncompatibleCheckpoint,
                "batch has T=" + std::to_string(batch.lookback) + ", D=" + std::to_string(batch.num_features) +
                    " but checkpoint expects T=" + std::to_string(config_.lookback) +
                    ", D=" + std::to_string(config_.num_features));
  }
  return Infer(batch.x);
}

Inference InferenceModel::Infer(const Eigen::MatrixXd& x) const {
  if (x.cols() != static_cast<Eigen::Index>(config_.lookback * config_.num_features)) {
    throw Error(ErrorKind::kIncompatibleCheckpoint, "input width does not match checkpoint T*D");
  }
  const ag::Var input = ag::Var::Constant(x);
  Inference out;
  ag::Var features = input;
  if (mask_enabled_) {
    const MaskOutput m = mask_.Forward(input);
    features = m.features;
    out.mask = m.mask.value();
  } else {
    out.mask = Eigen::MatrixXd::Ones(x.rows(), x.cols());
  }
  const ag::Var state = inv_.ExtractState(features, std::nullopt);
  const GaussianLatent prior = inv_.PredictPrior(state);
  out.prediction = inv_.Decode(state, prior.mu, std::nullopt).value();
  return out;
}

void CheckCompatible(const Checkpoint& checkpoint, std::span<const std::string> feature_names,
                     std::size_t lookback) {
  const std::vector<std::string> names(feature_names.begin(), feature_names.end());
  if (checkpoint.fingerprint != SchemaFingerprint(lookback, names)) {
    throw Error(ErrorKind::kIncompatibleCheckpoint,
                "checkpoint schema fingerprint " + checkpoint.fingerprint +
                    " does not match data (D=" + std::to_string(names.size()) +
                    ", T=" + std::to_string(lookback) + ")");
  }
}

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& train_config)
    : model_config_(model_config),
      config_(train_config),
      model_(model_config, train_config.seed),
      selection_opt_(model_.SelectionParameters()),
      invariant_opt_(model_.InvariantParameters()),
      environment_opt_(model_.EnvironmentParameters()),
      noise_rng_(SplitMix(train_config.seed ^ 0x5eed5eedULL)) {
  config_.Validate();
}

void Trainer::PlanSchedule(std::size_t total_steps) {
  schedule_.emplace(config_.lr, total_steps, config_.pct_start);
}

void Trainer::SetPhase(std::optional<Phase> phase) const {
  model_.SelectionParameters().SetTrainable(phase == Phase::kSelection);
  model_.InvariantParameters().SetTrainable(phase == Phase::kInvariant);
  model_.EnvironmentParameters().SetTrainable(phase == Phase::kEnvironment);
}

ag::Var Trainer::MaskedFeatures(const WindowBatch& batch) const {
  const ag::Var x = ag::Var::Constant(batch.x);
  if (!config_.mask_enabled) return x;
  return model_.mask().Forward(x).features;
}

EvaluatedLoss Trainer::PredictionLoss(const PredictionModule& module, const WindowBatch& batch,
                                      std::uint64_t hinge_seed) {
  const Eigen::RowVectorXd eps_z = StandardNormal(noise_rng_, 1, static_cast<Eigen::Index>(model_config_.latent));
  const Eigen::VectorXd eps_alpha = StandardNormal(noise_rng_, static_cast<Eigen::Index>(batch.size()), 1);
  return PredictionObjective(module, batch, MaskedFeatures(batch), eps_z, eps_alpha, config_.coefficients,
                             {config_.pair_limit, hinge_seed});
}

EpochLog Trainer::TrainEpoch(std::span<const WindowBatch> data) {
  if (data.empty()) throw ConfigError("training data is empty");
  if (!schedule_) PlanSchedule(config_.epochs * data.size());
  EpochLog log;
  log.epoch = epoch_;
  log.phase = PhaseForEpoch(epoch_);
  const auto next_lr = [&] {
    const double lr = schedule_->At(std::min(step_, schedule_->total_steps() - 1));
    lr_history_.push_back(lr);
    ++step_;
    return lr;
  };

  if (log.phase == Phase::kSelection && !config_.mask_enabled) {
    for (std::size_t i = 0; i < data.size(); ++i) next_lr();
    log.skipped = true;
    ++epoch_;
    return log;
  }

  SetPhase(log.phase);
  Adam& opt = log.phase == Phase::kSelection   ? selection_opt_
              : log.phase == Phase::kInvariant ? invariant_opt_
                                               : environment_opt_;
  LossBundle sum;
  for (const auto& batch : data) {
    CheckBatch(batch, model_config_);
    const std::uint64_t hinge_seed = SplitMix(config_.seed * 0x100000001b3ULL + step_);
    opt.ZeroGrad();
    EvaluatedLoss loss;
    try {
      switch (log.phase) {
        case Phase::kSelection:
          loss = SelectionObjective(model_, batch, MaskedFeatures(batch), config_.coefficients,
                                    {config_.pair_limit, hinge_seed});
          break;
        case Phase::kInvariant:
          loss = PredictionLoss(model_.invariant(), batch, hinge_seed);
          break;
        case Phase::kEnvironment:
          loss = PredictionLoss(model_.environment(), batch, hinge_seed);
          break;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      throw NumericError("batch " + batch.date + " during " + std::string(PhaseName(log.phase)) +
                         " epoch: " + e.what());
    }
    CheckFinite(loss.bundle, batch.date, log.phase);
    ag::Backward(loss.total);
    opt.Step(next_lr(), config_.grad_clip);
    opt.ZeroGrad();
    sum.pred += loss.bundle.pred;
    sum.rank += loss.bundle.rank;
    sum.kld += loss.bundle.kld;
    sum.recon += loss.bundle.recon;
    sum.total += loss.bundle.total;
  }
  SetPhase(std::nullopt);
  const double n = static_cast<double>(data.size());
  log.loss = {sum.pred / n, sum.rank / n, sum.kld / n, sum.recon / n, sum.total / n, config_.coefficients};
  ++epoch_;
  return log;
}

double Trainer::ValidationRankIc(std::span<const WindowBatch> valid) const {
  const InferenceModel inference(model_config_, config_.mask_enabled, model_.InferenceTensors());
  std::vector<CrossSection> sections;
  sections.reserve(valid.size());
  for (const auto& batch : valid) {
    const Inference out = inference.Infer(batch);
    sections.push_back({batch.date, std::vector<double>(batch.y.data(), batch.y.data() + batch.y.size()),
                        std::vector<double>(out.prediction.data(), out.prediction.data() + out.prediction.size())});
  }
  const MetricReport report = EvaluateCrossSections(sections);
  return report.num_dates == 0 ? std::numeric_limits<double>::quiet_NaN() : report.rankic;
}

FitResult Trainer::Fit(std::span<const WindowBatch> train, std::span<const WindowBatch> valid,
                       const SchemaInfo& schema) {
  if (train.empty()) throw ConfigError("training split produced no batches");
  if (schema.feature_names.size() != model_config_.num_features) {
    throw ContractError("schema has " + std::to_string(schema.feature_names.size()) +
                        " features, model expects " + std::to_string(model_config_.num_features));
  }
  PlanSchedule(config_.epochs * train.size());
  FitResult result;
  std::map<std::string, Eigen::MatrixXd> best;
  bool have_best = false;
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    EpochLog log = TrainEpoch(train);
    if ((e + 1) % 3 == 0 && !valid.empty()) {
      log.valid_rankic = ValidationRankIc(valid);
      const bool better = std::isfinite(log.valid_rankic) &&
                          (!have_best || !std::isfinite(result.best_valid_rankic) ||
                           log.valid_rankic > result.best_valid_rankic);
      if (better || !have_best) {
        best = model_.InferenceTensors();
        have_best = true;
        result.best_valid_rankic = log.valid_rankic;
        result.best_epoch = e;
      }
    }
    result.log.push_back(log);
  }
  if (!have_best) {
    best = model_.InferenceTensors();
    result.best_epoch = config_.epochs - 1;
  }
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = model_config_;
  ckpt.config.env_dim = 0;
  ckpt.mask_enabled = config_.mask_enabled;
  ckpt.market = schema.market;
  ckpt.feature_names = schema.feature_names;
  ckpt.fingerprint = SchemaFingerprint(model_config_.lookback, schema.feature_names);
  ckpt.tensors = std::move(best);
  result.lr_history = lr_history_;
  return result;
}

void WriteTrainingLog(std::span<const EpochLog> log, std::ostream& out) {
  const auto fmt = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "epoch,phase,L_pred,L_rank,L_KL,L_recon,total,valid_rankic\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << PhaseName(e.phase) << (e.skipped ? "_skipped" : "") << ',' << fmt(e.loss.pred)
        << ',' << fmt(e.loss.rank) << ',' << fmt(e.loss.kld) << ',' << fmt(e.loss.recon) << ','
        << fmt(e.loss.total) << ',' << fmt(e.valid_rankic) << '\n';
  }
}

}  // namespace ialpha
