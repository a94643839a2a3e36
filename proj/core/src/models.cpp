#include "ialpha/models.hpp"

#include "ialpha/error.hpp"

namespace ialpha {

namespace {

using Index = Eigen::Index;

Index I(std::size_t v) { return static_cast<Index>(v); }

ag::Var PositiveSigma(const ag::Var& raw) {
  return ag::Add(ag::Softplus(raw), ag::Var::Scalar(kSigmaFloor));
}

void Collect(nn::ParameterList& list, const auto&... modules) {
  std::vector<nn::Parameter> out;
  (modules.Collect(out), ...);
  list.Append(nn::ParameterList(std::move(out)));
}

}  // namespace

BinarizeMode ParseBinarizeMode(std::string_view name) {
  if (name == "binary") return BinarizeMode::kBinary;
  if (name == "weighted") return BinarizeMode::kWeighted;
  throw ConfigError("unknown binarize_mode '" + std::string(name) + "' (expected binary or weighted)");
}

std::string_view BinarizeModeName(BinarizeMode mode) {
  return mode == BinarizeMode::kBinary ? "binary" : "weighted";
}

void ModelConfig::Validate() const {
  if (lookback == 0) throw ConfigError("model T must be >= 1");
  if (num_features == 0) throw ConfigError("model D must be >= 1");
  if (hidden == 0 || latent == 0 || head_hidden == 0 || mask_hidden == 0 || recon_hidden == 0) {
    throw ConfigError("model layer sizes must be >= 1");
  }
}

std::vector<ag::Var> SplitSteps(const ag::Var& x, std::size_t lookback, std::size_t features) {
  if (x.cols() != I(lookback * features)) {
    throw ContractError("input has " + std::to_string(x.cols()) + " columns, expected T*D = " +
                        std::to_string(lookback * features));
  }
  std::vector<ag::Var> steps;
  steps.reserve(lookback);
  for (std::size_t t = 0; t < lookback; ++t) steps.push_back(ag::SliceCols(x, I(t * features), I(features)));
  return steps;
}

MaskModel::MaskModel(const ModelConfig& config, nn::Rng& rng)
    : lookback_(config.lookback),
      features_(config.num_features),
      mode_(config.binarize_mode),
      net_("mask.net", I(config.num_features), I(config.mask_hidden), I(config.num_features), rng) {
  net_.output().bias().node->value.setConstant(config.mask_init_bias);
}

ag::Var MaskModel::Logits(const ag::Var& x) const {
  const auto steps = SplitSteps(x, lookback_, features_);
  std::vector<ag::Var> logits;
  logits.reserve(steps.size());
  for (const auto& s : steps) logits.push_back(net_(s));
  return ag::ConcatCols(logits);
}

MaskOutput MaskModel::Forward(const ag::Var& x) const {
  if (!x.value().allFinite()) throw NumericError("mask model received non-finite input");
  const ag::Var probs = ag::Sigmoid(Logits(x));
  MaskOutput out;
  out.mask = mode_ == BinarizeMode::kBinary ? ag::StraightThroughBinarize(probs) : probs;
  out.features = ag::Mul(out.mask, x);
  return out;
}

nn::ParameterList MaskModel::Parameters() const {
  nn::ParameterList list;
  Collect(list, net_);
  return list;
}

ReconstructionModel::ReconstructionModel(const ModelConfig& config, nn::Rng& rng)
    : net_("recon.net", I(config.lookback * config.num_features), I(config.recon_hidden),
           I(config.lookback * config.num_features), rng) {}

ag::Var ReconstructionModel::Forward(const ag::Var& features) const { return net_(features); }

nn::ParameterList ReconstructionModel::Parameters() const {
  nn::ParameterList list;
  Collect(list, net_);
  return list;
}

PredictionModule::PredictionModule(std::string name, const ModelConfig& config, bool env_aware,
                                   nn::Rng& rng)
    : name_(std::move(name)),
      lookback_(config.lookback),
      features_(config.num_features),
      env_dim_(env_aware ? config.env_dim : 0),
      env_aware_(env_aware) {
  if (env_aware && config.env_dim == 0) throw ConfigError("env-aware module needs env_dim >= 1");
  const Index h = I(config.hidden);
  const Index state = h + I(env_dim_);
  const Index hid = I(config.head_hidden);
  const Index k = I(config.latent);
  extractor_ = nn::AttentiveGru(name_ + ".extractor", I(config.num_features), h, rng);
  enc_embed_ = nn::Linear(name_ + ".encoder.embed", state + 1, hid, rng);
  enc_score_ = nn::Linear(name_ + ".encoder.score", hid, 1, rng);
  enc_mu_ = nn::Linear(name_ + ".encoder.mu", hid, k, rng);
  enc_sigma_ = nn::Linear(name_ + ".encoder.sigma", hid, k, rng);
  prior_embed_ = nn::Linear(name_ + ".predictor.embed", state, hid, rng);
  prior_score_ = nn::Linear(name_ + ".predictor.score", hid, 1, rng);
  prior_mu_ = nn::Linear(name_ + ".predictor.mu", hid, k, rng);
  prior_sigma_ = nn::Linear(name_ + ".predictor.sigma", hid, k, rng);
  alpha_hidden_ = nn::Linear(name_ + ".decoder.alpha.hidden", state, hid, rng);
  alpha_mu_ = nn::Linear(name_ + ".decoder.alpha.mu", hid, 1, rng);
  alpha_sigma_ = nn::Linear(name_ + ".decoder.alpha.sigma", hid, 1, rng);
  beta_ = nn::Mlp(name_ + ".decoder.beta", state, hid, k, rng);
}

ag::Var PredictionModule::ExtractState(const ag::Var& features,
                                       const std::optional<Eigen::RowVectorXd>& env) const {
  if (env_aware_ && !env) throw ContractError(name_ + ": env-aware module requires an environment code");
  if (!env_aware_ && env) throw ContractError(name_ + ": env-agnostic module must not receive an environment code");
  const auto steps = SplitSteps(features, lookback_, features_);
  ag::Var h = extractor_(steps);
  if (!env_aware_) return h;
  if (env->size() != I(env_dim_)) {
    throw ContractError(name_ + ": environment code has " + std::to_string(env->size()) +
                        " entries, expected " + std::to_string(env_dim_));
  }
  const ag::Var e = ag::RepeatRows(ag::Var::Constant(*env), h.rows());
  const ag::Var parts[] = {h, e};
  return ag::ConcatCols(parts);
}

GaussianLatent PredictionModule::Aggregate(const ag::Var& per_stock, const nn::Linear& score,
                                           const nn::Linear& mu, const nn::Linear& sigma) const {
  const ag::Var weights = ag::SoftmaxCols(score(per_stock));               // N × 1
  const ag::Var portfolio = ag::MatMul(ag::Transpose(weights), per_stock);  // 1 × hid
  return {mu(portfolio), PositiveSigma(sigma(portfolio))};
}

GaussianLatent PredictionModule::Encode(const ag::Var& y, const ag::Var& state) const {
  if (state.rows() == 0) throw ContractError(name_ + ": empty batch");
  if (y.rows() != state.rows() || y.cols() != 1) throw ContractError(name_ + ": y and state disagree in N");
  const ag::Var parts[] = {state, y};
  const ag::Var embed = ag::LeakyRelu(enc_embed_(ag::ConcatCols(parts)));
  return Aggregate(embed, enc_score_, enc_mu_, enc_sigma_);
}

GaussianLatent PredictionModule::PredictPrior(const ag::Var& state) const {
  if (state.rows() == 0) throw ContractError(name_ + ": empty batch");
  const ag::Var embed = ag::LeakyRelu(prior_embed_(state));
  return Aggregate(embed, prior_score_, prior_mu_, prior_sigma_);
}

PredictionModule::DecoderHeads PredictionModule::Heads(const ag::Var& state) const {
  const ag::Var hidden = ag::LeakyRelu(alpha_hidden_(state));
  return {alpha_mu_(hidden), PositiveSigma(alpha_sigma_(hidden)), beta_(state)};
}

ag::Var PredictionModule::Decode(const ag::Var& state, const ag::Var& z,
                                 const std::optional<Eigen::VectorXd>& alpha_noise) const {
  if (z.rows() != 1 || !z.value().allFinite()) throw NumericError(name_ + ": latent z must be a finite row");
  const DecoderHeads heads = Heads(state);
  ag::Var alpha = heads.alpha_mu;
  if (alpha_noise) {
    if (alpha_noise->size() != state.rows()) throw ContractError(name_ + ": alpha noise has wrong length");
    alpha = ag::Add(alpha, ag::Mul(heads.alpha_sigma, ag::Var::Constant(*alpha_noise)));
  }
  return ag::Add(alpha, ag::MatMul(heads.beta, ag::Transpose(z)));
}

nn::ParameterList PredictionModule::Parameters() const {
  nn::ParameterList list;
  Collect(list, extractor_, enc_embed_, enc_score_, enc_mu_, enc_sigma_, prior_embed_, prior_score_,
          prior_mu_, prior_sigma_, alpha_hidden_, alpha_mu_, alpha_sigma_, beta_);
  return list;
}

}  // namespace ialpha
