#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ialpha/autograd.hpp"
#include "ialpha/nn.hpp"

namespace ialpha {

enum class BinarizeMode { kBinary, kWeighted };

BinarizeMode ParseBinarizeMode(std::string_view name);
std::string_view BinarizeModeName(BinarizeMode mode);

inline constexpr double kSigmaFloor = 1e-6;

struct ModelConfig {
  std::size_t lookback = 20;      // T
  std::size_t num_features = 0;   // D
  std::size_t hidden = 64;        // H
  std::size_t latent = 8;         // K
  std::size_t head_hidden = 64;
  std::size_t mask_hidden = 32;
  std::size_t recon_hidden = 64;
  std::size_t env_dim = 0;
  // Initial value of the mask model's output bias; positive starts near all-ones.
  double mask_init_bias = 2.0;
  BinarizeMode binarize_mode = BinarizeMode::kBinary;

  void Validate() const;
};

struct GaussianLatent {
  ag::Var mu;     // 1 × K
  ag::Var sigma;  // 1 × K, ≥ kSigmaFloor
};

struct MaskOutput {
  ag::Var mask;      // N × (T·D)
  ag::Var features;  // N × (T·D), mask ⊙ X
};

// Per-timestep feed-forward map D → D producing mask logits.
class MaskModel {
 public:
  MaskModel() = default;
  MaskModel(const ModelConfig& config, nn::Rng& rng);

  ag::Var Logits(const ag::Var& x) const;
  MaskOutput Forward(const ag::Var& x) const;
  nn::ParameterList Parameters() const;

  BinarizeMode mode() const { return mode_; }
  void set_mode(BinarizeMode mode) { mode_ = mode; }

 private:
  std::size_t lookback_ = 0;
  std::size_t features_ = 0;
  BinarizeMode mode_ = BinarizeMode::kBinary;
  nn::Mlp net_;
};

// Feed-forward map R^{T·D} → R^{T·D} over masked features.
class ReconstructionModel {
 public:
  ReconstructionModel() = default;
  ReconstructionModel(const ModelConfig& config, nn::Rng& rng);

  ag::Var Forward(const ag::Var& features) const;
  nn::ParameterList Parameters() const;

 private:
  nn::Mlp net_;
};

// State extractor + encoder + decoder + predictor. When `env_aware`, the
// environment code is concatenated to the extracted state before every head.
class PredictionModule {
 public:
  PredictionModule() = default;
  PredictionModule(std::string name, const ModelConfig& config, bool env_aware, nn::Rng& rng);

  // `features` is N × (T·D); `env` is 1 × E and must be present iff env-aware.
  ag::Var ExtractState(const ag::Var& features, const std::optional<Eigen::RowVectorXd>& env) const;
  GaussianLatent Encode(const ag::Var& y, const ag::Var& state) const;
  GaussianLatent PredictPrior(const ag::Var& state) const;

  struct DecoderHeads {
    ag::Var alpha_mu;     // N × 1
    ag::Var alpha_sigma;  // N × 1
    ag::Var beta;         // N × K
  };
  DecoderHeads Heads(const ag::Var& state) const;
  // z is 1 × K. When `alpha_noise` is given (N × 1 standard normals) α is
  // reparameterized as μ_α + σ_α ⊙ ε; otherwise α = μ_α.
  ag::Var Decode(const ag::Var& state, const ag::Var& z,
                 const std::optional<Eigen::VectorXd>& alpha_noise) const;

  nn::ParameterList Parameters() const;
  bool env_aware() const { return env_aware_; }
  const std::string& name() const { return name_; }

 private:
  GaussianLatent Aggregate(const ag::Var& per_stock, const nn::Linear& score, const nn::Linear& mu,
                           const nn::Linear& sigma) const;

  std::string name_;
  std::size_t lookback_ = 0;
  std::size_t features_ = 0;
  std::size_t env_dim_ = 0;
  bool env_aware_ = false;
  nn::AttentiveGru extractor_;
  nn::Linear enc_embed_;
  nn::Linear enc_score_;
  nn::Linear enc_mu_;
  nn::Linear enc_sigma_;
  nn::Linear prior_embed_;
  nn::Linear prior_score_;
  nn::Linear prior_mu_;
  nn::Linear prior_sigma_;
  nn::Linear alpha_hidden_;
  nn::Linear alpha_mu_;
  nn::Linear alpha_sigma_;
  nn::Mlp beta_;
};

// Splits an N × (T·D) matrix into T column blocks of width D.
std::vector<ag::Var> SplitSteps(const ag::Var& x, std::size_t lookback, std::size_t features);

}  // namespace ialpha
