#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ialpha/autograd.hpp"
#include "ialpha/trainer.hpp"
#include "oracles.hpp"

namespace gradcheck {

struct GroupResult {
  std::string group;
  double relative_error = 0.0;
  std::size_t scalars = 0;
};

// Compares the analytic gradient of `loss` w.r.t. `params` with central
// differences of `reference` (defaults to `loss`).
inline GroupResult Check(const std::string& group, const ialpha::nn::ParameterList& params,
                         const std::function<ialpha::ag::Var()>& loss,
                         const std::function<double()>& reference = {}) {
  params.SetTrainable(true);
  params.ZeroGrad();
  ialpha::ag::Backward(loss());
  const std::vector<double> analytic = fixture::Gradients(params);
  params.ZeroGrad();
  params.SetTrainable(false);
  const std::function<double()> f = reference ? reference : [&] { return loss().item(); };
  const std::vector<double> numeric = oracle::CentralDifference(fixture::ValuePointers(params), f);
  return {group, oracle::NormRelativeError(analytic, numeric), analytic.size()};
}

struct TinyProblem {
  ialpha::ModelConfig config;
  ialpha::InvariantModel model;
  ialpha::WindowBatch batch;
  Eigen::RowVectorXd eps_z;
  Eigen::VectorXd eps_alpha;

  explicit TinyProblem(std::uint64_t seed, ialpha::BinarizeMode mode = ialpha::BinarizeMode::kBinary)
      : config(WithMode(mode)), model(config, seed) {
    std::mt19937_64 rng(seed + 1000);
    batch = fixture::RandomBatch(rng, config, 3);
    eps_z = fixture::NormalMatrix(rng, 1, static_cast<Eigen::Index>(config.latent));
    eps_alpha = fixture::NormalMatrix(rng, 3, 1);
    model.SelectionParameters().SetTrainable(false);
    model.InvariantParameters().SetTrainable(false);
    model.EnvironmentParameters().SetTrainable(false);
  }

  static ialpha::ModelConfig WithMode(ialpha::BinarizeMode mode) {
    ialpha::ModelConfig c = fixture::TinyConfig();
    c.binarize_mode = mode;
    return c;
  }

  ialpha::ag::Var MaskedFeatures() const {
    return model.mask().Forward(ialpha::ag::Var::Constant(batch.x)).features;
  }
};

// Gradient checks of the three phase objectives on the tiny instance. For the
// selection objective in binary mode the reference is the straight-through
// surrogate F(θ) = (B0 + σ(l(θ)) − σ(l(θ0))) ⊙ X, whose gradient at θ0 is
// exactly what the estimator claims.
inline std::vector<GroupResult> CheckAllObjectives(std::uint64_t seed, ialpha::BinarizeMode mode) {
  using namespace ialpha;
  TinyProblem p(seed, mode);
  const LossCoefficients coeffs{1.0, 1.0, 1.0};
  const ag::HingeOptions hinge{512, 0};
  std::vector<GroupResult> out;

  const ag::Var frozen = ag::Var::Constant(p.MaskedFeatures().value());
  out.push_back(Check("environment", p.model.EnvironmentParameters(), [&] {
    return PredictionObjective(p.model.environment(), p.batch, frozen, p.eps_z, p.eps_alpha, coeffs, hinge).total;
  }));
  out.push_back(Check("invariant", p.model.InvariantParameters(), [&] {
    return PredictionObjective(p.model.invariant(), p.batch, frozen, p.eps_z, p.eps_alpha, coeffs, hinge).total;
  }));

  const ag::Var x = ag::Var::Constant(p.batch.x);
  const Eigen::MatrixXd probs0 = ag::Sigmoid(p.model.mask().Logits(x)).value();
  const Eigen::MatrixXd binary0 = (probs0.array() > 0.5).cast<double>().matrix();
  const auto selection_loss = [&] {
    return SelectionObjective(p.model, p.batch, p.MaskedFeatures(), coeffs, hinge).total;
  };
  std::function<double()> reference;
  if (mode == BinarizeMode::kBinary) {
    reference = [&] {
      const ag::Var probs = ag::Sigmoid(p.model.mask().Logits(x));
      const ag::Var surrogate = ag::Add(ag::Var::Constant(binary0 - probs0), probs);
      return SelectionObjective(p.model, p.batch, ag::Mul(surrogate, x), coeffs, hinge).total.item();
    };
  }
  out.push_back(Check("selection", p.model.SelectionParameters(), selection_loss, reference));
  return out;
}

}  // namespace gradcheck
