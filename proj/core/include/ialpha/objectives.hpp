#pragma once

#include <Eigen/Dense>

#include <span>

#include "ialpha/autograd.hpp"
#include "ialpha/models.hpp"

namespace ialpha {

struct LossCoefficients {
  double alpha = 1.0;  // ranking term
  double beta = 1.0;   // KL term
  double theta = 1.0;  // reconstruction term
};

// Component values of one evaluated objective. `total` is
// pred + alpha·rank + beta·kld + theta·recon.
struct LossBundle {
  double pred = 0.0;
  double rank = 0.0;
  double kld = 0.0;
  double recon = 0.0;
  double total = 0.0;
  LossCoefficients coefficients;
};

struct EvaluatedLoss {
  LossBundle bundle;
  ag::Var total;  // differentiable root
};

// ((rank(y) − mean) / std)² with average-tie ranks and population std. Falls
// back to all-ones when N < 2 or every y is tied.
Eigen::VectorXd SampleWeights(std::span<const double> y);
inline Eigen::VectorXd SampleWeights(const Eigen::VectorXd& y) {
  return SampleWeights(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

// (1/N) Σ (w_i y_i − w_i ŷ_i)².
ag::Var WeightedMse(const ag::Var& y, const ag::Var& prediction, const Eigen::VectorXd& weights);

// Closed-form KL(p ‖ q) between diagonal Gaussians, summed over dimensions.
ag::Var GaussianKld(const GaussianLatent& p, const GaussianLatent& q);

// Mean squared error over all entries.
ag::Var ReconMse(const ag::Var& x, const ag::Var& reconstruction);

// L = wmse(y, ŷ) + α Σ_ij w_i w_j max(0, −Δŷ Δy) + β KL(post ‖ prior).
EvaluatedLoss TotalPredictionLoss(const ag::Var& y, const ag::Var& prediction,
                                  const GaussianLatent& posterior, const GaussianLatent& prior,
                                  const Eigen::VectorXd& weights, const LossCoefficients& coefficients,
                                  const ag::HingeOptions& hinge = {});

struct SelectionInputs {
  ag::Var prediction_env;
  ag::Var prediction_inv;
  GaussianLatent prior_env;
  GaussianLatent prior_inv;
  GaussianLatent posterior_env;
  GaussianLatent posterior_inv;
  ag::Var x;
  ag::Var reconstruction;
};

// L = wmse(ŷ_env, ŷ_inv) + α hinge(ŷ_env, ŷ_inv) + β [KL(prior_inv ‖ prior_env) +
// KL(post_env ‖ post_inv)] + θ recon_mse(X, X̂).
EvaluatedLoss TotalSelectionLoss(const SelectionInputs& in, const Eigen::VectorXd& weights,
                                 const LossCoefficients& coefficients, const ag::HingeOptions& hinge = {});

// Plain-value conveniences over the differentiable definitions.
double WeightedMse(std::span<const double> y, std::span<const double> prediction, std::span<const double> weights);
double PairwiseHinge(std::span<const double> a, std::span<const double> b, std::span<const double> weights,
                     const ag::HingeOptions& hinge = {});
double GaussianKld(std::span<const double> mu_p, std::span<const double> sigma_p,
                   std::span<const double> mu_q, std::span<const double> sigma_q);
double ReconMse(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reconstruction);

}  // namespace ialpha
