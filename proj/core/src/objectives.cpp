#include "ialpha/objectives.hpp"

#include <cmath>

#include "ialpha/error.hpp"
#include "ialpha/stats.hpp"

namespace ialpha {

namespace {

ag::Var Column(std::span<const double> v) {
  return ag::Var::Constant(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

ag::Var Row(std::span<const double> v) {
  return ag::Var::Constant(
      Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

void CheckSameLength(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ContractError(std::string(what) + ": length mismatch");
}

}  // namespace

Eigen::VectorXd SampleWeights(std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (y.size() < 2) return Eigen::VectorXd::Ones(n);
  const std::vector<double> ranks = stats::AverageRanks(y);
  const double mean = stats::Mean(ranks);
  const double sd = stats::PopulationStd(ranks);
  // All-tied ranks are exactly equal, so their std is exactly zero.
  if (!(sd > 0.0)) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (ranks[static_cast<std::size_t>(i)] - mean) / sd;
    w(i) = z * z;
  }
  return w;
}

ag::Var WeightedMse(const ag::Var& y, const ag::Var& prediction, const Eigen::VectorXd& weights) {
  if (y.rows() != prediction.rows() || weights.size() != y.rows()) {
    throw ContractError("weighted_mse: shape mismatch");
  }
  const ag::Var w = ag::Var::Constant(weights);
  return ag::Mean(ag::Square(ag::Mul(w, ag::Sub(y, prediction))));
}

ag::Var GaussianKld(const GaussianLatent& p, const GaussianLatent& q) {
  if (p.mu.cols() != q.mu.cols() || p.sigma.cols() != q.sigma.cols() || p.mu.cols() != p.sigma.cols()) {
    throw ContractError("gaussian_kld: dimension mismatch");
  }
  if ((p.sigma.value().array() <= 0.0).any() || (q.sigma.value().array() <= 0.0).any()) {
    throw NumericError("gaussian_kld: sigma must be strictly positive");
  }
  // log(σq/σp) + ((σp/σq)² + ((μp − μq)/σq)²) / 2 − 1/2
  const ag::Var log_ratio = ag::Sub(ag::Log(q.sigma), ag::Log(p.sigma));
  const ag::Var spread = ag::Square(ag::Div(p.sigma, q.sigma));
  const ag::Var shift = ag::Square(ag::Div(ag::Sub(p.mu, q.mu), q.sigma));
  const ag::Var per_dim = ag::Sub(ag::Scale(ag::Add(spread, shift), 0.5), ag::Var::Scalar(0.5));
  const ag::Var total = ag::Add(log_ratio, per_dim);
  return ag::Sum(total);
}

ag::Var ReconMse(const ag::Var& x, const ag::Var& reconstruction) {
  if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols()) {
    throw ContractError("recon_mse: shape mismatch");
  }
  return ag::Mean(ag::Square(ag::Sub(x, reconstruction)));
}

EvaluatedLoss TotalPredictionLoss(const ag::Var& y, const ag::Var& prediction,
                                  const GaussianLatent& posterior, const GaussianLatent& prior,
                                  const Eigen::VectorXd& weights, const LossCoefficients& coefficients,
                                  const ag::HingeOptions& hinge) {
  const ag::Var pred = WeightedMse(y, prediction, weights);
  const ag::Var rank = ag::PairwiseHinge(prediction, y, weights, hinge);
  const ag::Var kld = GaussianKld(posterior, prior);
  const ag::Var total = ag::Add(ag::Add(pred, ag::Scale(rank, coefficients.alpha)), ag::Scale(kld, coefficients.beta));
  EvaluatedLoss out;
  out.bundle.pred = pred.item();
  out.bundle.rank = rank.item();
  out.bundle.kld = kld.item();
  out.bundle.recon = 0.0;
  out.bundle.total = total.item();
  out.bundle.coefficients = coefficients;
  out.total = total;
  return out;
}

EvaluatedLoss TotalSelectionLoss(const SelectionInputs& in, const Eigen::VectorXd& weights,
                                 const LossCoefficients& coefficients, const ag::HingeOptions& hinge) {
  const ag::Var pred = WeightedMse(in.prediction_inv, in.prediction_env, weights);
  const ag::Var rank = ag::PairwiseHinge(in.prediction_env, in.prediction_inv, weights, hinge);
  const ag::Var kld = ag::Add(GaussianKld(in.prior_inv, in.prior_env), GaussianKld(in.posterior_env, in.posterior_inv));
  const ag::Var recon = ReconMse(in.x, in.reconstruction);
  const ag::Var total =
      ag::Add(ag::Add(pred, ag::Scale(rank, coefficients.alpha)),
              ag::Add(ag::Scale(kld, coefficients.beta), ag::Scale(recon, coefficients.theta)));
  EvaluatedLoss out;
  out.bundle.pred = pred.item();
  out.bundle.rank = rank.item();
  out.bundle.kld = kld.item();
  out.bundle.recon = recon.item();
  out.bundle.total = total.item();
  out.bundle.coefficients = coefficients;
  out.total = total;
  return out;
}

double WeightedMse(std::span<const double> y, std::span<const double> prediction, std::span<const double> weights) {
  CheckSameLength(y.size(), prediction.size(), "weighted_mse");
  CheckSameLength(y.size(), weights.size(), "weighted_mse");
  return WeightedMse(Column(y), Column(prediction),
                     Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size())))
      .item();
}

double PairwiseHinge(std::span<const double> a, std::span<const double> b, std::span<const double> weights,
                     const ag::HingeOptions& hinge) {
  CheckSameLength(a.size(), b.size(), "pairwise_hinge");
  CheckSameLength(a.size(), weights.size(), "pairwise_hinge");
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return ag::PairwiseHinge(Column(a), Column(b), w, hinge).item();
}

double GaussianKld(std::span<const double> mu_p, std::span<const double> sigma_p,
                   std::span<const double> mu_q, std::span<const double> sigma_q) {
  return GaussianKld(GaussianLatent{Row(mu_p), Row(sigma_p)}, GaussianLatent{Row(mu_q), Row(sigma_q)}).item();
}

double ReconMse(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reconstruction) {
  return ReconMse(ag::Var::Constant(x), ag::Var::Constant(reconstruction)).item();
}

}  // namespace ialpha
