#include "ialpha/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "ialpha/error.hpp"

namespace ialpha {

namespace {

double CosineAnneal(double start, double end, double pct) {
  return end + (start - end) / 2.0 * (std::cos(std::numbers::pi * pct) + 1.0);
}

}  // namespace

OneCycleSchedule::OneCycleSchedule(double max_lr, std::size_t total_steps, double pct_start,
                                   double div_factor, double final_div_factor)
    : max_lr_(max_lr),
      initial_lr_(max_lr / div_factor),
      min_lr_(max_lr / div_factor / final_div_factor),
      total_(total_steps) {
  if (!(max_lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (total_steps == 0) throw ConfigError("one-cycle schedule needs at least one step");
  if (!(pct_start > 0.0 && pct_start < 1.0)) throw ConfigError("pct_start must lie in (0, 1)");
  const auto rounded = static_cast<std::size_t>(std::llround(pct_start * static_cast<double>(total_steps)));
  peak_ = rounded == 0 ? 0 : std::min(rounded - 1, total_steps - 1);
}

double OneCycleSchedule::At(std::size_t step) const {
  if (step <= peak_) {
    if (peak_ == 0) return max_lr_;
    return CosineAnneal(initial_lr_, max_lr_, static_cast<double>(step) / static_cast<double>(peak_));
  }
  const std::size_t last = total_ - 1;
  if (step >= last) return min_lr_;
  return CosineAnneal(max_lr_, min_lr_,
                      static_cast<double>(step - peak_) / static_cast<double>(last - peak_));
}

Adam::Adam(nn::ParameterList params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_.items()) {
    m_.push_back(Eigen::MatrixXd::Zero(p.node->value.rows(), p.node->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.node->value.rows(), p.node->value.cols()));
  }
}

double Adam::Step(double lr, double clip_norm) {
  double sq = 0.0;
  for (const auto& p : params_.items()) {
    if (p.node->grad.size() != 0) sq += p.node->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double clip = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& node = *items[i].node;
    if (node.grad.size() == 0) continue;
    const Eigen::MatrixXd g = node.grad * clip;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    if (lr == 0.0) continue;
    node.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
  return norm;
}

}  // namespace ialpha
