#pragma once

#include <cstddef>
#include <vector>

#include "ialpha/nn.hpp"

namespace ialpha {

// One-cycle learning-rate schedule: cosine warm-up from max_lr/div_factor to
// max_lr over the first pct_start of steps, then cosine annealing down to
// max_lr/(div_factor·final_div_factor). The peak step returns max_lr exactly.
class OneCycleSchedule {
 public:
  OneCycleSchedule(double max_lr, std::size_t total_steps, double pct_start = 0.3,
                   double div_factor = 25.0, double final_div_factor = 1e4);

  double At(std::size_t step) const;
  std::size_t peak_step() const { return peak_; }
  std::size_t total_steps() const { return total_; }

 private:
  double max_lr_;
  double initial_lr_;
  double min_lr_;
  std::size_t total_;
  std::size_t peak_;
};

// Adam with global-norm gradient clipping over one parameter group. Moments
// persist across calls, so a group keeps its state across its own epochs.
class Adam {
 public:
  Adam() = default;
  explicit Adam(nn::ParameterList params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies one update with the given learning rate; returns the pre-clip
  // gradient norm. Parameters without a gradient are left untouched.
  double Step(double lr, double clip_norm);
  void ZeroGrad() const { params_.ZeroGrad(); }
  const nn::ParameterList& params() const { return params_; }
  std::size_t steps() const { return t_; }

 private:
  nn::ParameterList params_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::size_t t_ = 0;
};

}  // namespace ialpha
