#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

#include "ialpha/models.hpp"
#include "ialpha/nn.hpp"
#include "ialpha/panel.hpp"
#include "ialpha/trainer.hpp"

namespace fixture {

inline std::vector<double> Normals(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline Eigen::MatrixXd NormalMatrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = d(rng);
  }
  return m;
}

// N=3, T=4, D=5, H=6, K=2.
inline ialpha::ModelConfig TinyConfig() {
  ialpha::ModelConfig c;
  c.lookback = 4;
  c.num_features = 5;
  c.hidden = 6;
  c.latent = 2;
  c.head_hidden = 5;
  c.mask_hidden = 4;
  c.recon_hidden = 7;
  c.env_dim = 3;
  c.mask_init_bias = 0.0;
  return c;
}

inline ialpha::WindowBatch RandomBatch(std::mt19937_64& rng, const ialpha::ModelConfig& c, std::size_t n,
                                       const std::string& date = "2020-01-02", std::size_t regime = 0) {
  ialpha::WindowBatch b;
  b.date = date;
  b.lookback = c.lookback;
  b.num_features = c.num_features;
  for (std::size_t i = 0; i < n; ++i) b.stock_ids.push_back("S" + std::to_string(i));
  b.x = NormalMatrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c.lookback * c.num_features));
  b.y = NormalMatrix(rng, static_cast<Eigen::Index>(n), 1);
  b.env = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(c.env_dim));
  if (c.env_dim > 0) b.env(static_cast<Eigen::Index>(regime % c.env_dim)) = 1.0;
  return b;
}

inline std::vector<double*> ValuePointers(const ialpha::nn::ParameterList& params) {
  std::vector<double*> out;
  for (const auto& p : params.items()) {
    for (Eigen::Index i = 0; i < p.node->value.size(); ++i) out.push_back(p.node->value.data() + i);
  }
  return out;
}

inline std::vector<double> Gradients(const ialpha::nn::ParameterList& params) {
  std::vector<double> out;
  for (const auto& p : params.items()) {
    for (Eigen::Index i = 0; i < p.node->value.size(); ++i) {
      out.push_back(p.node->grad.size() == 0 ? 0.0 : p.node->grad.data()[i]);
    }
  }
  return out;
}

inline std::vector<double> ToVector(const Eigen::MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace fixture
