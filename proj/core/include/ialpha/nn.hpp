#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ialpha/autograd.hpp"

namespace ialpha::nn {

struct Parameter {
  std::string name;
  std::shared_ptr<ag::Node> node;
};

// A named, ordered view over parameters owned by modules.
class ParameterList {
 public:
  ParameterList() = default;
  explicit ParameterList(std::vector<Parameter> params) : params_(std::move(params)) {}

  void Append(const ParameterList& other);
  void SetTrainable(bool trainable) const;
  void ZeroGrad() const;
  std::size_t NumScalars() const;
  // FNV-1a over the raw bytes of every value.
  std::uint64_t Checksum() const;

  const std::vector<Parameter>& items() const { return params_; }
  std::vector<Parameter>& items() { return params_; }
  std::size_t size() const { return params_.size(); }

 private:
  std::vector<Parameter> params_;
};

using Rng = std::mt19937_64;

ag::Var Use(const Parameter& p);

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, Eigen::Index in, Eigen::Index out, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  void Collect(std::vector<Parameter>& out) const;
  Parameter& bias() { return bias_; }
  Parameter& weight() { return weight_; }

 private:
  Parameter weight_;  // in × out
  Parameter bias_;    // 1 × out
};

// Linear → LeakyReLU → Linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  void Collect(std::vector<Parameter>& out) const;
  Linear& output() { return second_; }

 private:
  Linear first_;
  Linear second_;
};

// Single-layer gated recurrent unit followed by additive attention over the
// hidden states of all steps.
class AttentiveGru {
 public:
  AttentiveGru() = default;
  AttentiveGru(std::string name, Eigen::Index input, Eigen::Index hidden, Rng& rng);

  // `steps` holds T inputs of shape N × input; returns N × hidden.
  ag::Var operator()(std::span<const ag::Var> steps) const;
  void Collect(std::vector<Parameter>& out) const;
  Eigen::Index hidden() const { return hidden_; }

 private:
  Eigen::Index hidden_ = 0;
  Linear input_gates_;   // x → [r | u | n]
  Linear hidden_gates_;  // h → [r | u | n]
  Linear attn_proj_;
  Parameter attn_score_;  // hidden × 1
};

}  // namespace ialpha::nn
