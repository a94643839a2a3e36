#include "ialpha/nn.hpp"

#include <cmath>
#include <cstring>

namespace ialpha::nn {

namespace {

Parameter MakeParam(std::string name, Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Parameter p;
  p.name = std::move(name);
  p.node = std::make_shared<ag::Node>();
  p.node->value.resize(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) p.node->value(r, c) = dist(rng);
  }
  p.node->requires_grad = true;
  return p;
}

}  // namespace

void ParameterList::Append(const ParameterList& other) {
  params_.insert(params_.end(), other.params_.begin(), other.params_.end());
}

void ParameterList::SetTrainable(bool trainable) const {
  for (const auto& p : params_) p.node->requires_grad = trainable;
}

void ParameterList::ZeroGrad() const {
  for (const auto& p : params_) p.node->grad.resize(0, 0);
}

std::size_t ParameterList::NumScalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.node->value.size());
  return n;
}

std::uint64_t ParameterList::Checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.node->value.data());
    const std::size_t len = static_cast<std::size_t>(p.node->value.size()) * sizeof(double);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

ag::Var Use(const Parameter& p) { return ag::Var(p.node); }

Linear::Linear(std::string name, Eigen::Index in, Eigen::Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = MakeParam(name + ".weight", in, out, bound, rng);
  bias_ = MakeParam(name + ".bias", 1, out, bound, rng);
}

ag::Var Linear::operator()(const ag::Var& x) const {
  return ag::Add(ag::MatMul(x, Use(weight_)), Use(bias_));
}

void Linear::Collect(std::vector<Parameter>& out) const {
  out.push_back(weight_);
  out.push_back(bias_);
}

Mlp::Mlp(std::string name, Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng)
    : first_(name + ".0", in, hidden, rng), second_(name + ".1", hidden, out, rng) {}

ag::Var Mlp::operator()(const ag::Var& x) const { return second_(ag::LeakyRelu(first_(x))); }

void Mlp::Collect(std::vector<Parameter>& out) const {
  first_.Collect(out);
  second_.Collect(out);
}

AttentiveGru::AttentiveGru(std::string name, Eigen::Index input, Eigen::Index hidden, Rng& rng)
    : hidden_(hidden),
      input_gates_(name + ".gru.input", input, 3 * hidden, rng),
      hidden_gates_(name + ".gru.hidden", hidden, 3 * hidden, rng),
      attn_proj_(name + ".attn.proj", hidden, hidden, rng),
      attn_score_(MakeParam(name + ".attn.score", hidden, 1, 1.0 / std::sqrt(static_cast<double>(hidden)), rng)) {}

ag::Var AttentiveGru::operator()(std::span<const ag::Var> steps) const {
  const Eigen::Index n = steps.front().rows();
  const Eigen::Index hs = hidden_;
  ag::Var h = ag::Var::Constant(ag::Matrix::Zero(n, hs));
  std::vector<ag::Var> states;
  std::vector<ag::Var> scores;
  states.reserve(steps.size());
  scores.reserve(steps.size());
  for (const auto& x : steps) {
    const ag::Var gx = input_gates_(x);
    const ag::Var gh = hidden_gates_(h);
    const ag::Var r = ag::Sigmoid(ag::Add(ag::SliceCols(gx, 0, hs), ag::SliceCols(gh, 0, hs)));
    const ag::Var u = ag::Sigmoid(ag::Add(ag::SliceCols(gx, hs, hs), ag::SliceCols(gh, hs, hs)));
    const ag::Var cand =
        ag::Tanh(ag::Add(ag::SliceCols(gx, 2 * hs, hs), ag::Mul(r, ag::SliceCols(gh, 2 * hs, hs))));
    h = ag::Add(cand, ag::Mul(u, ag::Sub(h, cand)));
    states.push_back(h);
    scores.push_back(ag::MatMul(ag::Tanh(attn_proj_(h)), Use(attn_score_)));
  }
  const ag::Var weights = ag::SoftmaxRows(ag::ConcatCols(scores));
  ag::Var pooled = ag::Mul(ag::SliceCols(weights, 0, 1), states[0]);
  for (std::size_t t = 1; t < states.size(); ++t) {
    pooled = ag::Add(pooled, ag::Mul(ag::SliceCols(weights, static_cast<Eigen::Index>(t), 1), states[t]));
  }
  return pooled;
}

void AttentiveGru::Collect(std::vector<Parameter>& out) const {
  input_gates_.Collect(out);
  hidden_gates_.Collect(out);
  attn_proj_.Collect(out);
  out.push_back(attn_score_);
}

}  // namespace ialpha::nn
