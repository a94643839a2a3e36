#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense matrices. Graphs are
// built eagerly by the free functions below and discarded after Backward().
namespace ialpha::ag {

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void Accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var Constant(Matrix value);
  static Var Scalar(double value);
  static Var Leaf(Matrix value, bool requires_grad);

  const Matrix& value() const { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(root)/d(root) = 1 for a 1×1 root and propagates to every reachable
// node that requires a gradient.
void Backward(const Var& root);

// Elementwise binary ops broadcast a 1×1, 1×c or r×1 operand against the other.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Div(const Var& a, const Var& b);
Var MatMul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var Transpose(const Var& a);

Var Sigmoid(const Var& a);
Var Tanh(const Var& a);
Var LeakyRelu(const Var& a, double slope = 0.01);
Var Softplus(const Var& a);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Square(const Var& a);

// Each row sums to one.
Var SoftmaxRows(const Var& a);
// Each column sums to one.
Var SoftmaxCols(const Var& a);

Var Sum(const Var& a);
Var Mean(const Var& a);
// r×c -> 1×c.
Var SumOverRows(const Var& a);

Var ConcatCols(std::span<const Var> parts);
Var SliceCols(const Var& a, Eigen::Index start, Eigen::Index count);
// 1×c -> r×c.
Var RepeatRows(const Var& a, Eigen::Index rows);

// Forward: 1[p > 0.5]. Backward: identity (straight-through).
Var StraightThroughBinarize(const Var& probabilities);

struct HingeOptions {
  Eigen::Index exact_limit = 512;
  std::uint64_t seed = 0;
};

// Σ_i Σ_j w_i w_j max(0, −(a_i − a_j)(b_i − b_j)) over ordered pairs. `a` and
// `b` are N×1; `weights` is N×1 (constant). Above `exact_limit` stocks a
// uniform sample of exact_limit² ordered pairs is drawn and rescaled to N².
Var PairwiseHinge(const Var& a, const Var& b, const Matrix& weights, const HingeOptions& options = {});

}  // namespace ialpha::ag
