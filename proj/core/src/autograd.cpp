#include "ialpha/autograd.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace ialpha::ag {

void Node::Accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var Var::Constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::Scalar(double value) { return Constant(Matrix::Constant(1, 1, value)); }

Var Var::Leaf(Matrix value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

namespace {

using Index = Eigen::Index;

Var MakeOp(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void ShapeError(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                              "x" + std::to_string(b.cols()));
}

Matrix Expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Matrix::Constant(rows, cols, m(0, 0));
  if (m.rows() == 1) return m.replicate(rows, 1);
  return m.replicate(1, cols);
}

Matrix ReduceTo(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

std::pair<Index, Index> BroadcastShape(const char* op, const Matrix& a, const Matrix& b) {
  const Index rows = std::max(a.rows(), b.rows());
  const Index cols = std::max(a.cols(), b.cols());
  auto ok = [&](const Matrix& m) {
    return (m.rows() == rows || m.rows() == 1) && (m.cols() == cols || m.cols() == 1);
  };
  if (!ok(a) || !ok(b)) ShapeError(op, a, b);
  return {rows, cols};
}

template <typename Fn, typename Deriv>
Var Unary(const Var& a, Fn fn, Deriv deriv) {
  Matrix out = a.value().unaryExpr(fn);
  return MakeOp(std::move(out), {a}, [deriv](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    in.Accumulate(self.grad.cwiseProduct(deriv(in.value, self.value)));
  });
}

double StableSoftplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }
double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) throw std::invalid_argument("Backward: root must be 1x1");
  if (!root.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->Accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
}

Var Add(const Var& a, const Var& b) {
  const auto [rows, cols] = BroadcastShape("Add", a.value(), b.value());
  Matrix out = Expand(a.value(), rows, cols) + Expand(b.value(), rows, cols);
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->Accumulate(ReduceTo(self.grad, in->value.rows(), in->value.cols()));
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  const auto [rows, cols] = BroadcastShape("Sub", a.value(), b.value());
  Matrix out = Expand(a.value(), rows, cols) - Expand(b.value(), rows, cols);
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) x.Accumulate(ReduceTo(self.grad, x.value.rows(), x.value.cols()));
    if (y.requires_grad) y.Accumulate(-ReduceTo(self.grad, y.value.rows(), y.value.cols()));
  });
}

Var Mul(const Var& a, const Var& b) {
  const auto [rows, cols] = BroadcastShape("Mul", a.value(), b.value());
  Matrix out = Expand(a.value(), rows, cols).cwiseProduct(Expand(b.value(), rows, cols));
  return MakeOp(std::move(out), {a, b}, [rows = rows, cols = cols](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) {
      x.Accumulate(ReduceTo(self.grad.cwiseProduct(Expand(y.value, rows, cols)), x.value.rows(), x.value.cols()));
    }
    if (y.requires_grad) {
      y.Accumulate(ReduceTo(self.grad.cwiseProduct(Expand(x.value, rows, cols)), y.value.rows(), y.value.cols()));
    }
  });
}

Var Div(const Var& a, const Var& b) {
  const auto [rows, cols] = BroadcastShape("Div", a.value(), b.value());
  Matrix out = Expand(a.value(), rows, cols).cwiseQuotient(Expand(b.value(), rows, cols));
  return MakeOp(std::move(out), {a, b}, [rows = rows, cols = cols](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    const Matrix ye = Expand(y.value, rows, cols);
    if (x.requires_grad) x.Accumulate(ReduceTo(self.grad.cwiseQuotient(ye), x.value.rows(), x.value.cols()));
    if (y.requires_grad) {
      const Matrix g = -self.grad.cwiseProduct(self.value).cwiseQuotient(ye);
      y.Accumulate(ReduceTo(g, y.value.rows(), y.value.cols()));
    }
  });
}

Var MatMul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) ShapeError("MatMul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  return MakeOp(std::move(out), {a, b}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) x.Accumulate(self.grad * y.value.transpose());
    if (y.requires_grad) y.Accumulate(x.value.transpose() * self.grad);
  });
}

Var Scale(const Var& a, double s) {
  return MakeOp(a.value() * s, {a}, [s](Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->Accumulate(self.grad * s);
  });
}

Var Transpose(const Var& a) {
  return MakeOp(a.value().transpose(), {a}, [](Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->Accumulate(self.grad.transpose());
  });
}

Var Sigmoid(const Var& a) {
  return Unary(a, [](double x) { return StableSigmoid(x); },
               [](const Matrix&, const Matrix& y) -> Matrix { return y.cwiseProduct((1.0 - y.array()).matrix()); });
}

Var Tanh(const Var& a) {
  return Unary(a, [](double x) { return std::tanh(x); },
               [](const Matrix&, const Matrix& y) -> Matrix { return (1.0 - y.array().square()).matrix(); });
}

Var LeakyRelu(const Var& a, double slope) {
  return Unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
               [slope](const Matrix& x, const Matrix&) -> Matrix {
                 return x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
               });
}

Var Softplus(const Var& a) {
  return Unary(a, [](double x) { return StableSoftplus(x); },
               [](const Matrix& x, const Matrix&) -> Matrix {
                 return x.unaryExpr([](double v) { return StableSigmoid(v); });
               });
}

Var Exp(const Var& a) {
  return Unary(a, [](double x) { return std::exp(x); },
               [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Var Log(const Var& a) {
  return Unary(a, [](double x) { return std::log(x); },
               [](const Matrix& x, const Matrix&) -> Matrix { return x.cwiseInverse(); });
}

Var Square(const Var& a) {
  return Unary(a, [](double x) { return x * x; },
               [](const Matrix& x, const Matrix&) -> Matrix { return 2.0 * x; });
}


Var SoftmaxRows(const Var& a) {
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return MakeOp(std::move(out), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    const Matrix& s = self.value;
    const Eigen::VectorXd dot = self.grad.cwiseProduct(s).rowwise().sum();
    Matrix g = s.cwiseProduct(self.grad - dot.replicate(1, s.cols()));
    in.Accumulate(g);
  });
}

Var SoftmaxCols(const Var& a) {
  Matrix out = a.value();
  for (Index c = 0; c < out.cols(); ++c) {
    const double m = out.col(c).maxCoeff();
    out.col(c) = (out.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return MakeOp(std::move(out), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    const Matrix& s = self.value;
    const Eigen::RowVectorXd dot = self.grad.cwiseProduct(s).colwise().sum();
    Matrix g = s.cwiseProduct(self.grad - dot.replicate(s.rows(), 1));
    in.Accumulate(g);
  });
}

Var Sum(const Var& a) {
  return MakeOp(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) in.Accumulate(Matrix::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0)));
  });
}

Var Mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return MakeOp(Matrix::Constant(1, 1, a.value().sum() / n), {a}, [n](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) in.Accumulate(Matrix::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0) / n));
  });
}

Var SumOverRows(const Var& a) {
  return MakeOp(a.value().colwise().sum(), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) in.Accumulate(self.grad.replicate(in.value.rows(), 1));
  });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) ShapeError("ConcatCols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return MakeOp(std::move(out), std::vector<Var>(parts.begin(), parts.end()), [](Node& self) {
    Index off = 0;
    for (auto& in : self.inputs) {
      const Index c = in->value.cols();
      if (in->requires_grad) in->Accumulate(self.grad.middleCols(off, c));
      off += c;
    }
  });
}

Var SliceCols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("SliceCols: range out of bounds");
  }
  return MakeOp(a.value().middleCols(start, count), {a}, [start, count](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Matrix g = Matrix::Zero(in.value.rows(), in.value.cols());
    g.middleCols(start, count) = self.grad;
    in.Accumulate(g);
  });
}

Var RepeatRows(const Var& a, Index rows) {
  if (a.rows() != 1) throw std::invalid_argument("RepeatRows: expects a row vector");
  return MakeOp(a.value().replicate(rows, 1), {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) in.Accumulate(self.grad.colwise().sum());
  });
}

Var StraightThroughBinarize(const Var& probabilities) {
  Matrix out = probabilities.value().unaryExpr([](double p) { return p > 0.5 ? 1.0 : 0.0; });
  return MakeOp(std::move(out), {probabilities}, [](Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->Accumulate(self.grad);
  });
}

Var PairwiseHinge(const Var& a, const Var& b, const Matrix& weights, const HingeOptions& options) {
  const Index n = a.rows();
  if (a.cols() != 1 || b.cols() != 1 || b.rows() != n || weights.rows() != n || weights.cols() != 1) {
    throw std::invalid_argument("PairwiseHinge: expects matching N x 1 inputs");
  }
  // Pairs visited: either every unordered pair i < j counted twice, or a
  // sampled multiset of ordered pairs.
  auto sampled = std::make_shared<std::vector<std::pair<Index, Index>>>();
  double scale = 2.0;
  const bool exact = n <= options.exact_limit;
  if (!exact) {
    const Index m = options.exact_limit * options.exact_limit;
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    sampled->reserve(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) {
      const Index i = pick(rng);
      const Index j = pick(rng);
      sampled->emplace_back(i, j);
    }
    scale = static_cast<double>(n) * static_cast<double>(n) / static_cast<double>(m);
  }

  const Eigen::VectorXd av = a.value().col(0);
  const Eigen::VectorXd bv = b.value().col(0);
  const Eigen::VectorXd w = weights.col(0);
  double total = 0.0;
  auto visit = [&](auto&& fn) {
    if (exact) {
      for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) fn(i, j);
      }
    } else {
      for (const auto& [i, j] : *sampled) fn(i, j);
    }
  };
  visit([&](Index i, Index j) {
    const double v = -(av(i) - av(j)) * (bv(i) - bv(j));
    if (v > 0.0) total += w(i) * w(j) * v;
  });
  Matrix out = Matrix::Constant(1, 1, scale * total);

  return MakeOp(std::move(out), {a, b}, [exact, sampled, scale, w, n](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    const double g = self.grad(0, 0) * scale;
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(n);
    const auto& av = an.value;
    const auto& bv = bn.value;
    auto visit_pair = [&](Index i, Index j) {
      const double da = av(i, 0) - av(j, 0);
      const double db = bv(i, 0) - bv(j, 0);
      if (-da * db <= 0.0) return;
      const double c = g * w(i) * w(j);
      ga(i) -= c * db;
      ga(j) += c * db;
      gb(i) -= c * da;
      gb(j) += c * da;
    };
    if (exact) {
      for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) visit_pair(i, j);
      }
    } else {
      for (const auto& [i, j] : *sampled) visit_pair(i, j);
    }
    if (an.requires_grad) an.Accumulate(ga);
    if (bn.requires_grad) bn.Accumulate(gb);
  });
}

}  // namespace ialpha::ag
