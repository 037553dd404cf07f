#include "rbfmgn/nn/tape.hpp"

#include <cmath>
#include <string>

#include "rbfmgn/assembly.hpp"
#include "rbfmgn/error.hpp"

namespace rbfmgn::nn {

namespace {

void check(bool ok, const char* what) {
  if (!ok) fail(ErrorKind::Shape, what);
}

}  // namespace

Tape::Var Tape::push(Tensor2 value, std::function<void(Tape&, const Node&)> back) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, std::move(back)});
  return static_cast<Var>(nodes_.size() - 1);
}

Tensor2& Tape::grad_of(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v)];
  if (n.grad.size() == 0) n.grad = Tensor2::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <class Expr>
void Tape::accumulate_expr(Var v, const Expr& g) {
  Node& n = nodes_[static_cast<std::size_t>(v)];
  if (n.param_grad != nullptr) {
    *n.param_grad += g;
  } else if (n.back) {
    grad_of(v) += g;
  }
}

void Tape::accumulate(Var v, const Tensor2& g) { accumulate_expr(v, g); }

Tape::Var Tape::constant(Tensor2 value) { return push(std::move(value), nullptr); }

Tape::Var Tape::parameter(const Tensor2& value, Tensor2* grad) {
  check(grad != nullptr && grad->rows() == value.rows() && grad->cols() == value.cols(),
        "parameter gradient storage does not match the parameter shape");
  const Var v = push(value, nullptr);
  nodes_.back().param_grad = grad;
  return v;
}

Tape::Var Tape::linear(Var x, Var weight, Var bias) {
  const Tensor2& X = value(x);
  const Tensor2& W = value(weight);
  const Tensor2& b = value(bias);
  check(X.cols() == W.cols(), "linear: input width does not match weight");
  check(b.rows() == 1 && b.cols() == W.rows(), "linear: bias shape does not match weight");
  Tensor2 y(X.rows(), W.rows());
  y.noalias() = X * W.transpose();
  y.rowwise() += b.row(0);
  return push(std::move(y), [x, weight, bias](Tape& t, const Node& self) {
    const Tensor2& dy = self.grad;
    const Node& nx = t.nodes_[static_cast<std::size_t>(x)];
    if (nx.back || nx.param_grad) {
      Tensor2 dx(dy.rows(), t.value(weight).cols());
      dx.noalias() = dy * t.value(weight);
      t.accumulate(x, dx);
    }
    Tensor2 dw(dy.cols(), t.value(x).cols());
    dw.noalias() = dy.transpose() * t.value(x);
    t.accumulate(weight, dw);
    t.accumulate_expr(bias, dy.colwise().sum());
  });
}

Tape::Var Tape::relu(Var x) {
  Tensor2 y = value(x).cwiseMax(0.0);
  return push(std::move(y), [x](Tape& t, const Node& self) {
    t.accumulate_expr(x, (self.value.array() > 0.0).select(self.grad.array(), 0.0).matrix());
  });
}

Tape::Var Tape::add(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add: shape mismatch");
  Tensor2 y = value(a) + value(b);
  return push(std::move(y), [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

Tape::Var Tape::affine(Var x, double scale, const Tensor2& shift) {
  Tensor2 y = scale * value(x);
  if (shift.size() != 0) {
    check(shift.rows() == y.rows() && shift.cols() == y.cols(), "affine: shift shape mismatch");
    y += shift;
  }
  return push(std::move(y), [x, scale](Tape& t, const Node& self) { t.accumulate_expr(x, scale * self.grad); });
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
  check(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (const Var p : parts) {
    check(value(p).rows() == rows, "concat_cols: row mismatch");
    cols += value(p).cols();
  }
  Tensor2 y(rows, cols);
  Eigen::Index off = 0;
  for (const Var p : parts) {
    y.middleCols(off, value(p).cols()) = value(p);
    off += value(p).cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(y), [ids = std::move(ids)](Tape& t, const Node& self) {
    Eigen::Index o = 0;
    for (const Var p : ids) {
      const Eigen::Index c = t.value(p).cols();
      t.accumulate_expr(p, self.grad.middleCols(o, c));
      o += c;
    }
  });
}

Tape::Var Tape::gather_rows(Var x, std::span<const int> index) {
  const Tensor2& X = value(x);
  Tensor2 y(static_cast<Eigen::Index>(index.size()), X.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    check(index[k] >= 0 && index[k] < X.rows(), "gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(k)) = X.row(index[k]);
  }
  return push(std::move(y), [x, index](Tape& t, const Node& self) {
    const Node& nx = t.nodes_[static_cast<std::size_t>(x)];
    if (!nx.back && !nx.param_grad) return;
    Tensor2 dx = Tensor2::Zero(nx.value.rows(), nx.value.cols());
    for (std::size_t k = 0; k < index.size(); ++k) dx.row(index[k]) += self.grad.row(static_cast<Eigen::Index>(k));
    t.accumulate(x, dx);
  });
}

Tape::Var Tape::scatter_add_rows(Var x, std::span<const int> index, int rows) {
  const Tensor2& X = value(x);
  check(static_cast<Eigen::Index>(index.size()) == X.rows(), "scatter_add_rows: index length mismatch");
  Tensor2 y = Tensor2::Zero(rows, X.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    check(index[k] >= 0 && index[k] < rows, "scatter_add_rows: index out of range");
    y.row(index[k]) += X.row(static_cast<Eigen::Index>(k));
  }
  return push(std::move(y), [x, index](Tape& t, const Node& self) {
    Tensor2 dx(static_cast<Eigen::Index>(index.size()), self.grad.cols());
    for (std::size_t k = 0; k < index.size(); ++k) dx.row(static_cast<Eigen::Index>(k)) = self.grad.row(index[k]);
    t.accumulate(x, dx);
  });
}

Tape::Var Tape::slice_rows(Var x, int begin, int count) {
  const Tensor2& X = value(x);
  check(begin >= 0 && count >= 0 && begin + count <= X.rows(), "slice_rows: range out of bounds");
  Tensor2 y = X.middleRows(begin, count);
  return push(std::move(y), [x, begin, count](Tape& t, const Node& self) {
    const Node& nx = t.nodes_[static_cast<std::size_t>(x)];
    if (!nx.back && !nx.param_grad) return;
    Tensor2 dx = Tensor2::Zero(nx.value.rows(), nx.value.cols());
    dx.middleRows(begin, count) = self.grad;
    t.accumulate(x, dx);
  });
}

Tape::Var Tape::embed_rows(Var x, std::span<const int> index, const Tensor2& base) {
  const Tensor2& X = value(x);
  check(X.cols() == 1 && base.cols() == 1, "embed_rows: column vectors only");
  check(static_cast<Eigen::Index>(index.size()) == X.rows(), "embed_rows: index length mismatch");
  Tensor2 y = base;
  for (std::size_t k = 0; k < index.size(); ++k) {
    check(index[k] >= 0 && index[k] < base.rows(), "embed_rows: index out of range");
    y(index[k], 0) = X(static_cast<Eigen::Index>(k), 0);
  }
  std::vector<int> idx(index.begin(), index.end());
  return push(std::move(y), [x, index = std::move(idx)](Tape& t, const Node& self) {
    Tensor2 dx(static_cast<Eigen::Index>(index.size()), 1);
    for (std::size_t k = 0; k < index.size(); ++k) dx(static_cast<Eigen::Index>(k), 0) = self.grad(index[k], 0);
    t.accumulate(x, dx);
  });
}

Tape::Var Tape::spmv(const SparseRows& A, Var x) {
  const Tensor2& X = value(x);
  check(X.cols() == 1, "spmv: column vector expected");
  std::vector<double> y = A.multiply(std::span<const double>(X.data(), static_cast<std::size_t>(X.rows())));
  Tensor2 out = Eigen::Map<const Tensor2>(y.data(), static_cast<Eigen::Index>(y.size()), 1);
  return push(std::move(out), [&A, x](Tape& t, const Node& self) {
    Tensor2 dx = Tensor2::Zero(t.value(x).rows(), 1);
    A.multiply_transpose_add(std::span<const double>(self.grad.data(), static_cast<std::size_t>(self.grad.rows())),
                             std::span<double>(dx.data(), static_cast<std::size_t>(dx.rows())));
    t.accumulate(x, dx);
  });
}

Tape::Var Tape::l2_norm(Var x, double extra_sq) {
  const double norm = std::sqrt(value(x).squaredNorm() + extra_sq);
  Tensor2 y(1, 1);
  y(0, 0) = norm;
  return push(std::move(y), [x](Tape& t, const Node& self) {
    const double n = self.value(0, 0);
    if (n == 0.0) return;  // subgradient 0 at the origin
    t.accumulate_expr(x, (self.grad(0, 0) / n) * t.value(x));
  });
}

Tape::Var Tape::sum_squares(Var x) {
  Tensor2 y(1, 1);
  y(0, 0) = value(x).squaredNorm();
  return push(std::move(y), [x](Tape& t, const Node& self) {
    t.accumulate_expr(x, (2.0 * self.grad(0, 0)) * t.value(x));
  });
}

Tape::Var Tape::mean(std::span<const Var> scalars) {
  check(!scalars.empty(), "mean: no inputs");
  double acc = 0.0;
  for (const Var s : scalars) acc += scalar(s);
  Tensor2 y(1, 1);
  y(0, 0) = acc / static_cast<double>(scalars.size());
  std::vector<Var> ids(scalars.begin(), scalars.end());
  return push(std::move(y), [ids = std::move(ids)](Tape& t, const Node& self) {
    Tensor2 g(1, 1);
    g(0, 0) = self.grad(0, 0) / static_cast<double>(ids.size());
    for (const Var s : ids) t.accumulate(s, g);
  });
}

void Tape::backward(Var root, double seed) {
  if (root < 0 || static_cast<std::size_t>(root) >= nodes_.size()) {
    fail(ErrorKind::State, "backward called without a recorded forward pass");
  }
  check(value(root).size() == 1, "backward: root must be a scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  Tensor2 s(1, 1);
  s(0, 0) = seed;
  accumulate(root, s);
  if (nodes_[static_cast<std::size_t>(root)].param_grad) return;
  for (Var v = root; v >= 0; --v) {
    const Node& n = nodes_[static_cast<std::size_t>(v)];
    if (n.back && n.grad.size() != 0) n.back(*this, n);
  }
}

}  // namespace rbfmgn::nn
