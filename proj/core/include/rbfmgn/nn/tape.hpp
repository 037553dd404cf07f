#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

namespace rbfmgn {
struct SparseRows;
}

namespace rbfmgn::nn {

/// Dense row-major matrix of 64-bit reals.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Records a forward computation over Tensor2 values and replays it in
/// reverse to accumulate exact gradients.
///
/// Values are handles (indices into the tape). Parameter leaves accumulate
/// their gradient into caller-owned storage; every other node keeps its
/// gradient on the tape. Index lists passed to gather/scatter and the sparse
/// matrix passed to spmv are held by reference and must outlive the tape
/// (embed_rows copies its index list).
class Tape {
 public:
  using Var = int;

  Var constant(Tensor2 value);
  /// Leaf bound to a parameter; `grad` must have the shape of `value`.
  Var parameter(const Tensor2& value, Tensor2* grad);

  /// x W^T + b with x: N x in, W: out x in, b: 1 x out.
  Var linear(Var x, Var weight, Var bias);
  Var relu(Var x);
  Var add(Var a, Var b);
  /// scale * x + shift (shift is a constant of x's shape, or empty).
  Var affine(Var x, double scale, const Tensor2& shift = {});
  Var concat_cols(std::span<const Var> parts);
  /// out.row(k) = x.row(index[k])
  Var gather_rows(Var x, std::span<const int> index);
  /// out.row(index[k]) += x.row(k), out has `rows` rows.
  Var scatter_add_rows(Var x, std::span<const int> index, int rows);
  /// Copies rows [begin, begin + count).
  Var slice_rows(Var x, int begin, int count);
  /// Column vector: out = base, then out[index[k]] = x[k].
  Var embed_rows(Var x, std::span<const int> index, const Tensor2& base);
  /// A x for a column vector x.
  Var spmv(const SparseRows& A, Var x);
  /// sqrt(||x||_F^2 + extra_sq) as a 1 x 1 value.
  Var l2_norm(Var x, double extra_sq = 0.0);
  /// Sum of squares as a 1 x 1 value.
  Var sum_squares(Var x);
  /// Mean of 1 x 1 values.
  Var mean(std::span<const Var> scalars);

  const Tensor2& value(Var v) const { return nodes_[static_cast<std::size_t>(v)].value; }
  double scalar(Var v) const { return value(v)(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1 x 1 root, seeding d(root) = seed.
  void backward(Var root, double seed = 1.0);
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Tensor2* param_grad = nullptr;
    std::function<void(Tape&, const Node&)> back;
  };

  Var push(Tensor2 value, std::function<void(Tape&, const Node&)> back);
  Tensor2& grad_of(Var v);
  void accumulate(Var v, const Tensor2& g);
  template <class Expr>
  void accumulate_expr(Var v, const Expr& g);

  std::vector<Node> nodes_;
};

}  // namespace rbfmgn::nn
