#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mpm/nn/parameters.hpp"

namespace mpm::nn {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over row-major matrices.
///
/// Batched sequence tensors are stored as (batch * seq_len) x features with
/// the rows of one sample contiguous; ops that mix rows (attention, unfold,
/// select_rows, add_position) take seq_len to recover the sample boundaries.
/// A tape constructed with record = false evaluates values only.
template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var input(Mat value);
  Var param(Parameter<T>& p);

  const Mat& value(Var v) const;
  const Mat& grad(Var v) const;

  /// x * w (+ b), b optional (1 x out).
  Var linear(Var x, Var w, Var b = {});
  /// linear with every output row computed independently of the others, so
  /// permuting the rows of x permutes the output bit-exactly.
  Var row_linear(Var x, Var w, Var b = {});
  Var add(Var a, Var b);
  Var scale(Var a, T factor);
  /// tanh approximation of GELU.
  Var gelu(Var x);
  /// Row-wise normalization with affine gamma/beta (1 x cols each).
  Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5));
  /// Multi-head scaled dot-product self attention over blocks of seq_len rows.
  /// Scores are divided by sqrt(head dimension).
  Var attention(Var q, Var k, Var v, int heads, int seq_len);
  /// Inverted dropout; identity when p == 0.
  Var dropout(Var x, T p, std::mt19937_64& rng);
  /// Adds pos (seq_len x cols) to every sample block.
  Var add_position(Var x, Var pos, int seq_len);
  /// Rows with rows[i] != 0 are replaced by token (1 x cols).
  Var replace_rows(Var x, Var token, std::span<const std::uint8_t> rows);
  /// x is rows x (joints * point_dim); masked (row, joint) points become token (1 x point_dim).
  Var substitute_points(Var x, Var token, std::span<const std::uint8_t> mask, int point_dim);
  /// Strided temporal window gather: output row (b, t) concatenates input rows
  /// b*L + t*stride - pad + i for i in [0, kernel), zero outside the sequence,
  /// with pad = (kernel - stride) / 2.
  Var unfold(Var x, int seq_len, int kernel, int stride);
  /// Output row (b, t) = input row b*L + t*stride + offset, t in [0, L/stride).
  Var select_rows(Var x, int seq_len, int stride, int offset);
  /// Mean over points of the squared Euclidean distance, points being
  /// consecutive groups of point_dim columns. Returns 1 x 1.
  Var mean_squared_distance(Var pred, const Mat& target, int point_dim);

  /// Scalar value of a 1 x 1 node.
  T scalar(Var v) const { return value(v)(0, 0); }

  /// Back-propagates from a 1 x 1 node; parameter gradients accumulate into
  /// Parameter::grad.
  void backward(Var root);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* ref = nullptr;
    Parameter<T>* param = nullptr;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Var push(Mat value, bool needs_grad, std::function<void()> back);
  Var linear_impl(Var x, Var w, Var b, bool per_row);
  bool needs(Var v) const { return v.valid() && nodes_[v.id].needs_grad; }
  Mat& grad_slot(Var v);
  void accumulate(Var v, const Mat& g);

  bool record_;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace mpm::nn
