#include "mpm/nn/tape.hpp"

#include <cmath>
#include <string>

namespace mpm::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("tape: ") + what);
}

}  // namespace

template <typename T>
Var Tape<T>::push(Mat value, bool needs_grad, std::function<void()> back) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = record_ && needs_grad;
  if (node.needs_grad) node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::input(Mat value) {
  return push(std::move(value), false, nullptr);
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p) {
  Node node;
  node.ref = &p.value;
  node.param = &p;
  node.needs_grad = record_;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
const typename Tape<T>::Mat& Tape<T>::value(Var v) const {
  require(v.valid() && v.id < static_cast<int>(nodes_.size()), "invalid variable");
  const Node& n = nodes_[v.id];
  return n.ref ? *n.ref : n.value;
}

template <typename T>
const typename Tape<T>::Mat& Tape<T>::grad(Var v) const {
  require(v.valid() && v.id < static_cast<int>(nodes_.size()), "invalid variable");
  return nodes_[v.id].grad;
}

template <typename T>
typename Tape<T>::Mat& Tape<T>::grad_slot(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) {
    const Mat& val = n.ref ? *n.ref : n.value;
    n.grad = Mat::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

template <typename T>
void Tape<T>::accumulate(Var v, const Mat& g) {
  if (!needs(v)) return;
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename T>
Var Tape<T>::linear(Var x, Var w, Var b) {
  return linear_impl(x, w, b, false);
}

template <typename T>
Var Tape<T>::row_linear(Var x, Var w, Var b) {
  return linear_impl(x, w, b, true);
}

template <typename T>
Var Tape<T>::linear_impl(Var x, Var w, Var b, bool per_row) {
  const Mat& xv = value(x);
  const Mat& wv = value(w);
  require(xv.cols() == wv.rows(), "linear: inner dimension mismatch");
  Mat out(xv.rows(), wv.cols());
  if (per_row) {
    // A blocked product may round a row differently depending on where it
    // falls in the panel; one vector-matrix product per row does not.
    for (Eigen::Index i = 0; i < xv.rows(); ++i) out.row(i).noalias() = xv.row(i) * wv;
  } else {
    out.noalias() = xv * wv;
  }
  if (b.valid()) {
    const Mat& bv = value(b);
    require(bv.rows() == 1 && bv.cols() == wv.cols(), "linear: bias shape");
    out.rowwise() += bv.row(0);
  }
  const bool ng = needs(x) || needs(w) || needs(b);
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), ng, [this, x, w, b, y] {
    const Mat& dy = nodes_[y.id].grad;
    if (needs(x)) {
      Mat dx(dy.rows(), value(w).rows());
      dx.noalias() = dy * value(w).transpose();
      accumulate(x, dx);
    }
    if (needs(w)) {
      Mat& dw = grad_slot(w);
      dw.noalias() += value(x).transpose() * dy;
    }
    if (needs(b)) {
      Mat& db = grad_slot(b);
      db += dy.colwise().sum();
    }
  });
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  const Mat& av = value(a);
  const Mat& bv = value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shape mismatch");
  Mat out = av + bv;
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a) || needs(b), [this, a, b, y] {
    const Mat& dy = nodes_[y.id].grad;
    accumulate(a, dy);
    accumulate(b, dy);
  });
}

template <typename T>
Var Tape<T>::scale(Var a, T factor) {
  Mat out = value(a) * factor;
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, y, factor] {
    accumulate(a, nodes_[y.id].grad * factor);
  });
}

template <typename T>
Var Tape<T>::gelu(Var x) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T kA = T(0.044715);
  const Mat& xv = value(x);
  Mat out(xv.rows(), xv.cols());
  Mat tanh_u(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    const T v = xv.data()[i];
    const T th = std::tanh(kC * (v + kA * v * v * v));
    tanh_u.data()[i] = th;
    out.data()[i] = T(0.5) * v * (T(1) + th);
  }
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x), [this, x, y, tanh_u = std::move(tanh_u)] {
    const Mat& dy = nodes_[y.id].grad;
    const Mat& xv = value(x);
    Mat dx(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const T v = xv.data()[i];
      const T th = tanh_u.data()[i];
      const T du = kC * (T(1) + T(3) * kA * v * v);
      dx.data()[i] = dy.data()[i] * (T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * du);
    }
    accumulate(x, dx);
  });
}

template <typename T>
Var Tape<T>::layer_norm(Var x, Var gamma, Var beta, T eps) {
  const Mat& xv = value(x);
  const Mat& g = value(gamma);
  const Mat& bt = value(beta);
  require(g.rows() == 1 && g.cols() == xv.cols() && bt.rows() == 1 && bt.cols() == xv.cols(),
          "layer_norm: affine shape");
  const Eigen::Index n = xv.rows();
  const Eigen::Index d = xv.cols();
  Mat xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mu = xv.row(r).mean();
    const T var = (xv.row(r).array() - mu).square().mean();
    rstd(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * rstd(r);
  }
  Mat out = (xhat.array().rowwise() * g.row(0).array()).rowwise() + bt.row(0).array();
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x) || needs(gamma) || needs(beta),
              [this, x, gamma, beta, y, xhat = std::move(xhat), rstd = std::move(rstd)] {
                const Mat& dy = nodes_[y.id].grad;
                if (needs(gamma)) grad_slot(gamma) += (dy.array() * xhat.array()).colwise().sum().matrix();
                if (needs(beta)) grad_slot(beta) += dy.colwise().sum();
                if (needs(x)) {
                  const Mat& g = value(gamma);
                  const Eigen::Index d = dy.cols();
                  Mat dxhat = dy.array().rowwise() * g.row(0).array();
                  Mat dx(dy.rows(), d);
                  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
                    const T mean_d = dxhat.row(r).mean();
                    const T mean_dx = dxhat.row(r).dot(xhat.row(r)) / static_cast<T>(d);
                    dx.row(r) = rstd(r) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
                  }
                  accumulate(x, dx);
                }
              });
}

template <typename T>
Var Tape<T>::attention(Var q, Var k, Var v, int heads, int seq_len) {
  const Mat& qv = value(q);
  const Mat& kv = value(k);
  const Mat& vv = value(v);
  require(qv.rows() == kv.rows() && qv.rows() == vv.rows(), "attention: row mismatch");
  require(qv.cols() == kv.cols() && qv.cols() == vv.cols(), "attention: width mismatch");
  require(heads > 0 && qv.cols() % heads == 0, "attention: width not divisible by heads");
  require(seq_len > 0 && qv.rows() % seq_len == 0, "attention: rows not divisible by seq_len");

  const int batch = static_cast<int>(qv.rows() / seq_len);
  const int dh = static_cast<int>(qv.cols() / heads);
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));

  Mat out(qv.rows(), qv.cols());
  std::vector<Mat> probs;
  if (record_) probs.reserve(static_cast<size_t>(batch) * heads);
  Mat p(seq_len, seq_len);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      const auto qb = qv.block(b * seq_len, h * dh, seq_len, dh);
      const auto kb = kv.block(b * seq_len, h * dh, seq_len, dh);
      const auto vb = vv.block(b * seq_len, h * dh, seq_len, dh);
      p.noalias() = (qb * kb.transpose()) * inv_sqrt;
      for (int r = 0; r < seq_len; ++r) {
        const T m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
      }
      out.block(b * seq_len, h * dh, seq_len, dh).noalias() = p * vb;
      if (record_) probs.push_back(p);
    }
  }

  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(q) || needs(k) || needs(v),
              [this, q, k, v, y, heads, seq_len, batch, dh, inv_sqrt, probs = std::move(probs)] {
                const Mat& dy = nodes_[y.id].grad;
                const Mat& qv = value(q);
                const Mat& kv = value(k);
                const Mat& vv = value(v);
                Mat dq = Mat::Zero(qv.rows(), qv.cols());
                Mat dk = Mat::Zero(kv.rows(), kv.cols());
                Mat dv = Mat::Zero(vv.rows(), vv.cols());
                Mat dp(seq_len, seq_len);
                Mat ds(seq_len, seq_len);
                for (int b = 0; b < batch; ++b) {
                  for (int h = 0; h < heads; ++h) {
                    const Mat& p = probs[static_cast<size_t>(b) * heads + h];
                    const auto dyb = dy.block(b * seq_len, h * dh, seq_len, dh);
                    dv.block(b * seq_len, h * dh, seq_len, dh).noalias() = p.transpose() * dyb;
                    dp.noalias() = dyb * vv.block(b * seq_len, h * dh, seq_len, dh).transpose();
                    for (int r = 0; r < seq_len; ++r) {
                      const T dot = dp.row(r).dot(p.row(r));
                      ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
                    }
                    ds *= inv_sqrt;
                    dq.block(b * seq_len, h * dh, seq_len, dh).noalias() =
                        ds * kv.block(b * seq_len, h * dh, seq_len, dh);
                    dk.block(b * seq_len, h * dh, seq_len, dh).noalias() =
                        ds.transpose() * qv.block(b * seq_len, h * dh, seq_len, dh);
                  }
                }
                accumulate(q, dq);
                accumulate(k, dk);
                accumulate(v, dv);
              });
}

template <typename T>
Var Tape<T>::dropout(Var x, T p, std::mt19937_64& rng) {
  if (p <= T(0)) return x;
  require(p < T(1), "dropout: rate must be below 1");
  const Mat& xv = value(x);
  Mat keep(xv.rows(), xv.cols());
  std::bernoulli_distribution coin(1.0 - static_cast<double>(p));
  const T s = T(1) / (T(1) - p);
  for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = coin(rng) ? s : T(0);
  Mat out = xv.cwiseProduct(keep);
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x), [this, x, y, keep = std::move(keep)] {
    accumulate(x, nodes_[y.id].grad.cwiseProduct(keep));
  });
}

template <typename T>
Var Tape<T>::add_position(Var x, Var pos, int seq_len) {
  const Mat& xv = value(x);
  const Mat& pv = value(pos);
  require(pv.rows() == seq_len && pv.cols() == xv.cols(), "add_position: embedding shape");
  require(xv.rows() % seq_len == 0, "add_position: rows not divisible by seq_len");
  const Eigen::Index batch = xv.rows() / seq_len;
  Mat out = xv;
  for (Eigen::Index b = 0; b < batch; ++b) out.middleRows(b * seq_len, seq_len) += pv;
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x) || needs(pos), [this, x, pos, y, seq_len, batch] {
    const Mat& dy = nodes_[y.id].grad;
    accumulate(x, dy);
    if (needs(pos)) {
      Mat& dp = grad_slot(pos);
      for (Eigen::Index b = 0; b < batch; ++b) dp += dy.middleRows(b * seq_len, seq_len);
    }
  });
}

template <typename T>
Var Tape<T>::replace_rows(Var x, Var token, std::span<const std::uint8_t> rows) {
  const Mat& xv = value(x);
  const Mat& tv = value(token);
  require(static_cast<Eigen::Index>(rows.size()) == xv.rows(), "replace_rows: mask length");
  require(tv.rows() == 1 && tv.cols() == xv.cols(), "replace_rows: token shape");
  Mat out = xv;
  std::vector<std::uint8_t> flags(rows.begin(), rows.end());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    if (flags[r]) out.row(r) = tv.row(0);
  }
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x) || needs(token), [this, x, token, y, flags = std::move(flags)] {
    const Mat& dy = nodes_[y.id].grad;
    if (needs(x)) {
      Mat dx = dy;
      for (Eigen::Index r = 0; r < dx.rows(); ++r) {
        if (flags[r]) dx.row(r).setZero();
      }
      accumulate(x, dx);
    }
    if (needs(token)) {
      Mat& dt = grad_slot(token);
      for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        if (flags[r]) dt.row(0) += dy.row(r);
      }
    }
  });
}

template <typename T>
Var Tape<T>::substitute_points(Var x, Var token, std::span<const std::uint8_t> mask, int point_dim) {
  const Mat& xv = value(x);
  const Mat& tv = value(token);
  require(point_dim > 0 && xv.cols() % point_dim == 0, "substitute_points: width");
  require(tv.rows() == 1 && tv.cols() == point_dim, "substitute_points: token shape");
  const Eigen::Index points = xv.cols() / point_dim;
  require(static_cast<Eigen::Index>(mask.size()) == xv.rows() * points, "substitute_points: mask size");
  std::vector<std::uint8_t> flags(mask.begin(), mask.end());
  Mat out = xv;
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    for (Eigen::Index j = 0; j < points; ++j) {
      if (flags[r * points + j]) out.block(r, j * point_dim, 1, point_dim) = tv;
    }
  }
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x) || needs(token),
              [this, x, token, y, points, point_dim, flags = std::move(flags)] {
                const Mat& dy = nodes_[y.id].grad;
                if (needs(x)) {
                  Mat dx = dy;
                  for (Eigen::Index r = 0; r < dx.rows(); ++r) {
                    for (Eigen::Index j = 0; j < points; ++j) {
                      if (flags[r * points + j]) dx.block(r, j * point_dim, 1, point_dim).setZero();
                    }
                  }
                  accumulate(x, dx);
                }
                if (needs(token)) {
                  Mat& dt = grad_slot(token);
                  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
                    for (Eigen::Index j = 0; j < points; ++j) {
                      if (flags[r * points + j]) dt += dy.block(r, j * point_dim, 1, point_dim);
                    }
                  }
                }
              });
}

template <typename T>
Var Tape<T>::unfold(Var x, int seq_len, int kernel, int stride) {
  const Mat& xv = value(x);
  require(kernel >= stride && stride >= 1, "unfold: kernel must be >= stride >= 1");
  require(seq_len % stride == 0, "unfold: seq_len not divisible by stride");
  require(xv.rows() % seq_len == 0, "unfold: rows not divisible by seq_len");
  const int batch = static_cast<int>(xv.rows() / seq_len);
  const int out_len = seq_len / stride;
  const int pad = (kernel - stride) / 2;
  const Eigen::Index d = xv.cols();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(batch) * out_len, d * kernel);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < out_len; ++t) {
      for (int i = 0; i < kernel; ++i) {
        const int src = t * stride - pad + i;
        if (src < 0 || src >= seq_len) continue;
        out.block(b * out_len + t, i * d, 1, d) = xv.row(b * seq_len + src);
      }
    }
  }
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x), [this, x, y, seq_len, kernel, stride, batch, out_len, pad, d] {
    const Mat& dy = nodes_[y.id].grad;
    Mat dx = Mat::Zero(static_cast<Eigen::Index>(batch) * seq_len, d);
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < out_len; ++t) {
        for (int i = 0; i < kernel; ++i) {
          const int src = t * stride - pad + i;
          if (src < 0 || src >= seq_len) continue;
          dx.row(b * seq_len + src) += dy.block(b * out_len + t, i * d, 1, d);
        }
      }
    }
    accumulate(x, dx);
  });
}

template <typename T>
Var Tape<T>::select_rows(Var x, int seq_len, int stride, int offset) {
  const Mat& xv = value(x);
  require(stride >= 1 && seq_len % stride == 0, "select_rows: seq_len not divisible by stride");
  require(offset >= 0 && offset < stride, "select_rows: offset out of range");
  require(xv.rows() % seq_len == 0, "select_rows: rows not divisible by seq_len");
  const int batch = static_cast<int>(xv.rows() / seq_len);
  const int out_len = seq_len / stride;
  Mat out(static_cast<Eigen::Index>(batch) * out_len, xv.cols());
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < out_len; ++t) out.row(b * out_len + t) = xv.row(b * seq_len + t * stride + offset);
  }
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x), [this, x, y, seq_len, stride, offset, batch, out_len] {
    const Mat& dy = nodes_[y.id].grad;
    Mat dx = Mat::Zero(static_cast<Eigen::Index>(batch) * seq_len, dy.cols());
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < out_len; ++t) dx.row(b * seq_len + t * stride + offset) = dy.row(b * out_len + t);
    }
    accumulate(x, dx);
  });
}

template <typename T>
Var Tape<T>::mean_squared_distance(Var pred, const Mat& target, int point_dim) {
  const Mat& pv = value(pred);
  require(pv.rows() == target.rows() && pv.cols() == target.cols(), "mean_squared_distance: shape mismatch");
  require(point_dim > 0 && pv.cols() % point_dim == 0, "mean_squared_distance: point_dim");
  const T points = static_cast<T>(pv.rows() * (pv.cols() / point_dim));
  Mat diff = pv - target;
  Mat out(1, 1);
  out(0, 0) = points > 0 ? diff.squaredNorm() / points : T(0);
  Var y{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(pred), [this, pred, y, points, diff = std::move(diff)] {
    const T upstream = nodes_[y.id].grad(0, 0);
    accumulate(pred, diff * (T(2) * upstream / points));
  });
}

template <typename T>
void Tape<T>::backward(Var root) {
  require(record_, "backward on a non-recording tape");
  const Mat& rv = value(root);
  require(rv.rows() == 1 && rv.cols() == 1, "backward root must be scalar");
  if (!nodes_[root.id].needs_grad) return;
  nodes_[root.id].grad = Mat::Ones(1, 1);
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      n.param->grad += n.grad;
    } else if (n.back) {
      n.back();
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace mpm::nn
