#pragma once

#include <algorithm>
#include <cmath>

#include "gsmn/nn/graph.hpp"

namespace gsmn::nn {

template <typename T>
using Var = Node<T>*;

// ---- elementwise ----

template <typename T>
Var<T> add(Graph<T>& g, Var<T> a, Var<T> b) {
  require(a->value.same_shape(b->value), "add: shape mismatch");
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
  return g.make(std::move(out), {a, b},
                [a, b](Graph<T>& gr, Node<T>& n) {
                  gr.accum(a, n.grad);
                  gr.accum(b, n.grad);
                },
                "add");
}

template <typename T>
Var<T> mul(Graph<T>& g, Var<T> a, Var<T> b) {
  require(a->value.same_shape(b->value), "mul: shape mismatch");
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
  return g.make(std::move(out), {a, b},
                [a, b](Graph<T>& gr, Node<T>& n) {
                  if (a->requires_grad) {
                    Tensor<T>& da = gr.grad_of(a);
                    for (size_t i = 0; i < n.grad.numel(); ++i) da[i] += n.grad[i] * b->value[i];
                  }
                  if (b->requires_grad) {
                    Tensor<T>& db = gr.grad_of(b);
                    for (size_t i = 0; i < n.grad.numel(); ++i) db[i] += n.grad[i] * a->value[i];
                  }
                },
                "mul");
}

template <typename T>
Var<T> scale(Graph<T>& g, Var<T> a, T s) {
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * s;
  return g.make(std::move(out), {a},
                [a, s](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i) da[i] += n.grad[i] * s;
                },
                "scale");
}

template <typename T>
Var<T> leaky_relu(Graph<T>& g, Var<T> a, T slope) {
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) {
    T v = a->value[i];
    out[i] = v > T(0) ? v : slope * v;
  }
  return g.make(std::move(out), {a},
                [a, slope](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i)
                    da[i] += n.grad[i] * (a->value[i] > T(0) ? T(1) : slope);
                },
                "leaky_relu");
}

template <typename T>
Var<T> sigmoid(Graph<T>& g, Var<T> a) {
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) out[i] = T(1) / (T(1) + std::exp(-a->value[i]));
  Tensor<T> saved = out;
  return g.make(std::move(out), {a},
                [a, saved](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i)
                    da[i] += n.grad[i] * saved[i] * (T(1) - saved[i]);
                },
                "sigmoid");
}

template <typename T>
Var<T> tanh_op(Graph<T>& g, Var<T> a) {
  Tensor<T> out(a->value.shape());
  for (size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
  Tensor<T> saved = out;
  return g.make(std::move(out), {a},
                [a, saved](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i)
                    da[i] += n.grad[i] * (T(1) - saved[i] * saved[i]);
                },
                "tanh");
}

// ---- shape ops ----

template <typename T>
Var<T> reshape(Graph<T>& g, Var<T> a, std::vector<int> shape) {
  Tensor<T> out(shape);
  require(out.numel() == a->value.numel(), "reshape: element count mismatch");
  std::copy(a->value.data(), a->value.data() + a->value.numel(), out.data());
  return g.make(std::move(out), {a},
                [a](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i) da[i] += n.grad[i];
                },
                "reshape");
}

template <typename T>
Var<T> flatten(Graph<T>& g, Var<T> a) {
  return reshape(g, a, {int(a->value.numel())});
}

template <typename T>
Var<T> concat(Graph<T>& g, const std::vector<Var<T>>& parts) {
  size_t total = 0;
  for (Var<T> p : parts) total += p->value.numel();
  Tensor<T> out({int(total)});
  size_t off = 0;
  for (Var<T> p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.numel(), out.data() + off);
    off += p->value.numel();
  }
  return g.make(std::move(out), parts,
                [parts](Graph<T>& gr, Node<T>& n) {
                  size_t off = 0;
                  for (Var<T> p : parts) {
                    if (p->requires_grad) {
                      Tensor<T>& dp = gr.grad_of(p);
                      for (size_t i = 0; i < p->value.numel(); ++i) dp[i] += n.grad[off + i];
                    }
                    off += p->value.numel();
                  }
                },
                "concat");
}

// Contiguous range [off, off+len) of a vector.
template <typename T>
Var<T> slice(Graph<T>& g, Var<T> a, int off, int len) {
  Tensor<T> out({len});
  std::copy(a->value.data() + off, a->value.data() + off + len, out.data());
  return g.make(std::move(out), {a},
                [a, off](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < n.grad.numel(); ++i) da[size_t(off) + i] += n.grad[i];
                },
                "slice");
}

// Channel vector of a (C, H, W) map at cell (h, w).
template <typename T>
Var<T> map_cell(Graph<T>& g, Var<T> a, int h, int w) {
  const auto& sh = a->value.shape();
  require(a->value.ndim() == 3, "map_cell: expected (C,H,W)");
  const int C = sh[0], H = sh[1], W = sh[2];
  require(h >= 0 && h < H && w >= 0 && w < W, "map_cell: out of bounds");
  Tensor<T> out({C});
  for (int c = 0; c < C; ++c) out[size_t(c)] = a->value.at(c, h, w);
  return g.make(std::move(out), {a},
                [a, h, w, C](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  const auto& sh = a->value.shape();
                  for (int c = 0; c < C; ++c)
                    da[(size_t(c) * size_t(sh[1]) + size_t(h)) * size_t(sh[2]) + size_t(w)] += n.grad[size_t(c)];
                },
                "map_cell");
}

// Row of an embedding matrix (V, E).
template <typename T>
Var<T> select_row(Graph<T>& g, Var<T> m, int row) {
  const int E = m->value.dim(1);
  Tensor<T> out({E});
  std::copy(m->value.data() + size_t(row) * size_t(E), m->value.data() + size_t(row + 1) * size_t(E), out.data());
  return g.make(std::move(out), {m},
                [m, row, E](Graph<T>& gr, Node<T>& n) {
                  if (!m->requires_grad) return;
                  Tensor<T>& dm = gr.grad_of(m);
                  for (int e = 0; e < E; ++e) dm[size_t(row) * size_t(E) + size_t(e)] += n.grad[size_t(e)];
                },
                "select_row");
}

// ---- dense ----

// y = W x + b with W (out, in), x (in), b (out).
template <typename T>
Var<T> linear(Graph<T>& g, Var<T> W, Var<T> x, Var<T> b) {
  const int out_dim = W->value.dim(0);
  const int in_dim = W->value.dim(1);
  require(int(x->value.numel()) == in_dim, "linear: input size mismatch");
  Tensor<T> out({out_dim});
  using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
  using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
  VecMap(out.data(), out_dim).noalias() =
      W->value.as_matrix(out_dim, in_dim) * CVecMap(x->value.data(), in_dim);
  if (b) {
    for (int i = 0; i < out_dim; ++i) out[size_t(i)] += b->value[size_t(i)];
  }
  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{W, x, b} : std::vector<Var<T>>{W, x};
  return g.make(std::move(out), parents,
                [W, x, b, out_dim, in_dim](Graph<T>& gr, Node<T>& n) {
                  using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
                  using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
                  CVecMap gy(n.grad.data(), out_dim);
                  if (W->requires_grad) {
                    auto dW = gr.grad_of(W).as_matrix(out_dim, in_dim);
                    dW.noalias() += gy * CVecMap(x->value.data(), in_dim).transpose();
                  }
                  if (x->requires_grad) {
                    VecMap dx(gr.grad_of(x).data(), in_dim);
                    dx.noalias() += W->value.as_matrix(out_dim, in_dim).transpose() * gy;
                  }
                  if (b && b->requires_grad) {
                    Tensor<T>& db = gr.grad_of(b);
                    for (int i = 0; i < out_dim; ++i) db[size_t(i)] += n.grad[size_t(i)];
                  }
                },
                "linear");
}

// ---- convolution ----

struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
};

namespace detail {

inline int conv_out_dim(int in, int k, const ConvSpec& s) {
  return (in + 2 * s.pad - s.dilation * (k - 1) - 1) / s.stride + 1;
}

// col is (Cin*kh*kw, Hout*Wout), row-major.
template <typename T>
void im2col(const Tensor<T>& x, int kh, int kw, const ConvSpec& s, int Hout, int Wout, T* col) {
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  size_t idx = 0;
  for (int ci = 0; ci < Cin; ++ci)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        for (int oy = 0; oy < Hout; ++oy) {
          const int iy = oy * s.stride - s.pad + ky * s.dilation;
          if (iy < 0 || iy >= H) {
            for (int ox = 0; ox < Wout; ++ox) col[idx++] = T(0);
            continue;
          }
          const T* xrow = x.data() + (size_t(ci) * size_t(H) + size_t(iy)) * size_t(W);
          for (int ox = 0; ox < Wout; ++ox) {
            const int ix = ox * s.stride - s.pad + kx * s.dilation;
            col[idx++] = (ix >= 0 && ix < W) ? xrow[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, int Cin, int H, int W, int kh, int kw, const ConvSpec& s, int Hout, int Wout,
                Tensor<T>& dx) {
  size_t idx = 0;
  for (int ci = 0; ci < Cin; ++ci)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx)
        for (int oy = 0; oy < Hout; ++oy) {
          const int iy = oy * s.stride - s.pad + ky * s.dilation;
          if (iy < 0 || iy >= H) {
            idx += size_t(Wout);
            continue;
          }
          T* drow = dx.data() + (size_t(ci) * size_t(H) + size_t(iy)) * size_t(W);
          for (int ox = 0; ox < Wout; ++ox) {
            const int ix = ox * s.stride - s.pad + kx * s.dilation;
            if (ix >= 0 && ix < W) drow[ix] += col[idx];
            ++idx;
          }
        }
}

}  // namespace detail

// x (Cin,H,W), w (Cout,Cin,kh,kw), optional b (Cout) -> (Cout,Hout,Wout).
// The kernel may itself be a differentiable node (instruction-generated filters).
template <typename T>
Var<T> conv2d(Graph<T>& g, Var<T> x, Var<T> w, Var<T> b, const ConvSpec& spec) {
  const int Cin = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
  const int Cout = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
  require(w->value.dim(1) == Cin, "conv2d: channel mismatch");
  const int Hout = detail::conv_out_dim(H, kh, spec);
  const int Wout = detail::conv_out_dim(W, kw, spec);
  require(Hout > 0 && Wout > 0, "conv2d: empty output");
  const int K = Cin * kh * kw;
  const int HW = Hout * Wout;

  std::vector<T> col(size_t(K) * size_t(HW));
  detail::im2col(x->value, kh, kw, spec, Hout, Wout, col.data());

  Tensor<T> out({Cout, Hout, Wout});
  using Mat = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using CMat = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  Mat(out.data(), Cout, HW).noalias() = CMat(w->value.data(), Cout, K) * CMat(col.data(), K, HW);
  if (b) {
    for (int c = 0; c < Cout; ++c) {
      T* row = out.data() + size_t(c) * size_t(HW);
      const T bv = b->value[size_t(c)];
      for (int i = 0; i < HW; ++i) row[i] += bv;
    }
  }

  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  // im2col is recomputed in the backward pass; caching it across a whole
  // episode graph costs too much memory.
  return g.make(std::move(out), parents,
                [x, w, b, spec, Cin, H, W, Cout, kh, kw, Hout, Wout, K, HW](Graph<T>& gr, Node<T>& n) {
                  using Mat = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
                  using CMat = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
                  CMat gy(n.grad.data(), Cout, HW);
                  if (w->requires_grad) {
                    std::vector<T> col(size_t(K) * size_t(HW));
                    detail::im2col(x->value, kh, kw, spec, Hout, Wout, col.data());
                    Mat dw(gr.grad_of(w).data(), Cout, K);
                    dw.noalias() += gy * CMat(col.data(), K, HW).transpose();
                  }
                  if (x->requires_grad) {
                    std::vector<T> dcol(size_t(K) * size_t(HW));
                    Mat(dcol.data(), K, HW).noalias() = CMat(w->value.data(), Cout, K).transpose() * gy;
                    detail::col2im_add(dcol.data(), Cin, H, W, kh, kw, spec, Hout, Wout, gr.grad_of(x));
                  }
                  if (b && b->requires_grad) {
                    Tensor<T>& db = gr.grad_of(b);
                    for (int c = 0; c < Cout; ++c) {
                      T s = T(0);
                      const T* row = n.grad.data() + size_t(c) * size_t(HW);
                      for (int i = 0; i < HW; ++i) s += row[i];
                      db[size_t(c)] += s;
                    }
                  }
                },
                "conv2d");
}

// ---- scalar reductions and losses ----

template <typename T>
Var<T> add_scalars(Graph<T>& g, const std::vector<Var<T>>& xs, const std::vector<T>& weights) {
  require(xs.size() == weights.size(), "add_scalars: size mismatch");
  T total = T(0);
  for (size_t i = 0; i < xs.size(); ++i) total += weights[i] * xs[i]->value[0];
  return g.make(Tensor<T>::scalar(total), xs,
                [xs, weights](Graph<T>& gr, Node<T>& n) {
                  for (size_t i = 0; i < xs.size(); ++i)
                    if (xs[i]->requires_grad) gr.grad_of(xs[i])[0] += n.grad[0] * weights[i];
                },
                "add_scalars");
}

// Inner product with a constant tensor; handy for reducing maps to scalars.
template <typename T>
Var<T> dot_const(Graph<T>& g, Var<T> a, Tensor<T> w) {
  require(a->value.same_shape(w), "dot_const: shape mismatch");
  T total = T(0);
  for (size_t i = 0; i < w.numel(); ++i) total += a->value[i] * w[i];
  return g.make(Tensor<T>::scalar(total), {a},
                [a, w = std::move(w)](Graph<T>& gr, Node<T>& n) {
                  if (!a->requires_grad) return;
                  Tensor<T>& da = gr.grad_of(a);
                  for (size_t i = 0; i < w.numel(); ++i) da[i] += n.grad[0] * w[i];
                },
                "dot_const");
}

template <typename T>
Var<T> mean_scalars(Graph<T>& g, const std::vector<Var<T>>& xs) {
  require(!xs.empty(), "mean_scalars: empty");
  std::vector<T> w(xs.size(), T(1) / T(xs.size()));
  return add_scalars(g, xs, w);
}

// (x[i] - target)^2 for a single element of a vector node.
template <typename T>
Var<T> squared_error_at(Graph<T>& g, Var<T> x, int i, T target) {
  const T d = x->value[size_t(i)] - target;
  return g.make(Tensor<T>::scalar(d * d), {x},
                [x, i, target](Graph<T>& gr, Node<T>& n) {
                  if (!x->requires_grad) return;
                  gr.grad_of(x)[size_t(i)] += n.grad[0] * T(2) * (x->value[size_t(i)] - target);
                },
                "sq_err");
}

// Softmax cross-entropy against an integer target; logits is a vector.
template <typename T>
Var<T> softmax_nll(Graph<T>& g, Var<T> logits, int target) {
  const size_t n = logits->value.numel();
  require(target >= 0 && size_t(target) < n, "softmax_nll: target out of range");
  T mx = logits->value[0];
  for (size_t i = 1; i < n; ++i) mx = std::max(mx, logits->value[i]);
  T sum = T(0);
  for (size_t i = 0; i < n; ++i) sum += std::exp(logits->value[i] - mx);
  const T logz = std::log(sum) + mx;
  const T loss = logz - logits->value[size_t(target)];
  return g.make(Tensor<T>::scalar(loss), {logits},
                [logits, target, logz](Graph<T>& gr, Node<T>& n) {
                  if (!logits->requires_grad) return;
                  Tensor<T>& dl = gr.grad_of(logits);
                  for (size_t i = 0; i < logits->value.numel(); ++i) {
                    T p = std::exp(logits->value[i] - logz);
                    dl[i] += n.grad[0] * (p - (int(i) == target ? T(1) : T(0)));
                  }
                },
                "softmax_nll");
}

// Binary cross-entropy on a logit (numerically stable form).
template <typename T>
Var<T> bce_logit(Graph<T>& g, Var<T> z, int i, T target) {
  const T zv = z->value[size_t(i)];
  const T loss = std::max(zv, T(0)) - zv * target + std::log1p(std::exp(-std::abs(zv)));
  return g.make(Tensor<T>::scalar(loss), {z},
                [z, i, target](Graph<T>& gr, Node<T>& n) {
                  if (!z->requires_grad) return;
                  const T zv = z->value[size_t(i)];
                  const T p = T(1) / (T(1) + std::exp(-zv));
                  gr.grad_of(z)[size_t(i)] += n.grad[0] * (p - target);
                },
                "bce_logit");
}

// Binary cross-entropy on a probability, clipped to [eps, 1-eps] before the log.
template <typename T>
Var<T> bce_prob(Graph<T>& g, Var<T> p, int i, T target, T eps) {
  const T raw = p->value[size_t(i)];
  const T pc = std::clamp(raw, eps, T(1) - eps);
  const T loss = -(target * std::log(pc) + (T(1) - target) * std::log(T(1) - pc));
  const bool clipped = raw < eps || raw > T(1) - eps;
  return g.make(Tensor<T>::scalar(loss), {p},
                [p, i, target, pc, clipped](Graph<T>& gr, Node<T>& n) {
                  if (!p->requires_grad || clipped) return;
                  gr.grad_of(p)[size_t(i)] += n.grad[0] * (pc - target) / (pc * (T(1) - pc));
                },
                "bce_prob");
}

}  // namespace gsmn::nn
