#include "aat/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "aat/errors.hpp"

namespace aat::ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a) + " and " +
                   shape_to_string(b));
}

void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(s));
  }
}

template <typename T>
void accumulate(Tensor<T>* dst, const Tensor<T>& src) {
  if (!dst) return;
  auto d = dst->data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

struct ConvGeometry {
  int n, c, h, w, o, k, stride, pad, ho, wo;
  int patch() const { return c * k * k; }
  int cells() const { return ho * wo; }
};

template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* col) {
  // col: [C*K*K, Ho*Wo]
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = col + (static_cast<std::size_t>(ci * g.k + ky) * g.k + kx) * g.cells();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* out = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(ci) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* img) {
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = col + (static_cast<std::size_t>(ci * g.k + ky) * g.k + kx) * g.cells();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          T* dst = img + (static_cast<std::size_t>(ci) * g.h + iy) * g.w;
          const T* in = row + oy * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("add", av.shape(), bv.shape());
  Tensor<T> out = av;
  accumulate(&out, bv);
  return a.tape().record("add", std::move(out), {a, b}, [](BackwardContext<T>& ctx) {
    accumulate(ctx.in_grads[0], ctx.out_grad);
    accumulate(ctx.in_grads[1], ctx.out_grad);
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("mul", av.shape(), bv.shape());
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record("mul", std::move(out), {a, b}, [](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.out_grad;
    if (Tensor<T>* ga = ctx.in_grads[0]) {
      const Tensor<T>& bv = *ctx.in_values[1];
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor<T>* gb = ctx.in_grads[1]) {
      const Tensor<T>& av = *ctx.in_values[0];
      for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (T& v : out.data()) v *= factor;
  return a.tape().record("scale", std::move(out), {a}, [factor](BackwardContext<T>& ctx) {
    Tensor<T>& ga = *ctx.in_grads[0];
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += factor * ctx.out_grad[i];
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  // d/dx relu at exactly 0 is 0.
  return x.tape().record("relu", std::move(out), {x}, [](BackwardContext<T>& ctx) {
    Tensor<T>& gx = *ctx.in_grads[0];
    const Tensor<T>& y = ctx.out_value;
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      if (y[i] > T(0)) gx[i] += ctx.out_grad[i];
    }
  });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, int stride, int padding) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  const Tensor<T>& bv = bias.value();
  require_rank("conv2d input", xv.shape(), 4);
  require_rank("conv2d weight", wv.shape(), 4);
  if (wv.dim(1) != xv.dim(1) || wv.dim(2) != wv.dim(3)) {
    shape_mismatch("conv2d", xv.shape(), wv.shape());
  }
  if (bv.shape() != Shape{wv.dim(0)}) shape_mismatch("conv2d bias", wv.shape(), bv.shape());
  if (stride < 1 || padding < 0) throw ContractError("conv2d: stride must be >= 1, padding >= 0");

  ConvGeometry g{};
  g.n = static_cast<int>(xv.dim(0));
  g.c = static_cast<int>(xv.dim(1));
  g.h = static_cast<int>(xv.dim(2));
  g.w = static_cast<int>(xv.dim(3));
  g.o = static_cast<int>(wv.dim(0));
  g.k = static_cast<int>(wv.dim(2));
  g.stride = stride;
  g.pad = padding;
  g.ho = (g.h + 2 * padding - g.k) / stride + 1;
  g.wo = (g.w + 2 * padding - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) shape_mismatch("conv2d (kernel larger than input)", xv.shape(), wv.shape());

  const bool need_backward = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  const std::size_t col_size = static_cast<std::size_t>(g.patch()) * g.cells();
  auto cols = std::make_shared<Buffer<T>>(need_backward ? col_size * g.n : col_size);

  Tensor<T> out(Shape{static_cast<std::size_t>(g.n), static_cast<std::size_t>(g.o),
                      static_cast<std::size_t>(g.ho), static_cast<std::size_t>(g.wo)});
  ConstMapMat<T> wmat(wv.data().data(), g.o, g.patch());
  const std::size_t in_stride = static_cast<std::size_t>(g.c) * g.h * g.w;
  const std::size_t out_stride = static_cast<std::size_t>(g.o) * g.cells();
  for (int n = 0; n < g.n; ++n) {
    T* col = cols->data() + (need_backward ? col_size * n : 0);
    im2col(xv.data().data() + in_stride * n, g, col);
    MapMat<T> omat(out.data().data() + out_stride * n, g.o, g.cells());
    omat.noalias() = wmat * ConstMapMat<T>(col, g.patch(), g.cells());
    for (int oc = 0; oc < g.o; ++oc) omat.row(oc).array() += bv[oc];
  }
  if (!need_backward) cols.reset();

  return x.tape().record("conv2d", std::move(out), {x, weight, bias},
                         [g, cols, col_size](BackwardContext<T>& ctx) {
    const Tensor<T>& wv = *ctx.in_values[1];
    Tensor<T>* gx = ctx.in_grads[0];
    Tensor<T>* gw = ctx.in_grads[1];
    Tensor<T>* gb = ctx.in_grads[2];
    ConstMapMat<T> wmat(wv.data().data(), g.o, g.patch());
    const std::size_t in_stride = static_cast<std::size_t>(g.c) * g.h * g.w;
    const std::size_t out_stride = static_cast<std::size_t>(g.o) * g.cells();
    Buffer<T> dcol(gx ? col_size : 0);
    for (int n = 0; n < g.n; ++n) {
      ConstMapMat<T> gout(ctx.out_grad.data().data() + out_stride * n, g.o, g.cells());
      ConstMapMat<T> col(cols->data() + col_size * n, g.patch(), g.cells());
      if (gw) {
        MapMat<T> gwmat(gw->data().data(), g.o, g.patch());
        gwmat.noalias() += gout * col.transpose();
      }
      if (gb) {
        for (int oc = 0; oc < g.o; ++oc) (*gb)[oc] += gout.row(oc).sum();
      }
      if (gx) {
        MapMat<T> dc(dcol.data(), g.patch(), g.cells());
        dc.noalias() = wmat.transpose() * gout;
        col2im_add(dcol.data(), g, gx->data().data() + in_stride * n);
      }
    }
  });
}

template <typename T>
Var<T> max_pool2d(Var<T> x, int window) {
  const Tensor<T>& xv = x.value();
  require_rank("max_pool2d", xv.shape(), 4);
  if (window < 1) throw ContractError("max_pool2d: window must be >= 1");
  const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t wd = static_cast<std::size_t>(window);
  if (h % wd != 0 || w % wd != 0) {
    throw ShapeError("max_pool2d: spatial size " + shape_to_string(xv.shape()) +
                     " not divisible by window " + std::to_string(window));
  }
  const std::size_t ho = h / wd, wo = w / wd;
  Tensor<T> out(Shape{n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = xv.data().data() + plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox, ++o) {
        std::size_t best = (oy * wd) * w + ox * wd;
        for (std::size_t ky = 0; ky < wd; ++ky) {
          for (std::size_t kx = 0; kx < wd; ++kx) {
            const std::size_t idx = (oy * wd + ky) * w + ox * wd + kx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        out[o] = src[best];
        (*argmax)[o] = plane * h * w + best;
      }
    }
  }
  return x.tape().record("max_pool2d", std::move(out), {x}, [argmax](BackwardContext<T>& ctx) {
    Tensor<T>& gx = *ctx.in_grads[0];
    for (std::size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += ctx.out_grad[i];
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  const Tensor<T>& bv = bias.value();
  require_rank("linear input", xv.shape(), 2);
  require_rank("linear weight", wv.shape(), 2);
  if (wv.dim(1) != xv.dim(1)) shape_mismatch("linear", xv.shape(), wv.shape());
  if (bv.shape() != Shape{wv.dim(0)}) shape_mismatch("linear bias", wv.shape(), bv.shape());
  const auto n = static_cast<Eigen::Index>(xv.dim(0));
  const auto f = static_cast<Eigen::Index>(xv.dim(1));
  const auto o = static_cast<Eigen::Index>(wv.dim(0));
  Tensor<T> out(Shape{xv.dim(0), wv.dim(0)});
  MapMat<T> om(out.data().data(), n, o);
  om.noalias() = ConstMapMat<T>(xv.data().data(), n, f) *
                 ConstMapMat<T>(wv.data().data(), o, f).transpose();
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < o; ++c) om(r, c) += bv[c];
  }
  return x.tape().record("linear", std::move(out), {x, weight, bias},
                         [n, f, o](BackwardContext<T>& ctx) {
    ConstMapMat<T> gout(ctx.out_grad.data().data(), n, o);
    if (Tensor<T>* gx = ctx.in_grads[0]) {
      MapMat<T>(gx->data().data(), n, f).noalias() +=
          gout * ConstMapMat<T>(ctx.in_values[1]->data().data(), o, f);
    }
    if (Tensor<T>* gw = ctx.in_grads[1]) {
      MapMat<T>(gw->data().data(), o, f).noalias() +=
          gout.transpose() * ConstMapMat<T>(ctx.in_values[0]->data().data(), n, f);
    }
    if (Tensor<T>* gb = ctx.in_grads[2]) {
      for (Eigen::Index c = 0; c < o; ++c) (*gb)[c] += gout.col(c).sum();
    }
  });
}

template <typename T>
Var<T> flatten(Var<T> x) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() < 1) throw ShapeError("flatten: scalar input");
  const std::size_t n = xv.dim(0);
  Tensor<T> out = xv.reshaped(Shape{n, n == 0 ? 0 : xv.numel() / n});
  return x.tape().record("flatten", std::move(out), {x}, [](BackwardContext<T>& ctx) {
    accumulate(ctx.in_grads[0], ctx.out_grad);
  });
}

template <typename T>
Var<T> to_rows(Var<T> x) {
  const Tensor<T>& xv = x.value();
  require_rank("to_rows", xv.shape(), 4);
  const std::size_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor<T> out(Shape{n * hw, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* src = xv.data().data() + (b * c + ch) * hw;
      for (std::size_t p = 0; p < hw; ++p) out[(b * hw + p) * c + ch] = src[p];
    }
  }
  return x.tape().record("to_rows", std::move(out), {x}, [n, c, hw](BackwardContext<T>& ctx) {
    Tensor<T>& gx = *ctx.in_grads[0];
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        T* dst = gx.data().data() + (b * c + ch) * hw;
        for (std::size_t p = 0; p < hw; ++p) dst[p] += ctx.out_grad[(b * hw + p) * c + ch];
      }
    }
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Shape shape = parts.front().shape();
  if (shape.empty()) throw ShapeError("concat: scalar input");
  std::size_t rows = 0;
  for (const Var<T>& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1)) {
      shape_mismatch("concat", shape, s);
    }
    rows += s[0];
  }
  shape[0] = rows;
  Tensor<T> out(shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var<T>& p : parts) {
    offsets.push_back(off);
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + off);
    off += p.value().numel();
  }
  return parts.front().tape().record("concat", std::move(out), parts,
                                     [offsets](BackwardContext<T>& ctx) {
    for (std::size_t k = 0; k < ctx.in_grads.size(); ++k) {
      Tensor<T>* g = ctx.in_grads[k];
      if (!g) continue;
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += ctx.out_grad[offsets[k] + i];
    }
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().data()) total += v;
  return x.tape().record("sum", Tensor<T>::scalar(total), {x}, [](BackwardContext<T>& ctx) {
    const T g = ctx.out_grad[0];
    for (T& v : ctx.in_grads[0]->data()) v += g;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().numel();
  if (n == 0) throw ContractError("mean of an empty tensor");
  T total = 0;
  for (T v : x.value().data()) total += v;
  return x.tape().record("mean", Tensor<T>::scalar(total / static_cast<T>(n)), {x},
                         [n](BackwardContext<T>& ctx) {
    const T g = ctx.out_grad[0] / static_cast<T>(n);
    for (T& v : ctx.in_grads[0]->data()) v += g;
  });
}

template <typename T>
Var<T> gradient_reversal(Var<T> x, T lambda) {
  return x.tape().record("gradient_reversal", x.value(), {x}, [lambda](BackwardContext<T>& ctx) {
    Tensor<T>& gx = *ctx.in_grads[0];
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] -= lambda * ctx.out_grad[i];
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require_rank("softmax_rows", logits.shape(), 2);
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data().data() + r * k;
    T* q = p.data().data() + r * k;
    const T zmax = *std::max_element(z, z + k);
    T denom = 0;
    for (std::size_t j = 0; j < k; ++j) {
      q[j] = std::exp(z[j] - zmax);
      denom += q[j];
    }
    for (std::size_t j = 0; j < k; ++j) q[j] /= denom;
  }
  return p;
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int>& targets,
                             const std::vector<T>& weights, T normalizer) {
  const Tensor<T>& z = logits.value();
  require_rank("softmax_cross_entropy", z.shape(), 2);
  const std::size_t rows = z.dim(0), k = z.dim(1);
  if (targets.size() != rows || weights.size() != rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets / " +
                     std::to_string(weights.size()) + " weights for logits " +
                     shape_to_string(z.shape()));
  }
  if (!(normalizer > T(0))) throw ContractError("softmax_cross_entropy: normalizer must be > 0");
  auto probs = std::make_shared<Tensor<T>>(softmax_rows(z));
  T loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == T(0)) continue;
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw ContractError("softmax_cross_entropy: target " + std::to_string(t) + " out of range");
    }
    const T* zr = z.data().data() + r * k;
    const T zmax = *std::max_element(zr, zr + k);
    T denom = 0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(zr[j] - zmax);
    loss += weights[r] * (std::log(denom) + zmax - zr[t]);
  }
  loss /= normalizer;
  return logits.tape().record("softmax_cross_entropy", Tensor<T>::scalar(loss), {logits},
                              [probs, targets, weights, normalizer, k](BackwardContext<T>& ctx) {
    Tensor<T>& gz = *ctx.in_grads[0];
    const T g = ctx.out_grad[0] / normalizer;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      if (weights[r] == T(0)) continue;
      const T s = g * weights[r];
      for (std::size_t j = 0; j < k; ++j) {
        const T onehot = static_cast<int>(j) == targets[r] ? T(1) : T(0);
        gz[r * k + j] += s * ((*probs)[r * k + j] - onehot);
      }
    }
  });
}

template <typename T>
Var<T> binary_cross_entropy_with_logits(Var<T> logits, const std::vector<T>& targets) {
  const Tensor<T>& z = logits.value();
  const std::size_t n = z.numel();
  if (targets.size() != n) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_to_string(z.shape()));
  }
  if (n == 0) throw ContractError("binary_cross_entropy: empty input");
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    const T zi = z[i];
    loss += std::max(zi, T(0)) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  loss /= static_cast<T>(n);
  return logits.tape().record("binary_cross_entropy", Tensor<T>::scalar(loss), {logits},
                              [targets, n](BackwardContext<T>& ctx) {
    Tensor<T>& gz = *ctx.in_grads[0];
    const Tensor<T>& z = *ctx.in_values[0];
    const T g = ctx.out_grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T sig = T(1) / (T(1) + std::exp(-z[i]));
      gz[i] += g * (sig - targets[i]);
    }
  });
}

template <typename T>
Var<T> smooth_l1(Var<T> pred, const Tensor<T>& target, const std::vector<std::uint8_t>& mask,
                 T normalizer) {
  const Tensor<T>& p = pred.value();
  require_rank("smooth_l1", p.shape(), 2);
  if (target.shape() != p.shape()) shape_mismatch("smooth_l1", p.shape(), target.shape());
  if (mask.size() != p.dim(0)) {
    throw ShapeError("smooth_l1: mask of " + std::to_string(mask.size()) + " rows for " +
                     shape_to_string(p.shape()));
  }
  if (!(normalizer > T(0))) throw ContractError("smooth_l1: normalizer must be > 0");
  const std::size_t d = p.dim(1);
  T loss = 0;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (!mask[r]) continue;
    for (std::size_t j = 0; j < d; ++j) {
      const T diff = std::abs(p[r * d + j] - target[r * d + j]);
      loss += diff < T(1) ? T(0.5) * diff * diff : diff - T(0.5);
    }
  }
  loss /= normalizer;
  auto tgt = std::make_shared<Tensor<T>>(target);
  return pred.tape().record("smooth_l1", Tensor<T>::scalar(loss), {pred},
                            [tgt, mask, normalizer, d](BackwardContext<T>& ctx) {
    Tensor<T>& gp = *ctx.in_grads[0];
    const Tensor<T>& p = *ctx.in_values[0];
    const T g = ctx.out_grad[0] / normalizer;
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (!mask[r]) continue;
      for (std::size_t j = 0; j < d; ++j) {
        const T diff = p[r * d + j] - (*tgt)[r * d + j];
        const T dd = std::abs(diff) < T(1) ? diff : (diff > T(0) ? T(1) : T(-1));
        gp[r * d + j] += g * dd;
      }
    }
  });
}

#define AAT_INSTANTIATE_OPS(T)                                                                 \
  template Var<T> add<T>(Var<T>, Var<T>);                                                      \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                      \
  template Var<T> scale<T>(Var<T>, T);                                                         \
  template Var<T> relu<T>(Var<T>);                                                             \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, int, int);                                 \
  template Var<T> max_pool2d<T>(Var<T>, int);                                                  \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                           \
  template Var<T> flatten<T>(Var<T>);                                                          \
  template Var<T> to_rows<T>(Var<T>);                                                          \
  template Var<T> concat<T>(const std::vector<Var<T>>&);                                       \
  template Var<T> sum<T>(Var<T>);                                                              \
  template Var<T> mean<T>(Var<T>);                                                             \
  template Var<T> gradient_reversal<T>(Var<T>, T);                                             \
  template Var<T> softmax_cross_entropy<T>(Var<T>, const std::vector<int>&,                    \
                                           const std::vector<T>&, T);                          \
  template Var<T> binary_cross_entropy_with_logits<T>(Var<T>, const std::vector<T>&);          \
  template Var<T> smooth_l1<T>(Var<T>, const Tensor<T>&, const std::vector<std::uint8_t>&, T); \
  template Tensor<T> softmax_rows<T>(const Tensor<T>&);

AAT_INSTANTIATE_OPS(float)
AAT_INSTANTIATE_OPS(double)

}  // namespace aat::ops
