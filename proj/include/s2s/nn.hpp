#pragma once

// Minimal reverse-mode NN kernels: dense/conv layers over batched tensors,
// explicit save-stack autograd, Adam. Templated on the scalar type so the
// same code runs float32 in production and float64 under gradient checks.

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "s2s/common.hpp"

namespace s2s::nn {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != data.size()) throw DimensionError("tensor: shape/data mismatch");
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw DimensionError("tensor: non-positive dimension");
      n *= size_t(d);
    }
    return n;
  }

  size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[size_t(i)]; }
  int ndim() const { return int(shape.size()); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (size_t i = 0; i < data.size(); i++) out.data[i] = U(data[i]);
    return out;
  }
};

/// Save-stack for backprop. Forward passes push what backward needs; backward
/// passes pop in exact reverse call order. A null Ctx* means pure inference.
template <typename T>
struct Ctx {
  std::vector<Tensor<T>> tensors;
  std::vector<std::vector<int64_t>> indices;
  std::vector<std::vector<int>> shapes;

  void push(Tensor<T> t) { tensors.push_back(std::move(t)); }
  Tensor<T> pop() {
    if (tensors.empty()) throw ConsistencyError("ctx: tensor stack underflow");
    Tensor<T> t = std::move(tensors.back());
    tensors.pop_back();
    return t;
  }
  void push_idx(std::vector<int64_t> v) { indices.push_back(std::move(v)); }
  std::vector<int64_t> pop_idx() {
    if (indices.empty()) throw ConsistencyError("ctx: index stack underflow");
    auto v = std::move(indices.back());
    indices.pop_back();
    return v;
  }
  void push_shape(std::vector<int> s) { shapes.push_back(std::move(s)); }
  std::vector<int> pop_shape() {
    if (shapes.empty()) throw ConsistencyError("ctx: shape stack underflow");
    auto s = std::move(shapes.back());
    shapes.pop_back();
    return s;
  }
  bool empty() const { return tensors.empty() && indices.empty() && shapes.empty(); }
  void clear() {
    tensors.clear();
    indices.clear();
    shapes.clear();
  }
};

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool qnet_affine = false;  // marks parameters subject to weight decay

  Param() = default;
  Param(std::string n, std::vector<int> shape) : name(std::move(n)), value(shape), grad(shape) {}
};

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatMap = Eigen::Map<EMat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const EMat<T>>;
template <typename T>
using VecMap = Eigen::Map<EVec<T>>;
template <typename T>
using CVecMap = Eigen::Map<const EVec<T>>;

template <typename T>
std::vector<T>& scratch(int which) {
  thread_local std::vector<T> bufs[2];
  return bufs[which];
}

template <typename T>
void init_uniform(Tensor<T>& t, double bound, Rng& rng) {
  for (auto& v : t.data) v = T(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------
// Dense layer: y = x W^T + b, x:[N,in] -> y:[N,out]

template <typename T>
class Linear {
 public:
  Param<T> weight;  // [out, in]
  Param<T> bias;    // [out]

  Linear(const std::string& name, int in, int out, Rng& rng, bool qnet_affine = false)
      : weight(name + ".weight", {out, in}), bias(name + ".bias", {out}), in_(in), out_(out) {
    double bound = 1.0 / std::sqrt(double(in));
    init_uniform(weight.value, bound, rng);
    init_uniform(bias.value, bound, rng);
    weight.qnet_affine = qnet_affine;
    bias.qnet_affine = qnet_affine;
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    if (x.ndim() != 2 || x.dim(1) != in_)
      throw DimensionError(weight.name + ": expected [N," + std::to_string(in_) + "] input");
    int n = x.dim(0);
    Tensor<T> y({n, out_});
    CMatMap<T> xm(x.ptr(), n, in_);
    CMatMap<T> wm(weight.value.ptr(), out_, in_);
    MatMap<T> ym(y.ptr(), n, out_);
    ym.noalias() = xm * wm.transpose();
    CVecMap<T> bm(bias.value.ptr(), out_);
    ym.rowwise() += bm.transpose();
    if (ctx) ctx->push(x);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) {
    Tensor<T> x = ctx.pop();
    int n = x.dim(0);
    if (g.ndim() != 2 || g.dim(0) != n || g.dim(1) != out_)
      throw DimensionError(weight.name + ": bad upstream gradient shape");
    CMatMap<T> xm(x.ptr(), n, in_);
    CMatMap<T> gm(g.ptr(), n, out_);
    MatMap<T> dw(weight.grad.ptr(), out_, in_);
    VecMap<T> db(bias.grad.ptr(), out_);
    dw.noalias() += gm.transpose() * xm;
    db += gm.colwise().sum().transpose();
    Tensor<T> dx({n, in_});
    MatMap<T> dxm(dx.ptr(), n, in_);
    CMatMap<T> wm(weight.value.ptr(), out_, in_);
    dxm.noalias() = gm * wm;
    return dx;
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
};

// ---------------------------------------------------------------------------
// 2-D convolution over [N,C,H,W] via im2col + GEMM.

template <typename T>
class Conv2d {
 public:
  Param<T> weight;  // [out_c, in_c, k, k]
  Param<T> bias;    // [out_c]

  Conv2d(const std::string& name, int in_c, int out_c, int k, int stride, int pad, Rng& rng)
      : weight(name + ".weight", {out_c, in_c, k, k}),
        bias(name + ".bias", {out_c}),
        in_c_(in_c),
        out_c_(out_c),
        k_(k),
        stride_(stride),
        pad_(pad) {
    if (k <= 0 || stride <= 0 || pad < 0) throw ConfigError(name + ": bad conv geometry");
    double bound = 1.0 / std::sqrt(double(in_c) * k * k);
    init_uniform(weight.value, bound, rng);
    init_uniform(bias.value, bound, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    auto [n, h, w, oh, ow] = geometry(x);
    int p = oh * ow, ck = in_c_ * k_ * k_;
    Tensor<T> y({n, out_c_, oh, ow});
    CMatMap<T> wm(weight.value.ptr(), out_c_, ck);
    CVecMap<T> bm(bias.value.ptr(), out_c_);
    bool direct = (k_ == 1 && stride_ == 1 && pad_ == 0);
    auto& buf = scratch<T>(0);
    if (!direct) buf.resize(size_t(ck) * p);
    for (int i = 0; i < n; i++) {
      const T* xi = x.ptr() + size_t(i) * in_c_ * h * w;
      const T* cols = xi;
      if (!direct) {
        im2col(xi, h, w, oh, ow, buf.data());
        cols = buf.data();
      }
      CMatMap<T> sm(cols, ck, p);
      MatMap<T> ym(y.ptr() + size_t(i) * out_c_ * p, out_c_, p);
      ym.noalias() = wm * sm;
      ym.colwise() += bm;
    }
    if (ctx) ctx->push(x);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) {
    Tensor<T> x = ctx.pop();
    auto [n, h, w, oh, ow] = geometry(x);
    int p = oh * ow, ck = in_c_ * k_ * k_;
    if (g.ndim() != 4 || g.dim(0) != n || g.dim(1) != out_c_ || g.dim(2) != oh || g.dim(3) != ow)
      throw DimensionError(weight.name + ": bad upstream gradient shape");
    Tensor<T> dx(x.shape);
    CMatMap<T> wm(weight.value.ptr(), out_c_, ck);
    MatMap<T> dw(weight.grad.ptr(), out_c_, ck);
    VecMap<T> db(bias.grad.ptr(), out_c_);
    bool direct = (k_ == 1 && stride_ == 1 && pad_ == 0);
    auto& buf = scratch<T>(0);
    auto& dbuf = scratch<T>(1);
    if (!direct) {
      buf.resize(size_t(ck) * p);
      dbuf.resize(size_t(ck) * p);
    }
    for (int i = 0; i < n; i++) {
      const T* xi = x.ptr() + size_t(i) * in_c_ * h * w;
      const T* cols = xi;
      if (!direct) {
        im2col(xi, h, w, oh, ow, buf.data());
        cols = buf.data();
      }
      CMatMap<T> sm(cols, ck, p);
      CMatMap<T> gm(g.ptr() + size_t(i) * out_c_ * p, out_c_, p);
      dw.noalias() += gm * sm.transpose();
      db += gm.rowwise().sum();
      T* dxi = dx.ptr() + size_t(i) * in_c_ * h * w;
      if (direct) {
        MatMap<T> dxm(dxi, ck, p);
        dxm.noalias() = wm.transpose() * gm;
      } else {
        MatMap<T> dm(dbuf.data(), ck, p);
        dm.noalias() = wm.transpose() * gm;
        col2im_add(dbuf.data(), h, w, oh, ow, dxi);
      }
    }
    return dx;
  }

  std::pair<int, int> out_hw(int h, int w) const {
    return {(h + 2 * pad_ - k_) / stride_ + 1, (w + 2 * pad_ - k_) / stride_ + 1};
  }

 private:
  std::tuple<int, int, int, int, int> geometry(const Tensor<T>& x) const {
    if (x.ndim() != 4 || x.dim(1) != in_c_)
      throw DimensionError(weight.name + ": expected [N," + std::to_string(in_c_) + ",H,W] input");
    int h = x.dim(2), w = x.dim(3);
    auto [oh, ow] = out_hw(h, w);
    if (oh <= 0 || ow <= 0) throw DimensionError(weight.name + ": input too small");
    return {x.dim(0), h, w, oh, ow};
  }

  // Patch matrix in [in_c*k*k, oh*ow] layout so W [oc, ck] · S lands directly
  // in NCHW output order.
  void im2col(const T* x, int h, int w, int oh, int ow, T* out) const {
    for (int ic = 0; ic < in_c_; ic++) {
      const T* xc = x + size_t(ic) * h * w;
      for (int ky = 0; ky < k_; ky++) {
        for (int kx = 0; kx < k_; kx++) {
          T* dst = out + (size_t(ic) * k_ * k_ + size_t(ky) * k_ + kx) * oh * ow;
          for (int oy = 0; oy < oh; oy++) {
            int iy = oy * stride_ - pad_ + ky;
            T* row = dst + size_t(oy) * ow;
            if (iy < 0 || iy >= h) {
              std::fill(row, row + ow, T(0));
              continue;
            }
            const T* src = xc + size_t(iy) * w;
            for (int ox = 0; ox < ow; ox++) {
              int ix = ox * stride_ - pad_ + kx;
              row[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im_add(const T* cols, int h, int w, int oh, int ow, T* dx) const {
    for (int ic = 0; ic < in_c_; ic++) {
      T* xc = dx + size_t(ic) * h * w;
      for (int ky = 0; ky < k_; ky++) {
        for (int kx = 0; kx < k_; kx++) {
          const T* src = cols + (size_t(ic) * k_ * k_ + size_t(ky) * k_ + kx) * oh * ow;
          for (int oy = 0; oy < oh; oy++) {
            int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            T* row = xc + size_t(iy) * w;
            const T* srow = src + size_t(oy) * ow;
            for (int ox = 0; ox < ow; ox++) {
              int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) row[ix] += srow[ox];
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_, k_, stride_, pad_;
};

// ---------------------------------------------------------------------------
// Parameter-free layers.

template <typename T>
struct ReLU {
  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    Tensor<T> y(x.shape);
    for (size_t i = 0; i < x.numel(); i++) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    if (ctx) ctx->push(y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) const {
    Tensor<T> y = ctx.pop();
    if (g.numel() != y.numel()) throw DimensionError("relu: bad upstream gradient shape");
    Tensor<T> dx(y.shape);
    for (size_t i = 0; i < y.numel(); i++) dx.data[i] = y.data[i] > T(0) ? g.data[i] : T(0);
    return dx;
  }
};

template <typename T>
struct Sigmoid {
  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    Tensor<T> y(x.shape);
    for (size_t i = 0; i < x.numel(); i++) y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    if (ctx) ctx->push(y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) const {
    Tensor<T> y = ctx.pop();
    if (g.numel() != y.numel()) throw DimensionError("sigmoid: bad upstream gradient shape");
    Tensor<T> dx(y.shape);
    for (size_t i = 0; i < y.numel(); i++)
      dx.data[i] = g.data[i] * y.data[i] * (T(1) - y.data[i]);
    return dx;
  }
};

/// 2×2 average pool, stride 2. Trailing odd row/column is dropped.
template <typename T>
struct AvgPool2 {
  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    if (x.ndim() != 4) throw DimensionError("avgpool: expected NCHW input");
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) throw DimensionError("avgpool: input smaller than window");
    Tensor<T> y({n, c, oh, ow});
    for (int i = 0; i < n * c; i++) {
      const T* xc = x.ptr() + size_t(i) * h * w;
      T* yc = y.ptr() + size_t(i) * oh * ow;
      for (int oy = 0; oy < oh; oy++)
        for (int ox = 0; ox < ow; ox++) {
          const T* p0 = xc + size_t(2 * oy) * w + 2 * ox;
          yc[size_t(oy) * ow + ox] = (p0[0] + p0[1] + p0[w] + p0[w + 1]) * T(0.25);
        }
    }
    if (ctx) ctx->push_shape(x.shape);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) const {
    auto shape = ctx.pop_shape();
    int n = shape[0], c = shape[1], h = shape[2], w = shape[3];
    int oh = h / 2, ow = w / 2;
    if (g.ndim() != 4 || g.dim(0) != n || g.dim(1) != c || g.dim(2) != oh || g.dim(3) != ow)
      throw DimensionError("avgpool: bad upstream gradient shape");
    Tensor<T> dx(shape);
    for (int i = 0; i < n * c; i++) {
      T* xc = dx.ptr() + size_t(i) * h * w;
      const T* gc = g.ptr() + size_t(i) * oh * ow;
      for (int oy = 0; oy < oh; oy++)
        for (int ox = 0; ox < ow; ox++) {
          T v = gc[size_t(oy) * ow + ox] * T(0.25);
          T* p0 = xc + size_t(2 * oy) * w + 2 * ox;
          p0[0] += v;
          p0[1] += v;
          p0[w] += v;
          p0[w + 1] += v;
        }
    }
    return dx;
  }
};

/// Max pool with explicit geometry (ResNet stem uses 3/2/1).
template <typename T>
class MaxPool {
 public:
  MaxPool(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    if (x.ndim() != 4) throw DimensionError("maxpool: expected NCHW input");
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int oh = (h + 2 * pad_ - k_) / stride_ + 1;
    int ow = (w + 2 * pad_ - k_) / stride_ + 1;
    if (oh <= 0 || ow <= 0) throw DimensionError("maxpool: input too small");
    Tensor<T> y({n, c, oh, ow});
    std::vector<int64_t> arg(size_t(n) * c * oh * ow);
    for (int i = 0; i < n * c; i++) {
      const T* xc = x.ptr() + size_t(i) * h * w;
      T* yc = y.ptr() + size_t(i) * oh * ow;
      int64_t* ac = arg.data() + size_t(i) * oh * ow;
      for (int oy = 0; oy < oh; oy++)
        for (int ox = 0; ox < ow; ox++) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t bi = -1;
          for (int ky = 0; ky < k_; ky++) {
            int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k_; kx++) {
              int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= w) continue;
              T v = xc[size_t(iy) * w + ix];
              if (v > best) {
                best = v;
                bi = int64_t(iy) * w + ix;
              }
            }
          }
          yc[size_t(oy) * ow + ox] = best;
          ac[size_t(oy) * ow + ox] = bi;
        }
    }
    if (ctx) {
      ctx->push_shape(x.shape);
      ctx->push_idx(std::move(arg));
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) const {
    auto arg = ctx.pop_idx();
    auto shape = ctx.pop_shape();
    if (g.numel() != arg.size()) throw DimensionError("maxpool: bad upstream gradient shape");
    int h = shape[2], w = shape[3];
    int per_plane_out = int(g.numel() / (size_t(shape[0]) * shape[1]));
    Tensor<T> dx(shape);
    for (int i = 0; i < shape[0] * shape[1]; i++) {
      T* xc = dx.ptr() + size_t(i) * h * w;
      const T* gc = g.ptr() + size_t(i) * per_plane_out;
      const int64_t* ac = arg.data() + size_t(i) * per_plane_out;
      for (int p = 0; p < per_plane_out; p++)
        if (ac[p] >= 0) xc[ac[p]] += gc[p];
    }
    return dx;
  }

 private:
  int k_, stride_, pad_;
};

/// [N,C,H,W] -> [N,C] spatial mean.
template <typename T>
struct GlobalAvgPool {
  Tensor<T> forward(const Tensor<T>& x, Ctx<T>* ctx) const {
    if (x.ndim() != 4) throw DimensionError("gap: expected NCHW input");
    int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor<T> y({n, c});
    for (int i = 0; i < n * c; i++) {
      const T* xc = x.ptr() + size_t(i) * hw;
      T s = 0;
      for (int p = 0; p < hw; p++) s += xc[p];
      y.data[size_t(i)] = s / T(hw);
    }
    if (ctx) ctx->push_shape(x.shape);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, Ctx<T>& ctx) const {
    auto shape = ctx.pop_shape();
    int n = shape[0], c = shape[1], hw = shape[2] * shape[3];
    if (g.ndim() != 2 || g.dim(0) != n || g.dim(1) != c)
      throw DimensionError("gap: bad upstream gradient shape");
    Tensor<T> dx(shape);
    for (int i = 0; i < n * c; i++) {
      T v = g.data[size_t(i)] / T(hw);
      T* xc = dx.ptr() + size_t(i) * hw;
      for (int p = 0; p < hw; p++) xc[p] = v;
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Adam with bias correction; epsilon applied outside the square root.

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.numel(), 0.0);
      v_.emplace_back(p->value.numel(), 0.0);
    }
  }

  void step(double lr) {
    t_++;
    double c1 = 1.0 - std::pow(beta1_, double(t_));
    double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params_.size(); i++) {
      Param<T>& p = *params_[i];
      for (size_t j = 0; j < p.value.numel(); j++) {
        double g = double(p.grad.data[j]);
        double m = m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
        double v = v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
        double update = lr * (m / c1) / (std::sqrt(v / c2) + eps_);
        p.value.data[j] = T(double(p.value.data[j]) - update);
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->grad.fill(T(0));
  }

  int64_t steps_taken() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace s2s::nn
