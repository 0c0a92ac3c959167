#pragma once

// Minimal CNN layer library with explicit backward passes. Float32 storage,
// double accumulation for statistics; GEMMs through Eigen. Single-threaded by
// design: forwards are bit-deterministic, which the checkpoint and ensemble
// contracts rely on.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "glio/error.hpp"
#include "glio/rng.hpp"
#include "glio/tensor.hpp"

namespace glio::nn {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int64_t> shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { std::fill(grad.vec().begin(), grad.vec().end(), 0.0f); }
};

struct NamedBuffer {
  std::string name;
  Tensor value;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& gy) = 0;
  virtual void collect_params(std::vector<Parameter*>&) {}
  virtual void collect_buffers(std::vector<NamedBuffer*>&) {}
};

// ---------------------------------------------------------------------------

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad, bool bias = false)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad),
        weight_(name + ".weight", {out_ch, in_ch, kernel, kernel}),
        has_bias_(bias) {
    if (bias) bias_ = Parameter(name + ".bias", {out_ch});
  }

  Tensor forward(const Tensor& x, bool) override {
    check_shape(x);
    x_ = x;
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t ho = (h + 2 * pad_ - k_) / stride_ + 1;
    const int64_t wo = (w + 2 * pad_ - k_) / stride_ + 1;
    Tensor y({n, out_ch_, ho, wo});
    const int64_t kk = static_cast<int64_t>(in_ch_) * k_ * k_;
    std::vector<float> col(static_cast<size_t>(kk * ho * wo));
    CMapM wmat(weight_.value.data(), out_ch_, kk);
    for (int64_t i = 0; i < n; ++i) {
      im2col(x.data() + i * in_ch_ * h * w, h, w, col.data(), ho, wo);
      CMapM cmat(col.data(), kk, ho * wo);
      MapM ymat(y.data() + i * out_ch_ * ho * wo, out_ch_, ho * wo);
      ymat.noalias() = wmat * cmat;
      if (has_bias_)
        for (int64_t oc = 0; oc < out_ch_; ++oc)
          ymat.row(oc).array() += bias_.value[oc];
    }
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    const int64_t n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int64_t ho = gy.dim(2), wo = gy.dim(3);
    const int64_t kk = static_cast<int64_t>(in_ch_) * k_ * k_;
    Tensor gx(x_.shape());
    std::vector<float> col(static_cast<size_t>(kk * ho * wo));
    std::vector<float> gcol(static_cast<size_t>(kk * ho * wo));
    CMapM wmat(weight_.value.data(), out_ch_, kk);
    MapM gwmat(weight_.grad.data(), out_ch_, kk);
    for (int64_t i = 0; i < n; ++i) {
      im2col(x_.data() + i * in_ch_ * h * w, h, w, col.data(), ho, wo);
      CMapM cmat(col.data(), kk, ho * wo);
      CMapM gymat(gy.data() + i * out_ch_ * ho * wo, out_ch_, ho * wo);
      gwmat.noalias() += gymat * cmat.transpose();
      MapM gcmat(gcol.data(), kk, ho * wo);
      gcmat.noalias() = wmat.transpose() * gymat;
      col2im(gcol.data(), h, w, gx.data() + i * in_ch_ * h * w, ho, wo);
      if (has_bias_)
        for (int64_t oc = 0; oc < out_ch_; ++oc)
          bias_.grad[oc] += gymat.row(oc).sum();
    }
    return gx;
  }

  void collect_params(std::vector<Parameter*>& out) override {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

 private:
  void check_shape(const Tensor& x) const {
    if (x.ndim() != 4 || x.dim(1) != in_ch_)
      throw_internal("conv " + weight_.name + ": bad input shape " + x.shape_str());
  }

  void im2col(const float* img, int64_t h, int64_t w, float* col, int64_t ho, int64_t wo) const {
    // col[(c*k_+ki)*k_+kj][oh*wo+ow]
    for (int64_t c = 0; c < in_ch_; ++c) {
      const float* plane = img + c * h * w;
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj) {
          float* dst = col + ((c * k_ + ki) * k_ + kj) * ho * wo;
          for (int64_t oh = 0; oh < ho; ++oh) {
            const int64_t ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= h) {
              std::fill(dst + oh * wo, dst + (oh + 1) * wo, 0.0f);
              continue;
            }
            const float* src_row = plane + ih * w;
            for (int64_t ow = 0; ow < wo; ++ow) {
              const int64_t iw = ow * stride_ - pad_ + kj;
              dst[oh * wo + ow] = (iw >= 0 && iw < w) ? src_row[iw] : 0.0f;
            }
          }
        }
    }
  }

  void col2im(const float* col, int64_t h, int64_t w, float* img, int64_t ho, int64_t wo) const {
    std::fill(img, img + in_ch_ * h * w, 0.0f);
    for (int64_t c = 0; c < in_ch_; ++c) {
      float* plane = img + c * h * w;
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj) {
          const float* src = col + ((c * k_ + ki) * k_ + kj) * ho * wo;
          for (int64_t oh = 0; oh < ho; ++oh) {
            const int64_t ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= h) continue;
            float* dst_row = plane + ih * w;
            for (int64_t ow = 0; ow < wo; ++ow) {
              const int64_t iw = ow * stride_ - pad_ + kj;
              if (iw >= 0 && iw < w) dst_row[iw] += src[oh * wo + ow];
            }
          }
        }
    }
  }

  int64_t in_ch_, out_ch_;
  int k_, stride_, pad_;
  Parameter weight_;
  Parameter bias_;
  bool has_bias_;
  Tensor x_;
};

// ---------------------------------------------------------------------------

class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, int channels, double eps = 1e-5, double momentum = 0.1)
      : ch_(channels), eps_(eps), momentum_(momentum),
        gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}) {
    std::fill(gamma_.value.vec().begin(), gamma_.value.vec().end(), 1.0f);
    running_mean_ = {name + ".running_mean", Tensor({channels})};
    running_var_ = {name + ".running_var", Tensor({channels})};
    std::fill(running_var_.value.vec().begin(), running_var_.value.vec().end(), 1.0f);
  }

  Tensor forward(const Tensor& x, bool training) override {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (c != ch_) throw_internal("batchnorm " + gamma_.name + ": channel mismatch");
    const int64_t m = n * h * w;  // reduction size per channel
    training_ = training;
    m_ = m;
    xhat_ = Tensor(x.shape());
    invstd_.assign(static_cast<size_t>(c), 0.0f);
    Tensor y(x.shape());

    for (int64_t cc = 0; cc < c; ++cc) {
      double mean, var;
      if (training) {
        double s = 0.0, ss = 0.0;
        for (int64_t i = 0; i < n; ++i) {
          const float* p = x.data() + (i * c + cc) * h * w;
          for (int64_t q = 0; q < h * w; ++q) {
            s += p[q];
            ss += static_cast<double>(p[q]) * p[q];
          }
        }
        mean = s / static_cast<double>(m);
        var = std::max(0.0, ss / static_cast<double>(m) - mean * mean);  // biased
        const double unbiased = (m > 1) ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
        running_mean_.value[cc] = static_cast<float>((1.0 - momentum_) * running_mean_.value[cc] +
                                                     momentum_ * mean);
        running_var_.value[cc] = static_cast<float>((1.0 - momentum_) * running_var_.value[cc] +
                                                    momentum_ * unbiased);
      } else {
        mean = running_mean_.value[cc];
        var = running_var_.value[cc];
      }
      const double inv = 1.0 / std::sqrt(var + eps_);
      invstd_[static_cast<size_t>(cc)] = static_cast<float>(inv);
      const float g = gamma_.value[cc], b = beta_.value[cc];
      for (int64_t i = 0; i < n; ++i) {
        const float* p = x.data() + (i * c + cc) * h * w;
        float* xh = xhat_.data() + (i * c + cc) * h * w;
        float* yo = y.data() + (i * c + cc) * h * w;
        for (int64_t q = 0; q < h * w; ++q) {
          const float v = static_cast<float>((p[q] - mean) * inv);
          xh[q] = v;
          yo[q] = g * v + b;
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    const int64_t n = gy.dim(0), c = gy.dim(1), h = gy.dim(2), w = gy.dim(3);
    Tensor gx(gy.shape());
    for (int64_t cc = 0; cc < c; ++cc) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const float* g = gy.data() + (i * c + cc) * h * w;
        const float* xh = xhat_.data() + (i * c + cc) * h * w;
        for (int64_t q = 0; q < h * w; ++q) {
          sum_gy += g[q];
          sum_gy_xhat += static_cast<double>(g[q]) * xh[q];
        }
      }
      gamma_.grad[cc] += static_cast<float>(sum_gy_xhat);
      beta_.grad[cc] += static_cast<float>(sum_gy);
      const double gval = gamma_.value[cc];
      const double inv = invstd_[static_cast<size_t>(cc)];
      const double md = static_cast<double>(m_);
      for (int64_t i = 0; i < n; ++i) {
        const float* g = gy.data() + (i * c + cc) * h * w;
        const float* xh = xhat_.data() + (i * c + cc) * h * w;
        float* o = gx.data() + (i * c + cc) * h * w;
        if (training_) {
          for (int64_t q = 0; q < h * w; ++q)
            o[q] = static_cast<float>(gval * inv / md *
                                      (md * g[q] - sum_gy - xh[q] * sum_gy_xhat));
        } else {
          for (int64_t q = 0; q < h * w; ++q) o[q] = static_cast<float>(gval * inv * g[q]);
        }
      }
    }
    return gx;
  }

  void collect_params(std::vector<Parameter*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<NamedBuffer*>& out) override {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

 private:
  int64_t ch_;
  double eps_, momentum_;
  Parameter gamma_, beta_;
  NamedBuffer running_mean_, running_var_;
  Tensor xhat_;
  std::vector<float> invstd_;
  int64_t m_ = 0;
  bool training_ = true;
};

// ---------------------------------------------------------------------------

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool) override {
    y_ = x;
    for (float& v : y_.vec()) v = v > 0.0f ? v : 0.0f;
    return y_;
  }
  Tensor backward(const Tensor& gy) override {
    Tensor gx = gy;
    for (int64_t i = 0; i < gx.numel(); ++i)
      if (y_[i] <= 0.0f) gx[i] = 0.0f;
    return gx;
  }

 private:
  Tensor y_;
};

// ---------------------------------------------------------------------------

class MaxPool2d : public Layer {
 public:
  MaxPool2d(int kernel, int stride, int pad) : k_(kernel), stride_(stride), pad_(pad) {}

  Tensor forward(const Tensor& x, bool) override {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    in_shape_ = x.shape();
    const int64_t ho = (h + 2 * pad_ - k_) / stride_ + 1;
    const int64_t wo = (w + 2 * pad_ - k_) / stride_ + 1;
    Tensor y({n, c, ho, wo});
    argmax_.assign(static_cast<size_t>(y.numel()), 0);
    int64_t oi = 0;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t cc = 0; cc < c; ++cc) {
        const float* plane = x.data() + (i * c + cc) * h * w;
        for (int64_t oh = 0; oh < ho; ++oh)
          for (int64_t ow = 0; ow < wo; ++ow, ++oi) {
            float best = -std::numeric_limits<float>::infinity();
            int64_t best_idx = -1;
            for (int ki = 0; ki < k_; ++ki) {
              const int64_t ih = oh * stride_ - pad_ + ki;
              if (ih < 0 || ih >= h) continue;
              for (int kj = 0; kj < k_; ++kj) {
                const int64_t iw = ow * stride_ - pad_ + kj;
                if (iw < 0 || iw >= w) continue;
                const float v = plane[ih * w + iw];
                if (v > best) {
                  best = v;
                  best_idx = (i * c + cc) * h * w + ih * w + iw;
                }
              }
            }
            y[oi] = best;
            argmax_[static_cast<size_t>(oi)] = best_idx;
          }
      }
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    Tensor gx(in_shape_);
    for (int64_t i = 0; i < gy.numel(); ++i)
      gx[argmax_[static_cast<size_t>(i)]] += gy[i];
    return gx;
  }

 private:
  int k_, stride_, pad_;
  std::vector<int64_t> argmax_;
  std::vector<int64_t> in_shape_;
};

// ---------------------------------------------------------------------------

// Adaptive average pooling onto a fixed spatial size; used by the stub
// backbone to accept both full-resolution stacks and tiny test inputs.
class AdaptiveAvgPool2d : public Layer {
 public:
  explicit AdaptiveAvgPool2d(int out_hw) : out_hw_(out_hw) {}

  Tensor forward(const Tensor& x, bool) override {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    in_shape_ = x.shape();
    if (h == out_hw_ && w == out_hw_) {
      passthrough_ = true;
      return x;
    }
    passthrough_ = false;
    Tensor y({n, c, out_hw_, out_hw_});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t cc = 0; cc < c; ++cc) {
        const float* plane = x.data() + (i * c + cc) * h * w;
        float* out = y.data() + (i * c + cc) * out_hw_ * out_hw_;
        for (int64_t oh = 0; oh < out_hw_; ++oh) {
          const int64_t h0 = oh * h / out_hw_, h1 = (oh + 1) * h / out_hw_;
          for (int64_t ow = 0; ow < out_hw_; ++ow) {
            const int64_t w0 = ow * w / out_hw_, w1 = (ow + 1) * w / out_hw_;
            double s = 0.0;
            for (int64_t ih = h0; ih < h1; ++ih)
              for (int64_t iw = w0; iw < w1; ++iw) s += plane[ih * w + iw];
            out[oh * out_hw_ + ow] = static_cast<float>(s / static_cast<double>((h1 - h0) * (w1 - w0)));
          }
        }
      }
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    if (passthrough_) return gy;
    const int64_t n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
    Tensor gx(in_shape_);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t cc = 0; cc < c; ++cc) {
        const float* g = gy.data() + (i * c + cc) * out_hw_ * out_hw_;
        float* out = gx.data() + (i * c + cc) * h * w;
        for (int64_t oh = 0; oh < out_hw_; ++oh) {
          const int64_t h0 = oh * h / out_hw_, h1 = (oh + 1) * h / out_hw_;
          for (int64_t ow = 0; ow < out_hw_; ++ow) {
            const int64_t w0 = ow * w / out_hw_, w1 = (ow + 1) * w / out_hw_;
            const float share =
                g[oh * out_hw_ + ow] / static_cast<float>((h1 - h0) * (w1 - w0));
            for (int64_t ih = h0; ih < h1; ++ih)
              for (int64_t iw = w0; iw < w1; ++iw) out[ih * w + iw] += share;
          }
        }
      }
    return gx;
  }

 private:
  int64_t out_hw_;
  std::vector<int64_t> in_shape_;
  bool passthrough_ = false;
};

// ---------------------------------------------------------------------------

enum class GlobalPoolKind { average, max };

// Collapses {N,C,H,W} to {N,C}. The per-slice spatial pooling that turns the
// truncated backbone's feature map into the 512-d feature vector.
class GlobalPool : public Layer {
 public:
  explicit GlobalPool(GlobalPoolKind kind) : kind_(kind) {}

  Tensor forward(const Tensor& x, bool) override {
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    in_shape_ = x.shape();
    Tensor y({n, c});
    if (kind_ == GlobalPoolKind::average) {
      for (int64_t i = 0; i < n * c; ++i) {
        const float* p = x.data() + i * hw;
        double s = 0.0;
        for (int64_t q = 0; q < hw; ++q) s += p[q];
        y[i] = static_cast<float>(s / static_cast<double>(hw));
      }
    } else {
      argmax_.assign(static_cast<size_t>(n * c), 0);
      for (int64_t i = 0; i < n * c; ++i) {
        const float* p = x.data() + i * hw;
        int64_t bi = 0;
        for (int64_t q = 1; q < hw; ++q)
          if (p[q] > p[bi]) bi = q;
        y[i] = p[bi];
        argmax_[static_cast<size_t>(i)] = bi;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    const int64_t hw = in_shape_[2] * in_shape_[3];
    Tensor gx(in_shape_);
    const int64_t nc = gy.numel();
    if (kind_ == GlobalPoolKind::average) {
      for (int64_t i = 0; i < nc; ++i) {
        const float share = gy[i] / static_cast<float>(hw);
        float* p = gx.data() + i * hw;
        for (int64_t q = 0; q < hw; ++q) p[q] = share;
      }
    } else {
      for (int64_t i = 0; i < nc; ++i)
        gx[i * hw + argmax_[static_cast<size_t>(i)]] = gy[i];
    }
    return gx;
  }

 private:
  GlobalPoolKind kind_;
  std::vector<int64_t> in_shape_;
  std::vector<int64_t> argmax_;
};

// ---------------------------------------------------------------------------

class Linear : public Layer {
 public:
  Linear(std::string name, int in_features, int out_features)
      : in_(in_features), out_(out_features),
        weight_(name + ".weight", {out_features, in_features}),
        bias_(name + ".bias", {out_features}) {}

  Tensor forward(const Tensor& x, bool) override {
    if (x.ndim() != 2 || x.dim(1) != in_)
      throw_internal("linear " + weight_.name + ": bad input shape " + x.shape_str());
    x_ = x;
    const int64_t n = x.dim(0);
    Tensor y({n, out_});
    CMapM xm(x.data(), n, in_);
    CMapM wm(weight_.value.data(), out_, in_);
    MapM ym(y.data(), n, out_);
    ym.noalias() = xm * wm.transpose();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t o = 0; o < out_; ++o) y[i * out_ + o] += bias_.value[o];
    return y;
  }

  Tensor backward(const Tensor& gy) override {
    const int64_t n = x_.dim(0);
    Tensor gx({n, in_});
    CMapM gym(gy.data(), n, out_);
    CMapM xm(x_.data(), n, in_);
    CMapM wm(weight_.value.data(), out_, in_);
    MapM gwm(weight_.grad.data(), out_, in_);
    MapM gxm(gx.data(), n, in_);
    gwm.noalias() += gym.transpose() * xm;
    gxm.noalias() = gym * wm;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t o = 0; o < out_; ++o) bias_.grad[o] += gy[i * out_ + o];
    return gx;
  }

  void collect_params(std::vector<Parameter*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int64_t in_, out_;
  Parameter weight_, bias_;
  Tensor x_;
};

// ---------------------------------------------------------------------------

class Sequential : public Layer {
 public:
  Sequential() = default;

  void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, training);
    return h;
  }
  Tensor backward(const Tensor& gy) override {
    Tensor g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }
  void collect_params(std::vector<Parameter*>& out) override {
    for (auto& l : layers_) l->collect_params(out);
  }
  void collect_buffers(std::vector<NamedBuffer*>& out) override {
    for (auto& l : layers_) l->collect_buffers(out);
  }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---------------------------------------------------------------------------

// Residual basic block: two 3x3 conv+BN stages with identity (or projected)
// shortcut, ReLU after the sum.
class BasicBlock : public Layer {
 public:
  BasicBlock(const std::string& name, int in_ch, int out_ch, int stride)
      : conv1_(name + ".conv1", in_ch, out_ch, 3, stride, 1),
        bn1_(name + ".bn1", out_ch),
        conv2_(name + ".conv2", out_ch, out_ch, 3, 1, 1),
        bn2_(name + ".bn2", out_ch) {
    if (stride != 1 || in_ch != out_ch) {
      down_conv_ = std::make_unique<Conv2d>(name + ".downsample.conv", in_ch, out_ch, 1, stride, 0);
      down_bn_ = std::make_unique<BatchNorm2d>(name + ".downsample.bn", out_ch);
    }
  }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x, training), training), training);
    Tensor main = bn2_.forward(conv2_.forward(h, training), training);
    Tensor shortcut = down_conv_ ? down_bn_->forward(down_conv_->forward(x, training), training) : x;
    Tensor sum(main.shape());
    for (int64_t i = 0; i < sum.numel(); ++i) sum[i] = main[i] + shortcut[i];
    return relu_out_.forward(sum, training);
  }

  Tensor backward(const Tensor& gy) override {
    Tensor gsum = relu_out_.backward(gy);
    Tensor gmain = bn2_.backward(gsum);
    gmain = conv2_.backward(gmain);
    gmain = relu1_.backward(gmain);
    gmain = bn1_.backward(gmain);
    Tensor gx = conv1_.backward(gmain);
    if (down_conv_) {
      Tensor gshort = down_bn_->backward(gsum);
      gshort = down_conv_->backward(gshort);
      for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += gshort[i];
    } else {
      for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += gsum[i];
    }
    return gx;
  }

  void collect_params(std::vector<Parameter*>& out) override {
    conv1_.collect_params(out);
    bn1_.collect_params(out);
    conv2_.collect_params(out);
    bn2_.collect_params(out);
    if (down_conv_) {
      down_conv_->collect_params(out);
      down_bn_->collect_params(out);
    }
  }
  void collect_buffers(std::vector<NamedBuffer*>& out) override {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
    if (down_bn_) down_bn_->collect_buffers(out);
  }

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> down_conv_;
  std::unique_ptr<BatchNorm2d> down_bn_;
  ReLU relu_out_;
};

// ---------------------------------------------------------------------------

// Numerically stable binary cross entropy on logits.
// Returns the mean loss; writes d(loss)/d(logit) into dlogits.
inline double bce_with_logits(const std::vector<float>& logits, const std::vector<float>& labels,
                              std::vector<float>* dlogits = nullptr) {
  if (logits.size() != labels.size() || logits.empty())
    throw_internal("bce_with_logits: size mismatch");
  const double n = static_cast<double>(logits.size());
  if (dlogits) dlogits->assign(logits.size(), 0.0f);
  double loss = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], y = labels[i];
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    if (dlogits) {
      const double sig = 1.0 / (1.0 + std::exp(-z));
      (*dlogits)[i] = static_cast<float>((sig - y) / n);
    }
  }
  loss /= n;
  if (!std::isfinite(loss)) throw_training("bce_with_logits: non-finite loss");
  return loss;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace glio::nn
