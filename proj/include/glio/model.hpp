#pragma once

// The 2.5D subtyping network: three input slices pass through one shared
// backbone (sharing is structural: a single parameter set applied to all
// slices), the three feature vectors are element-wise max-pooled across
// slices, and a fully connected layer plus sigmoid yields the positive-class
// probability.

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "glio/backbone.hpp"
#include "glio/error.hpp"
#include "glio/nn.hpp"
#include "glio/params_io.hpp"
#include "glio/roi.hpp"
#include "glio/rng.hpp"

namespace glio {

struct ModelConfig {
  BackboneConfig backbone;
  uint64_t init_seed = 0;
};

class SubtypingNet {
 public:
  explicit SubtypingNet(const ModelConfig& cfg)
      : cfg_(cfg), backbone_(build_backbone(cfg.backbone)),
        head_("head", cfg.backbone.feature_dim(), 1) {
    backbone_->collect_params(params_);
    head_.collect_params(params_);
    backbone_->collect_buffers(buffers_);
    init_params();
  }

  const ModelConfig& config() const { return cfg_; }
  int feature_dim() const { return cfg_.backbone.feature_dim(); }

  std::vector<nn::Parameter*>& parameters() { return params_; }
  std::vector<nn::NamedBuffer*>& buffers() { return buffers_; }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  // Batch forward on {B, 3 slices, 3 channels, H, W}; returns logits.
  std::vector<float> forward_batch(const Tensor& stacks, bool training) {
    if (stacks.ndim() != 5 || stacks.dim(1) != kStackSlices || stacks.dim(2) != kStackChannels)
      throw_internal("forward: expected {B,3,3,H,W} stack batch, got " + stacks.shape_str());
    const int64_t b = stacks.dim(0), h = stacks.dim(3), w = stacks.dim(4);
    Tensor merged = stacks.reshaped({b * kStackSlices, kStackChannels, h, w});
    Tensor feats = backbone_->forward(merged, training);  // {B*3, F}
    const int64_t f = feats.dim(1);

    pooled_ = Tensor({b, f});
    argmax_slice_.assign(static_cast<size_t>(b * f), 0);
    for (int64_t i = 0; i < b; ++i)
      for (int64_t j = 0; j < f; ++j) {
        int best = 0;
        float bv = feats[(i * kStackSlices) * f + j];
        for (int s = 1; s < kStackSlices; ++s) {
          const float v = feats[(i * kStackSlices + s) * f + j];
          if (v > bv) {
            bv = v;
            best = s;
          }
        }
        pooled_[i * f + j] = bv;
        argmax_slice_[static_cast<size_t>(i * f + j)] = best;
      }

    Tensor logits = head_.forward(pooled_, training);  // {B,1}
    std::vector<float> out(static_cast<size_t>(b));
    for (int64_t i = 0; i < b; ++i) {
      out[static_cast<size_t>(i)] = logits[i];
      if (!std::isfinite(logits[i]))
        throw_training("forward: non-finite network output");
    }
    feats_shape_ = feats.shape();
    return out;
  }

  void backward(const std::vector<float>& dlogits) {
    const int64_t b = pooled_.dim(0), f = pooled_.dim(1);
    Tensor gl({b, 1});
    for (int64_t i = 0; i < b; ++i) gl[i] = dlogits[static_cast<size_t>(i)];
    Tensor gpooled = head_.backward(gl);  // {B,F}
    Tensor gfeats(feats_shape_);          // {B*3,F}
    for (int64_t i = 0; i < b; ++i)
      for (int64_t j = 0; j < f; ++j) {
        const int s = argmax_slice_[static_cast<size_t>(i * f + j)];
        gfeats[(i * kStackSlices + s) * f + j] = gpooled[i * f + j];
      }
    backbone_->backward(gfeats);
  }

  // Inference probability for one stack; deterministic (eval mode, frozen
  // batch-norm statistics). Output clamped into the open interval (0,1).
  double predict(const Stack25D& stack) { return predict_tensor(stack.data); }

  double predict_tensor(const Tensor& stack) {
    if (stack.ndim() != 4) throw_internal("predict: expected a single {3,3,H,W} stack");
    if (!stack.all_finite()) throw_data("predict: non-finite values in input stack");
    Tensor batch = stack.reshaped({1, stack.dim(0), stack.dim(1), stack.dim(2), stack.dim(3)});
    const std::vector<float> logits = forward_batch(batch, /*training=*/false);
    double p = nn::sigmoid(logits[0]);
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  }

  // Feature vector of one slice image {3,H,W} (inference mode).
  std::vector<float> backbone_features(const Tensor& image) {
    if (image.ndim() != 3 || image.dim(0) != kStackChannels)
      throw_data("backbone_features: expected a {3,H,W} image, got " + image.shape_str());
    if (!image.all_finite()) throw_data("backbone_features: non-finite input");
    Tensor batch = image.reshaped({1, kStackChannels, image.dim(1), image.dim(2)});
    Tensor feats = backbone_->forward(batch, /*training=*/false);
    std::vector<float> out(static_cast<size_t>(feats.dim(1)));
    std::memcpy(out.data(), feats.data(), out.size() * sizeof(float));
    return out;
  }

  // Parameter/buffer snapshot keyed by name.
  TensorContainer state() const {
    TensorContainer c;
    for (const auto* p : params_) c.tensors.emplace_back(p->name, p->value);
    for (const auto* b : buffers_) c.tensors.emplace_back(b->name, b->value);
    return c;
  }

  void load_state(const TensorContainer& c, bool backbone_only = false) {
    auto restore = [&](const std::string& name, Tensor& dst) {
      if (backbone_only && name.rfind("backbone.", 0) != 0) return;
      const Tensor* src = c.find(name);
      if (src == nullptr) throw_data("model state: missing tensor '" + name + "'");
      if (src->shape() != dst.shape())
        throw_data("model state: shape mismatch for '" + name + "'");
      dst = *src;
    };
    for (auto* p : params_) restore(p->name, p->value);
    for (auto* b : buffers_) restore(b->name, b->value);
  }

 private:
  // Variance-scaled random init: convolution weights from a zero-mean normal
  // with std sqrt(2/fan_out); the head uniform in +-1/sqrt(fan_in) with zero
  // bias. Batch-norm starts at identity (gamma 1, beta 0). If pretrained
  // weights are configured, the backbone tensors are replaced from the
  // artifact; the head always stays randomly initialized.
  void init_params() {
    Rng rng = Rng::derive(cfg_.init_seed, {0x1417ULL});
    for (auto* p : params_) {
      const std::string& n = p->name;
      if (n.find(".weight") != std::string::npos && p->value.ndim() == 4) {
        const int64_t fan_out = p->value.dim(0) * p->value.dim(2) * p->value.dim(3);
        const double stdev = std::sqrt(2.0 / static_cast<double>(fan_out));
        for (float& v : p->value.vec()) v = static_cast<float>(rng.normal(0.0, stdev));
      } else if (n == "head.weight") {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p->value.dim(1)));
        for (float& v : p->value.vec()) v = static_cast<float>(rng.uniform(-bound, bound));
      } else if (n == "head.bias") {
        std::fill(p->value.vec().begin(), p->value.vec().end(), 0.0f);
      }
      // batch-norm gamma/beta keep their constructed identity values
    }
    if (cfg_.backbone.init == PretrainedInit::natural_image_corpus) {
      TensorContainer c = read_tensor_container(cfg_.backbone.pretrained_weights_path);
      if (!c.meta.contains("arch") ||
          c.meta["arch"].get<std::string>() != backbone_arch_name(cfg_.backbone.arch))
        throw_data("pretrained weights: architecture mismatch");
      load_state(c, /*backbone_only=*/true);
    }
  }

  ModelConfig cfg_;
  std::unique_ptr<nn::Sequential> backbone_;
  nn::Linear head_;
  std::vector<nn::Parameter*> params_;
  std::vector<nn::NamedBuffer*> buffers_;

  Tensor pooled_;
  std::vector<int> argmax_slice_;
  std::vector<int64_t> feats_shape_;
};

}  // namespace glio
