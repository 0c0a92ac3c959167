#pragma once

// Backbone feature extractors. The production architecture is an 18-layer
// residual network truncated after its last residual stage (classifier head
// and final pooling removed), followed by a per-slice global pool that turns
// the 512-channel map into the 512-d feature vector consumed downstream.
// A tiny "stub" trunk with the same interface exists for fast property tests
// and gradient checks; it accepts 8x8 inputs directly and adaptively pools
// larger stacks down.

#include <memory>
#include <string>
#include <vector>

#include "glio/error.hpp"
#include "glio/nn.hpp"

namespace glio {

enum class BackboneArch { resnet18, stub };

inline std::string backbone_arch_name(BackboneArch a) {
  return a == BackboneArch::resnet18 ? "resnet18" : "stub";
}
inline BackboneArch parse_backbone_arch(std::string_view s) {
  if (s == "resnet18") return BackboneArch::resnet18;
  if (s == "stub") return BackboneArch::stub;
  throw_usage("unknown backbone arch '" + std::string(s) + "' (expected resnet18|stub)");
}

enum class PretrainedInit { random, natural_image_corpus };

struct BackboneConfig {
  BackboneArch arch = BackboneArch::resnet18;
  nn::GlobalPoolKind pooling = nn::GlobalPoolKind::average;
  PretrainedInit init = PretrainedInit::random;
  std::string pretrained_weights_path;  // required for natural_image_corpus

  int feature_dim() const { return arch == BackboneArch::resnet18 ? 512 : 32; }
  int native_input_size() const { return arch == BackboneArch::resnet18 ? 224 : 8; }

  void validate() const {
    if (arch == BackboneArch::resnet18 && feature_dim() != 512)
      throw_internal("resnet18 backbone must produce 512-d features");
    if (init == PretrainedInit::natural_image_corpus && pretrained_weights_path.empty())
      throw_usage("pretrained init requested but no weights path configured");
  }
};

inline std::unique_ptr<nn::Sequential> build_backbone(const BackboneConfig& cfg) {
  cfg.validate();
  auto net = std::make_unique<nn::Sequential>();
  const std::string p = "backbone";
  if (cfg.arch == BackboneArch::resnet18) {
    net->add(std::make_unique<nn::Conv2d>(p + ".conv1", 3, 64, 7, 2, 3));
    net->add(std::make_unique<nn::BatchNorm2d>(p + ".bn1", 64));
    net->add(std::make_unique<nn::ReLU>());
    net->add(std::make_unique<nn::MaxPool2d>(3, 2, 1));
    const int chans[4] = {64, 128, 256, 512};
    int in_ch = 64;
    for (int stage = 0; stage < 4; ++stage) {
      const int out_ch = chans[stage];
      const int stride = stage == 0 ? 1 : 2;
      net->add(std::make_unique<nn::BasicBlock>(p + ".layer" + std::to_string(stage + 1) + ".0",
                                                in_ch, out_ch, stride));
      net->add(std::make_unique<nn::BasicBlock>(p + ".layer" + std::to_string(stage + 1) + ".1",
                                                out_ch, out_ch, 1));
      in_ch = out_ch;
    }
    net->add(std::make_unique<nn::GlobalPool>(cfg.pooling));
  } else {
    net->add(std::make_unique<nn::AdaptiveAvgPool2d>(8));
    net->add(std::make_unique<nn::Conv2d>(p + ".conv1", 3, 16, 3, 1, 1));
    net->add(std::make_unique<nn::BatchNorm2d>(p + ".bn1", 16));
    net->add(std::make_unique<nn::ReLU>());
    net->add(std::make_unique<nn::Conv2d>(p + ".conv2", 16, 32, 3, 2, 1));
    net->add(std::make_unique<nn::BatchNorm2d>(p + ".bn2", 32));
    net->add(std::make_unique<nn::ReLU>());
    net->add(std::make_unique<nn::GlobalPool>(cfg.pooling));
  }
  return net;
}

}  // namespace glio
