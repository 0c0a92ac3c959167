#pragma once

// Adam with L2 weight decay added to the gradient (the classic coupled
// formulation). Moment coefficients are the standard published defaults;
// the learning rate is supplied per step by the scheduler.

#include <cmath>
#include <vector>

#include "glio/nn.hpp"

namespace glio {

class Adam {
 public:
  explicit Adam(std::vector<nn::Parameter*> params, double weight_decay = 0.0,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(static_cast<size_t>(params_[i]->value.numel()), 0.0f);
      v_[i].assign(static_cast<size_t>(params_[i]->value.numel()), 0.0f);
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      nn::Parameter& p = *params_[i];
      float* w = p.value.data();
      const float* g = p.grad.data();
      float* m = m_[i].data();
      float* v = v_[i].data();
      const int64_t n = p.value.numel();
      for (int64_t j = 0; j < n; ++j) {
        const double grad = static_cast<double>(g[j]) + weight_decay_ * w[j];
        const double mj = beta1_ * m[j] + (1.0 - beta1_) * grad;
        const double vj = beta2_ * v[j] + (1.0 - beta2_) * grad * grad;
        m[j] = static_cast<float>(mj);
        v[j] = static_cast<float>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        w[j] = static_cast<float>(w[j] - lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  int64_t steps_taken() const { return t_; }

 private:
  std::vector<nn::Parameter*> params_;
  double weight_decay_, beta1_, beta2_, eps_;
  std::vector<std::vector<float>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace glio
