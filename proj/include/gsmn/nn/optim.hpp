#pragma once

#include <cmath>
#include <vector>

#include "gsmn/nn/graph.hpp"
#include "gsmn/rng.hpp"

namespace gsmn::nn {

template <typename T>
void init_normal(Parameter<T>& p, Rng& rng, double stddev) {
  for (size_t i = 0; i < p.value.numel(); ++i) p.value[i] = T(rng.normal(0.0, stddev));
}

template <typename T>
void init_uniform(Parameter<T>& p, Rng& rng, double lo, double hi) {
  for (size_t i = 0; i < p.value.numel(); ++i) p.value[i] = T(rng.uniform(lo, hi));
}

// He initialization for conv kernels (Cout, Cin, kh, kw).
template <typename T>
void init_conv(Parameter<T>& p, Rng& rng) {
  const auto& s = p.value.shape();
  const double fan_in = double(s[1]) * s[2] * s[3];
  init_normal(p, rng, std::sqrt(2.0 / fan_in));
}

// Xavier uniform for dense matrices (out, in).
template <typename T>
void init_linear(Parameter<T>& p, Rng& rng) {
  const auto& s = p.value.shape();
  const double bound = std::sqrt(6.0 / (double(s[0]) + double(s[1])));
  init_uniform(p, rng, -bound, bound);
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 1e-6;       // L2 regularization folded into the gradient
  double grad_clip = 5.0;  // global-norm clip; <= 0 disables
};

// Adam over a fixed parameter list. Step count is owned here so that
// bias correction survives checkpoint save/load of the parameters alone.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) p->ensure_adam_state();
  }

  int64_t steps() const { return t_; }
  void set_steps(int64_t t) { t_ = t; }

  void step() {
    ++t_;
    if (cfg_.grad_clip > 0) {
      double sq = 0.0;
      for (auto* p : params_)
        for (size_t i = 0; i < p->grad.numel(); ++i) sq += double(p->grad[i]) * double(p->grad[i]);
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip) {
        const T s = T(cfg_.grad_clip / norm);
        for (auto* p : params_)
          for (size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= s;
      }
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (auto* p : params_) {
      for (size_t i = 0; i < p->value.numel(); ++i) {
        const T g = p->grad[i] + T(cfg_.l2) * p->value[i];
        p->adam_m[i] = T(cfg_.beta1) * p->adam_m[i] + T(1 - cfg_.beta1) * g;
        p->adam_v[i] = T(cfg_.beta2) * p->adam_v[i] + T(1 - cfg_.beta2) * g * g;
        const double mhat = double(p->adam_m[i]) / bc1;
        const double vhat = double(p->adam_v[i]) / bc2;
        p->value[i] -= T(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace gsmn::nn
