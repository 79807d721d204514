#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/numcore/tensor.hpp"

namespace vqel::num {

struct AdamHyper {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// One Adam update with decoupled weight decay (p -= lr·wd·p before the moment step).
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamHyper& hp) {
  if (!(hp.lr > 0.0)) throw ParameterError("adam_step: lr must be positive");
  if (grads.size() != params.size()) throw DimensionError("adam_step: grad/param size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: state buffers not shaped like params");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= hp.lr * hp.weight_decay * params[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
  }
}

// Adam over a fixed parameter list. Parameters that received no gradient in a
// step are skipped entirely (no decay, no moment update).
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamHyper hp) : params_(std::move(params)), hp_(hp) {
    if (!(hp_.lr > 0.0)) throw ParameterError("Adam: lr must be positive");
    states_.resize(params_.size());
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad()) continue;
      const auto g = p.grad();
      adam_step(p.mutable_values(), g, states_[i], hp_);
    }
  }

  const AdamHyper& hyper() const { return hp_; }
  std::vector<AdamState>& states() { return states_; }
  const std::vector<AdamState>& states() const { return states_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamHyper hp_;
  std::vector<AdamState> states_;
};

}  // namespace vqel::num
