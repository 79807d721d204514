#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace vqel::agent {

struct NamedParam {
  std::string name;
  num::Tensor tensor;
};

// uniform(−1/√fan, 1/√fan) leaf parameter.
inline num::Tensor uniform_param(num::Shape shape, double fan, Rng& rng) {
  const double bound = 1.0 / std::sqrt(fan);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(num::numel(shape));
  for (double& x : v) x = dist(rng);
  return num::Tensor(std::move(shape), std::move(v), true);
}

// y = x·W (+ b). W is in×out so rows of x are samples.
struct Linear {
  num::Tensor weight;
  num::Tensor bias;  // undefined when bias-free

  Linear() = default;
  Linear(std::size_t in, std::size_t out, bool with_bias, double fan, Rng& rng)
      : weight(uniform_param({in, out}, fan, rng)) {
    if (with_bias) bias = uniform_param({out}, fan, rng);
  }

  num::Tensor operator()(const num::Tensor& x) const {
    auto y = num::matmul(x, weight);
    return bias.defined() ? num::add_row(y, bias) : y;
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    if (bias.defined()) f(prefix + ".bias", bias);
  }
};

// Gated recurrent unit:
//   u = σ(x Wu + h Uu + bu)          update gate
//   r = σ(x Wr + h Ur + br)          reset gate
//   n = tanh(x Wn + (r∘h) Un + bn)   candidate
//   h' = (1 − u)∘h + u∘n
struct GruCell {
  num::Tensor w_update, w_reset, w_cand;  // input × hidden
  num::Tensor u_update, u_reset, u_cand;  // hidden × hidden
  num::Tensor b_update, b_reset, b_cand;  // hidden

  GruCell() = default;
  GruCell(std::size_t input, std::size_t hidden, Rng& rng) {
    const auto fan = static_cast<double>(hidden);
    w_update = uniform_param({input, hidden}, fan, rng);
    w_reset = uniform_param({input, hidden}, fan, rng);
    w_cand = uniform_param({input, hidden}, fan, rng);
    u_update = uniform_param({hidden, hidden}, fan, rng);
    u_reset = uniform_param({hidden, hidden}, fan, rng);
    u_cand = uniform_param({hidden, hidden}, fan, rng);
    b_update = uniform_param({hidden}, fan, rng);
    b_reset = uniform_param({hidden}, fan, rng);
    b_cand = uniform_param({hidden}, fan, rng);
  }

  std::size_t hidden() const { return u_update.shape()[0]; }

  num::Tensor operator()(const num::Tensor& h, const num::Tensor& x) const {
    using namespace num;
    const auto u = sigmoid(add_row(add(matmul(x, w_update), matmul(h, u_update)), b_update));
    const auto r = sigmoid(add_row(add(matmul(x, w_reset), matmul(h, u_reset)), b_reset));
    const auto n = tanh(add_row(add(matmul(x, w_cand), matmul(mul(r, h), u_cand)), b_cand));
    return add(h, mul(u, sub(n, h)));
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".w_update", w_update);
    f(prefix + ".w_reset", w_reset);
    f(prefix + ".w_cand", w_cand);
    f(prefix + ".u_update", u_update);
    f(prefix + ".u_reset", u_reset);
    f(prefix + ".u_cand", u_cand);
    f(prefix + ".b_update", b_update);
    f(prefix + ".b_reset", b_reset);
    f(prefix + ".b_cand", b_cand);
  }
};

}  // namespace vqel::agent
