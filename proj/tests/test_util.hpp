#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace testutil {

using vqel::num::Shape;
using vqel::num::Tensor;

inline Tensor random_leaf(Shape shape, vqel::Rng& rng, double scale = 1.0) {
  std::vector<double> v(vqel::num::numel(shape));
  for (double& x : v) x = scale * vqel::normal(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

struct GradReport {
  double worst = 0.0;  // largest relative error over all leaves
  std::string where;
};

// Compares backward() against central differences of f for every leaf.
// Relative error per leaf: ‖a − n‖ / max(‖a‖, ‖n‖, floor).
inline GradReport check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                                  double h = 1e-4, double floor = 1e-8) {
  for (auto& l : leaves) l.zero_grad();
  vqel::num::backward(f());
  GradReport rep;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    const auto analytic = leaf.grad();
    std::vector<double> numeric(analytic.size());
    auto vals = leaf.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + h;
      const double up = f().item();
      vals[i] = keep - h;
      const double down = f().item();
      vals[i] = keep;
      numeric[i] = (up - down) / (2.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
    if (rel > rep.worst) {
      rep.worst = rel;
      rep.where = "leaf " + std::to_string(li);
    }
  }
  return rep;
}

}  // namespace testutil
