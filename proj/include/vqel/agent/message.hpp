#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/numcore.hpp"
#include "vqel/vq/codebook.hpp"

namespace vqel::agent {

// A batch of length-L messages. Row i of every per-step tensor belongs to
// message i. A single message is a batch of one.
struct MessageBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> symbols;                 // batch × length, row-major
  std::vector<num::Tensor> discrete;        // per step: batch × d code vectors (straight-through)
  std::vector<num::Tensor> pre_quant;       // per step: batch × d projections z_t
  std::vector<num::Tensor> step_log_probs;  // per step: batch log-probabilities (soft mode only)
  std::vector<num::Tensor> step_probs;      // per step: batch × K distributions (soft mode only)
  std::vector<num::Tensor> step_commitments;  // per step: scalar, mean over the batch

  int symbol(std::size_t i, std::size_t t) const { return symbols[i * length + t]; }
  std::span<const int> message(std::size_t i) const {
    return std::span<const int>(symbols).subspan(i * length, length);
  }
  std::vector<int> column(std::size_t t) const {
    std::vector<int> out(batch);
    for (std::size_t i = 0; i < batch; ++i) out[i] = symbol(i, t);
    return out;
  }
  bool has_log_probs() const { return !step_log_probs.empty(); }

  num::Tensor mean_commitment() const {
    auto acc = step_commitments.at(0);
    for (std::size_t t = 1; t < step_commitments.size(); ++t) acc = num::add(acc, step_commitments[t]);
    return num::scale(acc, 1.0 / static_cast<double>(step_commitments.size()));
  }

  // Σ_t log P(w_t | h_t) per message.
  num::Tensor total_log_prob() const {
    if (!has_log_probs()) throw UsageError("message carries no log-probabilities");
    auto acc = step_log_probs[0];
    for (std::size_t t = 1; t < step_log_probs.size(); ++t) acc = num::add(acc, step_log_probs[t]);
    return acc;
  }

  // Every (z_t, w_t) pair of the batch, for codebook EMA updates and expiry pools.
  vq::AssignmentBatch assignments() const {
    vq::AssignmentBatch out;
    if (pre_quant.empty()) return out;
    out.dim = pre_quant[0].cols();
    out.inputs.reserve(batch * length * out.dim);
    out.chosen.reserve(batch * length);
    for (std::size_t t = 0; t < length; ++t) {
      const auto z = pre_quant[t].values();
      out.inputs.insert(out.inputs.end(), z.begin(), z.end());
      for (std::size_t i = 0; i < batch; ++i) {
        out.chosen.push_back(symbol(i, t));
        if (has_log_probs()) out.log_probs.push_back(step_log_probs[t][i]);
      }
    }
    return out;
  }
};

}  // namespace vqel::agent
