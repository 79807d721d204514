#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/numcore.hpp"

namespace vqel::games {

struct ContrastiveResult {
  num::Tensor loss;                // mean over rows
  num::Tensor per_row;             // −log p(target) for each message row
  std::vector<int> predictions;    // argmax candidate per row, lowest index on ties
  std::vector<double> similarities;  // rows × candidates, already divided by t_sim
};

// Row i of `messages` must pick candidate targets[i]:
//   loss_i = −log softmax_j( cos(v_m_i, v_o_j) / t_sim )[targets[i]]
inline ContrastiveResult contrastive_loss(const num::Tensor& messages, const num::Tensor& candidates,
                                          std::span<const int> targets, double t_sim) {
  if (messages.cols() != candidates.cols()) throw DimensionError("contrastive_loss: width mismatch");
  if (targets.size() != messages.rows()) throw DimensionError("contrastive_loss: one target per row");
  if (candidates.rows() < 1) throw InputError("contrastive_loss: no candidates");
  num::require_temperature(t_sim, "contrastive_loss");
  const auto sims =
      num::scale(num::matmul_nt(num::l2_normalize(messages), num::l2_normalize(candidates)),
                 1.0 / t_sim);
  const auto logp = num::log_softmax(sims);
  ContrastiveResult out;
  out.per_row = num::scale(num::pick(logp, targets), -1.0);
  out.loss = num::mean(out.per_row);
  const std::size_t m = sims.rows(), n = sims.cols();
  out.predictions.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (sims.at(i, j) > sims.at(i, best)) best = j;
    out.predictions[i] = static_cast<int>(best);
  }
  out.similarities.assign(sims.values().begin(), sims.values().end());
  return out;
}

// In-batch form: message i targets candidate i.
inline ContrastiveResult contrastive_loss(const num::Tensor& messages, const num::Tensor& candidates,
                                          double t_sim) {
  std::vector<int> targets(messages.rows());
  std::iota(targets.begin(), targets.end(), 0);
  return contrastive_loss(messages, candidates, targets, t_sim);
}

inline double batch_accuracy(const ContrastiveResult& r) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.predictions.size(); ++i) hits += r.predictions[i] == static_cast<int>(i);
  return static_cast<double>(hits) / static_cast<double>(r.predictions.size());
}

// Score-function loss mean_i( −A_i Σ_t log P(w_it | h_it) ) with A_i = R_i, or
// R_i − mean(R) when the batch-mean baseline is on. Rewards are constants.
inline num::Tensor reinforce_loss(std::span<const num::Tensor> step_log_probs,
                                  std::span<const double> rewards, bool use_baseline) {
  if (step_log_probs.empty()) throw UsageError("reinforce_loss: message has no log-probabilities");
  auto total = step_log_probs[0];
  for (std::size_t t = 1; t < step_log_probs.size(); ++t) total = num::add(total, step_log_probs[t]);
  if (rewards.size() != total.size()) throw DimensionError("reinforce_loss: one reward per message");
  double baseline = 0.0;
  if (use_baseline) {
    baseline = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  }
  std::vector<double> adv(rewards.size());
  for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = -(rewards[i] - baseline);
  const auto weights = num::Tensor(total.shape(), std::move(adv));
  return num::mean(num::mul(total, weights));
}

}  // namespace vqel::games
