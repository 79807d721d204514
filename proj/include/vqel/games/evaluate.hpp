#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vqel/agent/agent.hpp"
#include "vqel/data/objects.hpp"
#include "vqel/error.hpp"
#include "vqel/games/losses.hpp"
#include "vqel/metrics/metrics.hpp"
#include "vqel/numcore.hpp"

namespace vqel::games {

struct EvalOutcome {
  double accuracy = 0.0;
  std::size_t evaluated = 0;
  metrics::Transcript transcript;
};

// Maps a batch of one-hot objects to batch × L greedy symbols.
using SymbolSender = std::function<std::vector<int>(const num::Tensor&)>;

namespace detail {

template <class ScoreBatch>
EvalOutcome evaluate_batches(std::span<const int> eval_ids, std::size_t candidates,
                             std::size_t length, ScoreBatch&& score) {
  if (candidates == 0 || eval_ids.size() < candidates) {
    throw ConfigError("evaluation set of " + std::to_string(eval_ids.size()) +
                      " is smaller than the candidate count " + std::to_string(candidates));
  }
  num::NoGradGuard guard;
  EvalOutcome out;
  std::size_t hits = 0;
  const std::size_t batches = eval_ids.size() / candidates;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<data::ObjectRecord> objs;
    objs.reserve(candidates);
    for (std::size_t i = 0; i < candidates; ++i) objs.push_back(data::make_object(eval_ids[b * candidates + i]));
    const auto x = data::one_hot_matrix(objs);
    std::vector<int> symbols;
    const auto predictions = score(x, symbols);
    for (std::size_t i = 0; i < candidates; ++i) {
      metrics::TranscriptRow row;
      row.concept_values.assign(objs[i].attributes.begin(), objs[i].attributes.end());
      row.message.assign(symbols.begin() + static_cast<long>(i * length),
                         symbols.begin() + static_cast<long>((i + 1) * length));
      row.predicted = predictions[i];
      row.target = static_cast<int>(i);
      hits += row.predicted == row.target ? 1 : 0;
      out.transcript.rows.push_back(std::move(row));
    }
  }
  out.evaluated = batches * candidates;
  out.accuracy = static_cast<double>(hits) / static_cast<double>(out.evaluated);
  return out;
}

}  // namespace detail

// The agent's internal language: hard discrete message routed back into its
// own perception, candidates encoded by the same agent.
inline EvalOutcome evaluate_self(const agent::Agent& a, std::span<const int> eval_ids,
                                 std::size_t candidates, double t_sim) {
  return detail::evaluate_batches(
      eval_ids, candidates, a.config().length, [&](const num::Tensor& x, std::vector<int>& symbols) {
        const auto v_o = a.perceive_objects(x);
        const auto msg = a.generate(v_o, agent::GenMode::hard());
        symbols = msg.symbols;
        const auto v_m = a.perceive_message(msg, agent::InputKind::Discrete);
        return contrastive_loss(v_m, v_o, t_sim).predictions;
      });
}

// Sender emits greedy symbols; the receiver reads them and picks among its
// own encodings of the candidates.
inline EvalOutcome evaluate_pair(const SymbolSender& sender, const agent::Agent& receiver,
                                 std::span<const int> eval_ids, std::size_t candidates, double t_sim) {
  const std::size_t length = receiver.config().length;
  return detail::evaluate_batches(
      eval_ids, candidates, length, [&](const num::Tensor& x, std::vector<int>& symbols) {
        symbols = sender(x);
        agent::MessageBatch msg;
        msg.batch = x.rows();
        msg.length = length;
        msg.symbols = symbols;
        const auto v_m = receiver.perceive_message(msg, agent::InputKind::Symbolic);
        return contrastive_loss(v_m, receiver.perceive_objects(x), t_sim).predictions;
      });
}

inline SymbolSender vq_sender(const agent::Agent& a) {
  return [&a](const num::Tensor& x) { return a.greedy_symbols(x); };
}

}  // namespace vqel::games
