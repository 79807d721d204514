#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vqel/agent/agent.hpp"
#include "vqel/data/objects.hpp"
#include "vqel/error.hpp"
#include "vqel/games/losses.hpp"
#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace vqel::games {

enum class SenderUpdate { Frozen, RL, RLPres };
enum class ReceiverUpdate { Frozen, FineTuned };

inline const char* to_string(SenderUpdate m) {
  switch (m) {
    case SenderUpdate::Frozen: return "Frozen";
    case SenderUpdate::RL: return "RL";
    case SenderUpdate::RLPres: return "RLPres";
  }
  return "?";
}
inline const char* to_string(ReceiverUpdate m) {
  return m == ReceiverUpdate::Frozen ? "Frozen" : "FineTuned";
}

struct TrainStepReport {
  double contrastive = 0.0;
  double commitment = 0.0;
  std::optional<double> rl;
  std::optional<double> preservation;  // sender self-play term (RLPres)
  double total = 0.0;
  double batch_accuracy = 0.0;
};

// An agent together with its optimizer and codebook bookkeeping.
struct Learner {
  agent::Agent agent;
  num::Adam optimizer;
  long vq_steps = 0;  // codebook updates so far, drives expiry scheduling
  std::size_t expired = 0;

  Learner() = default;
  Learner(agent::Agent a, num::AdamHyper hp) : agent(std::move(a)) {
    optimizer = num::Adam(agent.parameters(), hp);
  }

  // EMA update from the step's (z, w) pairs, then periodic stale-code expiry
  // drawing replacements from the same z pool.
  void update_codebook(const agent::MessageBatch& msg, Rng& rng) {
    const auto batch = msg.assignments();
    agent.codebook().ema_update(batch);
    ++vq_steps;
    if (agent.codebook().expiry_due(vq_steps)) expired += agent.codebook().expire_stale(batch.inputs, rng);
  }
};

struct SelfPlayOptions {
  double beta = 1.0;
  double t_sim = 0.1;
};

struct SelfPlayForward {
  agent::MessageBatch message;
  ContrastiveResult contrastive;
  num::Tensor commitment;
  num::Tensor total;
};

// Encode → hard discrete message → perceive it back (Discrete kind) →
// in-batch contrastive loss against the same agent's object representations.
inline SelfPlayForward self_play_forward(const agent::Agent& a, const num::Tensor& objects,
                                         const SelfPlayOptions& opt) {
  const auto v_o = a.perceive_objects(objects);
  auto msg = a.generate(v_o, agent::GenMode::hard());
  const auto v_m = a.perceive_message(msg, agent::InputKind::Discrete);
  auto c = contrastive_loss(v_m, v_o, opt.t_sim);
  auto commit = msg.mean_commitment();
  auto total = opt.beta == 0.0 ? c.loss : num::add(c.loss, num::scale(commit, opt.beta));
  return {std::move(msg), std::move(c), std::move(commit), std::move(total)};
}

inline TrainStepReport self_play_step(Learner& learner, const data::CandidateSet& batch,
                                      const SelfPlayOptions& opt, Rng& rng) {
  auto fwd = self_play_forward(learner.agent, data::one_hot_matrix(batch), opt);
  learner.optimizer.zero_grad();
  num::backward(fwd.total);
  learner.optimizer.step();
  learner.update_codebook(fwd.message, rng);
  TrainStepReport r;
  r.contrastive = fwd.contrastive.loss.item();
  r.commitment = fwd.commitment.item();
  r.total = fwd.total.item();
  r.batch_accuracy = batch_accuracy(fwd.contrastive);
  return r;
}

struct MutualPlayOptions {
  double beta = 0.0;  // commitment weight in the sender's mutual-play loss
  double t_sim = 0.1;
  double tau_sample = 0.05;
  SenderUpdate sender_update = SenderUpdate::RL;
  ReceiverUpdate receiver_update = ReceiverUpdate::FineTuned;
  bool rl_baseline = false;  // batch-mean reward baseline
  double self_play_beta = 1.0;  // β of the RLPres preservation term
};

struct MutualPlayForward {
  agent::MessageBatch message;
  ContrastiveResult receiver;
  std::vector<double> rewards;
  std::optional<num::Tensor> rl;
  num::Tensor commitment;
  std::optional<SelfPlayForward> preservation;
  num::Tensor receiver_loss;
  std::optional<num::Tensor> sender_loss;
};

// Sender samples a symbolic message (soft mode); the receiver reads symbols
// only, so no gradient crosses the channel. Receiver loss: contrastive.
// Sender loss (unless frozen): REINFORCE with R_i = −contrastive_i, plus
// β·commitment, plus the sender's own self-play loss in RLPres mode.
inline MutualPlayForward mutual_play_forward(const agent::Agent& sender, const agent::Agent& receiver,
                                             const num::Tensor& objects,
                                             const MutualPlayOptions& opt, Rng& rng) {
  MutualPlayForward f;
  const auto v_o_s = sender.perceive_objects(objects);
  f.message = sender.generate(v_o_s, agent::GenMode::soft(opt.tau_sample), &rng);
  const auto v_m = receiver.perceive_message(f.message, agent::InputKind::Symbolic);
  const auto v_o_r = receiver.perceive_objects(objects);
  f.receiver = contrastive_loss(v_m, v_o_r, opt.t_sim);
  f.receiver_loss = f.receiver.loss;
  f.rewards.resize(f.receiver.per_row.size());
  for (std::size_t i = 0; i < f.rewards.size(); ++i) f.rewards[i] = -f.receiver.per_row[i];
  f.commitment = f.message.mean_commitment();
  if (opt.sender_update != SenderUpdate::Frozen) {
    f.rl = reinforce_loss(f.message.step_log_probs, f.rewards, opt.rl_baseline);
    auto s = num::add(*f.rl, num::scale(f.commitment, opt.beta));
    if (opt.sender_update == SenderUpdate::RLPres) {
      f.preservation = self_play_forward(sender, objects, {opt.self_play_beta, opt.t_sim});
      s = num::add(s, f.preservation->total);
    }
    f.sender_loss = s;
  }
  return f;
}

inline TrainStepReport mutual_play_step(Learner& sender, Learner& receiver,
                                        const data::CandidateSet& batch,
                                        const MutualPlayOptions& opt, Rng& rng) {
  if (&sender == &receiver) throw UsageError("mutual_play_step: sender and receiver must differ");
  if (opt.sender_update == SenderUpdate::Frozen && opt.receiver_update == ReceiverUpdate::Frozen) {
    throw ConfigError("mutual play with both agents frozen trains nothing");
  }
  auto f = mutual_play_forward(sender.agent, receiver.agent, data::one_hot_matrix(batch), opt, rng);
  auto total = f.sender_loss ? num::add(f.receiver_loss, *f.sender_loss) : f.receiver_loss;
  sender.optimizer.zero_grad();
  receiver.optimizer.zero_grad();
  num::backward(total);
  if (opt.receiver_update == ReceiverUpdate::FineTuned) receiver.optimizer.step();
  if (opt.sender_update != SenderUpdate::Frozen) {
    sender.optimizer.step();
    sender.update_codebook(f.message, rng);
  }
  sender.optimizer.zero_grad();
  receiver.optimizer.zero_grad();
  TrainStepReport r;
  r.contrastive = f.receiver_loss.item();
  r.commitment = f.commitment.item();
  if (f.rl) r.rl = f.rl->item();
  if (f.preservation) r.preservation = f.preservation->total.item();
  r.total = total.item();
  r.batch_accuracy = batch_accuracy(f.receiver);
  return r;
}

}  // namespace vqel::games
