#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "vqel/agent/agent.hpp"
#include "vqel/error.hpp"
#include "vqel/games/play.hpp"
#include "vqel/vq/codebook.hpp"

namespace vqel::vq {
NLOHMANN_JSON_SERIALIZE_ENUM(Metric, {{Metric::Cosine, "Cosine"}, {Metric::Euclidean, "Euclidean"}})
}

namespace vqel::games {
NLOHMANN_JSON_SERIALIZE_ENUM(SenderUpdate, {{SenderUpdate::Frozen, "Frozen"},
                                            {SenderUpdate::RL, "RL"},
                                            {SenderUpdate::RLPres, "RLPres"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ReceiverUpdate, {{ReceiverUpdate::Frozen, "Frozen"},
                                              {ReceiverUpdate::FineTuned, "FineTuned"}})
}  // namespace vqel::games

namespace vqel::runner {

enum class Method { VQEL, GS_ST, REINFORCE };
enum class Variant { SP_S, SP_S_MP, SP_R, SP_R_MP, SP_SR_MP, MP_only };

NLOHMANN_JSON_SERIALIZE_ENUM(Method, {{Method::VQEL, "VQEL"},
                                      {Method::GS_ST, "GS_ST"},
                                      {Method::REINFORCE, "REINFORCE"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Variant, {{Variant::SP_S, "SP_S"},
                                       {Variant::SP_S_MP, "SP_S_MP"},
                                       {Variant::SP_R, "SP_R"},
                                       {Variant::SP_R_MP, "SP_R_MP"},
                                       {Variant::SP_SR_MP, "SP_SR_MP"},
                                       {Variant::MP_only, "MP_only"}})

inline std::string to_string(Method m) { return nlohmann::json(m).get<std::string>(); }
inline std::string to_string(Variant v) { return nlohmann::json(v).get<std::string>(); }

struct ExperimentConfig {
  Method method = Method::VQEL;
  Variant variant = Variant::SP_S_MP;
  games::SenderUpdate sender_update = games::SenderUpdate::RL;
  games::ReceiverUpdate receiver_update = games::ReceiverUpdate::FineTuned;
  vq::Metric metric = vq::Metric::Cosine;

  std::size_t vocab = 10;   // K
  std::size_t length = 4;   // L
  std::size_t hidden = 64;  // d
  double beta = 1.0;
  double beta_mutual = 0.0;  // commitment weight during mutual play
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double tau_sample = 0.05;
  double tau0 = 1.0;
  double t_sim = 0.1;
  std::size_t epochs_self = 50;
  std::size_t epochs_mutual = 50;
  std::size_t batch = 32;
  std::size_t eval_batch = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::uint64_t split_seed = 2024;

  double ema_decay = 0.99;
  double ema_laplace = 1e-5;
  bool expiry_enabled = true;
  long expiry_warmup = 200;
  long expiry_every = 100;
  double expiry_threshold = 0.0;  // 0 → 1/(4K)

  bool rl_baseline = false;  // batch-mean reward baseline
  std::size_t topsim_sample = 500;
  std::string output_dir = "runs/default";

  agent::AgentConfig agent_config() const {
    agent::AgentConfig a;
    a.hidden = hidden;
    a.vocab = vocab;
    a.length = length;
    a.metric = metric;
    a.ema = {ema_decay, ema_laplace};
    a.expiry = {expiry_enabled, expiry_warmup, expiry_every, expiry_threshold};
    return a;
  }

  // Baselines get the whole budget as mutual play.
  std::size_t baseline_epochs() const { return epochs_self + epochs_mutual; }

  bool is_baseline() const { return method != Method::VQEL; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    ExperimentConfig, method, variant, sender_update, receiver_update, metric, vocab, length, hidden,
    beta, beta_mutual, lr, weight_decay, tau_sample, tau0, t_sim, epochs_self, epochs_mutual, batch, eval_batch,
    seeds, split_seed, ema_decay, ema_laplace, expiry_enabled, expiry_warmup, expiry_every,
    expiry_threshold, rl_baseline, topsim_sample, output_dir)

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.vocab < 2) fail("vocab (K) must be at least 2");
  if (c.length == 0) fail("length (L) must be positive");
  if (c.hidden == 0) fail("hidden (d) must be positive");
  if (c.batch < 2) fail("batch must be at least 2");
  if (c.eval_batch == 0) fail("eval_batch must be positive");
  if (c.seeds.empty()) fail("at least one seed is required");
  if (!(c.lr > 0.0)) fail("lr must be positive");
  if (c.weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (!(c.tau_sample > 0.0)) fail("tau_sample must be positive");
  if (!(c.tau0 > 0.0)) fail("tau0 must be positive");
  if (!(c.t_sim > 0.0)) fail("t_sim must be positive");
  if (c.beta < 0.0) fail("beta must be non-negative");
  if (c.beta_mutual < 0.0) fail("beta_mutual must be non-negative");
  if (!(c.ema_decay >= 0.0 && c.ema_decay < 1.0)) fail("ema_decay must lie in [0, 1)");
  if (!(c.ema_laplace > 0.0)) fail("ema_laplace must be positive");
  if (c.topsim_sample < 2) fail("topsim_sample must be at least 2");
  if (c.is_baseline()) {
    if (c.baseline_epochs() == 0) fail("baselines need a positive epoch budget");
    return;
  }
  const bool has_sp = c.variant != Variant::MP_only;
  const bool has_mp = c.variant != Variant::SP_S && c.variant != Variant::SP_R;
  if (has_sp && c.epochs_self == 0) fail("self-play variants need epochs_self > 0");
  if (has_mp && c.epochs_mutual == 0) fail("mutual-play variants need epochs_mutual > 0");
  // A sender that has not been through self-play must be trainable.
  const bool fresh_sender = c.variant == Variant::MP_only || c.variant == Variant::SP_R_MP;
  if (fresh_sender && c.sender_update == games::SenderUpdate::Frozen) {
    fail(to_string(c.variant) + " needs a trainable sender (RL or RLPres)");
  }
  if (has_mp && c.sender_update == games::SenderUpdate::Frozen &&
      c.receiver_update == games::ReceiverUpdate::Frozen) {
    fail("sender and receiver cannot both be frozen");
  }
}

}  // namespace vqel::runner
