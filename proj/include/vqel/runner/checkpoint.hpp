#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "vqel/error.hpp"
#include "vqel/runner/results.hpp"
#include "vqel/runner/run.hpp"

// Structured-text checkpoint: every parameter tensor, Adam moments, codebook
// codes plus EMA statistics, and the training RNG state. Doubles are written
// with round-trip precision, so a load restores values bit-exactly.
namespace vqel::runner {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

template <class Named>
nlohmann::json params_json(const Named& named, const num::Adam& opt) {
  nlohmann::json j = nlohmann::json::object();
  const auto& states = opt.states();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const num::Tensor& t = named[i].tensor;
    nlohmann::json e;
    e["shape"] = t.shape();
    e["values"] = std::vector<double>(t.values().begin(), t.values().end());
    if (i < states.size()) e["adam"] = {{"m", states[i].m}, {"v", states[i].v}, {"step", states[i].step}};
    j[named[i].name] = std::move(e);
  }
  return j;
}

template <class Named>
void load_params(const nlohmann::json& j, const Named& named, num::Adam& opt) {
  auto& states = opt.states();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string& name = named[i].name;
    if (!j.contains(name)) throw ConfigError("checkpoint lacks parameter " + name);
    const nlohmann::json& e = j.at(name);
    num::Tensor t = named[i].tensor;
    if (e.at("shape").get<num::Shape>() != t.shape()) throw ConfigError("checkpoint shape mismatch for " + name);
    const auto values = e.at("values").get<std::vector<double>>();
    if (values.size() != t.size()) throw ConfigError("checkpoint size mismatch for " + name);
    auto dst = t.mutable_values();
    std::copy(values.begin(), values.end(), dst.begin());
    if (e.contains("adam") && i < states.size()) {
      states[i].m = e["adam"].at("m").get<std::vector<double>>();
      states[i].v = e["adam"].at("v").get<std::vector<double>>();
      states[i].step = e["adam"].at("step").get<long>();
    }
  }
}

inline nlohmann::json learner_json(const games::Learner& l) {
  const auto& cb = l.agent.codebook();
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  return {{"params", params_json(l.agent.named_params(), l.optimizer)},
          {"codebook",
           {{"codes", vec(cb.codes())},
            {"ema_cluster_size", vec(cb.ema_cluster_size())},
            {"ema_embed_sum", vec(cb.ema_embed_sum())},
            {"usage_ema", vec(cb.usage_ema())}}},
          {"vq_steps", l.vq_steps},
          {"expired", l.expired}};
}

inline void load_learner(const nlohmann::json& j, games::Learner& l) {
  load_params(j.at("params"), l.agent.named_params(), l.optimizer);
  const auto& cb = j.at("codebook");
  l.agent.codebook().restore(cb.at("codes").get<std::vector<double>>(),
                             cb.at("ema_cluster_size").get<std::vector<double>>(),
                             cb.at("ema_embed_sum").get<std::vector<double>>(),
                             cb.at("usage_ema").get<std::vector<double>>());
  l.vq_steps = j.at("vq_steps").get<long>();
  l.expired = j.at("expired").get<std::size_t>();
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const ExperimentConfig& c, const TrainedModels& m) {
  nlohmann::json j;
  j["format"] = "vqel-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = c;
  j["seed"] = m.seed;
  j["paired"] = m.paired;
  j["rng_state"] = rng_state(m.rng_state);
  if (m.sender) j["sender"] = detail::learner_json(*m.sender);
  if (m.receiver) j["receiver"] = detail::learner_json(*m.receiver);
  if (m.baseline) j["baseline_sender"] = {{"params", detail::params_json(m.baseline->sender.named_params(), m.baseline->optimizer)}};
  return j;
}

inline void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& c, const TrainedModels& m) {
  write_atomic(path, checkpoint_json(c, m).dump());
}

struct LoadedCheckpoint {
  ExperimentConfig config;
  TrainedModels models;
};

inline LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "vqel-checkpoint") throw ConfigError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    LoadedCheckpoint out;
    out.config = j.at("config").get<ExperimentConfig>();
    validate(out.config);
    auto& m = out.models;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.paired = j.at("paired").get<bool>();
    restore_rng_state(m.rng_state, j.at("rng_state").get<std::string>());
    const auto acfg = out.config.agent_config();
    const auto hp = detail::adam_of(out.config);
    // Structure comes from fresh construction; every value is then overwritten.
    Rng scratch = make_stream(m.seed, stream::sender_init);
    if (j.contains("sender")) {
      m.sender.emplace(agent::Agent(acfg, scratch), hp);
      detail::load_learner(j["sender"], *m.sender);
    }
    if (j.contains("receiver")) {
      m.receiver.emplace(agent::Agent(acfg, scratch), hp);
      detail::load_learner(j["receiver"], *m.receiver);
    }
    if (j.contains("baseline_sender")) {
      const auto est = out.config.method == Method::GS_ST ? baselines::Estimator::GumbelST
                                                          : baselines::Estimator::Reinforce;
      m.baseline.emplace(baselines::BaselineSender(acfg, est, out.config.tau0, scratch), hp);
      detail::load_params(j["baseline_sender"].at("params"), m.baseline->sender.named_params(), m.baseline->optimizer);
    }
    if (!m.sender && !m.receiver) throw ConfigError("checkpoint holds no agents");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(parse_json_file(path));
}

}  // namespace vqel::runner
