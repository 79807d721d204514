#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqel/agent/agent.hpp"
#include "vqel/baselines/baseline_sender.hpp"
#include "vqel/data/objects.hpp"
#include "vqel/error.hpp"
#include "vqel/games/evaluate.hpp"
#include "vqel/games/play.hpp"
#include "vqel/metrics/metrics.hpp"
#include "vqel/rng.hpp"
#include "vqel/runner/config.hpp"

namespace vqel::runner {

// RNG stream ids within one seed.
namespace stream {
inline constexpr std::uint64_t sender_init = 1;
inline constexpr std::uint64_t receiver_init = 2;
inline constexpr std::uint64_t sender_self = 3;
inline constexpr std::uint64_t receiver_self = 4;
inline constexpr std::uint64_t mutual = 5;
inline constexpr std::uint64_t topsim = 6;
}  // namespace stream

enum class Phase { SelfSender, SelfReceiver, Mutual };

NLOHMANN_JSON_SERIALIZE_ENUM(Phase, {{Phase::SelfSender, "SP_sender"},
                                     {Phase::SelfReceiver, "SP_receiver"},
                                     {Phase::Mutual, "MP"}})

struct EpochLog {
  Phase phase = Phase::SelfSender;
  std::size_t epoch = 0;
  double loss = 0.0;
  double batch_accuracy = 0.0;
  double contrastive = 0.0;
  double commitment = 0.0;
  std::size_t expired_codes = 0;

  bool operator==(const EpochLog&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EpochLog, phase, epoch, loss, batch_accuracy, contrastive,
                                                commitment, expired_codes)

struct MetricSummary {
  double accuracy = 0.0;
  double active_words = 0.0;
  double topsim = 0.0;
  double conditional_entropy = 0.0;
  std::size_t unique_messages = 0;
  bool topsim_defined = true;

  bool operator==(const MetricSummary&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MetricSummary, accuracy, active_words, topsim,
                                                conditional_entropy, unique_messages, topsim_defined)

inline MetricSummary to_summary(const metrics::MetricRecord& m) {
  return {m.accuracy, m.active_words, m.topsim, m.conditional_entropy, m.unique_messages, m.topsim_defined};
}

struct SeedResult {
  std::uint64_t seed = 0;
  MetricSummary test;
  // Self-evaluation of the self-play-trained agent on the test split, taken
  // at the end of the SP phase (SP_S and SP_R entries).
  std::optional<MetricSummary> self_play;
  double validation_accuracy = 0.0;
  std::vector<EpochLog> curve;
  std::size_t sender_parameters = 0;
  std::size_t estimator_parameters = 0;
  double wall_clock = 0.0;

  bool operator==(const SeedResult&) const = default;
};

struct Stat {
  double mean = 0.0;
  std::optional<double> std;  // absent with fewer than two seeds

  bool operator==(const Stat&) const = default;
};

struct Aggregate {
  Stat accuracy, active_words, topsim, conditional_entropy, unique_messages;
  std::optional<Stat> self_play_accuracy;

  bool operator==(const Aggregate&) const = default;
};

struct RunResult {
  ExperimentConfig config;
  std::string fingerprint;
  std::vector<SeedResult> seeds;
  Aggregate aggregate;
  double wall_clock = 0.0;
};

inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline Aggregate aggregate(const std::vector<SeedResult>& seeds) {
  auto collect = [&](auto field) {
    std::vector<double> xs;
    for (const auto& s : seeds) xs.push_back(static_cast<double>(field(s.test)));
    return stat_of(xs);
  };
  Aggregate a;
  a.accuracy = collect([](const MetricSummary& m) { return m.accuracy; });
  a.active_words = collect([](const MetricSummary& m) { return m.active_words; });
  a.topsim = collect([](const MetricSummary& m) { return m.topsim; });
  a.conditional_entropy = collect([](const MetricSummary& m) { return m.conditional_entropy; });
  a.unique_messages = collect([](const MetricSummary& m) { return m.unique_messages; });
  std::vector<double> sp;
  for (const auto& s : seeds)
    if (s.self_play) sp.push_back(s.self_play->accuracy);
  if (!sp.empty() && sp.size() == seeds.size()) a.self_play_accuracy = stat_of(sp);
  return a;
}

// Everything trained for one seed; kept so callers can re-evaluate
// (candidate sweeps) or checkpoint.
struct TrainedModels {
  std::uint64_t seed = 0;
  std::optional<games::Learner> sender;    // VQEL sender, or the lone SP_S agent
  std::optional<games::Learner> receiver;  // VQEL or baseline receiver, or the lone SP_R agent
  std::optional<baselines::BaselineLearner> baseline;
  bool paired = false;  // final evaluation is sender → receiver
  Rng rng_state;        // mutual / self stream at the end of training

  games::EvalOutcome evaluate(std::span<const int> ids, std::size_t candidates, double t_sim) const {
    if (baseline) {
      const auto& b = baseline->sender;
      return games::evaluate_pair([&b](const num::Tensor& x) { return b.greedy_symbols(x); },
                                  receiver->agent, ids, candidates, t_sim);
    }
    if (paired) return games::evaluate_pair(games::vq_sender(sender->agent), receiver->agent, ids, candidates, t_sim);
    const auto& lone = sender ? sender->agent : receiver->agent;
    return games::evaluate_self(lone, ids, candidates, t_sim);
  }
};

struct SeedRun {
  SeedResult result;
  TrainedModels models;
};

namespace detail {

inline void require_finite(double v, Phase phase, std::size_t epoch, std::uint64_t seed) {
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite loss in phase " + nlohmann::json(phase).get<std::string>() +
                         " at epoch " + std::to_string(epoch + 1) + " (seed " + std::to_string(seed) + ")");
  }
}

struct EpochAccumulator {
  double loss = 0.0, acc = 0.0, contrastive = 0.0, commitment = 0.0;
  std::size_t n = 0;

  void add(const games::TrainStepReport& r) {
    loss += r.total;
    acc += r.batch_accuracy;
    contrastive += r.contrastive;
    commitment += r.commitment;
    ++n;
  }
  EpochLog finish(Phase phase, std::size_t epoch, std::size_t expired) const {
    const double k = n ? static_cast<double>(n) : 1.0;
    return {phase, epoch, loss / k, acc / k, contrastive / k, commitment / k, expired};
  }
};

template <class Step>
void train_epochs(std::size_t epochs, Phase phase, std::span<const int> ids, std::size_t batch, Rng& rng,
                  std::uint64_t seed, std::vector<EpochLog>& curve, Step&& step,
                  const std::function<std::size_t()>& expired) {
  data::EpochBatcher batcher(std::vector<int>(ids.begin(), ids.end()), batch);
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochAccumulator acc;
    for (const auto& b : batcher.epoch(rng)) {
      const auto r = step(b);
      require_finite(r.total, phase, e, seed);
      acc.add(r);
    }
    curve.push_back(acc.finish(phase, e, expired ? expired() : 0));
  }
}

inline num::AdamHyper adam_of(const ExperimentConfig& c) {
  num::AdamHyper hp;
  hp.lr = c.lr;
  hp.weight_decay = c.weight_decay;
  return hp;
}

inline MetricSummary score(const games::EvalOutcome& e, const ExperimentConfig& c, std::uint64_t seed) {
  metrics::TopSimOptions opt;
  opt.sample_size = c.topsim_sample;
  opt.seed = make_stream(seed, stream::topsim)();
  return to_summary(metrics::summarize(e.transcript, c.vocab, opt));
}

inline void self_phase(games::Learner& l, Phase phase, const ExperimentConfig& c, std::span<const int> train,
                       Rng& rng, std::uint64_t seed, std::vector<EpochLog>& curve) {
  const games::SelfPlayOptions opt{c.beta, c.t_sim};
  train_epochs(
      c.epochs_self, phase, train, c.batch, rng, seed, curve,
      [&](const data::CandidateSet& b) { return games::self_play_step(l, b, opt, rng); },
      [&] { return l.expired; });
}

}  // namespace detail

// One full pipeline (init → phases → evaluation) for a single seed.
inline SeedRun run_seed(const ExperimentConfig& c, std::uint64_t seed) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto split = data::split(c.split_seed);
  const auto acfg = c.agent_config();
  const auto hp = detail::adam_of(c);
  SeedRun out;
  out.result.seed = seed;
  out.models.seed = seed;
  auto& models = out.models;
  auto& curve = out.result.curve;

  Rng sender_init = make_stream(seed, stream::sender_init);
  Rng receiver_init = make_stream(seed, stream::receiver_init);

  if (c.is_baseline()) {
    const auto est = c.method == Method::GS_ST ? baselines::Estimator::GumbelST : baselines::Estimator::Reinforce;
    models.baseline.emplace(baselines::BaselineSender(acfg, est, c.tau0, sender_init), hp);
    models.receiver.emplace(agent::Agent(acfg, receiver_init), hp);
    models.paired = true;
    Rng rng = make_stream(seed, stream::mutual);
    const baselines::BaselineOptions opt{c.t_sim, c.rl_baseline};
    auto& bl = *models.baseline;
    auto& rx = *models.receiver;
    detail::train_epochs(
        c.baseline_epochs(), Phase::Mutual, split.train, c.batch, rng, seed, curve,
        [&](const data::CandidateSet& b) { return baselines::baseline_step(bl, rx, b, opt, rng); }, {});
    models.rng_state = rng;
    out.result.sender_parameters = bl.sender.sender_parameter_count();
    out.result.estimator_parameters = bl.sender.estimator_parameter_count();
  } else {
    const bool sp_sender = c.variant == Variant::SP_S || c.variant == Variant::SP_S_MP || c.variant == Variant::SP_SR_MP;
    const bool sp_receiver = c.variant == Variant::SP_R || c.variant == Variant::SP_R_MP || c.variant == Variant::SP_SR_MP;
    const bool mutual = c.variant != Variant::SP_S && c.variant != Variant::SP_R;
    const bool need_sender = c.variant != Variant::SP_R;
    const bool need_receiver = c.variant != Variant::SP_S;
    if (need_sender) models.sender.emplace(agent::Agent(acfg, sender_init), hp);
    if (need_receiver) models.receiver.emplace(agent::Agent(acfg, receiver_init), hp);

    Rng rng_s = make_stream(seed, stream::sender_self);
    Rng rng_r = make_stream(seed, stream::receiver_self);
    if (sp_sender) detail::self_phase(*models.sender, Phase::SelfSender, c, split.train, rng_s, seed, curve);
    if (sp_receiver) detail::self_phase(*models.receiver, Phase::SelfReceiver, c, split.train, rng_r, seed, curve);

    // SP entries report the self-play agent's internal language.
    if (sp_sender || sp_receiver) {
      const auto& lone = sp_sender ? models.sender->agent : models.receiver->agent;
      out.result.self_play = detail::score(games::evaluate_self(lone, split.test, c.eval_batch, c.t_sim), c, seed);
    }
    models.rng_state = sp_sender ? rng_s : rng_r;

    if (mutual) {
      models.paired = true;
      Rng rng = make_stream(seed, stream::mutual);
      const games::MutualPlayOptions opt{c.beta_mutual, c.t_sim, c.tau_sample, c.sender_update,
                                         c.receiver_update, c.rl_baseline, c.beta};
      auto& tx = *models.sender;
      auto& rx = *models.receiver;
      detail::train_epochs(
          c.epochs_mutual, Phase::Mutual, split.train, c.batch, rng, seed, curve,
          [&](const data::CandidateSet& b) { return games::mutual_play_step(tx, rx, b, opt, rng); },
          [&] { return tx.expired; });
      models.rng_state = rng;
    }
    out.result.sender_parameters = (models.sender ? models.sender->agent : models.receiver->agent).sender_parameter_count();
  }

  if (out.result.self_play && !models.paired) {
    out.result.test = *out.result.self_play;
  } else {
    out.result.test = detail::score(models.evaluate(split.test, c.eval_batch, c.t_sim), c, seed);
  }
  out.result.validation_accuracy = models.evaluate(split.valid, c.eval_batch, c.t_sim).accuracy;
  out.result.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// FNV-1a over the canonical JSON dump of the config.
inline std::string fingerprint(const ExperimentConfig& c) {
  const std::string s = nlohmann::json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Seeds run in config order; `on_seed` sees each finished pipeline (for
// checkpointing or sweeps) before its models are dropped.
inline RunResult run(const ExperimentConfig& c, const std::function<void(const SeedRun&)>& on_seed = {}) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.config = c;
  r.fingerprint = fingerprint(c);
  for (auto seed : c.seeds) {
    auto s = run_seed(c, seed);
    if (on_seed) on_seed(s);
    r.seeds.push_back(std::move(s.result));
  }
  r.aggregate = aggregate(r.seeds);
  r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct SweepRow {
  std::size_t candidates = 0;
  double accuracy = 0.0;
};

inline std::vector<SweepRow> sweep_candidates(const TrainedModels& m, std::span<const int> ids,
                                              std::span<const std::size_t> list, double t_sim) {
  std::vector<SweepRow> rows;
  for (auto b : list) {
    if (b < 1 || b > ids.size()) {
      throw ConfigError("candidate count " + std::to_string(b) + " outside [1, " + std::to_string(ids.size()) + "]");
    }
  }
  for (auto b : list) rows.push_back({b, m.evaluate(ids, b, t_sim).accuracy});
  return rows;
}

}  // namespace vqel::runner
