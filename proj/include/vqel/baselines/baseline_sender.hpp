#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqel/agent/agent.hpp"
#include "vqel/agent/layers.hpp"
#include "vqel/data/objects.hpp"
#include "vqel/error.hpp"
#include "vqel/games/losses.hpp"
#include "vqel/games/play.hpp"
#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace vqel::baselines {

enum class Estimator { Reinforce, GumbelST };

struct BaselineMessage {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> symbols;                 // batch × length
  std::vector<num::Tensor> step_log_probs;  // REINFORCE: per step, batch
  std::vector<num::Tensor> step_probs;      // per step, batch × K (softmax of logits)
  std::vector<num::Tensor> relaxed;         // GS-ST: per step, batch × K straight-through one-hots
  std::vector<num::Tensor> soft_samples;    // GS-ST: per step, the relaxed sample y
};

// 1/τ(h) = softplus(w·h) + τ₀, so τ ≤ 1/τ₀.
inline double gs_temperature(std::span<const double> w, std::span<const double> h, double tau0) {
  if (!(tau0 > 0.0)) throw ParameterError("gs_temperature: tau0 must be positive");
  double dot = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) dot += w[i] * h[i];
  return 1.0 / (num::softplus_scalar(dot) + tau0);
}

// Gumbel(0,1) draw as −log(−log U), U clamped away from 0 and 1.
inline double gumbel(Rng& rng) {
  constexpr double kClamp = 1e-20;
  const double u = std::clamp(uniform01(rng), kClamp, 1.0 - 1e-16);
  return -std::log(std::max(-std::log(u), kClamp));
}

// Sender of the REINFORCE and Gumbel-Softmax baselines: the VQ agent's
// generator with the codebook lookup replaced by a vocabulary head,
//   logits_t = g(h_t) · Vᵀ,
// where V (K×d) also embeds the previous symbol as the next GRU input.
class BaselineSender {
 public:
  BaselineSender() = default;
  BaselineSender(const agent::AgentConfig& cfg, Estimator est, double tau0, Rng& rng)
      : cfg_(cfg), estimator_(est), tau0_(tau0) {
    if (!(tau0 > 0.0)) throw ParameterError("BaselineSender: tau0 must be positive");
    const auto d = cfg.hidden;
    const auto fan = static_cast<double>(d);
    object_embed_ = agent::Linear(cfg.input_dim(), d, false, fan, rng);
    gen_gru_ = agent::GruCell(d, d, rng);
    proj_ = agent::Linear(d, d, true, fan, rng);
    bos_ = agent::uniform_param({d}, fan, rng);
    vocab_ = agent::uniform_param({cfg.vocab, d}, fan, rng);
    if (est == Estimator::GumbelST) temp_w_ = agent::uniform_param({1, d}, fan, rng);
  }

  const agent::AgentConfig& config() const { return cfg_; }
  Estimator estimator() const { return estimator_; }
  double tau0() const { return tau0_; }
  num::Tensor& vocab() { return vocab_; }
  num::Tensor& temp_w() { return temp_w_; }
  agent::Linear& proj() { return proj_; }

  num::Tensor perceive_objects(const num::Tensor& one_hot) const {
    agent::validate_one_hot(one_hot, cfg_.attributes, cfg_.values);
    return object_embed_(one_hot);
  }

  num::Tensor logits(const num::Tensor& h) const { return num::matmul_nt(proj_(h), vocab_); }

  // Per-row inverse temperature softplus(w·h) + τ₀ as a batch tensor.
  num::Tensor inverse_temperature(const num::Tensor& h) const {
    return num::add_scalar(num::softplus(num::matmul_nt(h, temp_w_)), tau0_);
  }

  // REINFORCE sender: categorical sample per step (greedy = argmax when rng is null).
  BaselineMessage reinforce_generate(const num::Tensor& v_o, Rng* rng) const {
    return unroll(v_o, [&](const num::Tensor& h, BaselineMessage& msg, std::vector<int>& idx) {
      const auto logp = num::log_softmax(logits(h));
      const std::size_t k = logp.cols();
      std::vector<double> probs(logp.size());
      for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logp[i]);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto row = std::span<const double>(probs).subspan(i * k, k);
        idx[i] = rng ? sample_categorical(row, *rng) : argmax(row);
      }
      msg.step_log_probs.push_back(num::pick(logp, idx));
      msg.step_probs.push_back(num::Tensor::matrix(idx.size(), k, std::move(probs)));
      return num::gather_rows(vocab_, idx);
    });
  }

  // GS-ST sender: y = softmax((logits + G)/τ(h)), forward one-hot(argmax y),
  // backward through y. `fixed_noise` (per step, batch × K) replaces the
  // Gumbel draws when given.
  BaselineMessage gs_generate(const num::Tensor& v_o, Rng* rng,
                              const std::vector<std::vector<double>>* fixed_noise = nullptr) const {
    if (!temp_w_.defined()) throw UsageError("gs_generate: sender has no temperature head");
    std::size_t step = 0;
    return unroll(v_o, [&](const num::Tensor& h, BaselineMessage& msg, std::vector<int>& idx) {
      const auto lg = logits(h);
      const std::size_t b = lg.rows(), k = lg.cols();
      std::vector<double> noise(b * k, 0.0);
      if (fixed_noise) {
        noise = fixed_noise->at(step);
      } else if (rng) {
        for (double& g : noise) g = gumbel(*rng);
      }
      ++step;
      const auto perturbed = num::add(lg, num::Tensor(lg.shape(), std::move(noise)));
      const auto y = num::softmax(num::scale_rows(perturbed, inverse_temperature(h)));
      std::vector<double> hard(b * k, 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        idx[i] = argmax(y.values().subspan(i * k, k));
        hard[i * k + static_cast<std::size_t>(idx[i])] = 1.0;
      }
      const auto st = num::straight_through(num::Tensor(lg.shape(), std::move(hard)), y);
      msg.step_probs.push_back(num::softmax(lg).detach_copy());
      msg.soft_samples.push_back(y);
      msg.relaxed.push_back(st);
      return num::matmul(st, vocab_);
    });
  }

  std::vector<int> greedy_symbols(const num::Tensor& one_hot) const {
    num::NoGradGuard guard;
    const auto v_o = perceive_objects(one_hot);
    return unroll(v_o, [&](const num::Tensor& h, BaselineMessage&, std::vector<int>& idx) {
             const auto lg = logits(h);
             const std::size_t k = lg.cols();
             for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = argmax(lg.values().subspan(i * k, k));
             return num::gather_rows(vocab_, idx);
           })
        .symbols;
  }

  template <class F>
  void visit_params(F&& f) {
    object_embed_.visit("object_embed", f);
    gen_gru_.visit("gen_gru", f);
    proj_.visit("proj", f);
    f(std::string("bos"), bos_);
    f(std::string("vocab"), vocab_);
    if (temp_w_.defined()) f(std::string("temp_w"), temp_w_);
  }

  std::vector<agent::NamedParam> named_params() const {
    std::vector<agent::NamedParam> out;
    const_cast<BaselineSender*>(this)->visit_params(
        [&](const std::string& name, num::Tensor& t) { out.push_back({name, t}); });
    return out;
  }

  std::vector<num::Tensor> parameters() const {
    std::vector<num::Tensor> out;
    for (auto& p : named_params()) out.push_back(p.tensor);
    return out;
  }

  // Object-to-message parameters, counted the same way as the VQ sender:
  // perception + GRU + projection + BOS + the K×d symbol table (V here, the
  // codebook there). The GS temperature head is estimator machinery and is
  // reported by estimator_parameter_count() instead.
  std::size_t sender_parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : named_params())
      if (p.name != "temp_w") n += p.tensor.size();
    return n;
  }
  std::size_t estimator_parameter_count() const { return temp_w_.defined() ? temp_w_.size() : 0; }

 private:
  static int argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] > row[best]) best = k;
    return static_cast<int>(best);
  }

  // h_0 = v_o, input_0 = bos; `choose` fills the step's symbols and returns
  // the next GRU input.
  template <class Choose>
  BaselineMessage unroll(const num::Tensor& v_o, Choose&& choose) const {
    const std::size_t batch = v_o.rows();
    BaselineMessage msg;
    msg.batch = batch;
    msg.length = cfg_.length;
    msg.symbols.assign(batch * cfg_.length, 0);
    auto h = v_o;
    auto input = num::repeat_row(bos_, batch);
    for (std::size_t t = 0; t < cfg_.length; ++t) {
      h = gen_gru_(h, input);
      std::vector<int> idx(batch);
      input = choose(h, msg, idx);
      for (std::size_t i = 0; i < batch; ++i) msg.symbols[i * cfg_.length + t] = idx[i];
    }
    return msg;
  }

  agent::AgentConfig cfg_;
  Estimator estimator_ = Estimator::Reinforce;
  double tau0_ = 1.0;
  agent::Linear object_embed_;
  agent::GruCell gen_gru_;
  agent::Linear proj_;
  num::Tensor bos_;
  num::Tensor vocab_;
  num::Tensor temp_w_;
};

struct BaselineLearner {
  BaselineSender sender;
  num::Adam optimizer;

  BaselineLearner() = default;
  BaselineLearner(BaselineSender s, num::AdamHyper hp) : sender(std::move(s)) {
    optimizer = num::Adam(sender.parameters(), hp);
  }
};

struct BaselineOptions {
  double t_sim = 0.1;
  bool rl_baseline = false;  // batch-mean reward baseline
};

// One mutual-play step for either baseline. REINFORCE: receiver trained on
// symbols, sender on −A·Σ log p. GS-ST: the receiver embeds the straight-
// through one-hots, so its contrastive loss trains both agents directly.
inline games::TrainStepReport baseline_step(BaselineLearner& sender, games::Learner& receiver,
                                            const data::CandidateSet& batch,
                                            const BaselineOptions& opt, Rng& rng) {
  const auto x = data::one_hot_matrix(batch);
  const auto v_o_s = sender.sender.perceive_objects(x);
  games::TrainStepReport r;
  num::Tensor total;
  games::ContrastiveResult c;
  if (sender.sender.estimator() == Estimator::Reinforce) {
    const auto msg = sender.sender.reinforce_generate(v_o_s, &rng);
    agent::MessageBatch sym;
    sym.batch = msg.batch;
    sym.length = msg.length;
    sym.symbols = msg.symbols;
    const auto v_m = receiver.agent.perceive_message(sym, agent::InputKind::Symbolic);
    c = games::contrastive_loss(v_m, receiver.agent.perceive_objects(x), opt.t_sim);
    std::vector<double> rewards(c.per_row.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) rewards[i] = -c.per_row[i];
    const auto rl = games::reinforce_loss(msg.step_log_probs, rewards, opt.rl_baseline);
    r.rl = rl.item();
    total = num::add(c.loss, rl);
  } else {
    const auto msg = sender.sender.gs_generate(v_o_s, &rng);
    std::vector<num::Tensor> inputs;
    for (const auto& st : msg.relaxed) inputs.push_back(num::matmul(st, receiver.agent.symbol_embed()));
    const auto v_m = receiver.agent.perceive_sequence(inputs);
    c = games::contrastive_loss(v_m, receiver.agent.perceive_objects(x), opt.t_sim);
    total = c.loss;
  }
  sender.optimizer.zero_grad();
  receiver.optimizer.zero_grad();
  num::backward(total);
  sender.optimizer.step();
  receiver.optimizer.step();
  r.contrastive = c.loss.item();
  r.total = total.item();
  r.batch_accuracy = games::batch_accuracy(c);
  return r;
}

}  // namespace vqel::baselines
