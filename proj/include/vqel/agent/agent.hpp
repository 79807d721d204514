#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vqel/agent/layers.hpp"
#include "vqel/agent/message.hpp"
#include "vqel/error.hpp"
#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"
#include "vqel/vq/codebook.hpp"

namespace vqel::agent {

struct AgentConfig {
  std::size_t attributes = 4;   // one-hot blocks in the object encoding
  std::size_t values = 10;      // width of each block
  std::size_t hidden = 64;      // d
  std::size_t vocab = 10;       // K
  std::size_t length = 4;       // L
  vq::Metric metric = vq::Metric::Cosine;
  vq::EmaConfig ema;
  vq::ExpiryConfig expiry;

  std::size_t input_dim() const { return attributes * values; }
};

struct GenMode {
  enum class Kind { Hard, Soft };
  Kind kind = Kind::Hard;
  double tau = 1.0;

  static GenMode hard() { return {}; }
  static GenMode soft(double tau) { return {Kind::Soft, tau}; }
};

enum class InputKind { Discrete, Symbolic };

// Throws InputError unless every row of x is a concatenation of one-hot blocks.
inline void validate_one_hot(const num::Tensor& x, std::size_t blocks, std::size_t width) {
  if (x.cols() != blocks * width) {
    throw InputError("object encoding has width " + std::to_string(x.cols()) + ", expected " +
                     std::to_string(blocks * width));
  }
  const auto v = x.values();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t b = 0; b < blocks; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < width; ++c) {
        const double e = v[r * blocks * width + b * width + c];
        if (e != 0.0 && e != 1.0) throw InputError("object encoding has a non-binary entry");
        s += e;
      }
      if (s != 1.0) {
        throw InputError("object " + std::to_string(r) + " block " + std::to_string(b) +
                         " sums to " + std::to_string(s));
      }
    }
}

// Object perception, message generation (GRU + codebook) and message
// perception (embedding + GRU) of one agent.
class Agent {
 public:
  Agent() = default;
  Agent(const AgentConfig& cfg, Rng& rng) : cfg_(cfg) {
    const auto d = cfg.hidden;
    const auto fan = static_cast<double>(d);
    object_embed_ = Linear(cfg.input_dim(), d, false, fan, rng);
    gen_gru_ = GruCell(d, d, rng);
    proj_ = Linear(d, d, true, fan, rng);
    bos_ = uniform_param({d}, fan, rng);
    percep_gru_ = GruCell(d, d, rng);
    symbol_embed_ = uniform_param({cfg.vocab, d}, fan, rng);
    codebook_ = vq::Codebook(cfg.vocab, d, cfg.metric, cfg.ema, cfg.expiry, rng);
  }

  const AgentConfig& config() const { return cfg_; }
  std::size_t hidden() const { return cfg_.hidden; }
  vq::Codebook& codebook() { return codebook_; }
  const vq::Codebook& codebook() const { return codebook_; }

  Linear& object_embed() { return object_embed_; }
  GruCell& gen_gru() { return gen_gru_; }
  Linear& proj() { return proj_; }
  num::Tensor& bos() { return bos_; }
  GruCell& percep_gru() { return percep_gru_; }
  num::Tensor& symbol_embed() { return symbol_embed_; }

  // v_o = x · W for a batch of one-hot encodings (B × 40 → B × d).
  num::Tensor perceive_objects(const num::Tensor& one_hot) const {
    validate_one_hot(one_hot, cfg_.attributes, cfg_.values);
    return object_embed_(one_hot);
  }

  // h_0 = v_o, last_word = bos; per step h_t = GRU(h_{t−1}, last_word),
  // z_t = g(h_t), w_t by hard or soft assignment, last_word = e_{w_t}.
  // Hard mode feeds the straight-through code back into the recurrence; soft
  // mode feeds the constant code so log-probabilities stay score-function only.
  MessageBatch generate(const num::Tensor& v_o, GenMode mode, Rng* rng = nullptr) const {
    if (v_o.cols() != cfg_.hidden) throw DimensionError("generate: v_o width mismatch");
    if (mode.kind == GenMode::Kind::Soft) {
      num::require_temperature(mode.tau, "generate");
      if (rng == nullptr) throw UsageError("generate: soft mode needs an RNG stream");
    }
    const std::size_t batch = v_o.rows();
    MessageBatch msg;
    msg.batch = batch;
    msg.length = cfg_.length;
    msg.symbols.assign(batch * cfg_.length, 0);
    auto h = v_o;
    auto last = num::repeat_row(bos_, batch);
    for (std::size_t t = 0; t < cfg_.length; ++t) {
      h = gen_gru_(h, last);
      const auto z = proj_(h);
      std::vector<int> idx(batch);
      num::Tensor codes;
      if (mode.kind == GenMode::Kind::Hard) {
        auto q = codebook_.quantize_st(z);
        idx = std::move(q.indices);
        codes = q.codes;
        msg.discrete.push_back(q.quantized);
        last = q.quantized;
      } else {
        const auto logp =
            num::log_softmax(num::scale(codebook_.distance_tensor(z), -1.0 / mode.tau));
        std::vector<double> probs(logp.size());
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logp[i]);
        const std::size_t k = logp.cols();
        for (std::size_t i = 0; i < batch; ++i) {
          idx[i] = sample_categorical(std::span<const double>(probs).subspan(i * k, k), *rng);
        }
        msg.step_log_probs.push_back(num::pick(logp, idx));
        msg.step_probs.push_back(num::Tensor::matrix(batch, k, std::move(probs)));
        codes = codebook_.lookup(idx);
        msg.discrete.push_back(num::straight_through(codes, z));
        last = codes;
      }
      msg.step_commitments.push_back(vq::commitment_loss(z, codes));
      msg.pre_quant.push_back(z);
      for (std::size_t i = 0; i < batch; ++i) msg.symbols[i * cfg_.length + t] = idx[i];
    }
    return msg;
  }

  // v_m: final hidden state of the perception GRU (h_0 = 0) over the message,
  // fed either the code vectors or this agent's symbol embeddings.
  num::Tensor perceive_message(const MessageBatch& msg, InputKind kind) const {
    std::vector<num::Tensor> inputs;
    inputs.reserve(msg.length);
    for (std::size_t t = 0; t < msg.length; ++t) {
      if (kind == InputKind::Discrete) {
        inputs.push_back(msg.discrete.at(t));
      } else {
        const auto col = msg.column(t);
        for (int s : col) {
          if (s < 0 || static_cast<std::size_t>(s) >= cfg_.vocab) {
            throw InputError("perceive_message: symbol " + std::to_string(s) + " out of range");
          }
        }
        inputs.push_back(num::gather_rows(symbol_embed_, col));
      }
    }
    return perceive_sequence(inputs);
  }

  // Perception GRU over arbitrary per-step input rows (batch × d each).
  num::Tensor perceive_sequence(const std::vector<num::Tensor>& inputs) const {
    if (inputs.empty()) throw UsageError("perceive_sequence: empty message");
    auto h = num::Tensor::zeros({inputs[0].rows(), cfg_.hidden});
    for (const auto& x : inputs) h = percep_gru_(h, x);
    return h;
  }

  // Hard-mode symbols only (evaluation).
  std::vector<int> greedy_symbols(const num::Tensor& one_hot) const {
    num::NoGradGuard guard;
    return generate(perceive_objects(one_hot), GenMode::hard()).symbols;
  }

  // Visits (name, tensor&) for every gradient-trained parameter.
  template <class F>
  void visit_params(F&& f) {
    object_embed_.visit("object_embed", f);
    gen_gru_.visit("gen_gru", f);
    proj_.visit("proj", f);
    f(std::string("bos"), bos_);
    percep_gru_.visit("percep_gru", f);
    f(std::string("symbol_embed"), symbol_embed_);
  }

  std::vector<NamedParam> named_params() const {
    std::vector<NamedParam> out;
    const_cast<Agent*>(this)->visit_params(
        [&](const std::string& name, num::Tensor& t) { out.push_back({name, t}); });
    return out;
  }

  std::vector<num::Tensor> parameters() const {
    std::vector<num::Tensor> out;
    for (auto& p : named_params()) out.push_back(p.tensor);
    return out;
  }

  // Parameters of the message-generation path (object perception, generator
  // GRU, projection, BOS), excluding the codebook.
  std::vector<num::Tensor> generation_parameters() const {
    std::vector<num::Tensor> out;
    for (auto& p : named_params())
      if (!p.name.starts_with("percep_gru") && p.name != "symbol_embed") out.push_back(p.tensor);
    return out;
  }

  // Parameters that turn an object into a message, codebook included.
  std::size_t sender_parameter_count() const {
    std::size_t n = codebook_.codes().size();
    for (const auto& p : generation_parameters()) n += p.size();
    return n;
  }

  // Independent copy: fresh parameter leaves with identical values.
  Agent clone() const {
    Agent out = *this;
    out.visit_params([](const std::string&, num::Tensor& t) { t = t.detach_copy(true); });
    return out;
  }

 private:
  AgentConfig cfg_;
  Linear object_embed_;
  GruCell gen_gru_;
  Linear proj_;
  num::Tensor bos_;
  GruCell percep_gru_;
  num::Tensor symbol_embed_;
  vq::Codebook codebook_;
};

}  // namespace vqel::agent
