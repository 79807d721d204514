#pragma once

#include <utility>
#include <vector>

#include "vqel/agent/agent.hpp"
#include "vqel/games/play.hpp"

namespace testutil {

// Self-play with the quantizer replaced by z + c_t, c_t = e_t − z_t frozen at
// the base point. Its exact derivative is the straight-through gradient, so
// finite differences of this surrogate are the reference.
struct StSurrogate {
  vqel::agent::Agent& a;
  vqel::num::Tensor x;
  vqel::games::SelfPlayOptions opt;
  std::vector<vqel::num::Tensor> offsets;
  std::vector<vqel::num::Tensor> codes;

  StSurrogate(vqel::agent::Agent& agent, vqel::num::Tensor objs, vqel::games::SelfPlayOptions o) : a(agent), x(std::move(objs)), opt(o) {
    vqel::num::NoGradGuard guard;
    const auto msg = a.generate(a.perceive_objects(x), vqel::agent::GenMode::hard());
    for (std::size_t t = 0; t < msg.length; ++t) {
      const auto e = a.codebook().lookup(msg.column(t));
      codes.push_back(e.detach_copy());
      offsets.push_back(vqel::num::sub(e, msg.pre_quant[t]).detach_copy());
    }
  }

  vqel::num::Tensor operator()() const {
    const auto v_o = a.perceive_objects(x);
    auto h = v_o;
    auto last = vqel::num::repeat_row(a.bos(), x.rows());
    std::vector<vqel::num::Tensor> inputs;
    vqel::num::Tensor commit;
    for (std::size_t t = 0; t < offsets.size(); ++t) {
      h = a.gen_gru()(h, last);
      const auto z = a.proj()(h);
      last = vqel::num::add(z, offsets[t]);
      inputs.push_back(last);
      const auto c = vqel::vq::commitment_loss(z, codes[t]);
      commit = t == 0 ? c : vqel::num::add(commit, c);
    }
    commit = vqel::num::scale(commit, 1.0 / static_cast<double>(offsets.size()));
    const auto v_m = a.perceive_sequence(inputs);
    return vqel::num::add(vqel::games::contrastive_loss(v_m, v_o, opt.t_sim).loss, vqel::num::scale(commit, opt.beta));
  }
};

inline std::vector<vqel::num::Tensor> trained_params(const vqel::agent::Agent& a) {
  std::vector<vqel::num::Tensor> out;
  for (const auto& p : a.named_params())
    if (p.name != "symbol_embed") out.push_back(p.tensor);
  return out;
}

}  // namespace testutil
