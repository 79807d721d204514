// Acceptance run: trains every configuration the criteria need at desk scale
// (Objects, d=64, 3 seeds) and prints one PASS/FAIL line per criterion.
// VQEL_ACCEPTANCE_DIR sets where results are written (default acceptance_out).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "st_oracle.hpp"
#include "test_util.hpp"
#include "vqel/data/objects.hpp"
#include "vqel/games/losses.hpp"
#include "vqel/metrics/metrics.hpp"
#include "vqel/runner/results.hpp"
#include "vqel/runner/run.hpp"
#include "vqel/vq/codebook.hpp"

using namespace vqel;
using num::Tensor;
using runner::ExperimentConfig;
using runner::Method;
using runner::RunResult;
using runner::Variant;

namespace {

struct Verdict {
  int id = 0;
  bool pass = false;
  std::string detail;
};

std::map<int, Verdict> verdicts;

void record(int id, bool pass, std::string detail) {
  verdicts[id] = {id, pass, std::move(detail)};
  std::fprintf(stderr, "[criterion %d] %s  %s\n", id, pass ? "PASS" : "FAIL", verdicts[id].detail.c_str());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string f4(double v) { return fmt("%.4f", v); }

void log(const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); }

// ---- property criteria ----

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

Tensor probe(const Tensor& y, const Tensor& w) { return num::sum(num::mul(y, w)); }

void finite_difference_suite() {
  using testutil::check_gradients;
  using testutil::random_leaf;
  Rng rng = make_stream(11, 0);
  double worst = 0.0;
  std::string where;
  auto note = [&](const std::string& name, const testutil::GradReport& r) {
    if (r.worst >= worst) {
      worst = r.worst;
      where = name;
    }
  };
  auto a = random_leaf({3, 4}, rng), b = random_leaf({3, 4}, rng);
  auto m = random_leaf({4, 5}, rng), mt = random_leaf({5, 4}, rng);
  auto bias = random_leaf({4}, rng), s3 = random_leaf({3}, rng), v = random_leaf({4}, rng);
  auto table = random_leaf({5, 4}, rng), scalar = random_leaf({1}, rng);
  std::vector<double> pv(12);
  for (double& x : pv) x = 0.2 + 1.8 * uniform01(rng);
  auto pos = Tensor({3, 4}, pv, true);
  const auto w = random_leaf({3, 4}, rng).detach_copy();
  const auto w5 = random_leaf({3, 5}, rng).detach_copy();
  const std::vector<int> idx{4, 0, 4}, cols{1, 3, 0};

  const std::vector<std::tuple<std::string, std::function<Tensor()>, std::vector<Tensor>>> cases = {
      {"matmul", [&] { return probe(num::matmul(a, m), w5); }, {a, m}},
      {"matmul_nt", [&] { return probe(num::matmul_nt(a, mt), w5); }, {a, mt}},
      {"add", [&] { return probe(num::add(a, b), w); }, {a, b}},
      {"sub", [&] { return probe(num::sub(a, b), w); }, {a, b}},
      {"mul", [&] { return probe(num::mul(a, b), w); }, {a, b}},
      {"mul_scalar", [&] { return probe(num::mul(a, scalar), w); }, {a, scalar}},
      {"scale", [&] { return probe(num::scale(a, -1.7), w); }, {a}},
      {"add_scalar", [&] { return probe(num::add_scalar(a, 0.3), w); }, {a}},
      {"tanh", [&] { return probe(num::tanh(a), w); }, {a}},
      {"sigmoid", [&] { return probe(num::sigmoid(a), w); }, {a}},
      {"exp", [&] { return probe(num::exp(a), w); }, {a}},
      {"log", [&] { return probe(num::log(pos), w); }, {pos}},
      {"softplus", [&] { return probe(num::softplus(a), w); }, {a}},
      {"sum", [&] { return num::sum(num::mul(num::mul(a, a), w)); }, {a}},
      {"mean", [&] { return num::mean(num::mul(a, w)); }, {a}},
      {"sum_squares", [&] { return num::sum_squares(a); }, {a}},
      {"add_row", [&] { return probe(num::add_row(a, bias), w); }, {a, bias}},
      {"scale_rows", [&] { return probe(num::scale_rows(a, s3), w); }, {a, s3}},
      {"repeat_row", [&] { return probe(num::repeat_row(v, 3), w); }, {v}},
      {"gather_rows", [&] { return probe(num::gather_rows(table, idx), w); }, {table}},
      {"pick", [&] { return num::sum(num::mul(num::pick(a, cols), s3)); }, {a, s3}},
      {"softmax", [&] { return probe(num::softmax(a, 0.7), w); }, {a}},
      {"log_softmax", [&] { return probe(num::log_softmax(a, 1.3), w); }, {a}},
      {"l2_normalize", [&] { return probe(num::l2_normalize(a), w); }, {a}},
      {"sq_distances", [&] { return probe(num::sq_distances(a, table), w5); }, {a, table}},
  };
  for (const auto& [name, f, leaves] : cases) note(name, check_gradients(f, leaves));

  agent::GruCell g(3, 4, rng);
  auto h = random_leaf({2, 4}, rng, 0.8);
  auto x = random_leaf({2, 3}, rng);
  const auto wg = random_leaf({2, 4}, rng).detach_copy();
  std::vector<Tensor> gru_leaves{h, x};
  g.visit("", [&](const std::string&, Tensor& t) { gru_leaves.push_back(t); });
  note("gru", check_gradients([&] { return probe(g(g(h, x), x), wg); }, gru_leaves));

  auto cm = random_leaf({4, 3}, rng), co = random_leaf({4, 3}, rng);
  note("contrastive", check_gradients([&] { return games::contrastive_loss(cm, co, 0.5).loss; }, {cm, co}));
  const double ops_worst = worst;
  const std::string ops_where = where;

  // Composed self-play step against the straight-through surrogate.
  agent::AgentConfig cfg;
  cfg.hidden = 4;
  cfg.vocab = 3;
  cfg.length = 2;
  Rng arng = make_stream(3, 0);
  agent::Agent ag(cfg, arng);
  std::vector<data::ObjectRecord> objs{data::make_object(17), data::make_object(5023), data::make_object(8891)};
  const auto xs = data::one_hot_matrix(objs);
  const games::SelfPlayOptions opt{0.7, 0.5};
  testutil::StSurrogate sur(ag, xs, opt);
  const auto params = testutil::trained_params(ag);
  for (auto p : params) p.zero_grad();
  num::backward(games::self_play_forward(ag, xs, opt).total);
  double step_worst = 0.0;
  const double hstep = 1e-5;
  for (auto leaf : params) {
    const auto lib = leaf.grad();
    std::vector<double> fd(lib.size());
    auto vals = leaf.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + hstep;
      const double up = sur().item();
      vals[i] = keep - hstep;
      const double down = sur().item();
      vals[i] = keep;
      fd[i] = (up - down) / (2 * hstep);
    }
    step_worst = std::max(step_worst, rel_err(lib, fd));
  }
  record(11, ops_worst < 1e-4 && step_worst < 1e-3,
         "worst op/GRU/contrastive rel err " + fmt("%.2e", ops_worst) + " (" + ops_where + ") < 1e-4; self-play step " +
             fmt("%.2e", step_worst) + " < 1e-3");
}

int scan_nearest(std::span<const double> codes, std::size_t dim, const std::vector<double>& z, vq::Metric m) {
  const std::size_t k = codes.size() / dim;
  int best = -1;
  double best_d = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double d = 0.0, dot = 0.0, nz = 0.0, ne = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double e = codes[j * dim + c];
      d += (z[c] - e) * (z[c] - e);
      dot += z[c] * e;
      nz += z[c] * z[c];
      ne += e * e;
    }
    if (m == vq::Metric::Cosine) d = 1.0 - dot / std::sqrt(nz * ne);
    if (best < 0 || d < best_d) {
      best = static_cast<int>(j);
      best_d = d;
    }
  }
  return best;
}

std::vector<double> gaussian(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void vq_suite() {
  Rng rng = make_stream(12, 0);
  std::size_t mismatches = 0;
  for (auto metric : {vq::Metric::Cosine, vq::Metric::Euclidean}) {
    vq::Codebook cb(10, 8, metric, {}, {}, rng);
    for (int i = 0; i < 1000; ++i) {
      const auto z = gaussian(8, rng);
      mismatches += cb.assign_hard(z).index != scan_nearest(cb.codes(), 8, z, metric) ? 1 : 0;
    }
  }

  // EMA against a scalar loop.
  const double g = 0.95, eps = 1e-5;
  const std::size_t k = 4, d = 3;
  std::vector<double> e = gaussian(k * d, rng);
  vq::Codebook ecb(e, d, vq::Metric::Euclidean, {g, eps}, {false});
  std::vector<double> n(k, 1.0), s = e;
  double ema_err = 0.0;
  for (int step = 0; step < 25; ++step) {
    vq::AssignmentBatch b;
    b.dim = d;
    b.inputs = gaussian(6 * d, rng);
    for (int i = 0; i < 6; ++i) b.chosen.push_back(static_cast<int>(uniform_index(rng, k)));
    ecb.ema_update(b);
    for (std::size_t j = 0; j < k; ++j) {
      double cnt = 0.0;
      std::vector<double> sum(d, 0.0);
      for (std::size_t i = 0; i < b.chosen.size(); ++i)
        if (b.chosen[i] == static_cast<int>(j)) {
          cnt += 1.0;
          for (std::size_t c = 0; c < d; ++c) sum[c] += b.inputs[i * d + c];
        }
      n[j] = g * n[j] + (1 - g) * cnt;
      for (std::size_t c = 0; c < d; ++c) s[j * d + c] = g * s[j * d + c] + (1 - g) * sum[c];
    }
    double total = 0.0;
    for (double x : n) total += x;
    for (std::size_t j = 0; j < k; ++j) {
      const double smooth = (n[j] + eps) / (total + static_cast<double>(k) * eps) * total;
      for (std::size_t c = 0; c < d; ++c)
        ema_err = std::max(ema_err, std::abs(ecb.codes()[j * d + c] - s[j * d + c] / smooth));
    }
  }

  // Unit norm under EMA plus expiry in cosine mode.
  vq::Codebook ccb(10, 8, vq::Metric::Cosine, {}, {true, 0, 3, 0.3}, rng);
  double norm_err = 0.0;
  for (int t = 1; t <= 300; ++t) {
    const auto zs = gaussian(16 * 8, rng);
    vq::AssignmentBatch b;
    b.dim = 8;
    b.inputs = zs;
    for (std::size_t i = 0; i < 16; ++i)
      b.chosen.push_back(ccb.assign_hard(std::span<const double>(zs).subspan(i * 8, 8)).index);
    ccb.ema_update(b);
    if (ccb.expiry_due(t)) ccb.expire_stale(zs, rng);
    for (std::size_t j = 0; j < 10; ++j) {
      double sq = 0.0;
      for (double x : ccb.code(j)) sq += x * x;
      norm_err = std::max(norm_err, std::abs(std::sqrt(sq) - 1.0));
    }
  }

  // Commitment gradient stays out of the codebook.
  vq::Codebook kcb(6, 4, vq::Metric::Cosine, {}, {}, rng);
  auto codes = kcb.codes_tensor().detach_copy(true);
  auto z = Tensor::matrix(3, 4, gaussian(12, rng), true);
  const std::vector<int> pick{0, 5, 2};
  num::backward(vq::commitment_loss(z, num::gather_rows(codes, pick)));
  bool codebook_clean = !codes.has_grad();
  for (double gr : codes.grad()) codebook_clean = codebook_clean && gr == 0.0;
  bool z_grad = false;
  for (double gr : z.grad()) z_grad = z_grad || gr != 0.0;

  record(12, mismatches == 0 && ema_err < 1e-12 && norm_err < 1e-8 && codebook_clean && z_grad,
         std::to_string(mismatches) + "/2000 assignment mismatches; EMA max err " + fmt("%.1e", ema_err) +
             "; max |‖e‖−1| " + fmt("%.1e", norm_err) + "; codebook grad " + (codebook_clean ? "zero" : "NONZERO"));
}

std::vector<double> oracle_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, eq = 0;
    for (double y : x) {
      less += y < x[i] ? 1 : 0;
      eq += y == x[i] ? 1 : 0;
    }
    r[i] = less + (eq + 1.0) / 2.0;
  }
  return r;
}

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = oracle_ranks(x), ry = oracle_ranks(y);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double oracle_topsim(const metrics::Transcript& t) {
  std::vector<double> dc, dm;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      double a = 0, b = 0;
      for (std::size_t c = 0; c < t.rows[i].concept_values.size(); ++c)
        a += t.rows[i].concept_values[c] != t.rows[j].concept_values[c] ? 1 : 0;
      for (std::size_t c = 0; c < t.rows[i].message.size(); ++c) b += t.rows[i].message[c] != t.rows[j].message[c] ? 1 : 0;
      dc.push_back(a);
      dm.push_back(b);
    }
  return oracle_spearman(dc, dm);
}

// H(C|M) = −Σ p(c,m) log2 p(c|m), summed directly over the joint table.
double oracle_entropy(const metrics::Transcript& t) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, double> joint;
  std::map<std::vector<int>, double> marginal;
  for (const auto& r : t.rows) {
    joint[{r.concept_values, r.message}] += 1.0;
    marginal[r.message] += 1.0;
  }
  const double n = static_cast<double>(t.size());
  double h = 0.0;
  for (const auto& [key, c] : joint) h -= c / n * std::log2(c / marginal[key.second]);
  return h;
}

metrics::TranscriptRow row(std::vector<int> c, std::vector<int> m) { return {std::move(c), std::move(m), 0, 0}; }

void metrics_suite() {
  metrics::Transcript ident;
  for (int id = 0; id < 300; ++id) {
    const auto a = data::attributes_of(id * 31);
    std::vector<int> c(a.begin(), a.end());
    ident.rows.push_back(row(c, c));
  }
  const double ts_ident = metrics::topsim(ident, {500, 0});
  const double h_ident = metrics::conditional_entropy(ident);

  // Injective but non-compositional protocol: a fixed bijection of the id.
  metrics::Transcript scrambled;
  for (int id = 0; id < 200; ++id) {
    const auto a = data::attributes_of(id);
    std::vector<int> c(a.begin(), a.end());
    const auto m = data::attributes_of((id * 7919 + 13) % 10000);
    scrambled.rows.push_back(row(c, {m.begin(), m.end()}));
  }
  const double h_scr = metrics::conditional_entropy(scrambled);

  // Hand corpora.
  metrics::Transcript hand;
  hand.rows = {row({0, 0, 0, 0}, {1, 1, 2, 3}), row({0, 0, 0, 1}, {1, 1, 2, 4}), row({0, 0, 1, 1}, {1, 5, 2, 4}),
               row({3, 0, 1, 1}, {6, 5, 2, 4}), row({3, 9, 1, 1}, {6, 5, 0, 0}), row({7, 2, 8, 5}, {1, 5, 2, 3})};
  metrics::Transcript ambiguous;
  ambiguous.rows = {row({0, 0, 0, 1}, {1, 1, 1, 1}), row({0, 0, 0, 2}, {1, 1, 1, 1}), row({0, 0, 0, 2}, {1, 1, 1, 1}),
                    row({0, 0, 0, 3}, {2, 2, 2, 2}), row({0, 0, 0, 4}, {3, 3, 3, 3}), row({0, 0, 0, 4}, {3, 3, 3, 3}),
                    row({0, 0, 0, 5}, {3, 3, 3, 3})};
  const double ts_hand = std::abs(metrics::topsim(hand) - oracle_topsim(hand));
  const double h_hand = std::abs(metrics::conditional_entropy(ambiguous) - oracle_entropy(ambiguous));
  const double h_hand2 = std::abs(metrics::conditional_entropy(hand) - oracle_entropy(hand));

  Rng rng = make_stream(13, 0);
  double rand_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    metrics::Transcript t;
    std::set<int> used;
    while (used.size() < 40) used.insert(static_cast<int>(uniform_index(rng, 10000)));
    for (int id : used) {
      const auto a = data::attributes_of(id);
      std::vector<int> msg(4);
      for (int& s : msg) s = static_cast<int>(uniform_index(rng, 3));
      t.rows.push_back(row({a.begin(), a.end()}, msg));
    }
    rand_err = std::max(rand_err, std::abs(metrics::topsim(t) - oracle_topsim(t)));
    rand_err = std::max(rand_err, std::abs(metrics::conditional_entropy(t) - oracle_entropy(t)));
  }

  const bool pass = std::abs(ts_ident - 1.0) < 1e-12 && h_ident == 0.0 && h_scr == 0.0 && ts_hand < 1e-12 &&
                    h_hand < 1e-12 && h_hand2 < 1e-12 && rand_err < 1e-12;
  record(13, pass,
         "identity topsim " + fmt("%.15f", ts_ident) + "; injective H " + f4(h_ident) + "/" + f4(h_scr) +
             "; max |library − brute force| " +
             fmt("%.1e", std::max({ts_hand, h_hand, h_hand2, rand_err})) + " < 1e-12");
}

void straight_through_suite() {
  Rng rng = make_stream(14, 0);
  bool forward_exact = true, routed = true, discrete_clean = true;
  for (int trial = 0; trial < 100; ++trial) {
    auto e = testutil::random_leaf({3, 5}, rng);
    auto z = testutil::random_leaf({3, 5}, rng);
    const auto w = testutil::random_leaf({3, 5}, rng).detach_copy();
    const auto st = num::straight_through(e, z);
    for (std::size_t i = 0; i < 15; ++i) forward_exact = forward_exact && st[i] == e[i];
    num::backward(num::sum(num::mul(st, w)));
    for (std::size_t i = 0; i < 15; ++i) routed = routed && z.grad()[i] == w[i];
    discrete_clean = discrete_clean && !e.has_grad();
  }
  // Through the codebook's quantizer as well.
  vq::Codebook cb(10, 6, vq::Metric::Cosine, {}, {}, rng);
  auto z = testutil::random_leaf({8, 6}, rng);
  const auto q = cb.quantize_st(z);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto code = cb.code(static_cast<std::size_t>(q.indices[i]));
    for (std::size_t c = 0; c < 6; ++c) forward_exact = forward_exact && q.quantized.at(i, c) == code[c];
  }
  num::backward(num::sum(q.quantized));
  for (double g : z.grad()) routed = routed && g == 1.0;
  record(14, forward_exact && routed && discrete_clean,
         std::string("forward bit-exact: ") + (forward_exact ? "yes" : "no") +
             "; gradient copied to continuous argument: " + (routed ? "yes" : "no") +
             "; discrete argument untouched: " + (discrete_clean ? "yes" : "no"));
}

void determinism() {
  ExperimentConfig c;
  c.hidden = 16;
  c.epochs_self = 2;
  c.epochs_mutual = 2;
  c.seeds = {0, 1};
  c.topsim_sample = 200;
  const auto a = runner::run(c);
  const auto b = runner::run(c);
  record(15, runner::same_numbers(a, b),
         "SP_S_MP, d=16, 2+2 epochs, seeds {0,1}, two invocations: " +
             std::string(runner::same_numbers(a, b) ? "bit-identical" : "DIFFER") + " (ACC " + f4(a.aggregate.accuracy.mean) + ")");
}

// ---- training criteria ----

ExperimentConfig desk() {
  ExperimentConfig c;
  c.seeds = {0, 1, 2};
  return c;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::string seeds_str(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + f4(xs[i]);
  return s + "]";
}

std::vector<double> test_acc(const RunResult& r) {
  std::vector<double> v;
  for (const auto& s : r.seeds) v.push_back(s.test.accuracy);
  return v;
}

}  // namespace

int main() {
  const std::filesystem::path out = std::getenv("VQEL_ACCEPTANCE_DIR") ? std::getenv("VQEL_ACCEPTANCE_DIR") : "acceptance_out";
  const auto t0 = std::chrono::steady_clock::now();

  finite_difference_suite();
  vq_suite();
  metrics_suite();
  straight_through_suite();
  determinism();

  std::vector<RunResult> runs;
  auto train = [&](const std::string& label, ExperimentConfig c,
                   const std::function<void(const runner::SeedRun&)>& on_seed = {}) {
    c.output_dir = (out / label).string();
    log("training " + label + " ...");
    auto r = runner::run(c, on_seed);
    log("  " + label + " ACC " + seeds_str(test_acc(r)) + " in " + fmt("%.0f s", r.wall_clock));
    runs.push_back(r);
    return r;
  };

  auto c = desk();
  c.variant = Variant::SP_S;
  const auto sp_s = train("SP_S", c);

  std::vector<runner::SweepRow> sweep;
  const std::vector<std::size_t> candidates{2, 5, 10, 20, 32, 50, 100};
  const auto split = data::split(c.split_seed);
  c = desk();
  c.variant = Variant::SP_S_MP;
  const auto sp_s_mp = train("SP_S_MP", c, [&](const runner::SeedRun& s) {
    if (s.result.seed == 0) sweep = runner::sweep_candidates(s.models, split.test, candidates, c.t_sim);
  });

  c = desk();
  c.variant = Variant::SP_SR_MP;
  const auto sp_sr_mp = train("SP_SR_MP", c);

  c = desk();
  c.variant = Variant::MP_only;
  const auto mp_only = train("MP_only", c);

  c = desk();
  c.method = Method::GS_ST;
  const auto gs = train("GS_ST", c);

  c = desk();
  c.method = Method::REINFORCE;
  const auto rf = train("REINFORCE", c);

  c = desk();
  c.variant = Variant::SP_R_MP;
  c.receiver_update = games::ReceiverUpdate::Frozen;
  const auto spr_frozen = train("SP_R_MP_frozen", c);
  c.receiver_update = games::ReceiverUpdate::FineTuned;
  const auto spr_tuned = train("SP_R_MP_finetuned", c);

  c = desk();
  c.variant = Variant::SP_S;
  c.metric = vq::Metric::Euclidean;
  const auto eucl = train("SP_S_euclidean", c);

  // 1
  {
    const auto acc = test_acc(sp_s);
    double slowest = 0.0;
    for (const auto& s : sp_s.seeds) slowest = std::max(slowest, s.wall_clock);
    const double m = mean_of(acc);
    record(1, m >= 0.75 && slowest < 600.0,
           "SP_S ACC " + f4(m) + " " + seeds_str(acc) + " >= 0.75; slowest seed " + fmt("%.0f s", slowest) + " < 600 s");
  }
  // 2
  {
    const double m = sp_s_mp.aggregate.accuracy.mean, base = sp_s.aggregate.accuracy.mean;
    record(2, m >= base && m >= 0.80,
           "SP_S+MP (RL) ACC " + f4(m) + " " + seeds_str(test_acc(sp_s_mp)) + " >= SP_S " + f4(base) + " and >= 0.80");
  }
  // 3
  {
    const double m = sp_sr_mp.aggregate.accuracy.mean, ref = sp_s_mp.aggregate.accuracy.mean;
    record(3, m >= ref - 0.02 && m >= 0.84,
           "SP_{S,R}+MP ACC " + f4(m) + " " + seeds_str(test_acc(sp_sr_mp)) + " >= " + f4(ref - 0.02) + " and >= 0.84");
  }
  // 4
  {
    bool all = true;
    std::string detail;
    for (const auto* r : {&sp_s, &sp_s_mp, &sp_sr_mp, &mp_only, &spr_frozen, &spr_tuned, &eucl}) {
      for (const auto& s : r->seeds) {
        all = all && s.test.active_words == 1.0;
        if (s.self_play) all = all && s.self_play->active_words == 1.0;
      }
      detail += (detail.empty() ? "" : ", ") + r->config.output_dir.substr(out.string().size() + 1) + " " +
                f4(r->aggregate.active_words.mean);
    }
    record(4, all, "AW per VQEL run: " + detail);
  }
  // 5
  {
    const double h = sp_s.aggregate.conditional_entropy.mean;
    const double hg = gs.aggregate.conditional_entropy.mean, hr = rf.aggregate.conditional_entropy.mean;
    record(5, h <= 0.5 && h < hg && h < hr,
           "H(C|M) SP_S " + f4(h) + " <= 0.5, GS-ST " + f4(hg) + ", REINFORCE " + f4(hr));
  }
  // 6
  {
    const double m = mp_only.aggregate.accuracy.mean, ref = sp_s_mp.aggregate.accuracy.mean;
    record(6, m <= ref - 0.2,
           "MP_only ACC " + f4(m) + " " + seeds_str(test_acc(mp_only)) + " <= SP_S+MP " + f4(ref) + " − 0.2");
  }
  // 7
  {
    const double g = gs.aggregate.accuracy.mean;
    const auto racc = test_acc(rf);
    const bool in_band = std::all_of(racc.begin(), racc.end(), [](double a) { return a >= 0.20 && a <= 0.80; });
    const double rstd = rf.aggregate.accuracy.std.value_or(0.0);
    record(7, g >= 0.70 && g <= 0.85 && in_band && rstd > 0.05,
           "GS-ST ACC " + f4(g) + " " + seeds_str(test_acc(gs)) + " in [0.70, 0.85]; REINFORCE " + seeds_str(racc) +
               " in [0.20, 0.80], std " + f4(rstd) + " > 0.05");
  }
  // 8
  {
    const double fz = spr_frozen.aggregate.accuracy.mean, ft = spr_tuned.aggregate.accuracy.mean;
    record(8, fz < 0.3 && fz < ft, "SP_R+MP frozen ACC " + f4(fz) + " < 0.3 and < fine-tuned " + f4(ft));
  }
  // 9
  {
    const double e = eucl.aggregate.accuracy.mean, cs = sp_s.aggregate.accuracy.mean;
    record(9, e <= cs - 0.03, "Euclidean SP_S ACC " + f4(e) + " <= cosine " + f4(cs) + " − 0.03");
  }
  // 10
  {
    std::map<std::size_t, double> acc;
    std::string detail;
    for (const auto& r : sweep) {
      acc[r.candidates] = r.accuracy;
      detail += (detail.empty() ? "" : " ") + std::string("B=") + std::to_string(r.candidates) + ":" + f4(r.accuracy);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i].accuracy <= sweep[i - 1].accuracy + 0.02;
    const bool close = std::abs(acc[100] - acc[32]) <= 0.05;
    record(10, close && monotone, "SP_S+MP seed 0 sweep " + detail);
    runner::write_atomic(out / "sweep.csv", runner::sweep_csv(sweep));
  }

  runner::export_results(out, runs);

  std::printf("VQEL acceptance (%.0f s total)\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  int failed = 0;
  for (const auto& [id, v] : verdicts) {
    std::printf("%s  criterion %2d  %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria pass\n", static_cast<int>(verdicts.size()) - failed, verdicts.size());
  return failed == 0 ? 0 : 1;
}
