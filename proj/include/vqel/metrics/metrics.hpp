#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/rng.hpp"

namespace vqel::metrics {

struct TranscriptRow {
  std::vector<int> concept_values;  // attribute tuple
  std::vector<int> message;  // L symbols
  int predicted = 0;
  int target = 0;
};

struct Transcript {
  std::vector<TranscriptRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

inline void require_rows(const Transcript& t, const char* what) {
  if (t.empty()) throw InputError(std::string(what) + ": empty transcript");
}

inline double accuracy(const Transcript& t) {
  require_rows(t, "accuracy");
  std::size_t hits = 0;
  for (const auto& r : t.rows) hits += r.predicted == r.target ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(t.size());
}

// Fraction of the K symbols used at least once.
inline double active_words(const Transcript& t, std::size_t vocab) {
  require_rows(t, "active_words");
  std::vector<bool> used(vocab, false);
  for (const auto& r : t.rows)
    for (int s : r.message) {
      if (s < 0 || static_cast<std::size_t>(s) >= vocab) {
        throw InputError("active_words: symbol " + std::to_string(s) + " outside vocabulary");
      }
      used[static_cast<std::size_t>(s)] = true;
    }
  return static_cast<double>(std::count(used.begin(), used.end(), true)) /
         static_cast<double>(vocab);
}

inline std::size_t unique_messages(const Transcript& t) {
  require_rows(t, "unique_messages");
  std::set<std::vector<int>> seen;
  for (const auto& r : t.rows) seen.insert(r.message);
  return seen.size();
}

// H(C|M) in bits from empirical joint counts, concept_values = full attribute tuple.
inline double conditional_entropy(const Transcript& t) {
  require_rows(t, "conditional_entropy");
  std::map<std::vector<int>, std::map<std::vector<int>, std::size_t>> by_message;
  for (const auto& r : t.rows) ++by_message[r.message][r.concept_values];
  const auto n = static_cast<double>(t.size());
  double h = 0.0;
  for (const auto& [msg, concepts] : by_message) {
    double total = 0.0;
    for (const auto& [c, k] : concepts) total += static_cast<double>(k);
    double hm = 0.0;
    for (const auto& [c, k] : concepts) {
      const double p = static_cast<double>(k) / total;
      hm -= p * std::log2(p);
    }
    h += total / n * hm;
  }
  return h;
}

inline std::size_t hamming(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InputError("hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation undefined for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  if (x.size() < 2) throw DomainError("correlation undefined for fewer than two pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct TopSimOptions {
  std::size_t sample_size = 500;
  std::uint64_t seed = 0;
};

// Spearman correlation between pairwise attribute and message Hamming
// distances over a seeded sample of distinct concepts.
inline double topsim(const Transcript& t, TopSimOptions opt = {}) {
  require_rows(t, "topsim");
  std::map<std::vector<int>, std::vector<int>> first_message;
  for (const auto& r : t.rows) first_message.emplace(r.concept_values, r.message);
  if (first_message.size() < 2) throw InputError("topsim: need at least two distinct concepts");
  std::vector<std::pair<std::vector<int>, std::vector<int>>> items(first_message.begin(),
                                                                   first_message.end());
  if (items.size() > opt.sample_size) {
    auto rng = make_stream(opt.seed, 0x7095);
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(opt.sample_size);
  }
  std::vector<double> dc, dm;
  const std::size_t n = items.size();
  dc.reserve(n * (n - 1) / 2);
  dm.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      dc.push_back(static_cast<double>(hamming(items[i].first, items[j].first)));
      dm.push_back(static_cast<double>(hamming(items[i].second, items[j].second)));
    }
  return spearman(dc, dm);
}

struct MetricRecord {
  double accuracy = 0.0;
  double active_words = 0.0;
  double topsim = 0.0;
  double conditional_entropy = 0.0;
  std::size_t unique_messages = 0;
  bool topsim_defined = true;
};

inline MetricRecord summarize(const Transcript& t, std::size_t vocab, TopSimOptions opt = {}) {
  MetricRecord m;
  m.accuracy = accuracy(t);
  m.active_words = active_words(t, vocab);
  m.conditional_entropy = conditional_entropy(t);
  m.unique_messages = unique_messages(t);
  try {
    m.topsim = topsim(t, opt);
  } catch (const DomainError&) {
    // Collapsed language: every message identical.
    m.topsim = 0.0;
    m.topsim_defined = false;
  }
  return m;
}

}  // namespace vqel::metrics
