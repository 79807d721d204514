#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace vqel::vq {

enum class Metric { Cosine, Euclidean };

inline const char* to_string(Metric m) { return m == Metric::Cosine ? "Cosine" : "Euclidean"; }

struct EmaConfig {
  double decay = 0.99;
  double laplace = 1e-5;
};

// Codes whose usage EMA drops below `threshold` are replaced every `every`
// steps once `warmup` steps have elapsed. threshold <= 0 means 1/(4K).
struct ExpiryConfig {
  bool enabled = true;
  long warmup = 200;
  long every = 100;
  double threshold = 0.0;
};

struct HardAssignment {
  int index = 0;
  std::vector<double> code;
};

struct SoftAssignment {
  int index = 0;
  double log_prob = 0.0;
  std::vector<double> distribution;
};

// Rows of z (row-major, `dim` wide) with the code chosen for each.
struct AssignmentBatch {
  std::size_t dim = 0;
  std::vector<double> inputs;
  std::vector<int> chosen;
  std::vector<double> log_probs;  // soft mode only
  std::vector<double> distances;  // rows × K, optional

  std::size_t size() const { return chosen.size(); }
};

// Differentiable quantization of a batch: forward equals the chosen codes,
// backward reaches `z` through the straight-through copy.
struct Quantized {
  std::vector<int> indices;
  num::Tensor codes;      // chosen code rows, constant
  num::Tensor quantized;  // straight_through(codes, z)
};

class Codebook {
 public:
  Codebook() = default;

  // Cosine: K Gaussian vectors normalized to the unit sphere.
  // Euclidean: Gaussian entries with σ = 1/√d.
  Codebook(std::size_t k, std::size_t dim, Metric metric, EmaConfig ema, ExpiryConfig expiry,
           Rng& rng)
      : k_(k), dim_(dim), metric_(metric), ema_(ema), expiry_(expiry) {
    validate_sizes();
    codes_.resize(k * dim);
    const double sigma = metric == Metric::Cosine ? 1.0 : 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& c : codes_) c = sigma * normal(rng);
    if (metric_ == Metric::Cosine) normalize_all();
    reset_statistics();
  }

  Codebook(std::vector<double> codes, std::size_t dim, Metric metric, EmaConfig ema = {},
           ExpiryConfig expiry = {})
      : k_(dim ? codes.size() / dim : 0),
        dim_(dim),
        metric_(metric),
        ema_(ema),
        expiry_(expiry),
        codes_(std::move(codes)) {
    validate_sizes();
    if (codes_.size() != k_ * dim_) throw DimensionError("Codebook: codes not a multiple of dim");
    if (metric_ == Metric::Cosine) normalize_all();
    reset_statistics();
  }

  std::size_t size() const { return k_; }
  std::size_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  const EmaConfig& ema_config() const { return ema_; }
  const ExpiryConfig& expiry_config() const { return expiry_; }

  std::span<const double> codes() const { return codes_; }
  std::span<const double> code(std::size_t k) const {
    return std::span<const double>(codes_).subspan(k * dim_, dim_);
  }
  std::span<const double> ema_cluster_size() const { return cluster_size_; }
  std::span<const double> ema_embed_sum() const { return embed_sum_; }
  std::span<const double> usage_ema() const { return usage_; }

  // Checkpoint restore; sizes must match.
  void restore(std::vector<double> codes, std::vector<double> cluster_size,
               std::vector<double> embed_sum, std::vector<double> usage) {
    if (codes.size() != k_ * dim_ || cluster_size.size() != k_ || embed_sum.size() != k_ * dim_ ||
        usage.size() != k_) {
      throw DimensionError("Codebook::restore: state does not match K×d");
    }
    codes_ = std::move(codes);
    cluster_size_ = std::move(cluster_size);
    embed_sum_ = std::move(embed_sum);
    usage_ = std::move(usage);
  }
  void set_usage(std::size_t k, double u) { usage_.at(k) = u; }

  double stale_threshold() const {
    return expiry_.threshold > 0.0 ? expiry_.threshold : 1.0 / (4.0 * static_cast<double>(k_));
  }

  // Constant K×d tensor snapshot of the codes.
  num::Tensor codes_tensor() const { return num::Tensor::matrix(k_, dim_, codes_); }

  // Euclidean: ‖z − e_k‖². Cosine: 1 − cos(z, e_k).
  std::vector<double> distances(std::span<const double> z) const {
    if (z.size() != dim_) {
      throw DimensionError("distances: z has " + std::to_string(z.size()) + " entries, expected " +
                           std::to_string(dim_));
    }
    for (double v : z) {
      if (!std::isfinite(v)) throw NumericalError("distances: non-finite input");
    }
    std::vector<double> out(k_);
    if (metric_ == Metric::Euclidean) {
      for (std::size_t k = 0; k < k_; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
          const double diff = z[c] - codes_[k * dim_ + c];
          s += diff * diff;
        }
        out[k] = s;
      }
      return out;
    }
    const double zn = norm(z);
    if (!(zn > num::kNormEpsilon)) throw DegenerateInputError("distances: near-zero z in cosine mode");
    for (std::size_t k = 0; k < k_; ++k) {
      const auto e = code(k);
      double dot = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) dot += z[c] * e[c];
      out[k] = 1.0 - dot / (zn * norm(e));
    }
    return out;
  }

  HardAssignment assign_hard(std::span<const double> z) const {
    const auto d = distances(z);
    const int idx = argmin(d);
    const auto e = code(static_cast<std::size_t>(idx));
    return {idx, std::vector<double>(e.begin(), e.end())};
  }

  // Samples from softmax(−distances/τ).
  SoftAssignment assign_soft(std::span<const double> z, double tau, Rng& rng) const {
    num::require_temperature(tau, "assign_soft");
    const auto d = distances(z);
    SoftAssignment out;
    out.distribution = soft_distribution(d, tau);
    out.index = sample_categorical(out.distribution, rng);
    out.log_prob = log_probabilities(d, tau)[static_cast<std::size_t>(out.index)];
    return out;
  }

  // Differentiable distances from every row of z (m×d) to every code (m×K).
  num::Tensor distance_tensor(const num::Tensor& z) const {
    if (z.cols() != dim_) throw DimensionError("distance_tensor: width mismatch");
    const auto codes = codes_tensor();
    if (metric_ == Metric::Euclidean) return num::sq_distances(z, codes);
    // Codes are unit vectors in cosine mode.
    return num::add_scalar(num::scale(num::matmul_nt(num::l2_normalize(z), codes), -1.0), 1.0);
  }

  // Hard, lowest-index nearest code for every row; gradient copied to z.
  Quantized quantize_st(const num::Tensor& z) const {
    const std::size_t m = z.rows();
    Quantized q;
    q.indices.resize(m);
    std::vector<double> rows(m * dim_);
    for (std::size_t i = 0; i < m; ++i) {
      const auto zi = z.values().subspan(i * dim_, dim_);
      const int idx = argmin(distances(zi));
      q.indices[i] = idx;
      const auto e = code(static_cast<std::size_t>(idx));
      std::copy(e.begin(), e.end(), rows.begin() + static_cast<long>(i * dim_));
    }
    q.codes = num::Tensor(z.shape(), std::move(rows));
    q.quantized = num::straight_through(q.codes, z);
    return q;
  }

  // Code rows for the given indices as a constant tensor.
  num::Tensor lookup(std::span<const int> indices) const {
    std::vector<double> rows(indices.size() * dim_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= k_) {
        throw InputError("lookup: symbol " + std::to_string(indices[i]) + " out of range");
      }
      const auto e = code(static_cast<std::size_t>(indices[i]));
      std::copy(e.begin(), e.end(), rows.begin() + static_cast<long>(i * dim_));
    }
    return num::Tensor::matrix(indices.size(), dim_, std::move(rows));
  }

  // EMA k-means step:
  //   N_k ← γN_k + (1−γ)n_k,  S_k ← γS_k + (1−γ)Σ z,  e_k ← S_k / Laplace(N)_k
  // plus usage_k ← γ usage_k + (1−γ)[n_k > 0].
  void ema_update(const AssignmentBatch& batch) {
    if (batch.dim != dim_) throw DimensionError("ema_update: input width mismatch");
    const double g = ema_.decay;
    std::vector<double> counts(k_, 0.0), sums(k_ * dim_, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto k = static_cast<std::size_t>(batch.chosen[i]);
      if (k >= k_) throw InputError("ema_update: assignment out of range");
      counts[k] += 1.0;
      for (std::size_t c = 0; c < dim_; ++c) sums[k * dim_ + c] += batch.inputs[i * dim_ + c];
    }
    double total = 0.0;
    for (std::size_t k = 0; k < k_; ++k) {
      cluster_size_[k] = g * cluster_size_[k] + (1.0 - g) * counts[k];
      usage_[k] = g * usage_[k] + (1.0 - g) * (counts[k] > 0.0 ? 1.0 : 0.0);
      for (std::size_t c = 0; c < dim_; ++c) {
        embed_sum_[k * dim_ + c] = g * embed_sum_[k * dim_ + c] + (1.0 - g) * sums[k * dim_ + c];
      }
      total += cluster_size_[k];
    }
    const double eps = ema_.laplace;
    for (std::size_t k = 0; k < k_; ++k) {
      const double smoothed =
          (cluster_size_[k] + eps) / (total + static_cast<double>(k_) * eps) * total;
      if (!(smoothed > 0.0)) continue;
      std::vector<double> candidate(dim_);
      for (std::size_t c = 0; c < dim_; ++c) candidate[c] = embed_sum_[k * dim_ + c] / smoothed;
      if (metric_ == Metric::Cosine) {
        const double n = norm(candidate);
        if (!(n > num::kNormEpsilon)) continue;
        for (double& v : candidate) v /= n;
      }
      std::copy(candidate.begin(), candidate.end(), codes_.begin() + static_cast<long>(k * dim_));
    }
  }

  // Replaces every code whose usage EMA is under the stale threshold with a
  // uniformly drawn row of `pool` (rows × d). Returns the number replaced.
  std::size_t expire_stale(std::span<const double> pool, Rng& rng) {
    std::vector<std::size_t> stale;
    const double thr = stale_threshold();
    for (std::size_t k = 0; k < k_; ++k)
      if (usage_[k] < thr) stale.push_back(k);
    if (stale.empty()) return 0;
    if (pool.empty() || pool.size() % dim_ != 0) {
      throw ConfigError("expire_stale: replacement pool is empty or ragged");
    }
    const std::size_t rows = pool.size() / dim_;
    std::size_t replaced = 0;
    for (std::size_t k : stale) {
      const auto row = pool.subspan(uniform_index(rng, rows) * dim_, dim_);
      std::vector<double> candidate(row.begin(), row.end());
      if (metric_ == Metric::Cosine) {
        const double n = norm(candidate);
        if (!(n > num::kNormEpsilon)) continue;
        for (double& v : candidate) v /= n;
      }
      std::copy(candidate.begin(), candidate.end(), codes_.begin() + static_cast<long>(k * dim_));
      std::copy(candidate.begin(), candidate.end(),
                embed_sum_.begin() + static_cast<long>(k * dim_));
      cluster_size_[k] = 1.0;
      usage_[k] = 1.0;
      ++replaced;
    }
    return replaced;
  }

  bool expiry_due(long step) const {
    return expiry_.enabled && step > expiry_.warmup && expiry_.every > 0 &&
           step % expiry_.every == 0;
  }

  // Lowest index among the minimizers.
  static int argmin(std::span<const double> d) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.size(); ++k)
      if (d[k] < d[best]) best = k;
    return static_cast<int>(best);
  }

  static std::vector<double> soft_distribution(std::span<const double> distances, double tau) {
    auto lp = log_probabilities(distances, tau);
    for (double& v : lp) v = std::exp(v);
    return lp;
  }

  static std::vector<double> log_probabilities(std::span<const double> distances, double tau) {
    num::require_temperature(tau, "log_probabilities");
    double mx = -std::numeric_limits<double>::infinity();
    for (double d : distances) mx = std::max(mx, -d / tau);
    double s = 0.0;
    for (double d : distances) s += std::exp(-d / tau - mx);
    const double lse = mx + std::log(s);
    std::vector<double> out(distances.size());
    for (std::size_t k = 0; k < distances.size(); ++k) out[k] = -distances[k] / tau - lse;
    return out;
  }

 private:
  static double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }

  void validate_sizes() const {
    if (k_ < 2) throw ConfigError("Codebook: K must be at least 2");
    if (dim_ < 1) throw ConfigError("Codebook: dimension must be at least 1");
  }

  void normalize_all() {
    for (std::size_t k = 0; k < k_; ++k) {
      const double n = norm(code(k));
      if (!(n > num::kNormEpsilon)) throw DegenerateInputError("Codebook: zero code vector");
      for (std::size_t c = 0; c < dim_; ++c) codes_[k * dim_ + c] /= n;
    }
  }

  void reset_statistics() {
    cluster_size_.assign(k_, 1.0);
    embed_sum_ = codes_;
    usage_.assign(k_, 1.0);
  }

  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  Metric metric_ = Metric::Cosine;
  EmaConfig ema_;
  ExpiryConfig expiry_;
  std::vector<double> codes_;
  std::vector<double> cluster_size_;
  std::vector<double> embed_sum_;
  std::vector<double> usage_;
};

// ‖z − sg(e)‖², averaged over rows. Gradient reaches z only.
inline num::Tensor commitment_loss(const num::Tensor& z, const num::Tensor& chosen_codes) {
  if (z.shape() != chosen_codes.shape()) {
    throw DimensionError("commitment_loss: shape mismatch " + num::shape_str(z.shape()) + " vs " +
                         num::shape_str(chosen_codes.shape()));
  }
  const auto diff = num::sub(z, num::stop_gradient(chosen_codes));
  return num::scale(num::sum_squares(diff), 1.0 / static_cast<double>(z.rows()));
}

}  // namespace vqel::vq
