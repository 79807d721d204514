#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "vqel/error.hpp"
#include "vqel/numcore.hpp"
#include "vqel/rng.hpp"

namespace vqel::data {

inline constexpr std::size_t kAttributes = 4;
inline constexpr std::size_t kValues = 10;
inline constexpr std::size_t kEncodingWidth = kAttributes * kValues;
inline constexpr std::size_t kObjectCount = 10000;

using Attributes = std::array<int, kAttributes>;

struct ObjectRecord {
  Attributes attributes{};
  std::array<double, kEncodingWidth> one_hot{};
  int id = 0;
};

// id is the base-10 number whose digits are the attributes, most significant first.
inline Attributes attributes_of(int id) {
  if (id < 0 || id >= static_cast<int>(kObjectCount)) {
    throw InputError("object id " + std::to_string(id) + " out of range");
  }
  Attributes a{};
  for (int pos = static_cast<int>(kAttributes) - 1; pos >= 0; --pos) {
    a[static_cast<std::size_t>(pos)] = id % 10;
    id /= 10;
  }
  return a;
}

inline int id_of(const Attributes& a) {
  int id = 0;
  for (int v : a) {
    if (v < 0 || v >= static_cast<int>(kValues)) throw InputError("attribute value out of range");
    id = id * 10 + v;
  }
  return id;
}

inline std::array<double, kEncodingWidth> encode(const Attributes& a) {
  std::array<double, kEncodingWidth> out{};
  for (std::size_t i = 0; i < kAttributes; ++i) out[i * kValues + static_cast<std::size_t>(a[i])] = 1.0;
  return out;
}

// Inverse of encode; rejects anything that is not four one-hot blocks.
inline Attributes decode(std::span<const double> one_hot) {
  if (one_hot.size() != kEncodingWidth) throw InputError("encoding must have 40 entries");
  Attributes a{};
  for (std::size_t i = 0; i < kAttributes; ++i) {
    int hot = -1;
    for (std::size_t v = 0; v < kValues; ++v) {
      const double e = one_hot[i * kValues + v];
      if (e == 1.0 && hot < 0) {
        hot = static_cast<int>(v);
      } else if (e != 0.0) {
        throw InputError("block " + std::to_string(i) + " is not one-hot");
      }
    }
    if (hot < 0) throw InputError("block " + std::to_string(i) + " has no active value");
    a[i] = hot;
  }
  return a;
}

inline ObjectRecord make_object(int id) {
  ObjectRecord r;
  r.id = id;
  r.attributes = attributes_of(id);
  r.one_hot = encode(r.attributes);
  return r;
}

// The full 10^4 Cartesian product, in id order.
inline std::vector<ObjectRecord> generate_objects() {
  std::vector<ObjectRecord> out;
  out.reserve(kObjectCount);
  for (int id = 0; id < static_cast<int>(kObjectCount); ++id) out.push_back(make_object(id));
  return out;
}

struct DatasetSplit {
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;

  const std::vector<int>& part(const std::string& name) const {
    if (name == "train") return train;
    if (name == "valid") return valid;
    if (name == "test") return test;
    throw ConfigError("unknown split part '" + name + "'");
  }
};

// Seeded shuffle of all ids, then 8000/1000/1000.
inline DatasetSplit split(std::uint64_t seed) {
  std::vector<int> ids(kObjectCount);
  std::iota(ids.begin(), ids.end(), 0);
  auto rng = make_stream(seed, 0x5b117);
  std::shuffle(ids.begin(), ids.end(), rng);
  DatasetSplit s;
  s.train.assign(ids.begin(), ids.begin() + 8000);
  s.valid.assign(ids.begin() + 8000, ids.begin() + 9000);
  s.test.assign(ids.begin() + 9000, ids.end());
  return s;
}

inline nlohmann::json split_to_json(const DatasetSplit& s) {
  return {{"train", s.train}, {"valid", s.valid}, {"test", s.test}};
}

inline DatasetSplit split_from_json(const nlohmann::json& j) {
  return {j.at("train").get<std::vector<int>>(), j.at("valid").get<std::vector<int>>(),
          j.at("test").get<std::vector<int>>()};
}

// Target plus distractors. During training every member is also a target
// (in-batch, CLIP style); target_index names the nominal one.
struct CandidateSet {
  std::vector<ObjectRecord> objects;
  std::size_t target_index = 0;

  std::size_t size() const { return objects.size(); }
};

inline num::Tensor one_hot_matrix(std::span<const ObjectRecord> objects) {
  std::vector<double> v;
  v.reserve(objects.size() * kEncodingWidth);
  for (const auto& o : objects) v.insert(v.end(), o.one_hot.begin(), o.one_hot.end());
  return num::Tensor::matrix(objects.size(), kEncodingWidth, std::move(v));
}

inline num::Tensor one_hot_matrix(const CandidateSet& c) { return one_hot_matrix(c.objects); }

// B distinct objects drawn without replacement from `part`.
inline CandidateSet sample_batch(std::span<const int> part, std::size_t batch, Rng& rng) {
  if (batch == 0 || batch > part.size()) {
    throw ConfigError("batch of " + std::to_string(batch) + " from a split of " +
                      std::to_string(part.size()));
  }
  // Partial Fisher-Yates over positions.
  std::vector<std::size_t> pos(part.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  CandidateSet out;
  out.objects.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + uniform_index(rng, part.size() - i);
    std::swap(pos[i], pos[j]);
    out.objects.push_back(make_object(part[pos[i]]));
  }
  out.target_index = uniform_index(rng, batch);
  return out;
}

// Epoch-wise shuffling into consecutive batches; a trailing partial batch is dropped.
class EpochBatcher {
 public:
  EpochBatcher(std::vector<int> ids, std::size_t batch) : ids_(std::move(ids)), batch_(batch) {
    if (batch_ == 0 || batch_ > ids_.size()) {
      throw ConfigError("batch size " + std::to_string(batch_) + " does not fit split of " +
                        std::to_string(ids_.size()));
    }
  }

  std::size_t batches_per_epoch() const { return ids_.size() / batch_; }

  std::vector<CandidateSet> epoch(Rng& rng) {
    std::shuffle(ids_.begin(), ids_.end(), rng);
    std::vector<CandidateSet> out(batches_per_epoch());
    for (std::size_t b = 0; b < out.size(); ++b) {
      out[b].objects.reserve(batch_);
      for (std::size_t i = 0; i < batch_; ++i) out[b].objects.push_back(make_object(ids_[b * batch_ + i]));
    }
    return out;
  }

 private:
  std::vector<int> ids_;
  std::size_t batch_;
};

}  // namespace vqel::data
