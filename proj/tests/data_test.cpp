#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "vqel/data/objects.hpp"

namespace {

using namespace vqel;
using namespace vqel::data;

TEST(Objects, CountAndEndpoints) {
  const auto all = generate_objects();
  ASSERT_EQ(all.size(), 10000u);
  EXPECT_EQ(all.front().attributes, (Attributes{0, 0, 0, 0}));
  EXPECT_EQ(all.back().attributes, (Attributes{9, 9, 9, 9}));
  EXPECT_EQ(all[1234].attributes, (Attributes{1, 2, 3, 4}));
}

TEST(Objects, EveryRecordRoundTrips) {
  const auto all = generate_objects();
  for (int id = 0; id < 10000; ++id) {
    const auto& r = all[static_cast<std::size_t>(id)];
    ASSERT_EQ(r.id, id);
    int ones = 0;
    for (std::size_t b = 0; b < kAttributes; ++b) {
      double block = 0.0;
      for (std::size_t v = 0; v < kValues; ++v) block += r.one_hot[b * kValues + v];
      ASSERT_EQ(block, 1.0);
    }
    for (double e : r.one_hot) ones += e == 1.0 ? 1 : 0;
    ASSERT_EQ(ones, 4);
    ASSERT_EQ(decode(r.one_hot), r.attributes);
    ASSERT_EQ(id_of(r.attributes), id);
  }
}

TEST(Objects, RejectsBadInput) {
  EXPECT_THROW(attributes_of(10000), InputError);
  EXPECT_THROW(attributes_of(-1), InputError);
  EXPECT_THROW(id_of({0, 10, 0, 0}), InputError);
  auto enc = encode({1, 2, 3, 4});
  enc[5] = 1.0;
  EXPECT_THROW(decode(enc), InputError);
  enc = encode({1, 2, 3, 4});
  enc[1] = 0.0;
  EXPECT_THROW(decode(enc), InputError);
}

TEST(Split, IsAnExactPartition) {
  const auto s = split(2024);
  EXPECT_EQ(s.train.size(), 8000u);
  EXPECT_EQ(s.valid.size(), 1000u);
  EXPECT_EQ(s.test.size(), 1000u);
  std::vector<int> all;
  for (const auto* p : {&s.train, &s.valid, &s.test}) all.insert(all.end(), p->begin(), p->end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(all[static_cast<std::size_t>(i)], i);
}

TEST(Split, SeededAndReproducible) {
  const auto a = split(7), b = split(7), c = split(8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, JsonRoundTrip) {
  const auto s = split(3);
  const auto back = split_from_json(split_to_json(s));
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.valid, s.valid);
  EXPECT_EQ(back.test, s.test);
  EXPECT_THROW(s.part("holdout"), ConfigError);
}

TEST(SampleBatch, DistinctMembersFromPart) {
  const auto s = split(1);
  auto rng = make_stream(5, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto c = sample_batch(s.valid, 32, rng);
    ASSERT_EQ(c.size(), 32u);  // 31 distractors per target
    std::set<int> ids;
    for (const auto& o : c.objects) {
      ids.insert(o.id);
      ASSERT_TRUE(std::find(s.valid.begin(), s.valid.end(), o.id) != s.valid.end());
    }
    ASSERT_EQ(ids.size(), 32u);
    ASSERT_LT(c.target_index, 32u);
  }
}

TEST(SampleBatch, RejectsOversizeBatch) {
  std::vector<int> part{1, 2, 3};
  auto rng = make_stream(0, 0);
  EXPECT_THROW(sample_batch(part, 4, rng), ConfigError);
  EXPECT_THROW(sample_batch(part, 0, rng), ConfigError);
  EXPECT_NO_THROW(sample_batch(part, 3, rng));
}

// Each of n items appears in a batch with probability B/n; counts over
// 10^4 batches are binomial.
TEST(SampleBatch, UniformFrequency) {
  std::vector<int> part(200);
  for (int i = 0; i < 200; ++i) part[static_cast<std::size_t>(i)] = i * 37;
  auto rng = make_stream(11, 3);
  const int batches = 10000;
  const std::size_t B = 20;
  std::vector<int> count(10000, 0);
  for (int i = 0; i < batches; ++i)
    for (const auto& o : sample_batch(part, B, rng).objects) ++count[static_cast<std::size_t>(o.id)];
  const double p = static_cast<double>(B) / 200.0;
  const double mean = batches * p;
  const double sigma = std::sqrt(batches * p * (1.0 - p));
  int outside = 0;
  for (int id : part) outside += std::abs(count[static_cast<std::size_t>(id)] - mean) > 3.0 * sigma ? 1 : 0;
  // 200 cells at 3σ: about 0.5 expected outside.
  EXPECT_LE(outside, 3);
}

TEST(EpochBatcher, CoversSplitOncePerEpoch) {
  const auto s = split(4);
  EpochBatcher batcher(s.valid, 32);
  EXPECT_EQ(batcher.batches_per_epoch(), 31u);
  auto rng = make_stream(2, 2);
  const auto first = batcher.epoch(rng);
  std::set<int> seen;
  for (const auto& b : first) {
    ASSERT_EQ(b.size(), 32u);
    for (const auto& o : b.objects) ASSERT_TRUE(seen.insert(o.id).second);
  }
  EXPECT_EQ(seen.size(), 992u);
  const auto second = batcher.epoch(rng);
  EXPECT_NE(first[0].objects[0].id * 10000 + first[0].objects[1].id,
            second[0].objects[0].id * 10000 + second[0].objects[1].id);
  EXPECT_THROW(EpochBatcher({1, 2}, 3), ConfigError);
}

TEST(OneHotMatrix, RowsAreEncodings) {
  const std::vector<ObjectRecord> objs{make_object(42), make_object(9001)};
  const auto m = one_hot_matrix(objs);
  ASSERT_EQ(m.shape(), (num::Shape{2, 40}));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 40; ++c) EXPECT_EQ(m.values()[r * 40 + c], objs[r].one_hot[c]);
}

}  // namespace
