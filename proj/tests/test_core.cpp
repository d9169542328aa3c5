#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <set>

#include "rtbyz/core.hpp"
#include "rtbyz/rng.hpp"
#include "rtbyz/signature_set.hpp"

using namespace rtbyz;

TEST(InstanceKey, Projection) {
  auto p = make_payload(pid(3), 7, "a");
  EXPECT_EQ(instance_key(*p), (InstanceKey{pid(3), 7}));
  auto z = make_payload(pid(0), 0, "");
  EXPECT_EQ(z->key(), (InstanceKey{pid(0), 0}));
}

TEST(InstanceKey, ValueDoesNotMatter) {
  auto a = make_payload(pid(2), 5, "x");
  auto b = make_payload(pid(2), 5, "y");
  EXPECT_EQ(a->key(), b->key());
  EXPECT_NE(a->digest(), b->digest());
}

TEST(CanonicalEncoding, Layout) {
  const Bytes v{0xaa, 0xbb};
  const Bytes enc = canonical_encoding(pid(0x0102), 0x0304, v);
  const Bytes expect{0, 0, 0, 0, 0, 0, 0x01, 0x02, 0, 0, 0, 0, 0, 0, 0x03, 0x04, 0xaa, 0xbb};
  EXPECT_EQ(enc, expect);
}

TEST(CanonicalEncoding, NoAmbiguityBetweenFields) {
  // Same concatenated bytes would appear if fields were not fixed-width.
  auto a = make_payload(pid(1), 23, "");
  auto b = make_payload(pid(12), 3, "");
  EXPECT_NE(a->digest(), b->digest());
}

TEST(Quorum, Examples) {
  EXPECT_EQ(quorum_size(SystemParams::make(4, 6)), 3u);
  EXPECT_EQ(quorum_size(SystemParams::make(6, 6, 1)), 4u);
}

TEST(Quorum, OverprovisionedShrinksWithDetections) {
  // n = 3f+rep+1 with f=2, rep=3.
  const auto p = SystemParams::make(10, 6, 3);
  ASSERT_EQ(p.f, 2u);
  // Hand trace: 2f+1+rep, then one less per detected crash, floor 2f+1.
  const std::uint32_t expect[] = {8, 7, 6, 5, 5, 5};
  for (std::uint32_t d = 0; d < 6; ++d) EXPECT_EQ(quorum_size(p, d), expect[d]) << d;
}

TEST(Params, Validation) {
  EXPECT_EQ(max_faulty(4, 0), 1u);
  EXPECT_EQ(max_faulty(10, 0), 3u);
  EXPECT_EQ(max_faulty(200, 0), 66u);
  EXPECT_EQ(max_faulty(6, 2), 1u);
  EXPECT_THROW(SystemParams::make(4, 1), ParamError);  // R < 2k+2
  EXPECT_THROW(SystemParams::make(4, 6, 0, 3), ParamError);
  EXPECT_NO_THROW(SystemParams::make(4, 8, 0, 3));
  SystemParams bad;
  bad.n = 4;
  bad.f = 2;
  EXPECT_THROW(bad.validate(), ParamError);
}

// Any two quorums of n = 3f+1 share at least f+1 processes.
TEST(Quorum, ExhaustiveIntersection) {
  for (std::uint32_t n = 1; n <= 10; ++n) {
    const auto params = SystemParams::make(n, 6);
    const std::uint32_t q = quorum_size(params);
    if (n != 3 * params.f + 1) continue;
    std::vector<std::uint32_t> sets;
    for (std::uint32_t m = 0; m < (1U << n); ++m)
      if (static_cast<std::uint32_t>(std::popcount(m)) == q) sets.push_back(m);
    std::uint32_t worst = n;
    for (auto a : sets)
      for (auto b : sets) worst = std::min(worst, static_cast<std::uint32_t>(std::popcount(a & b)));
    EXPECT_GE(worst, params.f + 1) << "n=" << n;
  }
}

namespace {

Signature sig_of(std::uint8_t b) {
  Signature s{};
  s.fill(b);
  return s;
}

SignatureSet random_set(SplitMix& rng) {
  SignatureSet s;
  const auto k = rng.below(6);
  for (std::uint64_t i = 0; i < k; ++i)
    s.insert(pid(static_cast<std::uint32_t>(rng.below(8))), sig_of(static_cast<std::uint8_t>(rng.below(3))));
  return s;
}

}  // namespace

TEST(SignatureSet, Basics) {
  SignatureSet s;
  EXPECT_TRUE(s.insert(pid(3), sig_of(1)));
  EXPECT_TRUE(s.insert(pid(1), sig_of(2)));
  EXPECT_FALSE(s.insert(pid(3), sig_of(1)));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.signers(), (std::vector<ProcessId>{pid(1), pid(3)}));
  EXPECT_EQ(s.count_excluding(pid(3)), 1u);
  EXPECT_EQ(s.count_excluding(pid(9)), 2u);
  EXPECT_EQ(s.truncated(1).signers(), (std::vector<ProcessId>{pid(1)}));
  s.erase(pid(1));
  EXPECT_FALSE(s.contains(pid(1)));
}

TEST(SignatureSet, ConflictKeepsSmaller) {
  SignatureSet a;
  a.insert(pid(0), sig_of(5));
  a.insert(pid(0), sig_of(2));
  EXPECT_EQ(a.find(pid(0))->sig, sig_of(2));
  a.insert(pid(0), sig_of(9));
  EXPECT_EQ(a.find(pid(0))->sig, sig_of(2));
}

TEST(SignatureSet, UnionAlgebra) {
  SplitMix rng(42);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_set(rng);
    const auto b = random_set(rng);
    const auto c = random_set(rng);
    EXPECT_EQ(set_union(a, b), set_union(b, a));
    EXPECT_EQ(set_union(set_union(a, b), c), set_union(a, set_union(b, c)));
    EXPECT_EQ(set_union(a, a), a);
    // Oracle: signer set of the union is the plain set union of signers.
    std::set<ProcessId> flat;
    for (const auto& e : a) flat.insert(e.signer);
    for (const auto& e : b) flat.insert(e.signer);
    EXPECT_EQ(set_union(a, b).size(), flat.size());
  }
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(7, a, b));
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
}

TEST(Rng, UnitRange) {
  SplitMix rng(1);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}
