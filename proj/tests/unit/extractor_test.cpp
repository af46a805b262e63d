// Copyright 2026 The qrng-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <optional>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qrng/error.hpp"
#include "qrng/extractor.hpp"
#include "qrng/gf2_poly.hpp"

namespace qrng {
namespace {

std::optional<ErrorKind> kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

std::vector<int> to_ints(const BitSequence& b) {
  std::vector<int> v(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) v[i] = b[i];
  return v;
}

BitSequence random_bits(std::size_t n, std::mt19937_64& gen) {
  BitSequence b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, gen() & 1u);
  return b;
}

ExtractorParams params_for(std::size_t n, std::size_t m, BitSequence seed) {
  ExtractorParams p;
  p.n = n;
  p.m = m;
  p.seed = std::move(seed);
  return p;
}

TEST(Gf2, ClmulMatchesShiftAndXor) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t a = gen();
    const std::uint64_t b = gen();
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    for (int k = 0; k < 64; ++k) {
      if ((b >> k) & 1u) {
        lo ^= a << k;
        hi ^= k == 0 ? 0 : a >> (64 - k);
      }
    }
    const gf2::Wide w = gf2::clmul(a, b);
    ASSERT_EQ(w.lo, lo);
    ASSERT_EQ(w.hi, hi);
  }
}

TEST(Gf2, ProductAndWindowMatchSchoolbook) {
  std::mt19937_64 gen(4);
  for (std::size_t na : {1u, 3u, 17u, 80u, 81u, 160u, 333u, 1000u}) {
    for (std::size_t nb : {1u, 2u, 40u, 81u, 257u, 700u}) {
      std::vector<std::uint64_t> a(na);
      std::vector<std::uint64_t> b(nb);
      for (auto& w : a) w = gen();
      for (auto& w : b) w = gen();
      std::vector<std::uint64_t> ref(na + nb);
      gf2::multiply_schoolbook(a, b, ref);
      ASSERT_EQ(gf2::multiply(a, b), ref) << na << "x" << nb;
      for (int t = 0; t < 4; ++t) {
        const std::size_t first = gen() % (na + nb);
        const std::size_t count = 1 + gen() % (na + nb - first);
        const auto w = gf2::product_window(a, b, first, count);
        ASSERT_EQ(w, std::vector<std::uint64_t>(ref.begin() + first, ref.begin() + first + count))
            << na << "x" << nb << " window " << first << "+" << count;
      }
    }
  }
}

TEST(Toeplitz, Examples) {
  EXPECT_EQ(toeplitz_extract(BitSequence::from_string("1"), params_for(1, 1, BitSequence::from_string("1"))),
            BitSequence::from_string("1"));
  // Explicit 3x4 matrix rows seed[2..5], seed[1..4], seed[0..3] against x = 1011.
  const auto seed = BitSequence::from_string("110101");
  const auto x = BitSequence::from_string("1011");
  const auto y = toeplitz_extract(x, params_for(4, 3, seed));
  EXPECT_EQ(y, BitSequence::from_string("100"));
  EXPECT_EQ(to_ints(y), oracle::naive_toeplitz(to_ints(seed), to_ints(x), 3));
  EXPECT_EQ(toeplitz_extract(x, params_for(4, 3, BitSequence(6))), BitSequence(3));
}

TEST(Toeplitz, ParameterErrors) {
  EXPECT_EQ(kind_of([] { toeplitz_extract(BitSequence(5), params_for(4, 3, BitSequence(6))); }),
            ErrorKind::kParameter);
  EXPECT_EQ(kind_of([] { toeplitz_extract(BitSequence(4), params_for(4, 3, BitSequence(5))); }),
            ErrorKind::kParameter);
  EXPECT_EQ(kind_of([] { toeplitz_extract(BitSequence(4), params_for(4, 5, BitSequence(8))); }),
            ErrorKind::kParameter);
  EXPECT_EQ(kind_of([] { toeplitz_extract(BitSequence(4), params_for(4, 0, BitSequence(3))); }),
            ErrorKind::kParameter);
}

TEST(Toeplitz, MatchesNaiveOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % (trial < 900 ? 300 : 5000);
    const std::size_t m = 1 + gen() % n;
    const BitSequence seed = random_bits(n + m - 1, gen);
    const BitSequence x = random_bits(n, gen);
    const BitSequence y = toeplitz_extract(x, params_for(n, m, seed));
    ASSERT_EQ(to_ints(y), oracle::naive_toeplitz(to_ints(seed), to_ints(x), m))
        << "n=" << n << " m=" << m;
  }
}

TEST(Toeplitz, LinearAndDeterministic) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1000 + gen() % 20000;
    const std::size_t m = 1 + gen() % n;
    const ExtractorParams p = params_for(n, m, random_bits(n + m - 1, gen));
    const BitSequence x1 = random_bits(n, gen);
    const BitSequence x2 = random_bits(n, gen);
    BitSequence sum(n);
    for (std::size_t i = 0; i < n; ++i) sum.set(i, x1[i] ^ x2[i]);
    const ToeplitzHasher h(p);
    const BitSequence y1 = h.hash(x1);
    const BitSequence y2 = h.hash(x2);
    BitSequence expect(m);
    for (std::size_t i = 0; i < m; ++i) expect.set(i, y1[i] ^ y2[i]);
    ASSERT_EQ(h.hash(sum), expect);
    ASSERT_EQ(toeplitz_extract(x1, p), y1);
  }
}

TEST(OutputLength, Examples) {
  EXPECT_EQ(output_length(1'000'000, 0.99, 0x1.0p-50), 989'900u);
  EXPECT_EQ(output_length(1'000'000, 1.0, 1.0), 1'000'000u);
  EXPECT_EQ(kind_of([] { output_length(200, 0.5, 0x1.0p-50); }), ErrorKind::kBlockTooSmall);
  EXPECT_EQ(kind_of([] { output_length(1000, 0.5, 0.0); }), ErrorKind::kParameter);
  EXPECT_EQ(kind_of([] { output_length(1000, 0.5, 2.0); }), ErrorKind::kParameter);
}

TEST(MinEntropy, Examples) {
  BitSequence balanced(20'000);
  for (std::size_t i = 0; i < balanced.size(); i += 2) balanced.set(i, true);
  EXPECT_DOUBLE_EQ(min_entropy(balanced).h_min_per_bit, 1.0);

  const auto biased = oracle::bernoulli_bits(1'000'000, 0.6, 5);
  EXPECT_NEAR(min_entropy(biased).h_min_per_bit, -std::log2(0.6), 0.005);
  EXPECT_NEAR(min_entropy(biased).p_max, 0.6, 0.002);

  const auto flat = min_entropy(BitSequence(50'000));
  EXPECT_EQ(flat.h_min_per_bit, 0.0);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_EQ(kind_of([] { min_entropy(BitSequence(100)); }), ErrorKind::kLength);
}

TEST(MinEntropy, PerBlockMinimumSeesLocalBias) {
  BitSequence bits = oracle::bernoulli_bits(2'000'000, 0.5, 8);
  bits.append(oracle::bernoulli_bits(1'000'000, 0.7, 9));
  const auto r = min_entropy(bits);
  EXPECT_NEAR(r.per_block_min, -std::log2(0.7), 0.01);
  EXPECT_GT(r.h_min_per_bit, r.per_block_min);
}

TEST(ExtractStream, BalanceRestoration) {
  const auto raw = oracle::bernoulli_bits(2'000'000, 0.6, 21);
  const auto seed = oracle::bernoulli_bits(2'000'000, 0.5, 22);
  const auto out = extract_stream(raw, 0x1.0p-50, 1'000'000, seed);
  ASSERT_GE(out.bits.size(), 1'000'000u);
  const double n = static_cast<double>(out.bits.size());
  const double z = (2.0 * static_cast<double>(out.bits.count_ones()) - n) / std::sqrt(n);
  EXPECT_LT(std::abs(z), 4.0);
  EXPECT_NEAR(out.report.ratio, out.report.h_min, 1e-3);
  EXPECT_EQ(out.report.blocks, 2u);
}

TEST(ExtractStream, RatioDeterminismAndErrors) {
  const auto raw = oracle::bernoulli_bits(3'500'000, 0.5, 31);
  const auto seed = os_entropy_bits(2'000'000);
  const auto a = extract_stream(raw, 0x1.0p-50, 1'000'000, seed, 2.0);
  const auto b = extract_stream(raw, 0x1.0p-50, 1'000'000, seed, 2.0);
  EXPECT_EQ(a.bits, b.bits);
  EXPECT_GE(a.report.ratio, 0.97);
  EXPECT_EQ(a.report.blocks, 3u);
  EXPECT_EQ(a.report.bits_in, 3'000'000u);
  EXPECT_EQ(a.bits.size(), 3 * a.report.m);
  EXPECT_NEAR(a.report.mbps, static_cast<double>(a.bits.size()) / 2.0 / 1e6, 1e-12);

  // Each output block is the Toeplitz hash of its input block.
  ExtractorParams p = params_for(a.report.n, a.report.m, seed.slice(0, a.report.n + a.report.m - 1));
  EXPECT_EQ(a.bits.slice(a.report.m, a.report.m), toeplitz_extract(raw.slice(1'000'000, 1'000'000), p));

  EXPECT_EQ(kind_of([&] { extract_stream(raw.slice(0, 999'999), 0x1.0p-50, 1'000'000, seed); }),
            ErrorKind::kLength);
  EXPECT_EQ(kind_of([&] { extract_stream(raw, 0x1.0p-50, 1'000'000, seed.slice(0, 1000)); }),
            ErrorKind::kSeed);
}

TEST(ExtractStream, OsEntropyLength) {
  EXPECT_EQ(os_entropy_bits(12345).size(), 12345u);
  EXPECT_NE(os_entropy_bits(256), os_entropy_bits(256));
}

}  // namespace
}  // namespace qrng
