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
#include <map>
#include <optional>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qrng/error.hpp"
#include "qrng/rng.hpp"
#include "qrng/stats.hpp"

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

// First 100 binary digits of pi's fractional expansion, the common input of
// the SP 800-22 worked examples.
constexpr std::string_view kPi100 =
    "11001001000011111101101010100010001000010110100011000010001101001100010011000110011000101000"
    "10111000";

BitSequence prng_bits(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  BitSequence b(n);
  auto w = b.mutable_words();
  for (auto& x : w) x = rng();
  if (n % 64 != 0) w.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  return b;
}

// Overlapping m-bit pattern counts with wrap-around, straight from strings.
std::map<std::string, double> patterns(const std::string& s, std::size_t m) {
  std::map<std::string, double> counts;
  const std::string wrapped = s + s.substr(0, m - 1);
  for (std::size_t i = 0; i < s.size(); ++i) counts[wrapped.substr(i, m)] += 1;
  return counts;
}

double psi2(const std::string& s, std::size_t m) {
  if (m == 0) return 0;
  double sum = 0;
  for (const auto& [k, v] : patterns(s, m)) sum += v * v;
  const double n = static_cast<double>(s.size());
  return std::pow(2.0, static_cast<double>(m)) / n * sum - n;
}

double phi_m(const std::string& s, std::size_t m) {
  double sum = 0;
  const double n = static_cast<double>(s.size());
  for (const auto& [k, v] : patterns(s, m)) sum += v / n * std::log(v / n);
  return sum;
}

TEST(Frequency, WorkedExamples) {
  EXPECT_NEAR(frequency_p_value(BitSequence::from_string("1011010101")), 0.5271, 1e-4);
  EXPECT_NEAR(frequency_p_value(BitSequence::from_string("1011010101")),
              std::erfc(2 / std::sqrt(10.0) / std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(run_test("frequency", BitSequence::from_string(kPi100)).p_value, 0.109599, 1e-6);
  EXPECT_EQ(kind_of([] { run_test("frequency", BitSequence::from_string("1011010101")); }),
            ErrorKind::kLength);
}

TEST(NistTests, PiExpansionReferenceValues) {
  const auto pi = BitSequence::from_string(kPi100);
  TestParams p;
  p.block_frequency_m = 10;
  EXPECT_NEAR(run_test("block_frequency", pi, 0.01, p).p_value, 0.706438, 1e-6);
  EXPECT_NEAR(run_test("runs", pi).p_value, 0.500798, 1e-6);
  EXPECT_NEAR(run_test("cumulative_sums_fwd", pi).p_value, 0.219194, 1e-6);
  EXPECT_NEAR(run_test("cumulative_sums_rev", pi).p_value, 0.114866, 1e-6);
}

TEST(NistTests, LongestRunReferenceValue) {
  const auto bits = BitSequence::from_string(
      "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101"
      "011111001100111001101101100010110010");
  EXPECT_NEAR(run_test("longest_run", bits).p_value, 0.180609, 1e-5);
}

TEST(NistTests, SerialAndApproximateEntropyMatchClosedForms) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BitSequence bits = prng_bits(4096 + seed * 37, seed, 7);
    const std::string s = bits.to_string();
    const double d1 = psi2(s, 2) - psi2(s, 1);
    const double d2 = psi2(s, 2) - 2 * psi2(s, 1) + psi2(s, 0);
    // m = 2: Q(1, x/2) = exp(-x/2) and Q(1/2, x/2) = erfc(sqrt(x/2)).
    const auto serial = run_test("serial", bits);
    EXPECT_NEAR(serial.p_value, std::exp(-d1 / 2), 1e-9);
    ASSERT_EQ(serial.aux.size(), 1u);
    EXPECT_NEAR(serial.aux[0], std::erfc(std::sqrt(d2 / 2)), 1e-9);

    const double n = static_cast<double>(s.size());
    const double chi2 = 2 * n * (std::log(2.0) - (phi_m(s, 2) - phi_m(s, 3)));
    // Q(2, x/2) = exp(-x/2) (1 + x/2).
    EXPECT_NEAR(run_test("approximate_entropy", bits).p_value,
                std::exp(-chi2 / 2) * (1 + chi2 / 2), 1e-9);
  }
}

TEST(NistTests, LengthAndIdErrors) {
  EXPECT_EQ(kind_of([] { run_test("longest_run", BitSequence(127)); }), ErrorKind::kLength);
  EXPECT_EQ(kind_of([] { run_test("serial", prng_bits(31, 1, 1)); }), ErrorKind::kLength);
  EXPECT_EQ(kind_of([] { run_test("approximate_entropy", prng_bits(200, 1, 1)); }),
            ErrorKind::kLength);
  EXPECT_EQ(kind_of([] { run_test("dft", prng_bits(1000, 1, 1)); }), ErrorKind::kParameter);
}

TEST(NistTests, RunsOnAllOnesFailsPreTest) {
  BitSequence ones(1000);
  for (std::size_t i = 0; i < ones.size(); ++i) ones.set(i, true);
  const auto r = run_test("runs", ones);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_FALSE(r.pass);
}

TEST(NistTests, SelfConsistentUniformityOnPrngSequences) {
  constexpr std::size_t kSequences = 1000;
  std::map<std::string, std::vector<double>> p;
  for (std::size_t s = 0; s < kSequences; ++s) {
    const BitSequence bits = prng_bits(20'000, 99, s);
    for (const auto id : kTestIds) {
      p[std::string(id)].push_back(run_test(id, bits).p_value);
    }
  }
  for (const auto id : kTestIds) {
    const auto& v = p[std::string(id)];
    EXPECT_GE(pvalue_uniformity(v), kUniformityThreshold) << id;
    std::size_t passed = 0;
    for (double x : v) passed += x >= 0.01 ? 1 : 0;
    const auto [lo, hi] = proportion_range(kSequences, 0.01);
    const double prop = static_cast<double>(passed) / kSequences;
    EXPECT_TRUE(prop >= lo && prop <= hi) << id << " proportion " << prop;
  }
}

TEST(Uniformity, Examples) {
  std::vector<double> flat;
  for (int bin = 0; bin < 10; ++bin) {
    for (int k = 0; k < 8; ++k) flat.push_back(bin / 10.0 + 0.05);
  }
  EXPECT_DOUBLE_EQ(pvalue_uniformity(flat), 1.0);
  const std::vector<double> lumped(80, 0.55);
  EXPECT_NEAR(720.0, (72.0 * 72 + 9 * 64) / 8, 1e-12);
  EXPECT_LT(pvalue_uniformity(lumped), 1e-100);
  EXPECT_NEAR(pvalue_uniformity(lumped), igamc(4.5, 360.0), 1e-300);
  EXPECT_EQ(kind_of([&] { pvalue_uniformity(std::span(lumped).first(54)); }),
            ErrorKind::kSampleSize);
  EXPECT_NO_THROW(pvalue_uniformity_unchecked(std::span(lumped).first(20)));
}

TEST(Uniformity, IncompleteGammaClosedForms) {
  for (double x : {0.1, 1.0, 3.7, 12.0}) {
    EXPECT_NEAR(igamc(1.0, x), std::exp(-x), 1e-14);
    EXPECT_NEAR(igamc(0.5, x), std::erfc(std::sqrt(x)), 1e-14);
  }
  EXPECT_EQ(igamc(4.5, 0.0), 1.0);
}

TEST(ProportionRange, PublishedValues) {
  const auto [lo80, hi80] = proportion_range(80, 0.01);
  EXPECT_NEAR(lo80, 0.9566, 5e-5);
  EXPECT_NEAR(hi80, 1.0234, 5e-5);
  const auto [lo46, hi46] = proportion_range(46, 0.01);
  EXPECT_NEAR(lo46, 0.9460, 5e-5);
  EXPECT_NEAR(hi46, 1.0340, 5e-5);
  const auto [lo, hi] = proportion_range(1'000'000'000, 0.01);
  EXPECT_NEAR(lo, 0.99, 1e-5);
  EXPECT_NEAR(hi, 0.99, 1e-5);
  double last_width = 1e9;
  for (std::size_t n = 1; n < 2000; n += 7) {
    const auto r = proportion_range(n, 0.01);
    EXPECT_LT(r.second - r.first, last_width);
    last_width = r.second - r.first;
  }
}

TEST(Autocorr, Examples) {
  BitSequence alt(2000);
  for (std::size_t i = 1; i < alt.size(); i += 2) alt.set(i, true);
  const auto a = autocorr(alt, 10);
  EXPECT_NEAR(a[0], -1.0, 2e-3);
  EXPECT_NEAR(a[1], 1.0, 2e-3);

  BitSequence half = prng_bits(500, 5, 5);
  BitSequence twice = half;
  twice.append(half);
  EXPECT_NO_THROW(autocorr(twice, 99));
  EXPECT_EQ(kind_of([&] { autocorr(twice, 100); }), ErrorKind::kLength);
  BitSequence longer = twice;
  for (int k = 0; k < 4; ++k) longer.append(longer);  // period 500
  EXPECT_GT(autocorr(longer, 500)[499], 0.95);

  EXPECT_EQ(kind_of([] { autocorr(BitSequence(5000), 10); }), ErrorKind::kDomain);
}

TEST(Autocorr, MatchesDefinition) {
  const BitSequence bits = oracle::bernoulli_bits(3001, 0.3, 44);
  const auto a = autocorr(bits, 50);
  double mean = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) mean += bits[i];
  mean /= static_cast<double>(bits.size());
  double den = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) den += (bits[i] - mean) * (bits[i] - mean);
  for (std::size_t k = 1; k <= 50; ++k) {
    double num = 0;
    for (std::size_t i = 0; i + k < bits.size(); ++i) num += (bits[i] - mean) * (bits[i + k] - mean);
    ASSERT_NEAR(a[k - 1], num / den, 1e-10) << k;
  }
}

TEST(Autocorr, NullTailFraction) {
  const std::size_t n = 1'000'000;
  const auto a = autocorr(prng_bits(n, 123, 0), 100);
  std::size_t over = 0;
  for (double x : a) over += std::abs(x) > 2.0 / std::sqrt(static_cast<double>(n)) ? 1 : 0;
  EXPECT_GE(over, 1u);
  EXPECT_LE(over, 15u);
}

TEST(Battery, BiasedSourceFailsFrequency) {
  const auto bits = oracle::bernoulli_bits(20 * 100'000, 0.7, 3);
  const auto r = run_battery(bits, 20, 100'000);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.tests.size(), kTestIds.size());
  EXPECT_EQ(r.tests[0].test_id, "frequency");
  EXPECT_LT(r.tests[0].proportion, r.range.first);
  EXPECT_EQ(r.range, proportion_range(20, 0.01));
  EXPECT_FALSE(r.tests[0].uniformity_reliable);
}

TEST(Battery, FairSourcePassesAndErrors) {
  const auto bits = prng_bits(20 * 100'000 + 17, 8, 8);
  const auto r = run_battery(bits, 20, 100'000);
  EXPECT_TRUE(r.pass);
  for (const auto& t : r.tests) {
    EXPECT_EQ(t.p_values.size(), 20u);
    EXPECT_TRUE(t.proportion_ok) << t.test_id;
  }
  EXPECT_EQ(kind_of([&] { run_battery(bits, 21, 100'000); }), ErrorKind::kInsufficientData);
}

TEST(Export, Formats) {
  const auto bits = BitSequence::from_string("101");
  const auto ascii = export_bits(bits, ExportFormat::kAscii01);
  EXPECT_EQ(std::string(ascii.begin(), ascii.end()), "101");
  EXPECT_EQ(export_bits(bits, ExportFormat::kRawPacked), std::vector<std::uint8_t>{0xA0});
  EXPECT_EQ(parse_export_format("ascii01"), ExportFormat::kAscii01);
  EXPECT_EQ(kind_of([] { parse_export_format("hex"); }), ErrorKind::kParameter);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 1000u, 100'003u}) {
    const auto b = prng_bits(n, 3, n);
    for (auto f : {ExportFormat::kRawPacked, ExportFormat::kAscii01}) {
      const auto bytes = export_bits(b, f);
      ASSERT_EQ(import_bits(bytes, f, n), b);
    }
  }
}

}  // namespace
}  // namespace qrng
