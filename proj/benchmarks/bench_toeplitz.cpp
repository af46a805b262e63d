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

#include <random>

#include <benchmark/benchmark.h>

#include "qrng/extractor.hpp"
#include "qrng/gf2_poly.hpp"

namespace {

qrng::BitSequence random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  qrng::BitSequence b(n);
  auto w = b.mutable_words();
  for (auto& x : w) x = gen();
  if (n % 64 != 0) w.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  return b;
}

void BM_ToeplitzBlock(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = n - n / 100;
  qrng::ExtractorParams p;
  p.n = n;
  p.m = m;
  p.seed = random_bits(n + m - 1, 1);
  const qrng::ToeplitzHasher hasher(p);
  const auto x = random_bits(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hasher.hash(x));
  }
  state.counters["out_bps"] = benchmark::Counter(
      static_cast<double>(m) * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ToeplitzBlock)->Arg(1 << 14)->Arg(1 << 17)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Gf2Multiply(benchmark::State& state) {
  const auto words = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(3);
  std::vector<std::uint64_t> a(words);
  std::vector<std::uint64_t> b(words);
  for (auto& x : a) x = gen();
  for (auto& x : b) x = gen();
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrng::gf2::multiply(a, b));
  }
}
BENCHMARK(BM_Gf2Multiply)->RangeMultiplier(4)->Range(16, 16384);

void BM_MinEntropy(benchmark::State& state) {
  const auto bits = random_bits(10'000'000, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrng::min_entropy(bits));
  }
}
BENCHMARK(BM_MinEntropy)->Unit(benchmark::kMillisecond);

}  // namespace
