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
#include <string>

#include <benchmark/benchmark.h>

#include "qrng/stats.hpp"

namespace {

qrng::BitSequence fair_bits(std::size_t n) {
  std::mt19937_64 gen(5);
  qrng::BitSequence b(n);
  auto w = b.mutable_words();
  for (auto& x : w) x = gen();
  if (n % 64 != 0) w.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  return b;
}

void BM_NistTest(benchmark::State& state) {
  static const qrng::BitSequence bits = fair_bits(1'000'000);
  const std::string_view id = qrng::kTestIds[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(std::string(id));
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrng::run_test(id, bits));
  }
}
BENCHMARK(BM_NistTest)->DenseRange(0, 7)->Unit(benchmark::kMillisecond);

void BM_Autocorr(benchmark::State& state) {
  static const qrng::BitSequence bits = fair_bits(10'000'000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrng::autocorr(bits, 100));
  }
}
BENCHMARK(BM_Autocorr)->Unit(benchmark::kMillisecond);

}  // namespace
