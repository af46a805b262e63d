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

#include <benchmark/benchmark.h>

#include "qrng/certifier.hpp"
#include "qrng/source.hpp"

namespace {

void BM_GenerateEvents(benchmark::State& state) {
  qrng::SourceConfig s;
  s.pair_rate_coeff = static_cast<double>(state.range(0));
  s.dark_rate_hz.fill(1e4);
  s.duration_ps = qrng::kPicosPerSecond / 4;
  s.analyzer_schedule = qrng::chsh_schedule({}, 1'000'000'000);
  std::size_t tags = 0;
  for (auto _ : state) {
    const auto stream = qrng::generate_events(s);
    tags += stream.size();
  }
  state.counters["tags/s"] =
      benchmark::Counter(static_cast<double>(tags), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GenerateEvents)->Arg(1'000'000)->Arg(10'000'000)->Unit(benchmark::kMillisecond);

}  // namespace
