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
#include "qrng/coincidence.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/source.hpp"

namespace {

qrng::TagStream busy_stream() {
  qrng::SourceConfig s;
  s.pair_rate_coeff = 6e6;
  s.dark_rate_hz.fill(1e5);
  s.duration_ps = qrng::kPicosPerSecond;
  s.analyzer_schedule = qrng::chsh_schedule({}, 1'000'000'000);
  return qrng::generate_events(s);
}

void BM_Acquire(benchmark::State& state) {
  static const qrng::TagStream stream = busy_stream();
  qrng::CoincidenceConfig cc;
  cc.window_ps = static_cast<qrng::Picoseconds>(state.range(0));
  for (auto _ : state) {
    auto acq = qrng::acquire(stream, cc);
    benchmark::DoNotOptimize(acq.raw_bits.size());
  }
  state.counters["tags/s"] = benchmark::Counter(static_cast<double>(stream.size()) *
                                                    static_cast<double>(state.iterations()),
                                                benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Acquire)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_CountMatrix(benchmark::State& state) {
  static const qrng::TagStream stream = busy_stream();
  for (auto _ : state) {
    benchmark::DoNotOptimize(qrng::count_matrix(stream, qrng::CoincidenceConfig{}));
  }
  state.counters["tags/s"] = benchmark::Counter(static_cast<double>(stream.size()) *
                                                    static_cast<double>(state.iterations()),
                                                benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CountMatrix)->Unit(benchmark::kMillisecond);

}  // namespace
