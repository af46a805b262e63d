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
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qrng/certifier.hpp"
#include "qrng/coincidence.hpp"
#include "qrng/error.hpp"
#include "qrng/source.hpp"

namespace qrng {
namespace {

PerChannel<std::uint64_t> channel_counts(const TagStream& s) {
  PerChannel<std::uint64_t> n{};
  for (const auto& t : s.tags()) {
    ++n[index_of(t.channel)];
  }
  return n;
}

TEST(State, FromHwp) {
  const auto bell = state_from_hwp(22.5);
  EXPECT_NEAR(bell.alpha, 0.70711, 1e-5);
  EXPECT_NEAR(bell.beta, 0.70711, 1e-5);
  EXPECT_EQ(bell.noise_p, 1.0);
  EXPECT_EQ(state_from_hwp(0).alpha, 0.0);
  EXPECT_EQ(state_from_hwp(0).beta, 1.0);
  EXPECT_EQ(state_from_hwp(45).alpha, 1.0);
  EXPECT_EQ(state_from_hwp(45).beta, 0.0);
  EXPECT_THROW(state_from_hwp(46), Error);
  EXPECT_THROW(state_from_hwp(-1), Error);
  EXPECT_THROW((TwoPhotonState{0.9, 0.9, 1.0}.validate()), Error);
}

TEST(State, ProjectionProbabilityExamples) {
  const TwoPhotonState bell;
  EXPECT_NEAR(projection_probability(bell, 0, 0), 0.5, 1e-12);
  EXPECT_NEAR(projection_probability(bell, 45, 45), 0.0, 1e-12);
  TwoPhotonState noisy;
  noisy.noise_p = 0.8;
  EXPECT_NEAR(projection_probability(noisy, 45, 45), 0.05, 1e-12);
}

TEST(State, ProjectionProbabilitiesSumToOne) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const auto s = TwoPhotonState::from_alpha(u(gen), u(gen));
    const double t1 = 360 * u(gen);
    const double t2 = 360 * u(gen);
    const double sum = projection_probability(s, t1, t2) + projection_probability(s, t1 + 90, t2) +
                       projection_probability(s, t1, t2 + 90) +
                       projection_probability(s, t1 + 90, t2 + 90);
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ExpectedRates, DirectFormulas) {
  SourceConfig c;
  c.pair_rate_coeff = 3e6;
  const auto r = expected_rates(c);
  EXPECT_NEAR(r.singles_hz[index_of(Channel::kU1)], 1e6, 1e-6);

  c.det_efficiency.fill(0.5);
  const auto half = expected_rates(c);
  EXPECT_NEAR(half.pair_coincidence_hz[0], 0.25e6, 1e-6);

  SourceConfig fixed;
  fixed.pair_rate_coeff = 3e6;
  fixed.analyzer_schedule.settings = {{0, 0}};
  const auto f = expected_rates(fixed);
  EXPECT_NEAR(f.pair_coincidence_hz[2], 1e6 * 0.5, 1e-6);
}

TEST(Generate, SectionRoutingIsOneThirdEach) {
  SourceConfig c;
  c.pair_rate_coeff = 1e6;
  c.jitter_sigma_ps = 0;
  c.analyzer_schedule.settings = {{0, 0}};
  const TagStream s = generate_events(c);
  const auto n = channel_counts(s);
  const double mean = 1e6 / 3.0;
  // Marginal count of a Poisson-thinned process is Poisson with var = mean.
  const double tol = 4.0 * std::sqrt(mean);
  EXPECT_NEAR(static_cast<double>(n[index_of(Channel::kU1)]), mean, tol);
  EXPECT_NEAR(static_cast<double>(n[index_of(Channel::kU2)]), mean, tol);
  EXPECT_EQ(n[index_of(Channel::kU1)], n[index_of(Channel::kD2)]);
  EXPECT_EQ(n[index_of(Channel::kU2)], n[index_of(Channel::kD1)]);
  // At (0, 0) the Bell state transmits both photons or neither.
  EXPECT_EQ(n[index_of(Channel::kC1)], n[index_of(Channel::kC2)]);
  EXPECT_NEAR(static_cast<double>(n[index_of(Channel::kC1)]), mean / 2,
              4.0 * std::sqrt(mean / 2));
}

TEST(Generate, DarkOnlyLimit) {
  SourceConfig c;
  c.pair_rate_coeff = 0;
  c.dark_rate_hz.fill(1e3);
  const TagStream s = generate_events(c);
  const auto n = channel_counts(s);
  for (Channel ch : kAllChannels) {
    EXPECT_NEAR(static_cast<double>(n[index_of(ch)]), 1e3, 4.0 * std::sqrt(1e3)) << channel_name(ch);
  }
  // Accidentals expected: 2 tau Ra Rb T = 2e-3; anything beyond a few is a bug.
  const auto m = count_matrix(s, CoincidenceConfig{});
  EXPECT_LE(m[index_of(Channel::kU1)][index_of(Channel::kD2)], 3u);
}

TEST(Generate, SamplerMatchesAnalyticRates) {
  SourceConfig c;
  c.pair_rate_coeff = 1e5;
  c.det_efficiency = {0.7, 0.6, 0.8, 0.9, 0.5, 0.75};
  c.dark_rate_hz = {500, 0, 100, 2000, 300, 50};
  c.duration_ps = 20'000'000'000;
  c.analyzer_schedule = chsh_schedule({}, 1'000'000'000);
  const auto expected = expected_rates(c);
  PerChannel<double> total{};
  const int runs = 10;
  for (int r = 0; r < runs; ++r) {
    c.rng_seed = 100 + r;
    const auto n = channel_counts(generate_events(c));
    for (std::size_t k = 0; k < kChannelCount; ++k) {
      total[k] += static_cast<double>(n[k]);
    }
  }
  const double seconds = c.duration_s() * runs;
  for (std::size_t k = 0; k < kChannelCount; ++k) {
    const double mean_count = expected.singles_hz[k] * seconds;
    EXPECT_NEAR(total[k], mean_count, 4.0 * std::sqrt(mean_count)) << "channel " << k;
  }
}

TEST(Generate, DeterministicAndSeedSensitive) {
  SourceConfig c;
  c.pair_rate_coeff = 2e5;
  c.dark_rate_hz.fill(200);
  c.duration_ps = 50'000'000'000;
  c.analyzer_schedule = chsh_schedule({}, 1'000'000'000);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.rng_seed = seed;
    const TagStream a = generate_events(c);
    EXPECT_EQ(a, generate_events(c));
    c.rng_seed = seed + 1000;
    EXPECT_NE(a, generate_events(c));
  }
}

TEST(Generate, ChunkingDoesNotChangeOutput) {
  SourceConfig c;
  c.pair_rate_coeff = 3e5;
  c.jitter_sigma_ps = 2000;
  c.dark_rate_hz.fill(1e4);
  c.duration_ps = 20'000'000'000;
  const TagStream whole = generate_events(c);
  EventGenerator gen(c);
  std::vector<TimeTag> pieces;
  while (!gen.done()) {
    const auto chunk = gen.next_chunk(1);
    pieces.insert(pieces.end(), chunk.begin(), chunk.end());
  }
  EXPECT_EQ(pieces, whole.tags());
}

TEST(Generate, TagsStayInRangeAndRespectDeadTime) {
  SourceConfig c;
  c.pair_rate_coeff = 1e6;
  c.dead_time_ps = 50'000;
  c.jitter_sigma_ps = 500;
  c.duration_ps = 10'000'000'000;
  const TagStream s = generate_events(c);
  PerChannel<std::int64_t> last;
  last.fill(-1);
  for (const auto& t : s.tags()) {
    ASSERT_LE(t.timestamp, c.duration_ps);
    auto& l = last[index_of(t.channel)];
    if (l >= 0) {
      ASSERT_GE(static_cast<std::int64_t>(t.timestamp) - l, 50'000);
    }
    l = static_cast<std::int64_t>(t.timestamp);
  }
}

TEST(Generate, EventBudgetAndConfigErrors) {
  SourceConfig c;
  c.pair_rate_coeff = 1e12;
  c.duration_ps = 10'000 * kPicosPerSecond;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kResource);
  }
  SourceConfig bad;
  bad.det_efficiency[0] = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  SourceConfig zero;
  zero.duration_ps = 0;
  EXPECT_EQ(generate_events(zero).size(), 0u);
}

TEST(Generate, CorrelationsMatchAnalyticOracle) {
  // Fixed-setting runs; E from counts against the closed-form state.
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int draw = 0; draw < 20; ++draw) {
    const double alpha = u(gen);
    const double noise = 0.5 + 0.5 * u(gen);
    const double t1 = 90 * u(gen);
    const double t2 = 90 * u(gen);
    SourceConfig c;
    c.state = TwoPhotonState::from_alpha(alpha, noise);
    c.pair_rate_coeff = 3e5;
    c.duration_ps = 4'000'000'000'000;
    c.rng_seed = 1000 + static_cast<std::uint64_t>(draw);
    c.analyzer_schedule.settings = {{t1, t2}, {t1 + 90, t2}, {t1, t2 + 90}, {t1 + 90, t2 + 90}};
    c.analyzer_schedule.dwell = 1'000'000'000;
    const TagStream s = generate_events(c);
    const auto ev = find_coincidences(s.filter(Channel::kC1), s.filter(Channel::kC2),
                                      CoincidenceConfig{});
    double n[4] = {0, 0, 0, 0};
    for (const auto& e : ev) {
      n[c.analyzer_schedule.index_at(e.time)] += 1;
    }
    const double total = n[0] + n[1] + n[2] + n[3];
    const double measured = (n[0] + n[3] - n[1] - n[2]) / total;
    const double expect = oracle::analytic_E(c.state.alpha, c.state.beta, noise, t1, t2);
    const double se = std::sqrt(std::max(1e-12, 1 - expect * expect) / total);
    EXPECT_NEAR(measured, expect, 4 * se + 1e-3) << "draw " << draw;
  }
}

}  // namespace
}  // namespace qrng
