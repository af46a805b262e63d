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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrng/rng.hpp"
#include "qrng/timetag.hpp"

namespace qrng {

/// Polarization state alpha|HH> - beta|VV>, mixed with the maximally mixed
/// state: rho = noise_p |phi><phi| + (1 - noise_p) I/4.
struct TwoPhotonState {
  double alpha = 1.0 / 1.4142135623730951;
  double beta = 1.0 / 1.4142135623730951;
  double noise_p = 1.0;

  /// Throws kDomain unless alpha, beta in [0,1], alpha^2 + beta^2 = 1 (1e-12)
  /// and noise_p in [0,1].
  void validate() const;
  /// Builds (alpha, sqrt(1 - alpha^2), noise_p).
  static TwoPhotonState from_alpha(double alpha, double noise_p = 1.0);
};

/// Half-wave-plate angle in degrees, [0, 45], to alpha = sin 2t, beta = cos 2t.
TwoPhotonState state_from_hwp(double theta_deg);

/// Probability that both photons are transmitted by linear analyzers set at
/// theta1 (C1) and theta2 (C2) degrees from horizontal.
double projection_probability(const TwoPhotonState& state, double theta1_deg, double theta2_deg);

struct AnalyzerSetting {
  double theta_c1 = 0.0;
  double theta_c2 = 0.0;

  friend bool operator==(const AnalyzerSetting&, const AnalyzerSetting&) = default;
};

/// Analyzer angles cycled round-robin, each held for `dwell` ps.
struct AnalyzerSchedule {
  std::vector<AnalyzerSetting> settings{AnalyzerSetting{}};
  Picoseconds dwell = 1'000'000'000;

  void validate() const;
  std::size_t index_at(Picoseconds t) const noexcept {
    return static_cast<std::size_t>((t / dwell) % settings.size());
  }
  const AnalyzerSetting& at(Picoseconds t) const noexcept { return settings[index_at(t)]; }
};

/// The three diametric section pairs, in routing order.
enum class SectionPair : std::uint8_t { kU1D2 = 0, kU2D1 = 1, kC1C2 = 2 };
inline constexpr std::size_t kSectionPairCount = 3;

constexpr std::array<Channel, 2> section_channels(SectionPair p) noexcept {
  switch (p) {
    case SectionPair::kU1D2: return {Channel::kU1, Channel::kD2};
    case SectionPair::kU2D1: return {Channel::kU2, Channel::kD1};
    case SectionPair::kC1C2: return {Channel::kC1, Channel::kC2};
  }
  return {Channel::kC1, Channel::kC2};
}

template <typename T>
using PerChannel = std::array<T, kChannelCount>;

struct SourceConfig {
  double pump_power_mw = 1.0;
  /// Generated pairs per second per milliwatt of pump.
  double pair_rate_coeff = 1.0e5;
  TwoPhotonState state;
  PerChannel<double> det_efficiency{1, 1, 1, 1, 1, 1};
  PerChannel<double> dark_rate_hz{0, 0, 0, 0, 0, 0};
  double jitter_sigma_ps = 350.0;
  Picoseconds dead_time_ps = 0;
  Picoseconds duration_ps = kPicosPerSecond;
  std::uint64_t rng_seed = 1;
  AnalyzerSchedule analyzer_schedule;

  double pair_rate_hz() const noexcept { return pair_rate_coeff * pump_power_mw; }
  double duration_s() const noexcept { return static_cast<double>(duration_ps) / 1e12; }

  /// Throws kConfig on invalid fields, kResource when the expected pair count
  /// reaches 2^40.
  void validate() const;
};

struct RateSummary {
  PerChannel<double> singles_hz{};
  std::array<double, kSectionPairCount> pair_coincidence_hz{};
};

/// Analytic singles and true-coincidence rates (jitter, dead time and
/// accidentals ignored). C-channel rates are averaged over the schedule.
RateSummary expected_rates(const SourceConfig& config);

/// Streaming Monte-Carlo source.
///
/// The acquisition window is cut into fixed 1 ms slices, each simulated from
/// its own generator Rng(rng_seed, slice). Chunks are emitted in time order;
/// tags near the generated frontier are held back until later slices (whose
/// jitter may land before them) are known. The concatenation of all chunks
/// does not depend on chunk size or worker count.
class EventGenerator {
 public:
  static constexpr Picoseconds kSliceLength = 1'000'000'000;

  explicit EventGenerator(SourceConfig config);

  bool done() const noexcept { return next_slice_ >= slice_count_ && pending_.empty(); }
  std::size_t slice_count() const noexcept { return slice_count_; }
  const SourceConfig& config() const noexcept { return config_; }

  /// Next sorted run of tags; empty once done().
  std::vector<TimeTag> next_chunk(std::size_t max_slices = 128);

 private:
  struct Thinning {
    double total_rate_per_ps = 0;
    std::array<double, kSectionPairCount> cumulative{};  // routing CDF
    std::array<std::array<double, 2>, kSectionPairCount> pattern_cdf{};  // both / a-only
  };
  struct SettingTable {
    std::array<double, 3> cdf{};  // TT, TR, RT (RR is the rest)
  };

  void generate_slice(std::size_t slice, std::vector<TimeTag>& out) const;
  double jittered(Rng& rng, double t) const;

  SourceConfig config_;
  Thinning thinning_;
  std::vector<SettingTable> settings_;
  std::size_t slice_count_ = 0;
  std::size_t next_slice_ = 0;
  Picoseconds margin_ = 1;
  std::vector<TimeTag> pending_;
  PerChannel<std::int64_t> last_kept_{};
};

/// Whole-run convenience wrapper over EventGenerator.
TagStream generate_events(const SourceConfig& config);

}  // namespace qrng
