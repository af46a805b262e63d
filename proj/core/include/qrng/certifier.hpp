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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrng/coincidence.hpp"
#include "qrng/source.hpp"
#include "qrng/timetag.hpp"

namespace qrng {

/// CHSH analyzer angles in degrees: a, a' on C1 and b, b' on C2. The defaults
/// maximize |S| for alpha|HH> - beta|VV> with alpha = beta, where
/// E(t1, t2) = cos 2(t1 + t2).
struct ChshAngles {
  double a = 0.0;
  double a_prime = 45.0;
  double b = 67.5;
  double b_prime = 22.5;
};

/// 16-entry schedule: {a, a'} x {b, b'} x {t1, t1 + 90} x {t2, t2 + 90}.
AnalyzerSchedule chsh_schedule(const ChshAngles& angles, Picoseconds dwell);

/// Coincidence counts (or exposure-normalized rates) at one setting pair and
/// its orthogonal complements.
struct CorrelationCounts {
  double n_tt = 0;  // N(t1, t2)
  double n_rt = 0;  // N(t1+90, t2)
  double n_tr = 0;  // N(t1, t2+90)
  double n_rr = 0;  // N(t1+90, t2+90)

  double total() const noexcept { return n_tt + n_rt + n_tr + n_rr; }
};

/// E = (N++ + N-- - N+- - N-+) / total. Throws kInsufficientData on zero total.
double correlation_E(const CorrelationCounts& counts);

/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
double chsh_s(double e_ab, double e_ab_prime, double e_a_prime_b, double e_a_prime_b_prime);

/// Cross-correlation g2(0) = N_c T / (N_a N_b 2 tau); classical bound 2.
/// Throws kInsufficientData when either singles count is zero.
double g2_cross(std::uint64_t n_a, std::uint64_t n_b, std::uint64_t n_coinc, Picoseconds duration,
                const CoincidenceConfig& config);

struct VisibilityFit {
  double visibility = 0;      // B / A of the sinusoid fit, clipped to [0, 1]
  double raw_visibility = 0;  // (max - min) / (max + min) of the samples
  double offset = 0;          // A
  double amplitude = 0;       // B
  double phase_deg = 0;       // phi
};

/// Least-squares fit of N(t) = A + B cos(2(t - phi)) to (angle_deg, count)
/// samples. Needs >= 8 samples covering a full 180-degree fringe period
/// (max - min angle >= 180 (n - 1) / n). Throws kInsufficientData when the
/// samples are too few or too narrow, kFit when A <= 0 or the fit is singular.
VisibilityFit visibility(std::span<const std::pair<double, double>> counts_vs_angle);

enum class Verdict : std::uint8_t { kCertifiedBell = 0, kCertifiedG2 = 1, kUncertified = 2 };

std::string_view to_string(Verdict v) noexcept;
/// Lower-ranked of the two (Bell > g2 > uncertified).
Verdict weaker(Verdict x, Verdict y) noexcept;

struct CertifierConfig {
  std::size_t block = 100'000;
  ChshAngles angles;
  double sigma_margin = 3.0;
  double g2_threshold = 2.0;
  CoincidenceConfig coincidence;

  void validate() const;
};

struct CertBlock {
  Picoseconds t_start = 0;
  Picoseconds t_end = 0;
  double S = 0;
  double S_stderr = 0;
  std::array<double, 4> correlations{};  // E(a,b), E(a,b'), E(a',b), E(a',b')
  std::map<std::string, double> visibility;
  double g2 = 0;
  std::uint64_t n_cert_events = 0;
  std::uint64_t n_c1 = 0;
  std::uint64_t n_c2 = 0;
  bool full_coverage = false;
  Verdict verdict = Verdict::kUncertified;
};

Verdict decide_verdict(const CertBlock& block, const CertifierConfig& config) noexcept;

/// C1/C2 coincidences and singles of one acquisition.
struct CertificationData {
  std::span<const CoincidenceEvent> cert_events;  // sorted by time
  std::span<const Picoseconds> c1_singles;
  std::span<const Picoseconds> c2_singles;
  Picoseconds duration = 0;
};

/// Statistics for the events in [first, last) and the time range
/// [t_start, t_end). Counts are normalized by each setting's exposure time
/// under the schedule, so partial schedule cycles do not bias E.
CertBlock certify_range(const CertificationData& data, std::size_t first, std::size_t last,
                        Picoseconds t_start, Picoseconds t_end, const AnalyzerSchedule& schedule,
                        const CertifierConfig& config);

/// Consecutive blocks of config.block events tiling [0, duration]. A trailing
/// remainder shorter than half a block is folded into the previous block. An
/// empty event list yields one uncertified block over the whole run.
std::vector<CertBlock> live_certify(const CertificationData& data, const AnalyzerSchedule& schedule,
                                    const CertifierConfig& config);

/// Verdict of the block covering each timestamp.
std::vector<Verdict> join_verdicts(std::span<const Picoseconds> times,
                                   std::span<const CertBlock> blocks);

}  // namespace qrng
