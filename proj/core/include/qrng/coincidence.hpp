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
#include <span>
#include <vector>

#include "qrng/timetag.hpp"

namespace qrng {

/// Two tags coincide when |tA - tB| <= window_ps (closed, symmetric window).
struct CoincidenceConfig {
  Picoseconds window_ps = 1000;

  void validate() const;
  double window_s() const noexcept { return static_cast<double>(window_ps) * 1e-12; }
};

struct CoincidenceEvent {
  Picoseconds time = 0;  // earlier of the two tags
  Channel first = Channel::kU1;   // channel of the tag from stream a
  Channel second = Channel::kU1;  // channel of the tag from stream b
  std::int64_t delta = 0;         // t_b - t_a

  friend bool operator==(const CoincidenceEvent&, const CoincidenceEvent&) = default;
};

/// Single-use matching of two sorted timestamp lists.
///
/// Tags are grouped into clusters separated by gaps wider than the window;
/// no coincidence can straddle two clusters. Within a cluster the matching
/// has maximum cardinality and, among those, minimum total |delta|, so each
/// tag is paired with its nearest available partner. Isolated pairs (the
/// overwhelmingly common case) are matched directly; clusters larger than
/// kExactClusterLimit fall back to a chronological nearest-partner greedy.
/// Linear in |a| + |b| for bounded cluster size.
class CoincidenceMatcher {
 public:
  static constexpr std::size_t kExactClusterLimit = 64;

  explicit CoincidenceMatcher(CoincidenceConfig config);

  /// Calls sink(index_a, index_b) for each matched pair, in time order.
  template <typename Sink>
  void match(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Sink&& sink);

  /// Matched index pairs (into a and b) in time order.
  std::vector<std::array<std::size_t, 2>> match_indices(std::span<const Picoseconds> a,
                                                        std::span<const Picoseconds> b);

 private:
  struct Member {
    Picoseconds time;
    std::size_t index;
  };
  void solve_cluster(std::vector<std::array<std::size_t, 2>>& out);
  void solve_exact(std::vector<std::array<std::size_t, 2>>& out);
  void solve_greedy(std::vector<std::array<std::size_t, 2>>& out);

  CoincidenceConfig config_;
  std::vector<Member> cluster_a_;
  std::vector<Member> cluster_b_;
};

/// Coincidences between two streams (typically single-channel sub-streams),
/// sorted by time.
std::vector<CoincidenceEvent> find_coincidences(const TagStream& a, const TagStream& b,
                                                const CoincidenceConfig& config);

/// Same, on raw timestamp lists with fixed channel labels.
std::vector<CoincidenceEvent> find_coincidences(std::span<const Picoseconds> a, Channel channel_a,
                                                std::span<const Picoseconds> b, Channel channel_b,
                                                const CoincidenceConfig& config);

using CountMatrix = std::array<std::array<std::uint64_t, kChannelCount>, kChannelCount>;

/// Symmetric matrix of per-pair coincidence counts over a merged stream;
/// the diagonal is zero.
CountMatrix count_matrix(const TagStream& merged, const CoincidenceConfig& config);

/// Expected accidental coincidence rate 2 * tau * Ra * Rb, in Hz.
double accidental_rate(double rate_a_hz, double rate_b_hz, const CoincidenceConfig& config);

/// One raw bit: (D1,U2) -> 0, (D2,U1) -> 1.
struct RawBitRecord {
  Picoseconds time = 0;
  std::uint8_t bit = 0;
  std::array<Channel, 2> source_pair{Channel::kD1, Channel::kU2};

  friend bool operator==(const RawBitRecord&, const RawBitRecord&) = default;
};

/// Maps bit-carrying coincidences to raw bits; all other pairs are dropped.
/// Output is ordered by (time, bit), so simultaneous (D1,U2) events precede
/// (D2,U1) ones.
std::vector<RawBitRecord> assign_bits(std::span<const CoincidenceEvent> coincidences);

// ---------------------------------------------------------------------------

template <typename Sink>
void CoincidenceMatcher::match(std::span<const Picoseconds> a, std::span<const Picoseconds> b,
                               Sink&& sink) {
  const Picoseconds tau = config_.window_ps;
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<std::array<std::size_t, 2>> solved;
  while (i < a.size() && j < b.size()) {
    // Fast path: skip tags with no opposite partner within the window.
    if (a[i] + tau < b[j]) {
      ++i;
      continue;
    }
    if (b[j] + tau < a[i]) {
      ++j;
      continue;
    }
    // a[i] and b[j] are within tau: grow the cluster chronologically.
    cluster_a_.clear();
    cluster_b_.clear();
    Picoseconds last = 0;
    bool first = true;
    while (true) {
      const bool take_a =
          i < a.size() && (j >= b.size() || a[i] <= b[j]);
      const bool take_b = !take_a && j < b.size();
      if (!take_a && !take_b) {
        break;
      }
      const Picoseconds t = take_a ? a[i] : b[j];
      if (!first && t > last + tau) {
        break;
      }
      if (take_a) {
        cluster_a_.push_back(Member{t, i++});
      } else {
        cluster_b_.push_back(Member{t, j++});
      }
      last = t;
      first = false;
    }
    if (cluster_a_.size() == 1 && cluster_b_.size() == 1) {
      sink(cluster_a_[0].index, cluster_b_[0].index);
      continue;
    }
    solved.clear();
    solve_cluster(solved);
    for (const auto& m : solved) {
      sink(m[0], m[1]);
    }
  }
}

}  // namespace qrng
