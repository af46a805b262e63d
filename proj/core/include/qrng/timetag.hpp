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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrng/bit_sequence.hpp"

namespace qrng {

/// Detector sections of the down-conversion ring. The numeric values are the
/// channel bytes of the QTT1 file format.
enum class Channel : std::uint8_t { kU1 = 0, kU2 = 1, kD1 = 2, kD2 = 3, kC1 = 4, kC2 = 5 };

inline constexpr std::size_t kChannelCount = 6;
inline constexpr std::array<Channel, kChannelCount> kAllChannels = {
    Channel::kU1, Channel::kU2, Channel::kD1, Channel::kD2, Channel::kC1, Channel::kC2};

constexpr std::size_t index_of(Channel c) noexcept { return static_cast<std::size_t>(c); }

std::string_view channel_name(Channel c) noexcept;
std::optional<Channel> parse_channel(std::string_view name) noexcept;

/// Diametrically opposite section: U1<->D2, U2<->D1, C1<->C2.
constexpr Channel partner(Channel c) noexcept {
  switch (c) {
    case Channel::kU1: return Channel::kD2;
    case Channel::kD2: return Channel::kU1;
    case Channel::kU2: return Channel::kD1;
    case Channel::kD1: return Channel::kU2;
    case Channel::kC1: return Channel::kC2;
    case Channel::kC2: return Channel::kC1;
  }
  return c;
}

/// Picoseconds since acquisition start.
using Picoseconds = std::uint64_t;

inline constexpr Picoseconds kPicosPerSecond = 1'000'000'000'000ULL;
inline constexpr Picoseconds kMaxTimestamp = (Picoseconds{1} << 63) - 1;

struct TimeTag {
  Picoseconds timestamp = 0;
  Channel channel = Channel::kU1;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Time-sorted detection events over [0, duration].
///
/// Construction validates ordering and bounds; the value is immutable after.
class TagStream {
 public:
  TagStream() = default;
  /// Throws Error(kCorruption) when tags are unsorted or out of range.
  TagStream(std::vector<TimeTag> tags, Picoseconds duration);

  const std::vector<TimeTag>& tags() const noexcept { return tags_; }
  Picoseconds duration() const noexcept { return duration_; }
  std::size_t size() const noexcept { return tags_.size(); }
  bool empty() const noexcept { return tags_.empty(); }

  /// Timestamps of one channel, in order.
  std::vector<Picoseconds> channel_times(Channel c) const;
  /// Sub-stream holding only channel c.
  TagStream filter(Channel c) const;

  friend bool operator==(const TagStream&, const TagStream&) = default;

 private:
  std::vector<TimeTag> tags_;
  Picoseconds duration_ = 0;
};

// QTT1 binary layout.
inline constexpr std::size_t kTagFileHeaderSize = 24;
inline constexpr std::size_t kTagRecordSize = 9;

std::vector<std::uint8_t> encode_stream(const TagStream& stream);
/// Errors: kFormat (magic/version/channel count), kTruncation, kCorruption.
TagStream decode_stream(std::span<const std::uint8_t> bytes);

/// Stable k-way merge; all inputs must share one duration (kConfig otherwise).
/// Empty streams with duration 0 are treated as neutral.
TagStream merge_streams(std::span<const TagStream> streams);

/// Parses "timestamp_ps,channel_name" lines. Blank lines and '#' comments are
/// skipped. Output is stably sorted; duration is the largest timestamp unless
/// given.
TagStream import_csv(std::string_view text, std::optional<Picoseconds> duration = std::nullopt);

void write_tag_file(const std::filesystem::path& path, const TagStream& stream);
TagStream read_tag_file(const std::filesystem::path& path);

/// Packed bit file plus "<path>.json" manifest {"bits": N}.
void write_bit_file(const std::filesystem::path& path, const BitSequence& bits);
BitSequence read_bit_file(const std::filesystem::path& path);
std::filesystem::path bit_manifest_path(const std::filesystem::path& bit_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace qrng
