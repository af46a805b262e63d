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

#include "qrng/timetag.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <queue>
#include <tuple>

#include "json.hpp"

#include "qrng/error.hpp"

namespace qrng {
namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames = {"U1", "U2", "D1",
                                                                       "D2", "C1", "C2"};
constexpr std::uint8_t kMagic[4] = {'Q', 'T', 'T', '1'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::uint8_t* dst, std::uint16_t v) {
  dst[0] = static_cast<std::uint8_t>(v);
  dst[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u64(std::uint8_t* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

std::uint16_t get_u16(const std::uint8_t* src) {
  return static_cast<std::uint16_t>(src[0] | (src[1] << 8));
}

std::uint64_t get_u64(const std::uint8_t* src) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | src[i];
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string_view channel_name(Channel c) noexcept { return kChannelNames[index_of(c)]; }

std::optional<Channel> parse_channel(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kChannelNames[i] == name) {
      return kAllChannels[i];
    }
  }
  return std::nullopt;
}

TagStream::TagStream(std::vector<TimeTag> tags, Picoseconds duration)
    : tags_(std::move(tags)), duration_(duration) {
  if (duration_ > kMaxTimestamp) {
    throw Error(ErrorKind::kCorruption, "stream duration exceeds 2^63 ps");
  }
  Picoseconds prev = 0;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    const TimeTag& t = tags_[i];
    if (index_of(t.channel) >= kChannelCount) {
      throw Error(ErrorKind::kCorruption, "invalid channel id at tag " + std::to_string(i));
    }
    if (t.timestamp < prev) {
      throw Error(ErrorKind::kCorruption, "timestamps not sorted at tag " + std::to_string(i));
    }
    if (t.timestamp > duration_) {
      throw Error(ErrorKind::kCorruption,
                  "timestamp beyond stream duration at tag " + std::to_string(i));
    }
    prev = t.timestamp;
  }
}

std::vector<Picoseconds> TagStream::channel_times(Channel c) const {
  std::vector<Picoseconds> out;
  for (const TimeTag& t : tags_) {
    if (t.channel == c) {
      out.push_back(t.timestamp);
    }
  }
  return out;
}

TagStream TagStream::filter(Channel c) const {
  std::vector<TimeTag> out;
  std::copy_if(tags_.begin(), tags_.end(), std::back_inserter(out),
               [c](const TimeTag& t) { return t.channel == c; });
  return TagStream(std::move(out), duration_);
}

std::vector<std::uint8_t> encode_stream(const TagStream& stream) {
  std::vector<std::uint8_t> out(kTagFileHeaderSize + stream.size() * kTagRecordSize);
  std::memcpy(out.data(), kMagic, 4);
  put_u16(out.data() + 4, kFormatVersion);
  put_u16(out.data() + 6, static_cast<std::uint16_t>(kChannelCount));
  put_u64(out.data() + 8, stream.duration());
  put_u64(out.data() + 16, stream.size());
  std::uint8_t* rec = out.data() + kTagFileHeaderSize;
  for (const TimeTag& t : stream.tags()) {
    put_u64(rec, t.timestamp);
    rec[8] = static_cast<std::uint8_t>(t.channel);
    rec += kTagRecordSize;
  }
  return out;
}

TagStream decode_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::kFormat, "missing QTT1 magic");
  }
  if (bytes.size() < kTagFileHeaderSize) {
    throw Error(ErrorKind::kTruncation, "truncated QTT1 header");
  }
  const std::uint16_t version = get_u16(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw Error(ErrorKind::kFormat, "unsupported QTT1 version " + std::to_string(version));
  }
  const std::uint16_t channels = get_u16(bytes.data() + 6);
  if (channels != kChannelCount) {
    throw Error(ErrorKind::kFormat, "unexpected channel count " + std::to_string(channels));
  }
  const Picoseconds duration = get_u64(bytes.data() + 8);
  const std::uint64_t count = get_u64(bytes.data() + 16);
  const std::size_t payload = bytes.size() - kTagFileHeaderSize;
  if (count > payload / kTagRecordSize) {
    throw Error(ErrorKind::kTruncation, "record count " + std::to_string(count) +
                                            " exceeds payload of " + std::to_string(payload) +
                                            " bytes");
  }
  if (payload != count * kTagRecordSize) {
    throw Error(ErrorKind::kCorruption, "trailing bytes after last record");
  }
  std::vector<TimeTag> tags(count);
  const std::uint8_t* rec = bytes.data() + kTagFileHeaderSize;
  for (std::uint64_t i = 0; i < count; ++i, rec += kTagRecordSize) {
    const std::uint64_t ts = get_u64(rec);
    if (ts > kMaxTimestamp) {
      throw Error(ErrorKind::kCorruption, "timestamp exceeds 2^63 at record " + std::to_string(i));
    }
    if (rec[8] >= kChannelCount) {
      throw Error(ErrorKind::kCorruption, "channel byte " + std::to_string(rec[8]) +
                                              " at record " + std::to_string(i));
    }
    tags[i] = TimeTag{ts, static_cast<Channel>(rec[8])};
  }
  return TagStream(std::move(tags), duration);
}

TagStream merge_streams(std::span<const TagStream> streams) {
  std::optional<Picoseconds> duration;
  std::size_t total = 0;
  for (const TagStream& s : streams) {
    total += s.size();
    if (s.empty() && s.duration() == 0) {
      continue;
    }
    if (duration && *duration != s.duration()) {
      throw Error(ErrorKind::kConfig, "cannot merge streams with different durations");
    }
    duration = s.duration();
  }

  std::vector<TimeTag> out;
  out.reserve(total);
  using Head = std::tuple<Picoseconds, std::size_t>;  // (timestamp, stream index)
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
  std::vector<std::size_t> cursor(streams.size(), 0);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (!streams[i].empty()) {
      heads.emplace(streams[i].tags().front().timestamp, i);
    }
  }
  while (!heads.empty()) {
    const auto [ts, i] = heads.top();
    heads.pop();
    const auto& tags = streams[i].tags();
    // Drain the run of tags from stream i that precede every other head.
    const Picoseconds limit = heads.empty() ? kMaxTimestamp : std::get<0>(heads.top());
    const std::size_t other = heads.empty() ? streams.size() : std::get<1>(heads.top());
    std::size_t& c = cursor[i];
    do {
      out.push_back(tags[c]);
      ++c;
    } while (c < tags.size() &&
             (tags[c].timestamp < limit || (tags[c].timestamp == limit && i < other)));
    if (c < tags.size()) {
      heads.emplace(tags[c].timestamp, i);
    }
  }
  return TagStream(std::move(out), duration.value_or(0));
}

TagStream import_csv(std::string_view text, std::optional<Picoseconds> duration) {
  std::vector<TimeTag> tags;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected 'ps,channel'");
    }
    const std::string_view ts_text = trim(line.substr(0, comma));
    const std::string_view ch_text = trim(line.substr(comma + 1));
    Picoseconds ts = 0;
    const auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
    if (ec != std::errc{} || ptr != ts_text.data() + ts_text.size() || ts > kMaxTimestamp) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": non-integer timestamp '" + std::string(ts_text) + "'");
    }
    const auto ch = parse_channel(ch_text);
    if (!ch) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown channel '" +
                                         std::string(ch_text) + "'");
    }
    tags.push_back(TimeTag{ts, *ch});
  }
  std::stable_sort(tags.begin(), tags.end(),
                   [](const TimeTag& a, const TimeTag& b) { return a.timestamp < b.timestamp; });
  const Picoseconds last = tags.empty() ? 0 : tags.back().timestamp;
  return TagStream(std::move(tags), duration.value_or(last));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorKind::kIo, "short read on " + path.string());
  }
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed on " + path.string());
  }
}

void write_tag_file(const std::filesystem::path& path, const TagStream& stream) {
  write_file_bytes(path, encode_stream(stream));
}

TagStream read_tag_file(const std::filesystem::path& path) {
  return decode_stream(read_file_bytes(path));
}

std::filesystem::path bit_manifest_path(const std::filesystem::path& bit_path) {
  return std::filesystem::path(bit_path.string() + ".json");
}

void write_bit_file(const std::filesystem::path& path, const BitSequence& bits) {
  write_file_bytes(path, bits.to_bytes());
  const std::string manifest = nlohmann::json{{"bits", bits.size()}}.dump() + "\n";
  write_file_bytes(bit_manifest_path(path),
                   std::span(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()));
}

BitSequence read_bit_file(const std::filesystem::path& path) {
  const auto manifest_bytes = read_file_bytes(bit_manifest_path(path));
  std::size_t n_bits = 0;
  try {
    const auto j = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
    n_bits = j.at("bits").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "bad bit manifest " + bit_manifest_path(path).string() + ": " + e.what());
  }
  const auto payload = read_file_bytes(path);
  return BitSequence::from_bytes(payload, n_bits);
}

}  // namespace qrng
