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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrng {

/// Packed bit string.
///
/// Storage is 64-bit words with bit i at position (i % 64) of word i / 64
/// (least-significant first). Bits past size() in the last word are always
/// zero. The on-disk form produced by to_bytes() is MSB-first within each byte.
class BitSequence {
 public:
  BitSequence() = default;
  explicit BitSequence(std::size_t n_bits);

  static BitSequence from_bits(const std::vector<int>& bits);
  static BitSequence from_string(std::string_view zeros_and_ones);
  /// Unpacks MSB-first bytes; trailing pad bits must be zero.
  static BitSequence from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool operator[](std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  bool at(std::size_t i) const;
  void set(std::size_t i, bool bit) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (bit) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void push_back(bool bit);
  void append(const BitSequence& other);
  void reserve(std::size_t n_bits) { words_.reserve((n_bits + 63) / 64); }

  /// Copy of bits [begin, begin + length).
  BitSequence slice(std::size_t begin, std::size_t length) const;

  std::size_t count_ones() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  /// Mutable word access; callers must keep the padding bits zero.
  std::span<std::uint64_t> mutable_words() noexcept { return words_; }

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_string() const;

  friend bool operator==(const BitSequence& a, const BitSequence& b) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

}  // namespace qrng
