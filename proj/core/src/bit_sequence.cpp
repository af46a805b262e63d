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

#include "qrng/bit_sequence.hpp"

#include <bit>

#include "qrng/error.hpp"

namespace qrng {

BitSequence::BitSequence(std::size_t n_bits) : words_((n_bits + 63) / 64, 0), size_(n_bits) {}

BitSequence BitSequence::from_bits(const std::vector<int>& bits) {
  BitSequence out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0 && bits[i] != 1) {
      throw Error(ErrorKind::kParameter, "bit values must be 0 or 1");
    }
    out.set(i, bits[i] == 1);
  }
  return out;
}

BitSequence BitSequence::from_string(std::string_view zeros_and_ones) {
  BitSequence out(zeros_and_ones.size());
  for (std::size_t i = 0; i < zeros_and_ones.size(); ++i) {
    const char c = zeros_and_ones[i];
    if (c != '0' && c != '1') {
      throw Error(ErrorKind::kParse, "bit string may only contain '0' and '1'");
    }
    out.set(i, c == '1');
  }
  return out;
}

BitSequence BitSequence::from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
  if (bytes.size() != (n_bits + 7) / 8) {
    throw Error(ErrorKind::kTruncation, "packed bit payload has " + std::to_string(bytes.size()) +
                                            " bytes, expected " + std::to_string((n_bits + 7) / 8));
  }
  BitSequence out(n_bits);
  const std::size_t full_words = n_bits / 64;
  for (std::size_t w = 0; w < full_words; ++w) {
    std::uint64_t word = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      // MSB-first byte order: bit i of the sequence is bit (7 - i % 8) of byte i / 8.
      const std::uint8_t rev = static_cast<std::uint8_t>(
          (std::uint32_t{bytes[w * 8 + b]} * 0x0202020202ULL & 0x010884422010ULL) % 1023);
      word |= std::uint64_t{rev} << (8 * b);
    }
    out.words_[w] = word;
  }
  for (std::size_t i = full_words * 64; i < n_bits; ++i) {
    out.set(i, (bytes[i / 8] >> (7 - (i % 8))) & 1u);
  }
  if (n_bits % 8 != 0) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFFu >> (n_bits % 8));
    if (bytes.back() & pad_mask) {
      throw Error(ErrorKind::kCorruption, "non-zero padding bits in packed bit payload");
    }
  }
  return out;
}

bool BitSequence::at(std::size_t i) const {
  if (i >= size_) {
    throw Error(ErrorKind::kParameter, "bit index out of range");
  }
  return (*this)[i];
}

void BitSequence::push_back(bool bit) {
  if ((size_ & 63) == 0) {
    words_.push_back(0);
  }
  if (bit) {
    words_.back() |= std::uint64_t{1} << (size_ & 63);
  }
  ++size_;
}

void BitSequence::append(const BitSequence& other) {
  if (&other == this) {
    const BitSequence copy = other;
    append(copy);
    return;
  }
  const std::size_t shift = size_ & 63;
  if (shift == 0) {
    words_.insert(words_.end(), other.words_.begin(), other.words_.end());
    size_ += other.size_;
    return;
  }
  const std::size_t new_size = size_ + other.size_;
  words_.resize((new_size + 63) / 64, 0);
  std::size_t dst = size_ >> 6;
  for (std::uint64_t w : other.words_) {
    words_[dst] |= w << shift;
    if (dst + 1 < words_.size()) {
      words_[dst + 1] |= w >> (64 - shift);
    }
    ++dst;
  }
  size_ = new_size;
}

BitSequence BitSequence::slice(std::size_t begin, std::size_t length) const {
  if (begin > size_ || length > size_ - begin) {
    throw Error(ErrorKind::kParameter, "slice out of range");
  }
  BitSequence out(length);
  const std::size_t shift = begin & 63;
  const std::size_t first = begin >> 6;
  for (std::size_t w = 0; w < out.words_.size(); ++w) {
    std::uint64_t lo = words_[first + w] >> shift;
    if (shift != 0 && first + w + 1 < words_.size()) {
      lo |= words_[first + w + 1] << (64 - shift);
    }
    out.words_[w] = lo;
  }
  if (length & 63) {
    out.words_.back() &= (std::uint64_t{1} << (length & 63)) - 1;
  }
  return out;
}

std::size_t BitSequence::count_ones() const noexcept {
  std::size_t ones = 0;
  for (std::uint64_t w : words_) {
    ones += static_cast<std::size_t>(std::popcount(w));
  }
  return ones;
}

std::vector<std::uint8_t> BitSequence::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
  for (std::size_t byte = 0; byte < out.size(); ++byte) {
    const std::uint8_t lsb_first =
        static_cast<std::uint8_t>(words_[byte / 8] >> (8 * (byte % 8)));
    out[byte] = static_cast<std::uint8_t>(
        (std::uint32_t{lsb_first} * 0x0202020202ULL & 0x010884422010ULL) % 1023);
  }
  return out;
}

std::string BitSequence::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if ((*this)[i]) {
      out[i] = '1';
    }
  }
  return out;
}

}  // namespace qrng
