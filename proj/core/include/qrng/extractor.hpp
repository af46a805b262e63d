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
#include <vector>

#include "qrng/bit_sequence.hpp"

namespace qrng {

struct EntropyReport {
  double h_min_per_bit = 0;  // -log2(p_max)
  double p_max = 1;
  std::size_t n_bits = 0;
  double per_block_min = 0;  // worst h over consecutive 10^6-bit blocks
  bool degenerate = false;   // every bit equal
};

inline constexpr std::size_t kMinEntropyMinBits = 10'000;
inline constexpr std::size_t kMinEntropyBlockBits = 1'000'000;

/// Most-probable-symbol min-entropy of a binary source. Throws kLength below
/// kMinEntropyMinBits.
EntropyReport min_entropy(const BitSequence& bits);

/// floor(n h - 2 log2(1/epsilon)). Throws kBlockTooSmall unless
/// n h > 2 log2(1/epsilon), kParameter for epsilon outside (0, 1].
std::size_t output_length(std::size_t n, double h_min, double epsilon);

struct ExtractorParams {
  std::size_t n = 0;
  std::size_t m = 0;
  double epsilon = 0x1.0p-50;
  BitSequence seed;  // n + m - 1 bits

  /// Throws kParameter on 1 <= m <= n or seed-length violations.
  void validate() const;
};

/// y = T x over GF(2) with the m x n Toeplitz matrix T[i][j] = seed[m - 1 - i + j].
///
/// Computed as a slice of the polynomial product of the reversed seed with x
/// (Karatsuba over carry-less word products), so the seed preparation is
/// shared across blocks.
class ToeplitzHasher {
 public:
  explicit ToeplitzHasher(const ExtractorParams& params);

  std::size_t input_bits() const noexcept { return n_; }
  std::size_t output_bits() const noexcept { return m_; }

  /// Throws kParameter when block.size() != n.
  BitSequence hash(const BitSequence& block) const;

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<std::uint64_t> reversed_seed_;
};

BitSequence toeplitz_extract(const BitSequence& block, const ExtractorParams& params);

struct ExtractionReport {
  double h_min = 0;
  double per_block_min = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  double ratio = 0;
  std::size_t blocks = 0;
  std::size_t bits_in = 0;
  std::size_t bits_out = 0;
  double seconds = 0;  // acquisition time of the raw input
  double mbps = 0;     // bits_out / seconds / 1e6 (0 when seconds is 0)
  double epsilon = 0;
};

struct ExtractionResult {
  BitSequence bits;
  ExtractionReport report;
};

/// Entropy estimate over the whole input, leftover-hash sizing, then one
/// Toeplitz seed (the first n + m - 1 bits of seed_source) reused for every
/// full n_block-bit block. The trailing partial block is dropped.
/// Throws kLength when raw is shorter than n_block, kSeed when the seed
/// source is too short.
ExtractionResult extract_stream(const BitSequence& raw, double epsilon, std::size_t n_block,
                                const BitSequence& seed_source, double acquisition_seconds = 0.0);

/// n_bits of OS entropy (std::random_device).
BitSequence os_entropy_bits(std::size_t n_bits);

}  // namespace qrng
