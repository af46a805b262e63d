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

#include "qrng/extractor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "qrng/error.hpp"
#include "qrng/gf2_poly.hpp"
#include "qrng/parallel.hpp"

namespace qrng {
namespace {

double h_of(std::size_t ones, std::size_t n) {
  const double p1 = static_cast<double>(ones) / static_cast<double>(n);
  const double p_max = std::max(p1, 1.0 - p1);
  return -std::log2(p_max);
}

}  // namespace

EntropyReport min_entropy(const BitSequence& bits) {
  if (bits.size() < kMinEntropyMinBits) {
    throw Error(ErrorKind::kLength, "min-entropy estimate needs at least " +
                                        std::to_string(kMinEntropyMinBits) + " bits");
  }
  EntropyReport r;
  r.n_bits = bits.size();
  const std::size_t ones = bits.count_ones();
  const double p1 = static_cast<double>(ones) / static_cast<double>(bits.size());
  r.p_max = std::max(p1, 1.0 - p1);
  r.h_min_per_bit = -std::log2(r.p_max);
  r.degenerate = ones == 0 || ones == bits.size();
  if (r.degenerate) {
    r.h_min_per_bit = 0.0;
  }

  const std::size_t blocks = bits.size() / kMinEntropyBlockBits;
  if (blocks == 0) {
    r.per_block_min = r.h_min_per_bit;
  } else {
    // Blocks are word aligned (10^6 is not a multiple of 64, so count via slices).
    double worst = 1.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      const BitSequence block = bits.slice(b * kMinEntropyBlockBits, kMinEntropyBlockBits);
      worst = std::min(worst, h_of(block.count_ones(), kMinEntropyBlockBits));
    }
    r.per_block_min = worst;
  }
  return r;
}

std::size_t output_length(std::size_t n, double h_min, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::kParameter, "epsilon must lie in (0, 1]");
  }
  if (!(h_min >= 0.0 && h_min <= 1.0)) {
    throw Error(ErrorKind::kParameter, "min-entropy per bit must lie in [0, 1]");
  }
  const long double security = 2.0L * -std::log2(static_cast<long double>(epsilon));
  const long double budget = static_cast<long double>(n) * static_cast<long double>(h_min);
  if (!(budget > security)) {
    throw Error(ErrorKind::kBlockTooSmall,
                "block of " + std::to_string(n) + " bits carries too little min-entropy for epsilon");
  }
  // Tolerance absorbs decimal inputs such as h = 0.99 landing a hair below the integer.
  const long double m = std::floor(budget - security + 1e-9L);
  return std::min(n, static_cast<std::size_t>(m));
}

void ExtractorParams::validate() const {
  if (m < 1 || m > n) {
    throw Error(ErrorKind::kParameter, "Toeplitz output length must satisfy 1 <= m <= n");
  }
  if (seed.size() != n + m - 1) {
    throw Error(ErrorKind::kParameter, "Toeplitz seed must hold n + m - 1 = " +
                                           std::to_string(n + m - 1) + " bits, got " +
                                           std::to_string(seed.size()));
  }
}

ToeplitzHasher::ToeplitzHasher(const ExtractorParams& params) : n_(params.n), m_(params.m) {
  params.validate();
  // r[k] = seed[n + m - 2 - k]; then y_i is coefficient n - 1 + i of r(z) x(z).
  const std::size_t len = n_ + m_ - 1;
  BitSequence reversed(len);
  for (std::size_t k = 0; k < len; ++k) {
    reversed.set(k, params.seed[len - 1 - k]);
  }
  reversed_seed_.assign(reversed.words().begin(), reversed.words().end());
}

BitSequence ToeplitzHasher::hash(const BitSequence& block) const {
  if (block.size() != n_) {
    throw Error(ErrorKind::kParameter, "Toeplitz input must hold exactly " + std::to_string(n_) +
                                           " bits, got " + std::to_string(block.size()));
  }
  const std::size_t first = n_ - 1;
  const std::size_t shift = first & 63;
  const std::size_t base = first >> 6;
  BitSequence out(m_);
  auto words = out.mutable_words();
  const auto window = gf2::product_window(reversed_seed_, block.words(), base, words.size() + 1);
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t v = window[w] >> shift;
    if (shift != 0) {
      v |= window[w + 1] << (64 - shift);
    }
    words[w] = v;
  }
  if (m_ & 63) {
    words.back() &= (std::uint64_t{1} << (m_ & 63)) - 1;
  }
  return out;
}

BitSequence toeplitz_extract(const BitSequence& block, const ExtractorParams& params) {
  return ToeplitzHasher(params).hash(block);
}

ExtractionResult extract_stream(const BitSequence& raw, double epsilon, std::size_t n_block,
                                const BitSequence& seed_source, double acquisition_seconds) {
  if (n_block == 0 || raw.size() < n_block) {
    throw Error(ErrorKind::kLength, "raw input of " + std::to_string(raw.size()) +
                                        " bits is shorter than one " + std::to_string(n_block) +
                                        "-bit block");
  }
  const EntropyReport entropy = min_entropy(raw);
  const std::size_t m = output_length(n_block, entropy.h_min_per_bit, epsilon);
  if (seed_source.size() < n_block + m - 1) {
    throw Error(ErrorKind::kSeed, "seed source holds " + std::to_string(seed_source.size()) +
                                      " bits; " + std::to_string(n_block + m - 1) + " required");
  }
  ExtractorParams params{n_block, m, epsilon, seed_source.slice(0, n_block + m - 1)};
  const ToeplitzHasher hasher(params);

  const std::size_t blocks = raw.size() / n_block;
  std::vector<BitSequence> outputs(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    outputs[b] = hasher.hash(raw.slice(b * n_block, n_block));
  });

  ExtractionResult result;
  result.bits.reserve(blocks * m);
  for (const auto& o : outputs) {
    result.bits.append(o);
  }
  ExtractionReport& r = result.report;
  r.h_min = entropy.h_min_per_bit;
  r.per_block_min = entropy.per_block_min;
  r.n = n_block;
  r.m = m;
  r.ratio = static_cast<double>(m) / static_cast<double>(n_block);
  r.blocks = blocks;
  r.bits_in = blocks * n_block;
  r.bits_out = result.bits.size();
  r.seconds = acquisition_seconds;
  r.mbps = acquisition_seconds > 0.0 ? static_cast<double>(r.bits_out) / acquisition_seconds / 1e6 : 0.0;
  r.epsilon = epsilon;
  return result;
}

BitSequence os_entropy_bits(std::size_t n_bits) {
  std::random_device rd;
  BitSequence out(n_bits);
  auto words = out.mutable_words();
  for (auto& w : words) {
    w = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  if (n_bits & 63) {
    words.back() &= (std::uint64_t{1} << (n_bits & 63)) - 1;
  }
  return out;
}

}  // namespace qrng
