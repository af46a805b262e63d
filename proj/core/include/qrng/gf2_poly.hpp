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
#include <vector>

namespace qrng::gf2 {

/// Polynomials over GF(2) are stored as 64-bit words, coefficient k at bit
/// (k % 64) of word k / 64.

/// 64 x 64 -> 128-bit carry-less product, {low, high}.
struct Wide {
  std::uint64_t lo;
  std::uint64_t hi;
};
Wide clmul(std::uint64_t a, std::uint64_t b) noexcept;

/// True when the hardware carry-less multiply path is active.
bool has_hardware_clmul() noexcept;

/// out = a * b; out.size() must be a.size() + b.size().
void multiply(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
              std::span<std::uint64_t> out);

std::vector<std::uint64_t> multiply(std::span<const std::uint64_t> a,
                                    std::span<const std::uint64_t> b);

/// Words [first, first + count) of a * b, without forming the full product.
///
/// Uses a transposed Karatsuba over the Toeplitz structure of the window, so
/// a window of about |b| words costs one balanced product rather than
/// ceil(|a| / |b|) of them.
std::vector<std::uint64_t> product_window(std::span<const std::uint64_t> a,
                                          std::span<const std::uint64_t> b, std::size_t first,
                                          std::size_t count);

/// Schoolbook reference, O(|a| |b|) word products.
void multiply_schoolbook(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                         std::span<std::uint64_t> out);

}  // namespace qrng::gf2
