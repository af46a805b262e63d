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

#include "qrng/gf2_poly.hpp"

#include <algorithm>
#include <cstddef>
#include <cstring>

#include "qrng/error.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define QRNG_HAVE_X86 1
#endif

namespace qrng::gf2 {
namespace {

// Below this many words per operand Karatsuba recursion stops.
constexpr std::size_t kKaratsubaThreshold = 16;
// Base size of the transposed (Toeplitz) recursion.
constexpr std::size_t kToeplitzThreshold = 80;

Wide clmul_portable(std::uint64_t a, std::uint64_t b) noexcept {
  // 4-bit window over b.
  std::uint64_t table[16][2] = {};
  for (unsigned w = 1; w < 16; ++w) {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    for (unsigned bit = 0; bit < 4; ++bit) {
      if (w & (1u << bit)) {
        lo ^= a << bit;
        hi ^= bit == 0 ? 0 : a >> (64 - bit);
      }
    }
    table[w][0] = lo;
    table[w][1] = hi;
  }
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  for (int shift = 60; shift >= 0; shift -= 4) {
    hi = (hi << 4) | (lo >> 60);
    lo <<= 4;
    const unsigned w = static_cast<unsigned>((b >> shift) & 15u);
    lo ^= table[w][0];
    hi ^= table[w][1];
  }
  return {lo, hi};
}

void schoolbook_portable(const std::uint64_t* a, std::size_t na, const std::uint64_t* b,
                         std::size_t nb, std::uint64_t* out) {
  std::fill(out, out + na + nb, 0);
  for (std::size_t i = 0; i < na; ++i) {
    if (a[i] == 0) {
      continue;
    }
    for (std::size_t j = 0; j < nb; ++j) {
      const Wide p = clmul_portable(a[i], b[j]);
      out[i + j] ^= p.lo;
      out[i + j + 1] ^= p.hi;
    }
  }
}

#ifdef QRNG_HAVE_X86
__attribute__((target("pclmul,sse4.1"))) Wide clmul_hw(std::uint64_t a, std::uint64_t b) noexcept {
  const __m128i r = _mm_clmulepi64_si128(_mm_cvtsi64_si128(static_cast<long long>(a)),
                                         _mm_cvtsi64_si128(static_cast<long long>(b)), 0x00);
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(r)),
          static_cast<std::uint64_t>(_mm_extract_epi64(r, 1))};
}

// Column-wise accumulation: word k of the product collects the low halves of
// a[i] b[k - i] and the high halves of a[i] b[k - 1 - i].
__attribute__((target("pclmul,sse4.1"))) void schoolbook_hw(const std::uint64_t* a,
                                                            std::size_t na,
                                                            const std::uint64_t* b,
                                                            std::size_t nb, std::uint64_t* out) {
  std::fill(out, out + na + nb, 0);
  for (std::size_t i = 0; i < na; ++i) {
    const __m128i ai = _mm_cvtsi64_si128(static_cast<long long>(a[i]));
    __m128i carry = _mm_setzero_si128();
    std::size_t j = 0;
    for (; j + 2 <= nb; j += 2) {
      const __m128i bj = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + j));
      const __m128i p0 = _mm_clmulepi64_si128(ai, bj, 0x00);
      const __m128i p1 = _mm_clmulepi64_si128(ai, bj, 0x10);
      // p0 covers words (i+j, i+j+1), p1 covers (i+j+1, i+j+2).
      const __m128i lo = _mm_xor_si128(p0, _mm_slli_si128(p1, 8));
      const __m128i acc = _mm_xor_si128(lo, carry);
      __m128i* dst = reinterpret_cast<__m128i*>(out + i + j);
      _mm_storeu_si128(dst, _mm_xor_si128(_mm_loadu_si128(dst), acc));
      carry = _mm_srli_si128(p1, 8);
    }
    std::uint64_t tail = static_cast<std::uint64_t>(_mm_cvtsi128_si64(carry));
    for (; j < nb; ++j) {
      const Wide p = clmul_hw(a[i], b[j]);
      out[i + j] ^= p.lo ^ tail;
      tail = p.hi;
    }
    out[i + nb] ^= tail;
  }
}

// Base kernels for the Toeplitz recursion. With rb[j] = b[n - 1 - j] the
// row sums become plain correlations, out[i] = sum_j a[i + j] (x) rb[j], so
// word pairs line up lane by lane. Inputs are copied into zero-padded
// buffers (kBasePad words of slack) to keep the vector loops branch free.
constexpr std::size_t kBaseMax = 128;
constexpr std::size_t kBasePad = 8;
static_assert(kToeplitzThreshold <= kBaseMax);

struct BaseBuffers {
  alignas(64) std::uint64_t a[2 * kBaseMax + 2 * kBasePad];
  alignas(64) std::uint64_t rb[kBaseMax + kBasePad];
};

inline void load_base(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
                      BaseBuffers& buf) {
  std::memcpy(buf.a, a, (2 * n - 1) * sizeof(std::uint64_t));
  std::fill(buf.a + 2 * n - 1, buf.a + 2 * n + 2 * kBasePad, 0);
  for (std::size_t j = 0; j < n; ++j) {
    buf.rb[j] = b[n - 1 - j];
  }
  std::fill(buf.rb + n, buf.rb + n + kBasePad, 0);
}

__attribute__((target("pclmul,sse4.1"))) void toeplitz_base_hw(const std::uint64_t* a,
                                                               const std::uint64_t* b,
                                                               std::size_t n,
                                                               std::uint64_t* out) {
  BaseBuffers buf;
  load_base(a, b, n, buf);
  for (std::size_t i = 0; i < n; ++i) {
    __m128i acc0 = _mm_setzero_si128();
    __m128i acc1 = _mm_setzero_si128();
    for (std::size_t j = 0; j < n; j += 2) {
      const __m128i av = _mm_loadu_si128(reinterpret_cast<const __m128i*>(buf.a + i + j));
      const __m128i bv = _mm_load_si128(reinterpret_cast<const __m128i*>(buf.rb + j));
      acc0 = _mm_xor_si128(acc0, _mm_clmulepi64_si128(av, bv, 0x00));
      acc1 = _mm_xor_si128(acc1, _mm_clmulepi64_si128(av, bv, 0x11));
    }
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 2 * i), _mm_xor_si128(acc0, acc1));
  }
}

__attribute__((target("avx512f,vpclmulqdq,pclmul,sse4.1"))) void toeplitz_base_wide(
    const std::uint64_t* a, const std::uint64_t* b, std::size_t n, std::uint64_t* out) {
  BaseBuffers buf;
  load_base(a, b, n, buf);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m512i acc00 = _mm512_setzero_si512();
    __m512i acc01 = _mm512_setzero_si512();
    __m512i acc10 = _mm512_setzero_si512();
    __m512i acc11 = _mm512_setzero_si512();
    for (std::size_t j = 0; j < n; j += 8) {
      const __m512i bv = _mm512_load_si512(buf.rb + j);
      const __m512i a0 = _mm512_loadu_si512(buf.a + i + j);
      const __m512i a1 = _mm512_loadu_si512(buf.a + i + 1 + j);
      acc00 = _mm512_xor_si512(acc00, _mm512_clmulepi64_epi128(a0, bv, 0x00));
      acc01 = _mm512_xor_si512(acc01, _mm512_clmulepi64_epi128(a0, bv, 0x11));
      acc10 = _mm512_xor_si512(acc10, _mm512_clmulepi64_epi128(a1, bv, 0x00));
      acc11 = _mm512_xor_si512(acc11, _mm512_clmulepi64_epi128(a1, bv, 0x11));
    }
    const __m512i r0 = _mm512_xor_si512(acc00, acc01);
    const __m512i r1 = _mm512_xor_si512(acc10, acc11);
    // Fold the four 128-bit lanes.
    const __m256i h0 = _mm256_xor_si256(_mm512_castsi512_si256(r0), _mm512_extracti64x4_epi64(r0, 1));
    const __m256i h1 = _mm256_xor_si256(_mm512_castsi512_si256(r1), _mm512_extracti64x4_epi64(r1, 1));
    const __m128i q0 = _mm_xor_si128(_mm256_castsi256_si128(h0), _mm256_extracti128_si256(h0, 1));
    const __m128i q1 = _mm_xor_si128(_mm256_castsi256_si128(h1), _mm256_extracti128_si256(h1, 1));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 2 * i), q0);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 2 * i + 2), q1);
  }
  for (; i < n; ++i) {
    __m128i acc = _mm_setzero_si128();
    for (std::size_t j = 0; j < n; j += 2) {
      const __m128i av = _mm_loadu_si128(reinterpret_cast<const __m128i*>(buf.a + i + j));
      const __m128i bv = _mm_load_si128(reinterpret_cast<const __m128i*>(buf.rb + j));
      acc = _mm_xor_si128(acc, _mm_clmulepi64_si128(av, bv, 0x00));
      acc = _mm_xor_si128(acc, _mm_clmulepi64_si128(av, bv, 0x11));
    }
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 2 * i), acc);
  }
}

bool detect_clmul() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("pclmul") && __builtin_cpu_supports("sse4.1");
}
const bool kHardwareClmul = detect_clmul();

bool detect_wide_clmul() noexcept {
  return kHardwareClmul && __builtin_cpu_supports("avx512f") &&
         __builtin_cpu_supports("vpclmulqdq");
}
const bool kWideClmul = detect_wide_clmul();
#else
constexpr bool kHardwareClmul = false;
#endif

void schoolbook(const std::uint64_t* a, std::size_t na, const std::uint64_t* b, std::size_t nb,
                std::uint64_t* out) {
#ifdef QRNG_HAVE_X86
  if (kHardwareClmul) {
    schoolbook_hw(a, na, b, nb, out);
    return;
  }
#endif
  schoolbook_portable(a, na, b, nb, out);
}

void toeplitz_base_portable(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
                            std::uint64_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const Wide p = clmul_portable(a[n - 1 + i - j], b[j]);
      lo ^= p.lo;
      hi ^= p.hi;
    }
    out[2 * i] = lo;
    out[2 * i + 1] = hi;
  }
}

void toeplitz_base(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
                   std::uint64_t* out) {
#ifdef QRNG_HAVE_X86
  if (kWideClmul) {
    toeplitz_base_wide(a, b, n, out);
    return;
  }
  if (kHardwareClmul) {
    toeplitz_base_hw(a, b, n, out);
    return;
  }
#endif
  toeplitz_base_portable(a, b, n, out);
}

inline void xor_into(std::uint64_t* dst, const std::uint64_t* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] ^= src[i];
  }
}

// Balanced Karatsuba: out[0 .. 2k) = a[0 .. k) * b[0 .. k).
// Needs 4 * ceil(k/2) words of scratch per level, at most 8k in total.
void karatsuba(const std::uint64_t* a, const std::uint64_t* b, std::size_t k, std::uint64_t* out,
               std::uint64_t* scratch) {
  if (k <= kKaratsubaThreshold) {
    schoolbook(a, k, b, k, out);
    return;
  }
  const std::size_t h = k / 2;
  const std::size_t hs = k - h;  // hs == h or h + 1
  karatsuba(a, b, h, out, scratch);
  karatsuba(a + h, b + h, hs, out + 2 * h, scratch);

  std::uint64_t* sa = scratch;
  std::uint64_t* sb = scratch + hs;
  std::uint64_t* mid = scratch + 2 * hs;
  std::uint64_t* next = scratch + 4 * hs;
  std::memcpy(sa, a + h, hs * sizeof(std::uint64_t));
  std::memcpy(sb, b + h, hs * sizeof(std::uint64_t));
  xor_into(sa, a, h);
  xor_into(sb, b, h);
  karatsuba(sa, sb, hs, mid, next);
  xor_into(mid, out, 2 * h);
  xor_into(mid, out + 2 * h, 2 * hs);
  xor_into(out + h, mid, 2 * hs);
}

// Toeplitz matrix-vector product in 128-bit coefficients:
// out[i] = sum_{j < n} a[n - 1 + i - j] (x) b[j] for i < n, a holding 2n - 1
// words and out 2n words (lo, hi interleaved). With h = n / 2 and
// A_k = a + k h, the two output halves are
//   top    = MP(A1, b0 ^ b1) ^ MP(A0 ^ A1, b1)
//   bottom = MP(A1, b0 ^ b1) ^ MP(A2 ^ A1, b0).
// Scratch: under 10 n words.
void toeplitz_wide(const std::uint64_t* a, const std::uint64_t* b, std::size_t n,
                   std::uint64_t* out, std::uint64_t* scratch) {
  if (n <= kToeplitzThreshold) {
    toeplitz_base(a, b, n, out);
    return;
  }
  if (n & 1) {
    // Even leading square, then the last column and the last row directly.
    const std::size_t e = n - 1;
    toeplitz_wide(a + 1, b, e, out, scratch);
    for (std::size_t i = 0; i < e; ++i) {
      const Wide p = clmul(a[i], b[e]);
      out[2 * i] ^= p.lo;
      out[2 * i + 1] ^= p.hi;
    }
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const Wide p = clmul(a[2 * n - 2 - j], b[j]);
      lo ^= p.lo;
      hi ^= p.hi;
    }
    out[2 * e] = lo;
    out[2 * e + 1] = hi;
    return;
  }
  const std::size_t h = n / 2;
  const std::size_t span = 2 * h - 1;
  std::uint64_t* as = scratch;
  std::uint64_t* bs = scratch + span;
  std::uint64_t* tmp = bs + h;
  std::uint64_t* next = tmp + 2 * h;

  std::memcpy(as, a, span * sizeof(std::uint64_t));
  xor_into(as, a + h, span);
  toeplitz_wide(as, b + h, h, out, next);

  std::memcpy(as, a + 2 * h, span * sizeof(std::uint64_t));
  xor_into(as, a + h, span);
  toeplitz_wide(as, b, h, out + 2 * h, next);

  std::memcpy(bs, b, h * sizeof(std::uint64_t));
  xor_into(bs, b + h, h);
  toeplitz_wide(a + h, bs, h, tmp, next);
  xor_into(out, tmp, 2 * h);
  xor_into(out + 2 * h, tmp, 2 * h);
}

}  // namespace

Wide clmul(std::uint64_t a, std::uint64_t b) noexcept {
#ifdef QRNG_HAVE_X86
  if (kHardwareClmul) {
    return clmul_hw(a, b);
  }
#endif
  return clmul_portable(a, b);
}

bool has_hardware_clmul() noexcept { return kHardwareClmul; }

void multiply_schoolbook(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                         std::span<std::uint64_t> out) {
  if (out.size() != a.size() + b.size()) {
    throw Error(ErrorKind::kParameter, "product buffer must hold |a| + |b| words");
  }
  schoolbook_portable(a.data(), a.size(), b.data(), b.size(), out.data());
}

void multiply(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
              std::span<std::uint64_t> out) {
  if (out.size() != a.size() + b.size()) {
    throw Error(ErrorKind::kParameter, "product buffer must hold |a| + |b| words");
  }
  std::fill(out.begin(), out.end(), 0);
  if (a.empty() || b.empty()) {
    return;
  }
  if (a.size() < b.size()) {
    std::swap(a, b);
  }
  const std::size_t k = b.size();
  if (k <= kKaratsubaThreshold) {
    schoolbook(a.data(), a.size(), b.data(), b.size(), out.data());
    return;
  }
  // Cut the longer operand into k-word chunks and accumulate balanced products.
  std::vector<std::uint64_t> chunk(k);
  std::vector<std::uint64_t> product(2 * k);
  std::vector<std::uint64_t> scratch(8 * k + 64);
  for (std::size_t offset = 0; offset < a.size(); offset += k) {
    const std::size_t len = std::min(k, a.size() - offset);
    const std::uint64_t* src = a.data() + offset;
    if (len < k) {
      std::fill(chunk.begin(), chunk.end(), 0);
      std::copy(src, src + len, chunk.begin());
      src = chunk.data();
    }
    karatsuba(src, b.data(), k, product.data(), scratch.data());
    const std::size_t usable = std::min(2 * k, out.size() - offset);
    xor_into(out.data() + offset, product.data(), usable);
  }
}

std::vector<std::uint64_t> product_window(std::span<const std::uint64_t> a,
                                          std::span<const std::uint64_t> b, std::size_t first,
                                          std::size_t count) {
  std::vector<std::uint64_t> result(count, 0);
  if (count == 0 || a.empty() || b.empty()) {
    return result;
  }
  // Row i of the window is coefficient first + i: sum_j a[first + i - j] (x) b[j].
  const std::size_t n = std::max(count, b.size());
  std::vector<std::uint64_t> bpad(n, 0);
  std::copy(b.begin(), b.end(), bpad.begin());
  std::vector<std::uint64_t> abuf(2 * n - 1, 0);
  const auto na = static_cast<std::ptrdiff_t>(a.size());
  const auto origin = static_cast<std::ptrdiff_t>(first) - static_cast<std::ptrdiff_t>(n) + 1;
  for (std::size_t t = 0; t < abuf.size(); ++t) {
    const std::ptrdiff_t src = origin + static_cast<std::ptrdiff_t>(t);
    if (src >= 0 && src < na) {
      abuf[t] = a[static_cast<std::size_t>(src)];
    }
  }
  std::vector<std::uint64_t> wide(2 * n);
  std::vector<std::uint64_t> scratch(10 * n + 64);
  toeplitz_wide(abuf.data(), bpad.data(), n, wide.data(), scratch.data());

  // High half of coefficient first - 1 spills into the first word.
  std::uint64_t carry = 0;
  if (first > 0) {
    for (std::size_t j = 0; j < b.size() && j <= first - 1; ++j) {
      const std::size_t k = first - 1 - j;
      if (k < a.size()) {
        carry ^= clmul(a[k], b[j]).hi;
      }
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    result[i] = wide[2 * i] ^ carry;
    carry = wide[2 * i + 1];
  }
  return result;
}

std::vector<std::uint64_t> multiply(std::span<const std::uint64_t> a,
                                    std::span<const std::uint64_t> b) {
  std::vector<std::uint64_t> out(a.size() + b.size());
  multiply(a, b, out);
  return out;
}

}  // namespace qrng::gf2
