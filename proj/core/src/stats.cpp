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

#include "qrng/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "qrng/error.hpp"
#include "qrng/parallel.hpp"

namespace qrng {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void require_length(const BitSequence& bits, std::size_t minimum, std::string_view test) {
  if (bits.size() < minimum) {
    throw Error(ErrorKind::kLength, std::string(test) + " needs at least " +
                                        std::to_string(minimum) + " bits, got " +
                                        std::to_string(bits.size()));
  }
}

std::size_t floor_log2(std::size_t n) { return n == 0 ? 0 : std::bit_width(n) - 1; }

// Bits [begin, begin + 64) as one word; bits past size() read as zero.
std::uint64_t word_at(std::span<const std::uint64_t> words, std::size_t begin) {
  const std::size_t w = begin >> 6;
  const std::size_t s = begin & 63;
  std::uint64_t v = w < words.size() ? words[w] >> s : 0;
  if (s != 0 && w + 1 < words.size()) {
    v |= words[w + 1] << (64 - s);
  }
  return v;
}

std::size_t ones_in(const BitSequence& bits, std::size_t begin, std::size_t length) {
  std::size_t total = 0;
  const auto words = bits.words();
  std::size_t i = 0;
  for (; i + 64 <= length; i += 64) {
    total += static_cast<std::size_t>(std::popcount(word_at(words, begin + i)));
  }
  if (i < length) {
    const std::uint64_t mask = (std::uint64_t{1} << (length - i)) - 1;
    total += static_cast<std::size_t>(std::popcount(word_at(words, begin + i) & mask));
  }
  return total;
}

// Counts of every overlapping m-bit pattern, the sequence wrapped by m - 1
// bits. Pattern value reads the first bit as the most significant.
std::vector<std::uint64_t> pattern_counts(const BitSequence& bits, std::size_t m) {
  std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
  if (m == 0) {
    counts[0] = bits.size();
    return counts;
  }
  const std::size_t n = bits.size();
  const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
  std::uint64_t reg = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    reg = (reg << 1) | static_cast<std::uint64_t>(bits[i % n]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    reg = ((reg << 1) | static_cast<std::uint64_t>(bits[(i + m - 1) % n])) & mask;
    ++counts[reg];
  }
  return counts;
}

double psi_squared(const BitSequence& bits, std::size_t m) {
  if (m == 0) {
    return 0.0;
  }
  const auto counts = pattern_counts(bits, m);
  const double n = static_cast<double>(bits.size());
  double sum = 0.0;
  for (const auto c : counts) {
    sum += static_cast<double>(c) * static_cast<double>(c);
  }
  return sum * std::ldexp(1.0, static_cast<int>(m)) / n - n;
}

double phi(const BitSequence& bits, std::size_t m) {
  if (m == 0) {
    return 0.0;
  }
  const auto counts = pattern_counts(bits, m);
  const double n = static_cast<double>(bits.size());
  double sum = 0.0;
  for (const auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      sum += p * std::log(p);
    }
  }
  return sum;
}

double frequency_p(const BitSequence& bits) {
  require_length(bits, 100, "frequency");
  return frequency_p_value(bits);
}

double block_frequency_p(const BitSequence& bits, std::size_t m) {
  if (m == 0) {
    throw Error(ErrorKind::kParameter, "block_frequency block size must be positive");
  }
  require_length(bits, std::max<std::size_t>(100, m), "block_frequency");
  const std::size_t blocks = bits.size() / m;
  double chi2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const double pi = static_cast<double>(ones_in(bits, b * m, m)) / static_cast<double>(m);
    chi2 += (pi - 0.5) * (pi - 0.5);
  }
  chi2 *= 4.0 * static_cast<double>(m);
  return igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0);
}

double runs_p(const BitSequence& bits) {
  require_length(bits, 100, "runs");
  const std::size_t n = bits.size();
  const double nd = static_cast<double>(n);
  const double pi = static_cast<double>(bits.count_ones()) / nd;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
    return 0.0;  // frequency pre-test failed
  }
  // Transitions: popcount of x ^ (x >> 1) over the first n - 1 positions.
  const auto words = bits.words();
  std::size_t transitions = 0;
  std::size_t i = 0;
  for (; i + 64 <= n - 1; i += 64) {
    transitions += static_cast<std::size_t>(std::popcount(word_at(words, i) ^ word_at(words, i + 1)));
  }
  if (i < n - 1) {
    const std::uint64_t mask = (std::uint64_t{1} << (n - 1 - i)) - 1;
    transitions += static_cast<std::size_t>(
        std::popcount((word_at(words, i) ^ word_at(words, i + 1)) & mask));
  }
  const double v = static_cast<double>(transitions) + 1.0;
  const double q = pi * (1.0 - pi);
  return std::erfc(std::abs(v - 2.0 * nd * q) / (2.0 * std::sqrt(2.0 * nd) * q));
}

double longest_run_p(const BitSequence& bits) {
  require_length(bits, 128, "longest_run");
  const std::size_t n = bits.size();
  std::size_t m;
  std::size_t v_lo;
  std::vector<double> pi;
  if (n < 6272) {
    m = 8;
    v_lo = 1;
    pi = {0.21484375, 0.3671875, 0.23046875, 0.1875};
  } else if (n < 750000) {
    m = 128;
    v_lo = 4;
    pi = {0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847};
  } else {
    m = 10000;
    v_lo = 10;
    pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  }
  const std::size_t k = pi.size() - 1;
  const std::size_t blocks = n / m;
  std::vector<double> nu(pi.size(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t run = 0;
    std::size_t longest = 0;
    for (std::size_t i = b * m; i < (b + 1) * m; ++i) {
      run = bits[i] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    const std::size_t cls = std::clamp(longest, v_lo, v_lo + k) - v_lo;
    nu[cls] += 1.0;
  }
  const double nb = static_cast<double>(blocks);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    chi2 += (nu[i] - nb * pi[i]) * (nu[i] - nb * pi[i]) / (nb * pi[i]);
  }
  return igamc(static_cast<double>(k) / 2.0, chi2 / 2.0);
}

double cumulative_sums_p(const BitSequence& bits, bool reverse) {
  require_length(bits, 100, reverse ? "cumulative_sums_rev" : "cumulative_sums_fwd");
  const std::size_t n = bits.size();
  long long s = 0;
  long long z = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bit = reverse ? bits[n - 1 - i] : bits[i];
    s += bit ? 1 : -1;
    z = std::max(z, s < 0 ? -s : s);
  }
  const long long nn = static_cast<long long>(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double zd = static_cast<double>(z);
  // Summation limits use truncating integer division as in the NIST reference code.
  double sum1 = 0.0;
  for (long long k = (-nn / z + 1) / 4; k <= (nn / z - 1) / 4; ++k) {
    const double kd = static_cast<double>(k);
    sum1 += normal_cdf((4.0 * kd + 1.0) * zd / sqrt_n) - normal_cdf((4.0 * kd - 1.0) * zd / sqrt_n);
  }
  double sum2 = 0.0;
  for (long long k = (-nn / z - 3) / 4; k <= (nn / z - 1) / 4; ++k) {
    const double kd = static_cast<double>(k);
    sum2 += normal_cdf((4.0 * kd + 3.0) * zd / sqrt_n) - normal_cdf((4.0 * kd + 1.0) * zd / sqrt_n);
  }
  return std::clamp(1.0 - sum1 + sum2, 0.0, 1.0);
}

std::pair<double, double> serial_p(const BitSequence& bits, std::size_t m) {
  require_length(bits, 100, "serial");
  if (m < 2 || m + 2 >= floor_log2(bits.size())) {
    throw Error(ErrorKind::kLength, "serial test needs 2 <= m < floor(log2 n) - 2");
  }
  const double p0 = psi_squared(bits, m);
  const double p1 = psi_squared(bits, m - 1);
  const double p2 = psi_squared(bits, m - 2);
  const double del1 = p0 - p1;
  const double del2 = p0 - 2.0 * p1 + p2;
  return {igamc(std::ldexp(1.0, static_cast<int>(m) - 2), del1 / 2.0),
          igamc(std::ldexp(1.0, static_cast<int>(m) - 3), del2 / 2.0)};
}

double approximate_entropy_p(const BitSequence& bits, std::size_t m) {
  require_length(bits, 100, "approximate_entropy");
  if (m < 1 || m + 5 >= floor_log2(bits.size())) {
    throw Error(ErrorKind::kLength, "approximate_entropy needs 1 <= m < floor(log2 n) - 5");
  }
  const double apen = phi(bits, m) - phi(bits, m + 1);
  const double n = static_cast<double>(bits.size());
  const double chi2 = 2.0 * n * (std::numbers::ln2 - apen);
  return igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi2 / 2.0);
}

}  // namespace

double frequency_p_value(const BitSequence& bits) {
  require_length(bits, 1, "frequency");
  const double n = static_cast<double>(bits.size());
  const double s = 2.0 * static_cast<double>(bits.count_ones()) - n;
  return std::erfc(std::abs(s) / std::sqrt(2.0 * n));
}

double igamc(double a, double x) {
  if (x <= 0.0) {
    return 1.0;
  }
  return boost::math::gamma_q(a, x);
}

std::vector<double> autocorr(const BitSequence& bits, std::size_t max_lag) {
  const std::size_t n = bits.size();
  if (max_lag == 0 || n <= 10 * max_lag) {
    throw Error(ErrorKind::kLength, "autocorrelation needs more than 10 * max_lag bits");
  }
  const std::size_t ones = bits.count_ones();
  if (ones == 0 || ones == n) {
    throw Error(ErrorKind::kDomain, "autocorrelation of a constant sequence is undefined");
  }
  const double mean = static_cast<double>(ones) / static_cast<double>(n);
  const double denom = static_cast<double>(ones) * (1.0 - mean);
  const auto words = bits.words();

  std::vector<double> out(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const std::size_t len = n - k;
    std::size_t both = 0;
    std::size_t i = 0;
    for (; i + 64 <= len; i += 64) {
      both += static_cast<std::size_t>(std::popcount(word_at(words, i) & word_at(words, i + k)));
    }
    if (i < len) {
      const std::uint64_t mask = (std::uint64_t{1} << (len - i)) - 1;
      both += static_cast<std::size_t>(
          std::popcount(word_at(words, i) & word_at(words, i + k) & mask));
    }
    const double head = static_cast<double>(ones - ones_in(bits, len, k));  // x_0 .. x_{n-k-1}
    const double tail = static_cast<double>(ones - ones_in(bits, 0, k));    // x_k .. x_{n-1}
    const double num = static_cast<double>(both) - mean * (head + tail) +
                       static_cast<double>(len) * mean * mean;
    out[k - 1] = num / denom;
  }
  return out;
}

TestResult run_test(std::string_view test_id, const BitSequence& bits, double significance,
                    const TestParams& params) {
  if (!(significance > 0.0 && significance < 1.0)) {
    throw Error(ErrorKind::kParameter, "significance must lie in (0, 1)");
  }
  TestResult r;
  r.test_id = std::string(test_id);
  if (test_id == "frequency") {
    r.p_value = frequency_p(bits);
  } else if (test_id == "block_frequency") {
    r.p_value = block_frequency_p(bits, params.block_frequency_m);
  } else if (test_id == "runs") {
    r.p_value = runs_p(bits);
  } else if (test_id == "longest_run") {
    r.p_value = longest_run_p(bits);
  } else if (test_id == "cumulative_sums_fwd") {
    r.p_value = cumulative_sums_p(bits, false);
  } else if (test_id == "cumulative_sums_rev") {
    r.p_value = cumulative_sums_p(bits, true);
  } else if (test_id == "serial") {
    const auto [p1, p2] = serial_p(bits, params.serial_m);
    r.p_value = p1;
    r.aux.push_back(p2);
  } else if (test_id == "approximate_entropy") {
    r.p_value = approximate_entropy_p(bits, params.approximate_entropy_m);
  } else {
    throw Error(ErrorKind::kParameter, "unknown test id '" + std::string(test_id) + "'");
  }
  r.pass = r.p_value >= significance;
  return r;
}

double pvalue_uniformity_unchecked(std::span<const double> pvalues) {
  if (pvalues.empty()) {
    throw Error(ErrorKind::kSampleSize, "no P-values");
  }
  std::array<double, 10> bins{};
  for (const double p : pvalues) {
    const auto bin = static_cast<std::size_t>(std::clamp(p * 10.0, 0.0, 9.0));
    bins[bin] += 1.0;
  }
  const double expected = static_cast<double>(pvalues.size()) / 10.0;
  double chi2 = 0.0;
  for (const double f : bins) {
    chi2 += (f - expected) * (f - expected) / expected;
  }
  return igamc(4.5, chi2 / 2.0);
}

double pvalue_uniformity(std::span<const double> pvalues) {
  if (pvalues.size() < kMinUniformitySamples) {
    throw Error(ErrorKind::kSampleSize, "uniformity needs at least " +
                                            std::to_string(kMinUniformitySamples) +
                                            " P-values, got " + std::to_string(pvalues.size()));
  }
  return pvalue_uniformity_unchecked(pvalues);
}

std::pair<double, double> proportion_range(std::size_t n_sequences, double significance) {
  if (n_sequences == 0 || !(significance > 0.0 && significance < 1.0)) {
    throw Error(ErrorKind::kParameter, "proportion range needs n >= 1 and 0 < significance < 1");
  }
  const double p = 1.0 - significance;
  const double half = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n_sequences));
  return {p - half, p + half};
}

BatteryReport run_battery(const BitSequence& bits, std::size_t n_sequences, std::size_t seq_len,
                          double significance, const TestParams& params) {
  if (n_sequences == 0 || seq_len == 0) {
    throw Error(ErrorKind::kParameter, "battery needs at least one non-empty sequence");
  }
  if (bits.size() / seq_len < n_sequences) {
    throw Error(ErrorKind::kInsufficientData,
                "battery needs " + std::to_string(n_sequences) + " x " + std::to_string(seq_len) +
                    " bits, input holds " + std::to_string(bits.size()));
  }
  BatteryReport report;
  report.n_sequences = n_sequences;
  report.seq_len = seq_len;
  report.significance = significance;
  report.range = proportion_range(n_sequences, significance);

  std::vector<std::vector<TestResult>> per_seq(n_sequences);
  parallel_for(n_sequences, [&](std::size_t s) {
    const BitSequence seq = bits.slice(s * seq_len, seq_len);
    per_seq[s].reserve(kTestIds.size());
    for (const auto id : kTestIds) {
      per_seq[s].push_back(run_test(id, seq, significance, params));
    }
  });

  report.pass = true;
  for (std::size_t t = 0; t < kTestIds.size(); ++t) {
    TestSummary summary;
    summary.test_id = std::string(kTestIds[t]);
    for (std::size_t s = 0; s < n_sequences; ++s) {
      summary.p_values.push_back(per_seq[s][t].p_value);
      summary.passed += per_seq[s][t].pass ? 1 : 0;
    }
    summary.proportion = static_cast<double>(summary.passed) / static_cast<double>(n_sequences);
    summary.uniformity_p = pvalue_uniformity_unchecked(summary.p_values);
    summary.uniformity_reliable = n_sequences >= kMinUniformitySamples;
    summary.proportion_ok =
        summary.proportion >= report.range.first && summary.proportion <= report.range.second;
    summary.uniformity_ok = summary.uniformity_p >= kUniformityThreshold;
    summary.pass = summary.proportion_ok && summary.uniformity_ok;
    report.pass = report.pass && summary.pass;
    report.tests.push_back(std::move(summary));
  }
  return report;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "raw_packed") {
    return ExportFormat::kRawPacked;
  }
  if (name == "ascii01") {
    return ExportFormat::kAscii01;
  }
  throw Error(ErrorKind::kParameter, "unknown export format '" + std::string(name) + "'");
}

std::vector<std::uint8_t> export_bits(const BitSequence& bits, ExportFormat format) {
  if (format == ExportFormat::kRawPacked) {
    return bits.to_bytes();
  }
  std::vector<std::uint8_t> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out[i] = bits[i] ? '1' : '0';
  }
  return out;
}

BitSequence import_bits(std::span<const std::uint8_t> bytes, ExportFormat format,
                        std::size_t n_bits) {
  if (format == ExportFormat::kRawPacked) {
    return BitSequence::from_bytes(bytes, n_bits);
  }
  return BitSequence::from_string(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace qrng
