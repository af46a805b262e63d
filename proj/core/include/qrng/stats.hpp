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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrng/bit_sequence.hpp"

namespace qrng {

/// a_k for k = 1..max_lag, the normalized autocovariance of the bits.
/// Throws kLength unless bits.size() > 10 max_lag, kDomain for a constant
/// sequence.
std::vector<double> autocorr(const BitSequence& bits, std::size_t max_lag);

inline constexpr std::array<std::string_view, 8> kTestIds = {
    "frequency",           "block_frequency",     "runs",   "longest_run",
    "cumulative_sums_fwd", "cumulative_sums_rev", "serial", "approximate_entropy"};

struct TestParams {
  std::size_t block_frequency_m = 128;
  std::size_t serial_m = 2;
  std::size_t approximate_entropy_m = 2;
};

struct TestResult {
  std::string test_id;
  double p_value = 0;
  bool pass = false;
  /// Secondary P-values (serial: the second-difference statistic).
  std::vector<double> aux;
};

/// One SP 800-22 test. Throws kParameter for an unknown id, kLength below the
/// per-test minimum length.
TestResult run_test(std::string_view test_id, const BitSequence& bits, double significance = 0.01,
                    const TestParams& params = {});

/// Monobit P-value, erfc(|S_n| / sqrt(2n)), without the 100-bit minimum that
/// run_test applies. Throws kLength for an empty sequence.
double frequency_p_value(const BitSequence& bits);

/// Upper regularized incomplete gamma Q(a, x).
double igamc(double a, double x);

/// Chi-square over ten equal P-value bins, P_T = Q(9/2, chi2/2). Throws
/// kSampleSize below kMinUniformitySamples.
inline constexpr std::size_t kMinUniformitySamples = 55;
double pvalue_uniformity(std::span<const double> pvalues);
/// Same statistic without the sample-size requirement.
double pvalue_uniformity_unchecked(std::span<const double> pvalues);

inline constexpr double kUniformityThreshold = 1e-4;

/// p +/- 3 sqrt(p (1 - p) / n) with p = 1 - significance.
std::pair<double, double> proportion_range(std::size_t n_sequences, double significance);

struct TestSummary {
  std::string test_id;
  std::vector<double> p_values;  // one per sequence, in sequence order
  std::size_t passed = 0;
  double proportion = 0;
  double uniformity_p = 0;
  bool uniformity_reliable = false;  // at least kMinUniformitySamples sequences
  bool proportion_ok = false;
  bool uniformity_ok = false;
  bool pass = false;
};

struct BatteryReport {
  std::size_t n_sequences = 0;
  std::size_t seq_len = 0;
  double significance = 0.01;
  std::pair<double, double> range{};
  std::vector<TestSummary> tests;  // kTestIds order
  bool pass = false;
};

/// Splits the first n_sequences * seq_len bits into sequences and runs every
/// test on each. Throws kInsufficientData when bits are short.
BatteryReport run_battery(const BitSequence& bits, std::size_t n_sequences, std::size_t seq_len,
                          double significance = 0.01, const TestParams& params = {});

enum class ExportFormat : std::uint8_t { kRawPacked, kAscii01 };

/// Throws kParameter for an unknown name.
ExportFormat parse_export_format(std::string_view name);
std::vector<std::uint8_t> export_bits(const BitSequence& bits, ExportFormat format);
/// Inverse of export_bits; raw_packed needs the bit count.
BitSequence import_bits(std::span<const std::uint8_t> bytes, ExportFormat format,
                        std::size_t n_bits);

}  // namespace qrng
