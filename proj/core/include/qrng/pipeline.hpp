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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrng/bit_sequence.hpp"
#include "qrng/certifier.hpp"
#include "qrng/coincidence.hpp"
#include "qrng/config.hpp"
#include "qrng/error.hpp"
#include "qrng/extractor.hpp"
#include "qrng/source.hpp"
#include "qrng/stats.hpp"
#include "qrng/timetag.hpp"

namespace qrng {

std::string_view tool_version() noexcept;

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitStageFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitCertificationRefused = 4,
};

/// Config and resource errors -> 2, file errors -> 3, anything else -> 1.
int exit_code_for(ErrorKind kind) noexcept;

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Coincidence-stage output of one acquisition.
struct Acquisition {
  BitSequence raw_bits;
  std::vector<Picoseconds> bit_times;
  std::vector<CoincidenceEvent> cert_events;
  std::vector<Picoseconds> c1_singles;
  std::vector<Picoseconds> c2_singles;
  PerChannel<std::uint64_t> singles{};
  std::array<std::uint64_t, kSectionPairCount> pair_counts{};  // U1D2, U2D1, C1C2
  Picoseconds duration = 0;
  std::uint64_t n_tags = 0;

  CertificationData certification_data() const {
    return {cert_events, c1_singles, c2_singles, duration};
  }
};

/// Incremental coincidence processing of a sorted tag stream.
///
/// Tags arrive in sorted runs; the buffer is cut at the last gap wider than
/// the window, where no coincidence can straddle, and the prefix is matched.
/// The result is identical to matching the whole stream at once.
class AcquisitionBuilder {
 public:
  explicit AcquisitionBuilder(const CoincidenceConfig& config, Picoseconds duration);

  void push(std::span<const TimeTag> tags);
  Acquisition finish();

 private:
  void process(std::span<const TimeTag> tags);

  CoincidenceConfig config_;
  CoincidenceMatcher matcher_;
  Acquisition acq_;
  std::vector<TimeTag> pending_;
  PerChannel<std::vector<Picoseconds>> times_;
};

/// Simulates and matches in one streaming pass.
Acquisition acquire(const SourceConfig& source, const CoincidenceConfig& coincidence);
Acquisition acquire(const TagStream& stream, const CoincidenceConfig& coincidence);

/// D-basis style fringe: C2 fixed at theta_c2, C1 stepped over [0, 180) in
/// `step_deg`. Counts are C1/C2 coincidences per unit exposure.
VisibilityFit fringe_scan(SourceConfig source, const CoincidenceConfig& coincidence,
                          double theta_c2 = 45.0, double step_deg = 10.0);

struct CertificationSummary {
  std::vector<CertBlock> blocks;
  CertBlock aggregate;  // one block over the whole run
  Verdict verdict = Verdict::kUncertified;  // weakest block verdict
  std::map<std::string, std::uint64_t> bits_by_verdict;
};

CertificationSummary certify_acquisition(const Acquisition& acq, const RunConfig& config);

struct RunOptions {
  bool force = false;
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string failed_stage;
  std::string message;
  std::filesystem::path manifest_path;
  std::string summary_line;

  std::uint64_t raw_bits = 0;
  double raw_rate_bps = 0;
  std::uint64_t extracted_bits = 0;
  double extracted_mbps = 0;
  double S = 0;
  double S_stderr = 0;
  double g2 = 0;
  double h_min = 0;
  Verdict verdict = Verdict::kUncertified;
  bool uncertified_output = false;
  std::optional<bool> battery_pass;
  std::map<std::string, std::string> output_digests;  // file name -> sha256
};

/// Full pipeline: simulate, coincide, certify, extract, test, manifest.
/// Never throws; failures are reported through exit_code and failed_stage.
RunResult cmd_run(RunConfig config, const RunOptions& options = {});

/// Configuration snapshot stored in a run manifest.
RunConfig config_from_manifest(const std::filesystem::path& manifest_path);

/// Writes <out>/tags.qtt and <out>/simulate.json; returns the report JSON text.
std::string cmd_simulate(const RunConfig& config);

/// Matches a tag file; writes <out>/raw_bits.bits and <out>/coincidences.json.
std::string cmd_coincide(const std::filesystem::path& tag_file, const RunConfig& config);

/// Certifies a tag file against the configured schedule; writes
/// <out>/certification.json.
std::string cmd_certify(const std::filesystem::path& tag_file, const RunConfig& config);

/// Extracts a raw bit file; writes <out>/extracted.bits and
/// <out>/extraction.json. `seconds` is the acquisition time used for the rate.
std::string cmd_extract(const std::filesystem::path& bit_file, const RunConfig& config,
                        double seconds);

/// Runs the battery on a bit file; writes <out>/battery.json.
BatteryReport cmd_test(const std::filesystem::path& bit_file, const RunConfig& config);

/// Final P-value table, one line per test.
std::string format_battery_table(const BatteryReport& report);

void cmd_export(const std::filesystem::path& bit_file, ExportFormat format,
                const std::filesystem::path& output);

enum class SweepParameter : std::uint8_t { kPumpPower, kWindowTau, kAlpha };

/// Accepts pump_power (mW), window_tau (ns) and alpha.
SweepParameter parse_sweep_parameter(std::string_view name);

struct SweepPoint {
  double value = 0;
  double S = 0;
  double S_stderr = 0;
  double visibility = 0;
  double h_min = 0;
  double mbps = 0;
  Verdict verdict = Verdict::kUncertified;
  std::string error;  // empty on success
};

/// One simulate/coincide/certify/extract pass per value, plus a fringe scan
/// for V. Per-point failures are recorded and the sweep continues. Throws
/// kConfig with fewer than two values.
std::vector<SweepPoint> sweep(const RunConfig& config, SweepParameter parameter,
                              std::span<const double> values);

std::string sweep_csv(SweepParameter parameter, std::span<const SweepPoint> points);

}  // namespace qrng
