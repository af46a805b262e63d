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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrng/certifier.hpp"
#include "qrng/coincidence.hpp"
#include "qrng/source.hpp"

namespace qrng {

struct ExtractorConfig {
  std::size_t n_block = 1'000'000;
  double epsilon = 0x1.0p-50;
  /// Packed bit file holding the Toeplitz seed; empty draws one from the OS.
  std::filesystem::path seed_path;
};

struct BatteryConfig {
  std::size_t n_sequences = 80;
  std::size_t seq_len = 1'000'000;
  double significance = 0.01;
};

/// Everything one pipeline run needs.
///
/// Text form, one `key = value` per line, `#` starts a comment:
///
///   [source]
///   pump_power_mw = 1.0
///   pair_rate_coeff = 1e5
///   alpha = 0.7071067811865476      # or hwp_deg = 22.5
///   beta = 0.7071067811865476
///   noise_p = 1
///   det_efficiency = 1              # one value, or six for U1,U2,D1,D2,C1,C2
///   dark_rate_hz = 0                # same
///   jitter_sigma_ps = 350
///   dead_time_ps = 0
///   duration_ps = 1000000000000
///   rng_seed = 1
///   schedule = chsh                 # or "theta_c1:theta_c2, ..." in degrees
///   dwell_ps = 1000000000
///   [coincidence]
///   window_ps = 1000
///   [certifier]
///   block = 100000
///   angles = 0, 45, 67.5, 22.5      # a, a', b, b'
///   sigma_margin = 3
///   g2_threshold = 2
///   [extractor]
///   n_block = 1000000
///   epsilon = 2^-50
///   seed_path =
///   [battery]
///   n_sequences = 80
///   seq_len = 1000000
///   significance = 0.01
///   [run]
///   output_dir = out
///
/// Keys may also be written flat as `section.key = value`.
struct RunConfig {
  SourceConfig source;
  CoincidenceConfig coincidence;
  CertifierConfig certifier;
  /// Explicit analyzer settings; empty means the CHSH schedule built from
  /// certifier.angles.
  std::vector<AnalyzerSetting> schedule_settings;
  Picoseconds dwell_ps = 1'000'000'000;
  ExtractorConfig extractor;
  BatteryConfig battery;
  std::filesystem::path output_dir = "out";

  /// Fills source.analyzer_schedule and certifier.coincidence from the other
  /// fields; call after any edit.
  void resolve();
  /// Throws kConfig when any component is invalid.
  void validate() const;
};

/// Parses the text form. Unknown keys and malformed values throw kConfig.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Text form that parse_config reads back to an equal configuration.
std::string serialize_config(const RunConfig& config);

/// Command-line overrides applied on top of a loaded configuration.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> pump_power_mw;
  std::optional<double> window_ns;
  std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

}  // namespace qrng
