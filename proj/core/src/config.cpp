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

#include "qrng/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "qrng/error.hpp"
#include "qrng/timetag.hpp"

namespace qrng {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::kConfig,
              "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

double parse_double(std::string_view key, std::string_view v) {
  // "2^-50" style powers of two are accepted for epsilon-like values.
  if (const auto caret = v.find('^'); caret != std::string_view::npos) {
    const double base = parse_double(key, trim(v.substr(0, caret)));
    const double exponent = parse_double(key, trim(v.substr(caret + 1)));
    return std::pow(base, exponent);
  }
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_value(key, v);
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && ptr == v.data() + v.size() && !v.empty()) {
    return out;
  }
  // Accept integral scientific notation such as 1e12.
  const double d = parse_double(key, v);
  if (d < 0 || d >= 18446744073709551616.0 || std::floor(d) != d) {
    bad_value(key, v);
  }
  return static_cast<std::uint64_t>(d);
}

PerChannel<double> parse_per_channel(std::string_view key, std::string_view v) {
  const auto parts = split(v, ',');
  PerChannel<double> out{};
  if (parts.size() == 1) {
    out.fill(parse_double(key, parts[0]));
  } else if (parts.size() == kChannelCount) {
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      out[i] = parse_double(key, parts[i]);
    }
  } else {
    bad_value(key, v);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_per_channel(const PerChannel<double>& v) {
  bool uniform = true;
  for (const double x : v) {
    uniform = uniform && x == v[0];
  }
  if (uniform) {
    return format_double(v[0]);
  }
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? ", " : "") + format_double(v[i]);
  }
  return out;
}

void set_key(RunConfig& c, std::string_view key, std::string_view v, std::optional<double>& hwp) {
  SourceConfig& s = c.source;
  if (key == "source.pump_power_mw") {
    s.pump_power_mw = parse_double(key, v);
  } else if (key == "source.pair_rate_coeff") {
    s.pair_rate_coeff = parse_double(key, v);
  } else if (key == "source.alpha") {
    s.state.alpha = parse_double(key, v);
  } else if (key == "source.beta") {
    s.state.beta = parse_double(key, v);
  } else if (key == "source.noise_p") {
    s.state.noise_p = parse_double(key, v);
  } else if (key == "source.hwp_deg") {
    hwp = parse_double(key, v);
  } else if (key == "source.det_efficiency") {
    s.det_efficiency = parse_per_channel(key, v);
  } else if (key == "source.dark_rate_hz") {
    s.dark_rate_hz = parse_per_channel(key, v);
  } else if (key == "source.jitter_sigma_ps") {
    s.jitter_sigma_ps = parse_double(key, v);
  } else if (key == "source.dead_time_ps") {
    s.dead_time_ps = parse_u64(key, v);
  } else if (key == "source.duration_ps") {
    s.duration_ps = parse_u64(key, v);
  } else if (key == "source.rng_seed") {
    s.rng_seed = parse_u64(key, v);
  } else if (key == "source.schedule") {
    c.schedule_settings.clear();
    if (v != "chsh") {
      for (const auto item : split(v, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
          bad_value(key, v);
        }
        c.schedule_settings.push_back({parse_double(key, trim(item.substr(0, colon))),
                                       parse_double(key, trim(item.substr(colon + 1)))});
      }
    }
  } else if (key == "source.dwell_ps") {
    c.dwell_ps = parse_u64(key, v);
  } else if (key == "coincidence.window_ps") {
    c.coincidence.window_ps = parse_u64(key, v);
  } else if (key == "certifier.block") {
    c.certifier.block = parse_u64(key, v);
  } else if (key == "certifier.angles") {
    const auto parts = split(v, ',');
    if (parts.size() != 4) {
      bad_value(key, v);
    }
    c.certifier.angles = {parse_double(key, parts[0]), parse_double(key, parts[1]),
                          parse_double(key, parts[2]), parse_double(key, parts[3])};
  } else if (key == "certifier.sigma_margin") {
    c.certifier.sigma_margin = parse_double(key, v);
  } else if (key == "certifier.g2_threshold") {
    c.certifier.g2_threshold = parse_double(key, v);
  } else if (key == "extractor.n_block") {
    c.extractor.n_block = parse_u64(key, v);
  } else if (key == "extractor.epsilon") {
    c.extractor.epsilon = parse_double(key, v);
  } else if (key == "extractor.seed_path") {
    c.extractor.seed_path = std::string(v);
  } else if (key == "battery.n_sequences") {
    c.battery.n_sequences = parse_u64(key, v);
  } else if (key == "battery.seq_len") {
    c.battery.seq_len = parse_u64(key, v);
  } else if (key == "battery.significance") {
    c.battery.significance = parse_double(key, v);
  } else if (key == "run.output_dir") {
    c.output_dir = std::string(v);
  } else {
    throw Error(ErrorKind::kConfig, "unknown configuration key '" + std::string(key) + "'");
  }
}

}  // namespace

void RunConfig::resolve() {
  if (schedule_settings.empty()) {
    source.analyzer_schedule = chsh_schedule(certifier.angles, dwell_ps);
  } else {
    source.analyzer_schedule.settings = schedule_settings;
    source.analyzer_schedule.dwell = dwell_ps;
  }
  certifier.coincidence = coincidence;
}

void RunConfig::validate() const {
  try {
    source.validate();
    coincidence.validate();
    certifier.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  if (extractor.n_block == 0) {
    throw Error(ErrorKind::kConfig, "extractor.n_block must be positive");
  }
  if (!(extractor.epsilon > 0.0 && extractor.epsilon <= 1.0)) {
    throw Error(ErrorKind::kConfig, "extractor.epsilon must lie in (0, 1]");
  }
  if (battery.n_sequences == 0 || battery.seq_len == 0) {
    throw Error(ErrorKind::kConfig, "battery needs n_sequences and seq_len above zero");
  }
  if (!(battery.significance > 0.0 && battery.significance < 1.0)) {
    throw Error(ErrorKind::kConfig, "battery.significance must lie in (0, 1)");
  }
  if (output_dir.empty()) {
    throw Error(ErrorKind::kConfig, "run.output_dir must not be empty");
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::optional<double> hwp;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": bad section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view raw_key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    std::string key = raw_key.find('.') == std::string_view::npos && !section.empty()
                          ? section + "." + std::string(raw_key)
                          : std::string(raw_key);
    set_key(config, key, value, hwp);
  }
  if (hwp) {
    const double noise = config.source.state.noise_p;
    try {
      config.source.state = state_from_hwp(*hwp);
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, e.what());
    }
    config.source.state.noise_p = noise;
  }
  config.resolve();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string serialize_config(const RunConfig& c) {
  const SourceConfig& s = c.source;
  std::ostringstream out;
  out << "[source]\n"
      << "pump_power_mw = " << format_double(s.pump_power_mw) << "\n"
      << "pair_rate_coeff = " << format_double(s.pair_rate_coeff) << "\n"
      << "alpha = " << format_double(s.state.alpha) << "\n"
      << "beta = " << format_double(s.state.beta) << "\n"
      << "noise_p = " << format_double(s.state.noise_p) << "\n"
      << "det_efficiency = " << format_per_channel(s.det_efficiency) << "\n"
      << "dark_rate_hz = " << format_per_channel(s.dark_rate_hz) << "\n"
      << "jitter_sigma_ps = " << format_double(s.jitter_sigma_ps) << "\n"
      << "dead_time_ps = " << s.dead_time_ps << "\n"
      << "duration_ps = " << s.duration_ps << "\n"
      << "rng_seed = " << s.rng_seed << "\n";
  if (c.schedule_settings.empty()) {
    out << "schedule = chsh\n";
  } else {
    out << "schedule = ";
    for (std::size_t i = 0; i < c.schedule_settings.size(); ++i) {
      out << (i ? ", " : "") << format_double(c.schedule_settings[i].theta_c1) << ":"
          << format_double(c.schedule_settings[i].theta_c2);
    }
    out << "\n";
  }
  const ChshAngles& a = c.certifier.angles;
  out << "dwell_ps = " << c.dwell_ps << "\n"
      << "\n[coincidence]\n"
      << "window_ps = " << c.coincidence.window_ps << "\n"
      << "\n[certifier]\n"
      << "block = " << c.certifier.block << "\n"
      << "angles = " << format_double(a.a) << ", " << format_double(a.a_prime) << ", "
      << format_double(a.b) << ", " << format_double(a.b_prime) << "\n"
      << "sigma_margin = " << format_double(c.certifier.sigma_margin) << "\n"
      << "g2_threshold = " << format_double(c.certifier.g2_threshold) << "\n"
      << "\n[extractor]\n"
      << "n_block = " << c.extractor.n_block << "\n"
      << "epsilon = " << format_double(c.extractor.epsilon) << "\n"
      << "seed_path = " << c.extractor.seed_path.string() << "\n"
      << "\n[battery]\n"
      << "n_sequences = " << c.battery.n_sequences << "\n"
      << "seq_len = " << c.battery.seq_len << "\n"
      << "significance = " << format_double(c.battery.significance) << "\n"
      << "\n[run]\n"
      << "output_dir = " << c.output_dir.string() << "\n";
  return out.str();
}

void apply_overrides(RunConfig& config, const ConfigOverrides& o) {
  if (o.seed) {
    config.source.rng_seed = *o.seed;
  }
  if (o.pump_power_mw) {
    config.source.pump_power_mw = *o.pump_power_mw;
  }
  if (o.window_ns) {
    if (!(*o.window_ns > 0.0) || !std::isfinite(*o.window_ns)) {
      throw Error(ErrorKind::kConfig, "--window-ns must be positive");
    }
    config.coincidence.window_ps = static_cast<Picoseconds>(std::llround(*o.window_ns * 1000.0));
  }
  if (o.output_dir) {
    config.output_dir = *o.output_dir;
  }
  config.resolve();
}

}  // namespace qrng
