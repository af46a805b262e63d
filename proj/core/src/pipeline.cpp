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

#include "qrng/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include <openssl/evp.h>

#include "qrng/error.hpp"

#ifndef QRNG_FORGE_VERSION
#define QRNG_FORGE_VERSION "0.0.0"
#endif

namespace qrng {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kCertPair = static_cast<std::size_t>(SectionPair::kC1C2);

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "cannot create output directory " + dir.string());
  }
}

// JSON numbers cannot be NaN or infinite; those become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json block_json(const CertBlock& b) {
  json vis = json::object();
  for (const auto& [k, v] : b.visibility) {
    vis[k] = number(v);
  }
  return {{"t_start_ps", b.t_start},
          {"t_end_ps", b.t_end},
          {"S", number(b.S)},
          {"S_stderr", number(b.S_stderr)},
          {"E", {number(b.correlations[0]), number(b.correlations[1]), number(b.correlations[2]),
                 number(b.correlations[3])}},
          {"visibility", vis},
          {"g2", number(b.g2)},
          {"n_cert_events", b.n_cert_events},
          {"n_c1", b.n_c1},
          {"n_c2", b.n_c2},
          {"full_coverage", b.full_coverage},
          {"verdict", std::string(to_string(b.verdict))}};
}

json certification_json(const CertificationSummary& s, const RunConfig& config) {
  json blocks = json::array();
  for (const auto& b : s.blocks) {
    blocks.push_back(block_json(b));
  }
  json by_verdict = json::object();
  for (const auto& [k, v] : s.bits_by_verdict) {
    by_verdict[k] = v;
  }
  return {{"block_size", config.certifier.block},
          {"sigma_margin", config.certifier.sigma_margin},
          {"g2_threshold", config.certifier.g2_threshold},
          {"g2_convention", "cross-correlation N_c T / (N_a N_b 2 tau)"},
          {"verdict", std::string(to_string(s.verdict))},
          {"aggregate", block_json(s.aggregate)},
          {"bits_by_verdict", by_verdict},
          {"blocks", blocks}};
}

json extraction_json(const ExtractionReport& r) {
  return {{"h_min", r.h_min},       {"per_block_min", r.per_block_min}, {"n", r.n},
          {"m", r.m},               {"ratio", r.ratio},                 {"blocks", r.blocks},
          {"bits_in", r.bits_in},   {"bits_out", r.bits_out},           {"seconds", r.seconds},
          {"mbps", r.mbps},         {"epsilon", r.epsilon}};
}

json battery_json(const BatteryReport& r) {
  json tests = json::array();
  for (const auto& t : r.tests) {
    tests.push_back({{"test_id", t.test_id},
                     {"p_values", t.p_values},
                     {"passed", t.passed},
                     {"proportion", t.proportion},
                     {"uniformity_p", t.uniformity_p},
                     {"uniformity_reliable", t.uniformity_reliable},
                     {"proportion_ok", t.proportion_ok},
                     {"uniformity_ok", t.uniformity_ok},
                     {"pass", t.pass}});
  }
  return {{"n_sequences", r.n_sequences},
          {"seq_len", r.seq_len},
          {"significance", r.significance},
          {"proportion_range", {r.range.first, r.range.second}},
          {"uniformity_threshold", kUniformityThreshold},
          {"tests", tests},
          {"pass", r.pass}};
}

// Time spent at schedule entry k within [0, t).
double exposure_before(const AnalyzerSchedule& s, std::size_t k, Picoseconds t) {
  const Picoseconds cycle = s.dwell * s.settings.size();
  const Picoseconds full = t / cycle;
  const Picoseconds rem = t % cycle;
  const Picoseconds start = k * s.dwell;
  const Picoseconds partial = rem > start ? std::min(rem - start, s.dwell) : 0;
  return static_cast<double>(full * s.dwell + partial);
}

// Seed bits for the extractor: the configured file, or fresh OS entropy saved
// next to the outputs so the run can be replayed.
struct SeedChoice {
  BitSequence bits;
  fs::path path;
  std::string origin;
};

SeedChoice choose_seed(const RunConfig& config) {
  SeedChoice seed;
  if (!config.extractor.seed_path.empty()) {
    seed.path = config.extractor.seed_path;
    seed.bits = read_bit_file(seed.path);
    seed.origin = "file";
    return seed;
  }
  seed.bits = os_entropy_bits(2 * config.extractor.n_block);
  seed.path = fs::absolute(config.output_dir / "toeplitz_seed.bits");
  write_bit_file(seed.path, seed.bits);
  seed.origin = "os_entropy";
  return seed;
}

std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) {
    return "nan";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void log_line(const RunOptions& o, const std::string& line) {
  if (o.log != nullptr) {
    *o.log << line << '\n';
  }
}

}  // namespace

std::string_view tool_version() noexcept { return QRNG_FORGE_VERSION; }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kResource:
      return kExitConfig;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
    case ErrorKind::kCorruption:
    case ErrorKind::kTruncation:
      return kExitIo;
    default:
      return kExitStageFailure;
  }
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kResource, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file_bytes(path)); }

// ---------------------------------------------------------------------------

AcquisitionBuilder::AcquisitionBuilder(const CoincidenceConfig& config, Picoseconds duration)
    : config_(config), matcher_(config) {
  config_.validate();
  acq_.duration = duration;
}

void AcquisitionBuilder::push(std::span<const TimeTag> tags) {
  if (tags.empty()) {
    return;
  }
  // Last index whose predecessor lies more than one window earlier.
  auto find_cut = [this](std::span<const TimeTag> v) {
    for (std::size_t i = v.size(); i-- > 1;) {
      if (v[i].timestamp - v[i - 1].timestamp > config_.window_ps) {
        return i;
      }
    }
    return std::size_t{0};
  };
  if (pending_.empty()) {
    const std::size_t cut = find_cut(tags);
    process(tags.first(cut));
    pending_.assign(tags.begin() + static_cast<std::ptrdiff_t>(cut), tags.end());
    return;
  }
  pending_.insert(pending_.end(), tags.begin(), tags.end());
  const std::size_t cut = find_cut(pending_);
  if (cut > 0) {
    process(std::span(pending_.data(), cut));
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(cut));
  }
}

Acquisition AcquisitionBuilder::finish() {
  process(pending_);
  pending_.clear();
  return std::move(acq_);
}

void AcquisitionBuilder::process(std::span<const TimeTag> tags) {
  if (tags.empty()) {
    return;
  }
  for (auto& v : times_) {
    v.clear();
  }
  for (const TimeTag& t : tags) {
    times_[index_of(t.channel)].push_back(t.timestamp);
  }
  acq_.n_tags += tags.size();
  for (Channel c : kAllChannels) {
    acq_.singles[index_of(c)] += times_[index_of(c)].size();
  }
  const auto& c1 = times_[index_of(Channel::kC1)];
  const auto& c2 = times_[index_of(Channel::kC2)];
  acq_.c1_singles.insert(acq_.c1_singles.end(), c1.begin(), c1.end());
  acq_.c2_singles.insert(acq_.c2_singles.end(), c2.begin(), c2.end());

  std::array<std::vector<CoincidenceEvent>, kSectionPairCount> events;
  for (std::size_t p = 0; p < kSectionPairCount; ++p) {
    const auto [ca, cb] = section_channels(static_cast<SectionPair>(p));
    const auto& ta = times_[index_of(ca)];
    const auto& tb = times_[index_of(cb)];
    auto& sink = events[p];
    matcher_.match(ta, tb, [&](std::size_t ia, std::size_t ib) {
      sink.push_back(CoincidenceEvent{
          std::min(ta[ia], tb[ib]), ca, cb,
          static_cast<std::int64_t>(tb[ib]) - static_cast<std::int64_t>(ta[ia])});
    });
    acq_.pair_counts[p] += sink.size();
  }
  auto by_time = [](const CoincidenceEvent& x, const CoincidenceEvent& y) { return x.time < y.time; };
  auto& cert = events[kCertPair];
  if (!std::is_sorted(cert.begin(), cert.end(), by_time)) {
    std::stable_sort(cert.begin(), cert.end(), by_time);
  }
  acq_.cert_events.insert(acq_.cert_events.end(), cert.begin(), cert.end());

  // Each bit pair is labelled separately, then the two sorted runs are merged.
  std::vector<std::vector<RawBitRecord>> runs;
  for (std::size_t p = 0; p < kSectionPairCount; ++p) {
    if (p != kCertPair) {
      runs.push_back(assign_bits(events[p]));
    }
  }
  std::vector<RawBitRecord> records;
  records.reserve(runs[0].size() + runs[1].size());
  std::merge(runs[0].begin(), runs[0].end(), runs[1].begin(), runs[1].end(),
             std::back_inserter(records), [](const RawBitRecord& x, const RawBitRecord& y) {
               return x.time != y.time ? x.time < y.time : x.bit < y.bit;
             });
  for (const RawBitRecord& r : records) {
    acq_.raw_bits.push_back(r.bit != 0);
    acq_.bit_times.push_back(r.time);
  }
}

Acquisition acquire(const SourceConfig& source, const CoincidenceConfig& coincidence) {
  source.validate();
  EventGenerator generator(source);
  AcquisitionBuilder builder(coincidence, source.duration_ps);
  while (!generator.done()) {
    const auto chunk = generator.next_chunk();
    builder.push(chunk);
  }
  return builder.finish();
}

Acquisition acquire(const TagStream& stream, const CoincidenceConfig& coincidence) {
  AcquisitionBuilder builder(coincidence, stream.duration());
  builder.push(stream.tags());
  return builder.finish();
}

VisibilityFit fringe_scan(SourceConfig source, const CoincidenceConfig& coincidence, double theta_c2,
                          double step_deg) {
  if (!(step_deg > 0.0) || step_deg > 22.5) {
    throw Error(ErrorKind::kParameter, "fringe step must lie in (0, 22.5] degrees");
  }
  AnalyzerSchedule schedule;
  schedule.settings.clear();
  for (double t = 0.0; t < 180.0 - 1e-9; t += step_deg) {
    schedule.settings.push_back({t, theta_c2});
  }
  schedule.dwell = source.analyzer_schedule.dwell;
  source.analyzer_schedule = schedule;
  const Acquisition acq = acquire(source, coincidence);

  std::vector<double> counts(schedule.settings.size(), 0.0);
  for (const CoincidenceEvent& e : acq.cert_events) {
    counts[schedule.index_at(e.time)] += 1.0;
  }
  std::vector<std::pair<double, double>> samples;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double exposure = exposure_before(schedule, k, acq.duration);
    if (exposure > 0.0) {
      samples.emplace_back(schedule.settings[k].theta_c1, counts[k] / exposure * 1e12);
    }
  }
  return visibility(samples);
}

CertificationSummary certify_acquisition(const Acquisition& acq, const RunConfig& config) {
  CertificationSummary s;
  const CertificationData data = acq.certification_data();
  const AnalyzerSchedule& schedule = config.source.analyzer_schedule;
  s.blocks = live_certify(data, schedule, config.certifier);
  s.aggregate = certify_range(data, 0, acq.cert_events.size(), 0, acq.duration, schedule,
                              config.certifier);
  s.verdict = Verdict::kCertifiedBell;
  for (const CertBlock& b : s.blocks) {
    s.verdict = weaker(s.verdict, b.verdict);
  }
  for (Verdict v : {Verdict::kCertifiedBell, Verdict::kCertifiedG2, Verdict::kUncertified}) {
    s.bits_by_verdict[std::string(to_string(v))] = 0;
  }
  for (Verdict v : join_verdicts(acq.bit_times, s.blocks)) {
    ++s.bits_by_verdict[std::string(to_string(v))];
  }
  return s;
}

// ---------------------------------------------------------------------------

RunResult cmd_run(RunConfig config, const RunOptions& options) {
  RunResult result;
  Stopwatch watch;
  json timing = json::object();
  std::string stage = "config";
  try {
    config.resolve();
    config.validate();
    stage = "output";
    ensure_dir(config.output_dir);
    const fs::path out = config.output_dir;

    stage = "acquire";
    log_line(options, "acquire: simulating and matching " +
                          format_fixed(config.source.duration_s(), 3) + " s");
    Acquisition acq = acquire(config.source, config.coincidence);
    timing["acquire"] = watch.lap();
    const double seconds = config.source.duration_s();
    result.raw_bits = acq.raw_bits.size();
    result.raw_rate_bps = seconds > 0.0 ? static_cast<double>(acq.raw_bits.size()) / seconds : 0.0;
    write_bit_file(out / "raw_bits.bits", acq.raw_bits);
    result.output_digests["raw_bits.bits"] = sha256_file(out / "raw_bits.bits");

    stage = "certify";
    const CertificationSummary cert = certify_acquisition(acq, config);
    timing["certify"] = watch.lap();
    result.S = cert.aggregate.S;
    result.S_stderr = cert.aggregate.S_stderr;
    result.g2 = cert.aggregate.g2;
    result.verdict = cert.verdict;
    write_text(out / "certification.json", certification_json(cert, config).dump(2));
    log_line(options, "certify: S = " + format_fixed(result.S, 4) + " +/- " +
                          format_fixed(result.S_stderr, 4) + ", verdict " +
                          std::string(to_string(cert.verdict)));

    json manifest = {{"tool", "qrng-forge"},
                     {"version", std::string(tool_version())},
                     {"rng_seed", config.source.rng_seed},
                     {"forced", options.force}};
    json rates = {{"acquisition_s", seconds},
                  {"raw_bits", result.raw_bits},
                  {"raw_rate_bps", result.raw_rate_bps},
                  {"tags", acq.n_tags}};
    json certification = {{"verdict", std::string(to_string(cert.verdict))},
                          {"S", number(result.S)},
                          {"S_stderr", number(result.S_stderr)},
                          {"g2", number(result.g2)},
                          {"blocks", cert.blocks.size()}};

    RunConfig snapshot = config;
    auto finish_manifest = [&](bool refused) {
      manifest["config_text"] = serialize_config(snapshot);
      manifest["timing_s"] = timing;
      manifest["rates"] = rates;
      manifest["certification"] = certification;
      manifest["extraction_refused"] = refused;
      manifest["uncertified_output"] = result.uncertified_output;
      json digests = json::object();
      for (const auto& [k, v] : result.output_digests) {
        digests[k] = v;
      }
      manifest["outputs"] = digests;
      manifest["summary"] = result.summary_line;
      result.manifest_path = out / "manifest.json";
      write_text(result.manifest_path, manifest.dump(2));
    };

    if (cert.verdict == Verdict::kUncertified && !options.force) {
      result.exit_code = kExitCertificationRefused;
      result.failed_stage = "certify";
      result.message = "run is UNCERTIFIED; extraction refused (use --force to override)";
      result.summary_line = "raw " + std::to_string(result.raw_bits) + " bits, S " +
                            format_fixed(result.S, 4) + ", verdict UNCERTIFIED, extraction refused";
      finish_manifest(true);
      return result;
    }
    result.uncertified_output = cert.verdict == Verdict::kUncertified;

    stage = "extract";
    const SeedChoice seed = choose_seed(config);
    snapshot.extractor.seed_path = fs::absolute(seed.path);
    const std::string seed_digest = sha256_file(seed.path);
    const ExtractionResult ex =
        extract_stream(acq.raw_bits, config.extractor.epsilon, config.extractor.n_block, seed.bits,
                       seconds);
    timing["extract"] = watch.lap();
    result.extracted_bits = ex.report.bits_out;
    result.extracted_mbps = ex.report.mbps;
    result.h_min = ex.report.h_min;
    write_bit_file(out / "extracted.bits", ex.bits);
    result.output_digests["extracted.bits"] = sha256_file(out / "extracted.bits");
    json ex_json = extraction_json(ex.report);
    ex_json["seed"] = {{"path", snapshot.extractor.seed_path.string()}, {"sha256", seed_digest}};
    ex_json["uncertified"] = result.uncertified_output;
    write_text(out / "extraction.json", ex_json.dump(2));
    // Origin lives only in the manifest so a replay reproduces extraction.json.
    manifest["extractor_seed"] = ex_json["seed"];
    manifest["extractor_seed"]["origin"] = seed.origin;
    rates["extracted_bits"] = result.extracted_bits;
    rates["extracted_mbps"] = result.extracted_mbps;
    rates["h_min"] = result.h_min;
    rates["extraction_ratio"] = ex.report.ratio;
    log_line(options, "extract: H_min = " + format_fixed(result.h_min, 4) + ", " +
                          std::to_string(result.extracted_bits) + " bits");

    stage = "battery";
    const std::size_t available = ex.bits.size() / config.battery.seq_len;
    const std::size_t n_seq = std::min(config.battery.n_sequences, available);
    json battery = {{"requested_sequences", config.battery.n_sequences}};
    if (n_seq == 0) {
      battery["skipped"] = "fewer extracted bits than one sequence";
    } else {
      const BatteryReport report =
          run_battery(ex.bits, n_seq, config.battery.seq_len, config.battery.significance);
      result.battery_pass = report.pass;
      json full = battery_json(report);
      full["requested_sequences"] = config.battery.n_sequences;
      write_text(out / "battery.json", full.dump(2));
      battery["n_sequences"] = n_seq;
      battery["pass"] = report.pass;
    }
    timing["battery"] = watch.lap();
    manifest["battery"] = battery;

    std::ostringstream line;
    line << "raw " << result.raw_bits << " bits (" << format_fixed(result.raw_rate_bps / 1e6, 3)
         << " Mbps raw), extracted " << result.extracted_bits << " bits ("
         << format_fixed(result.extracted_mbps, 3) << " Mbps), S = " << format_fixed(result.S, 4)
         << " +/- " << format_fixed(result.S_stderr, 4) << ", H_min = "
         << format_fixed(result.h_min, 4) << ", verdict " << to_string(result.verdict)
         << (result.uncertified_output ? " (forced, output uncertified)" : "");
    result.summary_line = line.str();
    finish_manifest(false);
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.kind());
    result.failed_stage = stage;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitStageFailure;
    result.failed_stage = stage;
    result.message = e.what();
  }
  return result;
}

RunConfig config_from_manifest(const fs::path& manifest_path) {
  const auto bytes = read_file_bytes(manifest_path);
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, "manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.contains("config_text") || !manifest["config_text"].is_string()) {
    throw Error(ErrorKind::kConfig, "manifest lacks a config_text snapshot");
  }
  return parse_config(manifest["config_text"].get<std::string>());
}

// ---------------------------------------------------------------------------

std::string cmd_simulate(const RunConfig& config_in) {
  RunConfig config = config_in;
  config.resolve();
  config.validate();
  ensure_dir(config.output_dir);
  const TagStream stream = generate_events(config.source);
  write_tag_file(config.output_dir / "tags.qtt", stream);

  const RateSummary expected = expected_rates(config.source);
  const double seconds = config.source.duration_s();
  PerChannel<std::uint64_t> counts{};
  for (const TimeTag& t : stream.tags()) {
    ++counts[index_of(t.channel)];
  }
  json channels = json::object();
  for (Channel c : kAllChannels) {
    const double exp_hz = expected.singles_hz[index_of(c)];
    const double meas_hz = seconds > 0.0 ? static_cast<double>(counts[index_of(c)]) / seconds : 0.0;
    const double sigma_hz = seconds > 0.0 ? std::sqrt(exp_hz * seconds) / seconds : 0.0;
    channels[std::string(channel_name(c))] = {
        {"count", counts[index_of(c)]},
        {"rate_hz", meas_hz},
        {"expected_hz", exp_hz},
        {"z", sigma_hz > 0.0 ? json((meas_hz - exp_hz) / sigma_hz) : json(nullptr)}};
  }
  const json report = {{"file", (config.output_dir / "tags.qtt").string()},
                       {"sha256", sha256_file(config.output_dir / "tags.qtt")},
                       {"duration_ps", config.source.duration_ps},
                       {"rng_seed", config.source.rng_seed},
                       {"tags", stream.size()},
                       {"channels", channels}};
  const std::string text = report.dump(2);
  write_text(config.output_dir / "simulate.json", text);
  return text;
}

std::string cmd_coincide(const fs::path& tag_file, const RunConfig& config) {
  const TagStream stream = read_tag_file(tag_file);
  config.coincidence.validate();
  ensure_dir(config.output_dir);
  const Acquisition acq = acquire(stream, config.coincidence);
  write_bit_file(config.output_dir / "raw_bits.bits", acq.raw_bits);

  const double seconds = static_cast<double>(stream.duration()) / 1e12;
  json pairs = json::object();
  for (std::size_t p = 0; p < kSectionPairCount; ++p) {
    const auto [ca, cb] = section_channels(static_cast<SectionPair>(p));
    const double ra = seconds > 0.0 ? static_cast<double>(acq.singles[index_of(ca)]) / seconds : 0.0;
    const double rb = seconds > 0.0 ? static_cast<double>(acq.singles[index_of(cb)]) / seconds : 0.0;
    const double acc_hz = accidental_rate(ra, rb, config.coincidence);
    const double acc_count = acc_hz * seconds;
    pairs[std::string(channel_name(ca)) + "-" + std::string(channel_name(cb))] = {
        {"count", acq.pair_counts[p]},
        {"accidentals_hz", acc_hz},
        {"accidentals_expected", acc_count},
        {"car", acc_count > 0.0 ? json(static_cast<double>(acq.pair_counts[p]) / acc_count)
                                : json(nullptr)}};
  }
  const json report = {{"input", tag_file.string()},
                       {"window_ps", config.coincidence.window_ps},
                       {"duration_ps", stream.duration()},
                       {"pairs", pairs},
                       {"raw_bits", acq.raw_bits.size()},
                       {"raw_bits_sha256", sha256_file(config.output_dir / "raw_bits.bits")}};
  const std::string text = report.dump(2);
  write_text(config.output_dir / "coincidences.json", text);
  return text;
}

std::string cmd_certify(const fs::path& tag_file, const RunConfig& config_in) {
  RunConfig config = config_in;
  config.resolve();
  config.validate();
  const TagStream stream = read_tag_file(tag_file);
  ensure_dir(config.output_dir);
  const Acquisition acq = acquire(stream, config.coincidence);
  const CertificationSummary cert = certify_acquisition(acq, config);
  const std::string text = certification_json(cert, config).dump(2);
  write_text(config.output_dir / "certification.json", text);
  return text;
}

std::string cmd_extract(const fs::path& bit_file, const RunConfig& config, double seconds) {
  const BitSequence raw = read_bit_file(bit_file);
  ensure_dir(config.output_dir);
  const SeedChoice seed = choose_seed(config);
  const ExtractionResult ex =
      extract_stream(raw, config.extractor.epsilon, config.extractor.n_block, seed.bits, seconds);
  write_bit_file(config.output_dir / "extracted.bits", ex.bits);
  json report = extraction_json(ex.report);
  report["seed"] = {{"origin", seed.origin},
                    {"path", fs::absolute(seed.path).string()},
                    {"sha256", sha256_file(seed.path)}};
  report["output_sha256"] = sha256_file(config.output_dir / "extracted.bits");
  const std::string text = report.dump(2);
  write_text(config.output_dir / "extraction.json", text);
  return text;
}

BatteryReport cmd_test(const fs::path& bit_file, const RunConfig& config) {
  const BitSequence bits = read_bit_file(bit_file);
  ensure_dir(config.output_dir);
  const BatteryReport report = run_battery(bits, config.battery.n_sequences, config.battery.seq_len,
                                           config.battery.significance);
  write_text(config.output_dir / "battery.json", battery_json(report).dump(2));
  return report;
}

std::string format_battery_table(const BatteryReport& report) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %10s %12s %8s\n", "test", "proportion", "P-value(U)",
                "result");
  os << buf;
  for (const TestSummary& t : report.tests) {
    std::snprintf(buf, sizeof buf, "%-22s %4zu/%-5zu %12.6f %8s\n", t.test_id.c_str(), t.passed,
                  t.p_values.size(), t.uniformity_p, t.pass ? "PASS" : "FAIL");
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "proportion range (%.4f, %.4f), %zu x %zu bits, overall %s\n",
                report.range.first, report.range.second, report.n_sequences, report.seq_len,
                report.pass ? "PASS" : "FAIL");
  os << buf;
  return os.str();
}

void cmd_export(const fs::path& bit_file, ExportFormat format, const fs::path& output) {
  const BitSequence bits = read_bit_file(bit_file);
  write_file_bytes(output, export_bits(bits, format));
}

// ---------------------------------------------------------------------------

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "pump_power") {
    return SweepParameter::kPumpPower;
  }
  if (name == "window_tau") {
    return SweepParameter::kWindowTau;
  }
  if (name == "alpha") {
    return SweepParameter::kAlpha;
  }
  throw Error(ErrorKind::kConfig, "unknown sweep parameter '" + std::string(name) + "'");
}

std::vector<SweepPoint> sweep(const RunConfig& base, SweepParameter parameter,
                              std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorKind::kConfig, "a sweep needs at least two values");
  }
  std::vector<SweepPoint> points;
  for (const double value : values) {
    SweepPoint point;
    point.value = value;
    try {
      RunConfig config = base;
      switch (parameter) {
        case SweepParameter::kPumpPower:
          config.source.pump_power_mw = value;
          break;
        case SweepParameter::kWindowTau:
          if (!(value > 0.0)) {
            throw Error(ErrorKind::kConfig, "window must be positive");
          }
          config.coincidence.window_ps = static_cast<Picoseconds>(std::llround(value * 1000.0));
          break;
        case SweepParameter::kAlpha:
          config.source.state = TwoPhotonState::from_alpha(value, config.source.state.noise_p);
          break;
      }
      config.resolve();
      config.validate();
      const Acquisition acq = acquire(config.source, config.coincidence);
      const CertificationSummary cert = certify_acquisition(acq, config);
      point.S = cert.aggregate.S;
      point.S_stderr = cert.aggregate.S_stderr;
      point.verdict = cert.verdict;
      point.h_min = std::numeric_limits<double>::quiet_NaN();
      point.mbps = std::numeric_limits<double>::quiet_NaN();
      point.visibility = fringe_scan(config.source, config.coincidence).visibility;
      const EntropyReport entropy = min_entropy(acq.raw_bits);
      point.h_min = entropy.h_min_per_bit;
      const BitSequence seed = config.extractor.seed_path.empty()
                                   ? os_entropy_bits(2 * config.extractor.n_block)
                                   : read_bit_file(config.extractor.seed_path);
      const ExtractionResult ex = extract_stream(acq.raw_bits, config.extractor.epsilon,
                                                 config.extractor.n_block, seed,
                                                 config.source.duration_s());
      point.mbps = ex.report.mbps;
    } catch (const std::exception& e) {
      point.error = e.what();
    }
    points.push_back(point);
  }
  return points;
}

std::string sweep_csv(SweepParameter parameter, std::span<const SweepPoint> points) {
  static constexpr const char* kNames[] = {"pump_power_mw", "window_ns", "alpha"};
  std::ostringstream os;
  os << kNames[static_cast<int>(parameter)] << ",S,S_stderr,V,h_min,mbps,verdict,error\n";
  char buf[256];
  for (const SweepPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.10g,%.6f,%.6f,%.6f,%.6f,%.6f,", p.value, p.S, p.S_stderr,
                  p.visibility, p.h_min, p.mbps);
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << buf << to_string(p.verdict) << "," << err << "\n";
  }
  return os.str();
}

}  // namespace qrng
