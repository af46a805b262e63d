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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "qrng/config.hpp"
#include "qrng/error.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/timetag.hpp"

namespace qrng {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<ErrorKind> kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qrng_pipeline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

RunConfig small_bell(const fs::path& out) {
  RunConfig c;
  c.source.pair_rate_coeff = 1.8e6;
  c.source.duration_ps = kPicosPerSecond;
  c.source.rng_seed = 5;
  c.extractor.n_block = 500'000;
  c.battery.n_sequences = 4;
  c.battery.seq_len = 100'000;
  c.output_dir = out;
  c.resolve();
  return c;
}

TEST(Config, ParseSectionsAndFlatKeys) {
  const RunConfig c = parse_config(R"(
# comment
[source]
pump_power_mw = 12.4   # trailing comment
hwp_deg = 45
noise_p = 0.9
det_efficiency = 0.5
dark_rate_hz = 1, 2, 3, 4, 5, 6
schedule = 0:0, 45:45
[coincidence]
window_ps = 1500
extractor.epsilon = 2^-40
[battery]
n_sequences = 20
)");
  EXPECT_EQ(c.source.pump_power_mw, 12.4);
  EXPECT_EQ(c.source.state.alpha, 1.0);
  EXPECT_EQ(c.source.state.beta, 0.0);
  EXPECT_EQ(c.source.state.noise_p, 0.9);
  EXPECT_EQ(c.source.det_efficiency[3], 0.5);
  EXPECT_EQ(c.source.dark_rate_hz[5], 6.0);
  ASSERT_EQ(c.source.analyzer_schedule.settings.size(), 2u);
  EXPECT_EQ(c.source.analyzer_schedule.settings[1].theta_c2, 45.0);
  EXPECT_EQ(c.coincidence.window_ps, 1500u);
  EXPECT_EQ(c.certifier.coincidence.window_ps, 1500u);
  EXPECT_EQ(c.extractor.epsilon, std::ldexp(1.0, -40));
  EXPECT_EQ(c.battery.n_sequences, 20u);
  EXPECT_EQ(RunConfig{}.source.analyzer_schedule.settings.size(), 1u);
  EXPECT_EQ(parse_config("").source.analyzer_schedule.settings.size(), 16u);
}

TEST(Config, Errors) {
  EXPECT_EQ(kind_of([] { parse_config("[source]\nbogus = 1\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("[source\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("source.pump_power_mw\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("source.pump_power_mw = abc\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("source.hwp_deg = 50\n"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("source.pump_power_mw = -1\n").validate(); }),
            ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_config("source.alpha = 0.9\nsource.beta = 0.9\n").validate(); }),
            ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/qrng.conf"); }), ErrorKind::kIo);
}

TEST(Config, SerializeRoundTrip) {
  RunConfig c;
  c.source.pump_power_mw = 0.1 + 0.2;
  c.source.state = TwoPhotonState::from_alpha(0.3, 0.77);
  c.source.det_efficiency = {0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0};
  c.source.rng_seed = 0xFFFFFFFFFFFFull;
  c.schedule_settings = {{0, 22.5}, {90, 112.5}};
  c.coincidence.window_ps = 777;
  c.extractor.epsilon = std::ldexp(1.0, -60);
  c.extractor.seed_path = "/tmp/seed.bits";
  c.output_dir = "/tmp/somewhere";
  c.resolve();
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.source.pump_power_mw, c.source.pump_power_mw);
  EXPECT_EQ(back.source.state.alpha, c.source.state.alpha);
  EXPECT_EQ(back.source.state.beta, c.source.state.beta);
  EXPECT_EQ(back.source.det_efficiency, c.source.det_efficiency);
  EXPECT_EQ(back.source.analyzer_schedule.settings, c.source.analyzer_schedule.settings);
  EXPECT_EQ(back.extractor.epsilon, c.extractor.epsilon);
  EXPECT_EQ(back.output_dir, c.output_dir);
}

TEST(Config, Overrides) {
  RunConfig c;
  ConfigOverrides o;
  o.seed = 99;
  o.pump_power_mw = 3.5;
  o.window_ns = 1.5;
  o.output_dir = "x";
  apply_overrides(c, o);
  EXPECT_EQ(c.source.rng_seed, 99u);
  EXPECT_EQ(c.source.pump_power_mw, 3.5);
  EXPECT_EQ(c.coincidence.window_ps, 1500u);
  EXPECT_EQ(c.certifier.coincidence.window_ps, 1500u);
  EXPECT_EQ(c.output_dir, "x");
  ConfigOverrides bad;
  bad.window_ns = 0;
  EXPECT_EQ(kind_of([&] { apply_overrides(c, bad); }), ErrorKind::kConfig);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kResource), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kFormat), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kTruncation), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kCorruption), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kLength), 1);
}

TEST(Digest, Sha256KnownValues) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Acquisition, StreamingMatchesWholeStream) {
  SourceConfig s;
  s.pair_rate_coeff = 1e6;
  s.dark_rate_hz.fill(5e4);
  s.duration_ps = 300'000'000'000;
  s.analyzer_schedule = chsh_schedule({}, 1'000'000'000);
  const TagStream stream = generate_events(s);
  const Acquisition whole = acquire(stream, CoincidenceConfig{});
  const Acquisition streamed = acquire(s, CoincidenceConfig{});
  EXPECT_EQ(whole.raw_bits, streamed.raw_bits);
  EXPECT_EQ(whole.bit_times, streamed.bit_times);
  EXPECT_EQ(whole.cert_events, streamed.cert_events);
  EXPECT_EQ(whole.singles, streamed.singles);
  EXPECT_EQ(whole.n_tags, stream.size());

  AcquisitionBuilder builder(CoincidenceConfig{}, stream.duration());
  const auto& tags = stream.tags();
  for (std::size_t i = 0; i < tags.size(); i += 777) {
    builder.push(std::span(tags).subspan(i, std::min<std::size_t>(777, tags.size() - i)));
  }
  const Acquisition pieces = builder.finish();
  EXPECT_EQ(pieces.raw_bits, whole.raw_bits);
  EXPECT_EQ(pieces.cert_events, whole.cert_events);
}

TEST(Simulate, FileDeterminismAndRates) {
  const fs::path dir = scratch("simulate");
  RunConfig c;
  c.source.pair_rate_coeff = 3e5;
  c.source.dark_rate_hz.fill(1000);
  c.output_dir = dir;
  c.resolve();
  const json first = json::parse(cmd_simulate(c));
  const json second = json::parse(cmd_simulate(c));
  EXPECT_EQ(first["sha256"], second["sha256"]);
  for (const auto& [name, ch] : first["channels"].items()) {
    EXPECT_LT(std::abs(ch["z"].get<double>()), 4.0) << name;
  }
  const TagStream s = read_tag_file(dir / "tags.qtt");
  EXPECT_EQ(s.size(), first["tags"].get<std::size_t>());

  c.source.duration_ps = 0;
  cmd_simulate(c);
  EXPECT_EQ(read_tag_file(dir / "tags.qtt").size(), 0u);
  EXPECT_EQ(fs::file_size(dir / "tags.qtt"), kTagFileHeaderSize);
}

TEST(Stages, ChainMatchesRun) {
  const fs::path dir = scratch("stages");
  RunConfig c = small_bell(dir);
  cmd_simulate(c);
  const json co = json::parse(cmd_coincide(dir / "tags.qtt", c));
  EXPECT_GT(co["raw_bits"].get<std::size_t>(), 1'000'000u);
  EXPECT_GT(co["pairs"]["U1-D2"]["car"].get<double>(), 100.0);
  const json cert = json::parse(cmd_certify(dir / "tags.qtt", c));
  EXPECT_EQ(cert["verdict"], "CERTIFIED_BELL");
  const json ex = json::parse(cmd_extract(dir / "raw_bits.bits", c, 1.0));
  EXPECT_EQ(ex["seed"]["origin"], "os_entropy");
  EXPECT_GE(ex["ratio"].get<double>(), 0.97);
  const BatteryReport report = cmd_test(dir / "extracted.bits", c);
  EXPECT_EQ(report.n_sequences, 4u);
  EXPECT_NE(format_battery_table(report).find("frequency"), std::string::npos);
  cmd_export(dir / "extracted.bits", ExportFormat::kAscii01, dir / "x.txt");
  EXPECT_EQ(fs::file_size(dir / "x.txt"), read_bit_file(dir / "extracted.bits").size());
  EXPECT_EQ(kind_of([&] { cmd_coincide(dir / "missing.qtt", c); }), ErrorKind::kIo);
}

TEST(Run, BellStateCertifiedAndReproducibleFromManifest) {
  const fs::path dir = scratch("run_bell");
  RunConfig c = small_bell(dir / "a");
  std::ostringstream log;
  const RunResult r = cmd_run(c, RunOptions{false, &log});
  ASSERT_EQ(r.exit_code, 0) << r.failed_stage << ": " << r.message;
  EXPECT_EQ(r.verdict, Verdict::kCertifiedBell);
  EXPECT_NEAR(r.S, 2.0 * std::sqrt(2.0), 0.05);
  EXPECT_GE(r.h_min, 0.97);
  EXPECT_TRUE(r.battery_pass.has_value());
  EXPECT_FALSE(r.uncertified_output);
  for (const char* f : {"raw_bits.bits", "certification.json", "extracted.bits",
                        "extraction.json", "battery.json", "manifest.json", "toeplitz_seed.bits"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  const json manifest = read_json(r.manifest_path);
  EXPECT_EQ(manifest["certification"]["verdict"], "CERTIFIED_BELL");
  EXPECT_EQ(manifest["extraction_refused"], false);

  RunConfig again = config_from_manifest(r.manifest_path);
  again.output_dir = dir / "b";
  const RunResult r2 = cmd_run(again);
  ASSERT_EQ(r2.exit_code, 0) << r2.message;
  EXPECT_EQ(r2.output_digests, r.output_digests);
  EXPECT_EQ(r2.summary_line, r.summary_line);
  for (const char* f : {"certification.json", "extraction.json", "battery.json"}) {
    EXPECT_EQ(sha256_file(dir / "a" / f), sha256_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(read_json(r2.manifest_path)["extractor_seed"]["origin"], "file");
}

TEST(Run, ProductStateFallsBackToG2) {
  const fs::path dir = scratch("run_hh");
  RunConfig c = small_bell(dir);
  c.source.state = state_from_hwp(45);
  const RunResult r = cmd_run(c);
  ASSERT_EQ(r.exit_code, 0) << r.message;
  EXPECT_EQ(r.verdict, Verdict::kCertifiedG2);
  EXPECT_NEAR(r.S, std::sqrt(2.0), 0.05);
  EXPECT_GT(r.g2, 2.0);
  EXPECT_GT(r.extracted_bits, 0u);
}

TEST(Run, DarkOnlyRefusedUnlessForced) {
  const fs::path dir = scratch("run_dark");
  RunConfig c;
  c.source.pair_rate_coeff = 0;
  c.source.dark_rate_hz.fill(1e6);
  c.source.duration_ps = 3 * kPicosPerSecond;
  c.extractor.n_block = 10'000;
  c.battery.n_sequences = 20;
  c.battery.seq_len = 1000;
  c.output_dir = dir;
  c.resolve();
  const RunResult refused = cmd_run(c);
  EXPECT_EQ(refused.exit_code, kExitCertificationRefused);
  EXPECT_EQ(refused.failed_stage, "certify");
  EXPECT_EQ(refused.verdict, Verdict::kUncertified);
  EXPECT_FALSE(fs::exists(dir / "extracted.bits"));
  EXPECT_EQ(read_json(dir / "manifest.json")["extraction_refused"], true);

  const RunResult forced = cmd_run(c, RunOptions{true, nullptr});
  ASSERT_EQ(forced.exit_code, 0) << forced.message;
  EXPECT_TRUE(forced.uncertified_output);
  EXPECT_GT(forced.extracted_bits, 0u);
  const json manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest["uncertified_output"], true);
  EXPECT_EQ(read_json(dir / "extraction.json")["uncertified"], true);
}

TEST(Run, StageFailureNamesTheStage) {
  const fs::path dir = scratch("run_fail");
  RunConfig c = small_bell(dir);
  c.extractor.n_block = 100'000'000;  // more than the run produces
  const RunResult r = cmd_run(c);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.failed_stage, "extract");
  c.source.pump_power_mw = -1;
  EXPECT_EQ(cmd_run(c).exit_code, 2);
}

TEST(Sweep, NeedsTwoValuesAndReportsTrend) {
  RunConfig c = small_bell(scratch("sweep"));
  const std::vector<double> one{1.0};
  EXPECT_EQ(kind_of([&] { sweep(c, SweepParameter::kAlpha, one); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { parse_sweep_parameter("temperature"); }), ErrorKind::kConfig);
  EXPECT_EQ(parse_sweep_parameter("window_tau"), SweepParameter::kWindowTau);

  const std::vector<double> alphas{0.3, 1 / std::sqrt(2.0), 0.95};
  const auto points = sweep(c, SweepParameter::kAlpha, alphas);
  ASSERT_EQ(points.size(), 3u);
  for (const auto& p : points) EXPECT_TRUE(p.error.empty()) << p.error;
  EXPECT_GT(points[1].S, points[0].S);
  EXPECT_GT(points[1].S, points[2].S);
  const std::string csv = sweep_csv(SweepParameter::kAlpha, points);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,S,S_stderr,V,h_min,mbps,verdict,error");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Fringe, VisibilityRisesWithNoiseParameter) {
  double last = -1;
  for (double p : {0.5, 0.7, 0.9}) {
    SourceConfig s;
    s.state.noise_p = p;
    s.pair_rate_coeff = 3e5;
    s.duration_ps = 9 * kPicosPerSecond;
    const double v = fringe_scan(s, CoincidenceConfig{}).visibility;
    EXPECT_GT(v, last);
    EXPECT_NEAR(v, p, 0.03);
    last = v;
  }
}

}  // namespace
}  // namespace qrng
