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

// qrng: command-line front end for the simulate -> coincide -> certify ->
// extract -> test pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrng/config.hpp"
#include "qrng/error.hpp"
#include "qrng/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> pump_power;
  std::optional<double> window_ns;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "configuration file");
    cmd->add_option("--seed", seed, "override source.rng_seed");
    cmd->add_option("--pump-power", pump_power, "override source.pump_power_mw");
    cmd->add_option("--window-ns", window_ns, "override the coincidence window (ns)");
    cmd->add_option("-o,--out", out, "output directory");
  }

  qrng::RunConfig load() const {
    qrng::RunConfig config = config_path.empty() ? qrng::RunConfig{} : qrng::load_config(config_path);
    if (config_path.empty()) {
      config.resolve();
    }
    qrng::ConfigOverrides o;
    o.seed = seed;
    o.pump_power_mw = pump_power;
    o.window_ns = window_ns;
    if (out) {
      o.output_dir = *out;
    }
    qrng::apply_overrides(config, o);
    return config;
  }
};

int fail(std::string_view stage, const qrng::Error& e) {
  std::cerr << "qrng: " << stage << " failed: " << e.what() << "\n";
  return qrng::exit_code_for(e.kind());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrng-forge: simulated entangled-photon QRNG pipeline"};
  app.set_version_flag("--version", std::string(qrng::tool_version()));
  app.require_subcommand(1);

  CommonFlags common;
  std::string input;
  bool force = false;
  std::string manifest;
  std::string param;
  std::vector<double> values;
  std::string format = "ascii01";
  std::string output;
  double seconds = 0.0;

  auto* simulate = app.add_subcommand("simulate", "write a QTT1 tag file and rate report");
  common.attach(simulate);

  auto* coincide = app.add_subcommand("coincide", "match a tag file into raw bits");
  common.attach(coincide);
  coincide->add_option("-i,--input", input, "QTT1 tag file")->required();

  auto* certify = app.add_subcommand("certify", "CHSH / g2 certification of a tag file");
  common.attach(certify);
  certify->add_option("-i,--input", input, "QTT1 tag file")->required();

  auto* extract = app.add_subcommand("extract", "Toeplitz extraction of a raw bit file");
  common.attach(extract);
  extract->add_option("-i,--input", input, "bit file")->required();
  extract->add_option("--seconds", seconds, "acquisition time for the bit-rate report");

  auto* test = app.add_subcommand("test", "statistical battery on a bit file");
  common.attach(test);
  test->add_option("-i,--input", input, "bit file")->required();

  auto* run = app.add_subcommand("run", "full pipeline with manifest");
  common.attach(run);
  run->add_flag("--force", force, "extract even when the run is UNCERTIFIED");
  run->add_option("--manifest", manifest, "replay the configuration stored in a run manifest");

  auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  common.attach(sweep);
  sweep->add_option("--param", param, "pump_power | window_tau | alpha")->required();
  sweep->add_option("--values", values, "values (window_tau in ns)")->required()->delimiter(',');

  auto* exp = app.add_subcommand("export", "export a bit file");
  exp->add_option("-i,--input", input, "bit file")->required();
  exp->add_option("--format", format, "ascii01 | raw_packed");
  exp->add_option("-o,--output", output, "destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qrng::kExitConfig;
  }

  std::string stage = "config";
  try {
    if (*exp) {
      stage = "export";
      qrng::cmd_export(input, qrng::parse_export_format(format), output);
      return 0;
    }
    qrng::RunConfig config;
    if (*run && !manifest.empty()) {
      config = qrng::config_from_manifest(manifest);
      qrng::ConfigOverrides o;
      o.seed = common.seed;
      o.pump_power_mw = common.pump_power;
      o.window_ns = common.window_ns;
      if (common.out) {
        o.output_dir = *common.out;
      }
      qrng::apply_overrides(config, o);
    } else {
      config = common.load();
    }

    if (*simulate) {
      stage = "simulate";
      std::cout << qrng::cmd_simulate(config) << "\n";
    } else if (*coincide) {
      stage = "coincide";
      std::cout << qrng::cmd_coincide(input, config) << "\n";
    } else if (*certify) {
      stage = "certify";
      std::cout << qrng::cmd_certify(input, config) << "\n";
    } else if (*extract) {
      stage = "extract";
      std::cout << qrng::cmd_extract(input, config, seconds) << "\n";
    } else if (*test) {
      stage = "test";
      const auto report = qrng::cmd_test(input, config);
      std::cout << qrng::format_battery_table(report);
    } else if (*run) {
      qrng::RunOptions options;
      options.force = force;
      options.log = &std::cerr;
      const auto result = qrng::cmd_run(config, options);
      if (result.exit_code != 0) {
        std::cerr << "qrng: " << result.failed_stage << " failed: " << result.message << "\n";
      }
      if (!result.summary_line.empty()) {
        std::cout << result.summary_line << "\n";
      }
      if (!result.manifest_path.empty()) {
        std::cout << "manifest: " << result.manifest_path.string() << "\n";
      }
      return result.exit_code;
    } else if (*sweep) {
      stage = "sweep";
      const auto which = qrng::parse_sweep_parameter(param);
      const auto points = qrng::sweep(config, which, values);
      const std::string csv = qrng::sweep_csv(which, points);
      std::filesystem::create_directories(config.output_dir);
      const auto path = config.output_dir / "sweep.csv";
      qrng::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()),
                                              csv.size()));
      std::cout << csv;
    }
  } catch (const qrng::Error& e) {
    return fail(stage, e);
  } catch (const std::exception& e) {
    std::cerr << "qrng: " << stage << " failed: " << e.what() << "\n";
    return qrng::kExitStageFailure;
  }
  return 0;
}
