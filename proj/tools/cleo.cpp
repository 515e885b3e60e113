// Copyright 2026 The CLEO Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cleo: synthetic continual-segmentation experiments from the command line.
//
//   cleo presets [--groups]
//   cleo generate --preset cs_ex2 --seed 1 --out data/cs_ex2
//   cleo run --preset cs_ex2 --method moon --seed 1 --data data/cs_ex2 \
//            --out runs/moon
//   cleo report runs/finetune runs/moon > table.csv
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cleo/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::string sequence;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
};

void add_experiment_flags(CLI::App* cmd, Flags& f, bool training) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--preset", f.preset, "shipped preset name");
  cmd->add_option("--sequence", f.sequence, "task sequence JSON file");
  cmd->add_option("--seed", f.seed, "64-bit seed");
  cmd->add_option("--out", f.out, "output directory");
  if (!training) return;
  cmd->add_option("--method", f.method,
                  "finetune | joint | kd_standard | mib | moon");
  cmd->add_option("--data", f.data, "dataset directory from 'generate'");
  cmd->add_option("--lambda", f.lambda, "distillation weight");
  cmd->add_option("--epochs", f.epochs, "epochs per task");
}

cleo::ExperimentConfig resolve(const Flags& f) {
  cleo::ExperimentConfig cfg =
      f.config.empty() ? cleo::ExperimentConfig{} : cleo::load_config_file(f.config);
  if (!f.preset.empty() || !f.sequence.empty()) {
    cfg.preset = f.preset;
    cfg.sequence_path = f.sequence;
  }
  if (!f.method.empty()) cfg.method = cleo::parse_method(f.method);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (f.lambda) cfg.train.lambda = *f.lambda;
  if (f.epochs) cfg.epochs = *f.epochs;
  return cfg;
}

std::string fmt(const nlohmann::json& v) {
  return v.is_null() ? "n/a" : cleo::csv::number(v.get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual learning of evolving ontologies on synthetic scenes"};
  app.require_subcommand(1);

  bool list_groups = false;
  auto* presets = app.add_subcommand("presets", "list the shipped task sequences");
  presets->add_flag("--groups", list_groups, "also list class-group members");

  Flags gen_flags, run_flags;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_experiment_flags(generate, gen_flags, false);
  auto* run = app.add_subcommand("run", "train one method over a task sequence");
  add_experiment_flags(run, run_flags, true);

  std::vector<std::string> run_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge run summaries into one CSV");
  report->add_option("runs", run_dirs, "run directories")->required();
  report->add_option("--out", report_out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(cleo::ErrorKind::kConfig);
  }

  try {
    if (*presets) {
      cleo::cmd_presets(std::cout, list_groups);
    } else if (*generate) {
      const auto receipt = cleo::cmd_generate(resolve(gen_flags));
      std::cout << "wrote " << receipt.at("files").size() << " files to "
                << resolve(gen_flags).out << '\n';
    } else if (*run) {
      const auto summary = cleo::cmd_run(resolve(run_flags));
      const auto& g = summary.at("groups");
      std::cout << summary.at("method").get<std::string>()
                << "  unsplit=" << fmt(g.at("unsplit"))
                << "  split=" << fmt(g.at("split"))
                << "  retained=" << fmt(g.at("retained"))
                << "  all=" << fmt(g.at("all")) << '\n';
    } else if (*report) {
      if (report_out.empty()) {
        cleo::cmd_report(run_dirs, std::cout);
      } else {
        std::ofstream out(report_out, std::ios::binary);
        if (!out) throw cleo::ConfigError("cannot write '" + report_out + "'");
        cleo::cmd_report(run_dirs, out);
      }
    }
  } catch (const cleo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(cleo::ErrorKind::kConfig);
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(cleo::ErrorKind::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
