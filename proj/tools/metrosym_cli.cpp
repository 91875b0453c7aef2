// Copyright 2026 The metrosym Authors
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

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "metrosym/commands.hpp"
#include "metrosym/config.hpp"
#include "metrosym/io.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (YAML)")->required();
  cmd->add_option("--out", f.out, "output directory (default: $METROSYM_OUT, else the config's output)");
  cmd->add_option("--seed", f.seed, "override the config seed");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "metrosym: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metrosym: multi-parameter quantum estimation experiments"};
  app.set_version_flag("--version", metrosym::kVersion);
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* qfim = app.add_subcommand("qfim", "QFIM, CFIM, spectrum and singularity report at the truth");
  CLI::App* phase = app.add_subcommand("phase-diagram", "det QFIM over two parameter axes");
  CLI::App* bayes = app.add_subcommand("bayes-run", "seeded Bayesian estimation on a posterior grid");
  CLI::App* scan = app.add_subcommand("transform-scan", "effective Cramer-Rao scan in transformed coordinates");
  for (CLI::App* cmd : {qfim, phase, bayes, scan}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    metrosym::ExperimentConfig config = metrosym::load_config(flags.config);
    metrosym::RunOptions options;
    options.threads = flags.threads;
    if (app.get_subcommands().front()->count("--seed")) options.seed = flags.seed;
    options.out_dir = flags.out;
    if (options.out_dir.empty()) {
      const char* env = std::getenv("METROSYM_OUT");
      options.out_dir = env && *env ? env : config.output;
    }
    if (options.out_dir.empty()) options.out_dir = ".";

    if (qfim->parsed()) {
      auto r = metrosym::cmd_qfim(config, options);
      std::cout << "rank " << r.spectrum.rank << ", det " << metrosym::format_double(r.determinant)
                << (r.singular ? ", singular" : ", non-singular") << "\n";
    } else if (phase->parsed()) {
      auto rows = metrosym::cmd_phase_diagram(config, options);
      std::cout << rows.size() << " phase-diagram cells\n";
    } else if (bayes->parsed()) {
      auto r = metrosym::cmd_bayes_run(config, options);
      const auto& last = r.trace.back().moments;
      std::cout << "M " << r.record.m << ", mean (" << last.mean(0) << ", " << last.mean(1) << ")"
                << (r.singular ? ", singular: " + std::to_string(r.ridge.size()) + " ridge points" : "") << "\n";
    } else if (scan->parsed()) {
      auto r = metrosym::cmd_transform_scan(config, options);
      const auto& row = r.rows.back();
      std::cout << "M " << row.m << ", inv_var/crb_reference " << row.inv_var / row.crb_reference << "\n";
    }
    std::cout << "output: " << options.out_dir << "\n";
  } catch (const metrosym::ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const metrosym::IoError& e) {
    return report("i/o error", e, kIo);
  } catch (const metrosym::NumericalError& e) {
    return report("numerical failure", e, kNumerical);
  } catch (const std::invalid_argument& e) {
    return report("invalid input", e, kConfig);
  } catch (const std::exception& e) {
    return report("numerical failure", e, kNumerical);
  }
  return kOk;
}
