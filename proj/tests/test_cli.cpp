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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrosym/commands.hpp"
#include "metrosym/config.hpp"
#include "metrosym/io.hpp"

using namespace metrosym;
namespace fs = std::filesystem;

namespace {

const std::string kSmallBayes = R"(model:
  kind: XY_RING
  n_sites: 4
  fixed: {h: 1.0}
  free: [lambda, gamma]
state:
  kind: ground
  parity_sector: 1
truth: [0.5, 0.6]
grid:
  - {min: 0.0, max: 2.0, n: 41}
  - {min: 0.0, max: 2.0, n: 41}
m_total: 500
batch_size: 100
seed: 9
checkpoints: [0, 200]
)";

std::string scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "metrosym_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const std::string& dir, const std::string& text) {
  std::string path = dir + "/config.yaml";
  write_text_file(path, text);
  return path;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(METROSYM_CLI) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

ExperimentConfig shipped(const std::string& name) {
  return load_config(std::string(METROSYM_CONFIG_DIR) + "/" + name);
}

std::string data_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

nlohmann::json without_timestamp(const std::string& path) {
  auto j = nlohmann::json::parse(slurp(path));
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("unknown keys are rejected with their line") {
  std::string text = kSmallBayes + "bayes_mode: fast\n";
  try {
    parse_config(text, "small.yaml");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("small.yaml:17") != std::string::npos);
    CHECK(msg.find("bayes_mode") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"(model:
  kind: XY_RING
  free: [lambda, gamma]
  fixed: {h: 1.0, gama: 2.0}
truth: [0.5, 0.6]
)"),
                  ConfigError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(kSmallBayes));
  // truth outside the grid
  CHECK_THROWS_AS(parse_config(R"(model: {kind: XY_RING, fixed: {h: 1.0}, free: [lambda, gamma]}
truth: [2.5, 0.6]
)"),
                  ConfigError);
  // truth length
  CHECK_THROWS_AS(parse_config(R"(model: {kind: XY_RING, fixed: {h: 1.0}, free: [lambda, gamma]}
truth: [0.5]
)"),
                  ConfigError);
  // thermal state without T
  CHECK_THROWS_AS(parse_config(R"(model: {kind: XY_RING, fixed: {h: 1.0}, free: [lambda, gamma]}
state: {kind: thermal}
truth: [0.5, 0.6]
)"),
                  ConfigError);
  // batch larger than the run
  CHECK_THROWS_AS(parse_config(R"(model: {kind: XY_RING, fixed: {h: 1.0}, free: [lambda, gamma]}
truth: [0.5, 0.6]
m_total: 50
batch_size: 100
)"),
                  ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const auto& entry : fs::directory_iterator(METROSYM_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}

TEST_CASE("qfim report flags singularity") {
  RunOptions quiet;
  QfimReport lh = cmd_qfim(shipped("ring_lambda_h_ridge.yaml"), quiet);
  CHECK(lh.singular);
  CHECK(lh.spectrum.rank == 1);

  ExperimentConfig lg = shipped("ring_lambda_gamma.yaml");
  lg.truth << 0.5, 0.6;
  QfimReport r = cmd_qfim(lg, quiet);
  CHECK_FALSE(r.singular);
  CHECK(r.spectrum.rank == 2);
  CHECK(r.determinant > 0.0);
  CHECK(r.json["singular"] == false);
  CHECK(r.json.contains("config"));
  CHECK(r.json["version"] == kVersion);
}

TEST_CASE("zero coupling is a structured numerical error") {
  ExperimentConfig c = parse_config(R"(model: {kind: XY_RING, fixed: {h: 0.0}, free: [lambda, gamma]}
truth: [0.0, 0.5]
)");
  CHECK_THROWS_AS(cmd_qfim(c, RunOptions{}), NumericalError);
}

TEST_CASE("cli exit codes") {
  std::string dir = scratch("exit_codes");
  std::string good = write_config(dir, kSmallBayes);
  CHECK(run_cli("qfim --config " + good + " --out " + dir + "/ok") == 0);
  CHECK(fs::exists(dir + "/ok/qfim.json"));

  write_text_file(dir + "/bad.yaml", kSmallBayes + "extra: 1\n");
  CHECK(run_cli("qfim --config " + dir + "/bad.yaml") == 2);
  CHECK(run_cli("qfim") == 2);

  write_text_file(dir + "/zero.yaml", R"(model: {kind: XY_RING, fixed: {h: 0.0}, free: [lambda, gamma]}
truth: [0.0, 0.5]
)");
  CHECK(run_cli("qfim --config " + dir + "/zero.yaml --out " + dir + "/zero") == 3);

  CHECK(run_cli("qfim --config " + dir + "/does_not_exist.yaml") == 4);
  write_text_file(dir + "/blocker", "");
  CHECK(run_cli("qfim --config " + good + " --out " + dir + "/blocker/sub") == 4);
}

TEST_CASE("METROSYM_OUT sets the default output directory") {
  std::string dir = scratch("env_out");
  std::string good = write_config(dir, kSmallBayes);
  std::string cmd = "METROSYM_OUT=" + dir + "/env " + std::string(METROSYM_CLI) + " qfim --config " + good +
                    " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir + "/env/qfim.json"));
}

TEST_CASE("bayes-run outputs are reproducible") {
  std::string dir = scratch("repro");
  std::string cfg = write_config(dir, kSmallBayes);
  const std::vector<std::string> files = {"trace.csv", "record.json", "posterior_M0.json", "posterior_M200.json",
                                         "posterior_M500.json"};
  REQUIRE(run_cli("bayes-run --config " + cfg + " --out " + dir + "/a") == 0);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(dir + "/a/" + f));
  REQUIRE(run_cli("bayes-run --config " + cfg + " --out " + dir + "/a --threads 3") == 0);
  CHECK(slurp(dir + "/a/trace.csv") == first[0]);
  for (std::size_t i = 1; i < files.size(); ++i) {
    CAPTURE(files[i]);
    auto a = nlohmann::json::parse(first[i]);
    a.erase("timestamp");
    CHECK(a == without_timestamp(dir + "/a/" + files[i]));
  }

  std::string trace = slurp(dir + "/a/trace.csv");
  CHECK(trace.find("# metrosym " + std::string(kVersion)) == 0);
  CHECK(trace.find("\nM,mean_1,var_1,mean_2,var_2,cov_12\n") != std::string::npos);
  auto post = nlohmann::json::parse(slurp(dir + "/a/posterior_M200.json"));
  CHECK(post["config"]["seed"] == 9);
  CHECK(post["version"] == kVersion);

  REQUIRE(run_cli("bayes-run --config " + cfg + " --out " + dir + "/c --seed 10") == 0);
  CHECK(data_lines(slurp(dir + "/a/trace.csv")) != data_lines(slurp(dir + "/c/trace.csv")));
}

TEST_CASE("bayes-run at M = 0 returns the prior") {
  ExperimentConfig c = parse_config(kSmallBayes);
  c.m_total = 0;
  c.checkpoints.clear();
  BayesRunResult r = cmd_bayes_run(c, RunOptions{});
  PosteriorGrid prior = uniform_prior(c.grid);
  CHECK(r.record.m == 0);
  CHECK((r.posterior.log_weights - prior.log_weights).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].moments.mean(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.trace[0].moments.covariance(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("bayes-run on a singular model writes a ridge") {
  std::string dir = scratch("ridge");
  ExperimentConfig c = shipped("ring_lambda_h_ridge.yaml");
  c.grid = {GridAxis{0.0, 2.0, 41}, GridAxis{0.0, 2.0, 41}};
  c.m_total = 2000;
  c.batch_size = 500;
  c.checkpoints.clear();
  RunOptions o;
  o.out_dir = dir;
  BayesRunResult r = cmd_bayes_run(c, o);
  CHECK(r.singular);
  CHECK_FALSE(r.ridge.empty());
  CHECK(fs::exists(dir + "/ridge.csv"));
  CHECK(slurp(dir + "/ridge.csv").find("\nsweep,argmax,mass\n") != std::string::npos);
}

TEST_CASE("transform-scan smoke run") {
  std::string dir = scratch("scan");
  ExperimentConfig c = shipped("ring_lambda_h_transform.yaml");
  c.transform->m_schedule = {100};
  c.transform->n_seeds = 1;
  RunOptions o;
  o.out_dir = dir;
  auto t0 = std::chrono::steady_clock::now();
  ScanResult r = cmd_transform_scan(c, o);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].inv_var > 0.0);
  CHECK(r.rows[0].crb_reference == doctest::Approx(100.0 * r.effective_qfi));
  CHECK(fs::exists(dir + "/transform_scan.csv"));
  CHECK(fs::exists(dir + "/transform_scan.json"));
  CHECK(fs::exists(dir + "/transformed_seed11.json"));
}

TEST_CASE("phase diagram vanishes in the maximally mixed limit") {
  ExperimentConfig c = parse_config(R"(model: {kind: XY_RING, fixed: {lambda: 0.6, h: 1.0}, free: [gamma, T]}
state: {kind: thermal}
truth: [0.5, 1.0]
phase_diagram:
  axes:
    - {param: gamma, min: 0.0, max: 1.0, n: 5}
    - {param: T, min: 1.0e4, max: 1.0e6, n: 3, spacing: log}
)");
  auto rows = cmd_phase_diagram(c, RunOptions{});
  REQUIRE(rows.size() == 15);
  int checked = 0;
  for (const auto& row : rows) {
    if (row.axis2 != doctest::Approx(1e6)) continue;
    CHECK(std::abs(row.det_qfim) < 1e-12);
    CHECK(std::isnan(row.var_bayes));
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("phase diagram thread count does not change values") {
  ExperimentConfig c = shipped("ring_phase_diagram.yaml");
  c.phase_diagram->axes[0].n = 6;
  c.phase_diagram->axes[1].n = 5;
  RunOptions one, many;
  many.threads = 4;
  auto a = cmd_phase_diagram(c, one);
  auto b = cmd_phase_diagram(c, many);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].det_qfim == b[i].det_qfim);
}
