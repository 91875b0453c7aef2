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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrosym/bayes.hpp"
#include "metrosym/config.hpp"
#include "metrosym/fisher.hpp"

namespace metrosym {

struct RunOptions {
  std::string out_dir;  // empty: compute only, write nothing
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

// Config with the command-line overrides applied.
ExperimentConfig resolve_config(const ExperimentConfig& config, const RunOptions& options);

// The configured observable, restricted to the kept sites for reduced states.
HermitianOperator measured_observable(const ExperimentConfig& config);
OutcomeModel make_outcome_model(const ExperimentConfig& config);

struct QfimReport {
  FisherMatrix qfim;
  FisherMatrix cfim;
  QfimSpectrum spectrum;
  double determinant = 0.0;
  bool singular = false;
  RMatrix pseudoinverse;
  RMatrix sld_commutator_imag;  // Im Tr(rho [L_i, L_j])
  nlohmann::json json;
};

QfimReport cmd_qfim(const ExperimentConfig& config, const RunOptions& options);

struct PhaseDiagramRow {
  double axis1;
  double axis2;
  double det_qfim;
  double var_bayes;  // NaN unless requested
};

std::vector<PhaseDiagramRow> cmd_phase_diagram(const ExperimentConfig& config, const RunOptions& options);

struct TraceRow {
  std::uint64_t m;
  Moments moments;
};

struct BayesRunResult {
  PosteriorGrid posterior;
  MeasurementRecord record;
  std::vector<TraceRow> trace;
  bool singular = false;
  std::vector<RidgePoint> ridge;  // filled when singular
};

BayesRunResult cmd_bayes_run(const ExperimentConfig& config, const RunOptions& options);

ScanResult cmd_transform_scan(const ExperimentConfig& config, const RunOptions& options);

}  // namespace metrosym
