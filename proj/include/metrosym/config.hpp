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
#include "metrosym/models.hpp"

namespace metrosym {

struct PhaseAxis {
  std::string param;
  double min = 0.0;
  double max = 1.0;
  int n = 11;
  bool log_spacing = false;

  double at(int i) const;
};

struct PhaseDiagramSpec {
  std::vector<PhaseAxis> axes;
  bool with_bayes = false;
  std::uint64_t bayes_m = 1000;
};

struct TransformSpec {
  std::string map = "hyperbolic";
  std::vector<GridAxis> target_axes;
  int effective_axis = 0;
  bool include_jacobian = true;
  std::vector<std::uint64_t> m_schedule;
  int n_seeds = 1;
};

struct RidgeSpec {
  int sweep_axis = 0;
  double min_mass_fraction = 1e-2;
};

struct ExperimentConfig {
  ModelSpec model;
  StateRecipe state;
  ParameterPoint truth;
  ObservableKind observable = ObservableKind::total_magnetization;
  PovmResolution povm_resolution = PovmResolution::eigenspaces;
  std::vector<GridAxis> grid;
  std::string prior = "uniform";
  std::uint64_t m_total = 10000;
  std::uint64_t batch_size = 100;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> checkpoints;
  RidgeSpec ridge;
  std::optional<TransformSpec> transform;
  std::optional<PhaseDiagramSpec> phase_diagram;
  std::string output;

  void validate() const;
};

// Strict YAML reader: unknown keys, wrong types and out-of-range values raise
// ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace metrosym
