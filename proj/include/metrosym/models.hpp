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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "metrosym/operator_algebra.hpp"

namespace metrosym {

enum class ModelKind { xy_ring, xy_all2all, heisenberg_chain, heisenberg_trimer };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

using ParameterPoint = RVector;
using ParameterMap = std::map<std::string, double>;

struct ModelSpec {
  ModelKind kind = ModelKind::xy_ring;
  int n_sites = 4;
  ParameterMap fixed_params;
  std::vector<std::string> free_params;

  void validate() const;
  // Fixed parameters overlaid with the free ones taken from `point`.
  ParameterMap resolve(const ParameterPoint& point) const;
};

// Sites are numbered from 0; site 0 is the most significant tensor factor.
CMatrix pauli(char axis);
HermitianOperator site_operator(const CMatrix& local, int site, int n_sites);
// Product of -sigma_z over all sites.
HermitianOperator fermion_parity(int n_sites);

// Operators of a model precomputed once; Hamiltonians are then linear
// combinations with parameter-dependent coefficients.
class ModelOperators {
 public:
  explicit ModelOperators(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  HermitianOperator hamiltonian(const ParameterMap& params) const;
  HermitianOperator hamiltonian(const ParameterPoint& point) const;

 private:
  ModelSpec spec_;
  std::vector<RMatrix> terms_;
};

HermitianOperator build_hamiltonian(const ModelSpec& spec, const ParameterPoint& point);

enum class ObservableKind { total_magnetization, central_spin_correlation, s12_squared };

std::string to_string(ObservableKind kind);
ObservableKind observable_kind_from_string(const std::string& name);

HermitianOperator observable(const ModelSpec& spec, ObservableKind kind);

// Two central sites of a chain of even length.
// The factor of `op` on the kept sites, for an operator of the form
// op_kept (x) identity. Throws std::invalid_argument when `op` acts on the
// traced sites.
HermitianOperator restrict_to_sites(const HermitianOperator& op, int n_sites, const std::set<int>& keep);

std::pair<int, int> central_sites(int n_sites);

struct DispersionPoint {
  double k;
  double epsilon;
};

// Positive band 2*sqrt((h + lambda cos k)^2 + lambda^2 gamma^2 sin^2 k) at
// k = pi (2n+1)/N, n = 0 .. floor(N/2)-1.
std::vector<DispersionPoint> xy_ring_dispersion(int n_sites, double lambda, double gamma, double h);

// Ground state of the even-parity sector of the XY ring assembled from
// momentum blocks. Even n_sites only.
CVector xy_ring_momentum_ground_state(int n_sites, double lambda, double gamma, double h);

enum class AnalyticForm { ring_lambda_gamma, ring_lambda_h, n3_lambda_gamma, trimer_populations, two_level_pq };

struct AnalyticQfim {
  RMatrix matrix;
  AnalyticForm provenance;
};

// Closed-form QFIM for the supported model/parameter pairs, with rows in the
// order given by `pair`.
AnalyticQfim analytic_qfim(const ModelSpec& spec, const ParameterPoint& point,
                           const std::pair<std::string, std::string>& pair);

double xy_ring_lambda_gamma_det_n4(double lambda, double gamma, double h);

// Single-parameter QFI of the ring ground state for Omega = h / lambda.
double xy_ring_effective_qfi(int n_sites, double lambda, double gamma, double h);

// Closed-form pseudoinverse of the (lambda, h) ring QFIM.
RMatrix xy_ring_lambda_h_pseudoinverse(int n_sites, double lambda, double gamma, double h);

// Nonzero eigenvalue of the N = 3 (lambda, gamma) QFIM and the eigenvector of
// its zero eigenvalue.
double xy_n3_top_eigenvalue(double lambda, double gamma, double h);
RVector xy_n3_null_vector(double lambda, double gamma, double h);

struct TrimerLevel {
  double energy;
  int degeneracy;
  double s_total;
  int s12;
};

std::vector<TrimerLevel> trimer_levels(double j, double k);

struct TrimerPopulations {
  double p_singlet;
  double p_triplet;  // weight of each of the three triplet states
  double omega() const { return 6.0 * p_triplet; }
};

TrimerPopulations trimer_reduced_populations(double j, double k, double temperature);
double trimer_contour_K_of_T(double j, double temperature, double omega);
// QFIM of the reduced two-spin state for (K, T).
AnalyticQfim trimer_reduced_qfim(double j, double k, double temperature);

AnalyticQfim two_level_qfim(double p, double q, const RVector& grad_p, const RVector& grad_q);

enum class StateKind { ground, thermal, reduced_thermal };
enum class DegeneratePolicy { reject, average };

struct StateRecipe {
  StateKind kind = StateKind::ground;
  std::set<int> kept_sites;           // reduced_thermal only
  std::optional<int> parity_sector;   // ground only: +1 or -1
  DegeneratePolicy degenerate = DegeneratePolicy::reject;
  double gap_tolerance = 1e-9;
};

// Probe state as a function of the free parameters. Thermal recipes read the
// temperature from parameter T.
class StateModel {
 public:
  StateModel(ModelSpec spec, StateRecipe recipe);

  const ModelSpec& spec() const { return ops_.spec(); }
  const StateRecipe& recipe() const { return recipe_; }
  DensityMatrix state(const ParameterPoint& point) const;
  HermitianOperator hamiltonian(const ParameterPoint& point) const { return ops_.hamiltonian(point); }
  std::optional<std::string> regime_warning(const ParameterPoint& point) const;

 private:
  ModelOperators ops_;
  StateRecipe recipe_;
  std::optional<HermitianOperator> parity_projector_;
};

}  // namespace metrosym
