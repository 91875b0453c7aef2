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
#include <functional>
#include <string>
#include <vector>

#include "metrosym/fisher.hpp"
#include "metrosym/models.hpp"

namespace metrosym {

inline constexpr double kProbabilityFloor = 1e-300;

struct PovmSet {
  std::vector<HermitianOperator> projectors;
  std::vector<double> outcome_labels;

  std::size_t size() const { return projectors.size(); }
  void validate(double tol = 1e-10) const;
};

enum class PovmResolution { eigenspaces, product_basis };

// Eigenprojectors grouped by eigenvalue (clustered within `cluster_tol`).
PovmSet povm_from_observable(const HermitianOperator& obs, double cluster_tol = 1e-9);
// One rank-1 projector per computational basis state; needs a diagonal
// observable, whose diagonal supplies the labels.
PovmSet product_basis_povm(const HermitianOperator& diagonal_obs);
PovmSet make_povm(const HermitianOperator& obs, PovmResolution resolution);

struct OutcomeModel {
  StateModel states;
  PovmSet povm;
};

RVector born_probabilities(const DensityMatrix& rho, const PovmSet& povm);
RVector born_probabilities(const OutcomeModel& model, const ParameterPoint& point);

struct MeasurementRecord {
  std::vector<std::uint64_t> counts;
  std::uint64_t m = 0;
  std::uint64_t seed = 0;

  MeasurementRecord& operator+=(const MeasurementRecord& other);
};

// Multinomial draw by per-outcome inverse CDF on 53-bit uniforms.
MeasurementRecord sample_record(const RVector& probabilities, std::uint64_t m, std::uint64_t seed,
                                std::uint64_t stream = 0);

// sum_k n_k ln max(p_k, 1e-300); the multinomial coefficient is omitted.
double log_likelihood(const MeasurementRecord& record, const RVector& probabilities);

struct GridAxis {
  double min = 0.0;
  double max = 2.0;
  int n = 200;

  double step() const { return n > 1 ? (max - min) / (n - 1) : 0.0; }
  double at(int i) const { return n > 1 ? min + (max - min) * i / (n - 1) : min; }
  double trapezoid_weight(int i) const;
  bool contains(double x) const { return x >= min && x <= max; }
};

// Row-major over axes: the last axis varies fastest.
struct PosteriorGrid {
  std::vector<GridAxis> axes;
  RVector log_weights;
  double log_normalization = 0.0;

  long cells() const { return log_weights.size(); }
  std::vector<int> index_of(long cell) const;
  RVector point_of(long cell) const;
  double density(long cell) const { return std::exp(log_weights(cell)); }
  double integral() const;
  void normalize();
};

PosteriorGrid uniform_prior(const std::vector<GridAxis>& axes);

// Log outcome probabilities for every grid cell, reusable across records.
struct LogProbabilityTable {
  std::vector<GridAxis> axes;
  RMatrix log_p;  // cells x outcomes
};

LogProbabilityTable tabulate_log_probabilities(const OutcomeModel& model, const std::vector<GridAxis>& axes,
                                               int threads = 1);

PosteriorGrid posterior_update(const PosteriorGrid& prior, const MeasurementRecord& record,
                               const LogProbabilityTable& table);
PosteriorGrid posterior_update(const PosteriorGrid& prior, const MeasurementRecord& record,
                               const OutcomeModel& model, int threads = 1);

struct Marginal {
  GridAxis axis;
  RVector density;
};

Marginal marginalize(const PosteriorGrid& posterior, int axis_index);

struct Moments {
  RVector mean;
  RMatrix covariance;
};

Moments bayes_mean_and_variance(const PosteriorGrid& posterior);

struct MarginalMoments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

MarginalMoments marginal_moments(const Marginal& marginal);

struct Gaussian {
  RVector mean;
  RMatrix covariance;
};

// Asymptotic posterior N(truth, (m I)^-1); throws NumericalError when the
// QFIM condition number reaches 1e10.
Gaussian bvm_reference(const ParameterPoint& truth, const FisherMatrix& qfim, double m);

struct CoordinateMap {
  std::string name;
  std::function<RVector(const RVector&)> forward;
  std::function<RVector(const RVector&)> inverse;
  // |d(theta) / d(chi)| as a function of chi
  std::function<double(const RVector&)> jacobian_det;
  // d chi_b / d theta_j as a function of theta
  std::function<RMatrix(const RVector&)> jacobian;
};

// u = ln sqrt(theta1 / theta2), v = sqrt(theta1 theta2)
CoordinateMap hyperbolic_map();
CoordinateMap identity_map();
CoordinateMap coordinate_map_from_string(const std::string& name);

// Resamples onto `target_axes` by bilinear interpolation of the source log
// weights; cells whose preimage leaves the source grid get zero weight.
PosteriorGrid transform_posterior(const PosteriorGrid& posterior, const CoordinateMap& map,
                                  const std::vector<GridAxis>& target_axes, bool include_jacobian = true);

struct RidgePoint {
  double sweep;
  double argmax;
  double mass;  // column mass relative to the largest column
};

// For each sweep-axis value whose column mass exceeds `min_mass_fraction` of
// the largest column, the argmax along the other axis (lowest index on ties).
std::vector<RidgePoint> ridge_extract(const PosteriorGrid& posterior, int sweep_axis,
                                      double min_mass_fraction = 1e-6);

struct ScanOptions {
  std::vector<GridAxis> source_axes;
  std::vector<GridAxis> target_axes;
  int effective_axis = 0;  // index of the effective coordinate in the map output
  bool include_jacobian = true;
  int threads = 1;
};

struct ScanRow {
  std::uint64_t m = 0;
  double inv_var = 0.0;        // 1 / (seed-averaged marginal variance)
  double crb_reference = 0.0;  // m * I_eff
  std::vector<MarginalMoments> per_seed;
};

struct ScanResult {
  FisherMatrix qfim;            // bare parameters at the truth
  FisherMatrix qfim_mapped;     // transformed coordinates at the truth
  double effective_qfi = 0.0;
  std::vector<ScanRow> rows;
  std::vector<PosteriorGrid> final_transformed;  // one per seed, largest M
};

// Records grow incrementally along the schedule: the increment for row r of a
// seed is drawn from stream r + 1.
ScanResult effective_crb_scan(const OutcomeModel& model, const CoordinateMap& map, const ParameterPoint& truth,
                              const std::vector<std::uint64_t>& m_schedule, const std::vector<std::uint64_t>& seeds,
                              const ScanOptions& options);
ScanResult effective_crb_scan(const LogProbabilityTable& table, const OutcomeModel& model, const CoordinateMap& map,
                              const ParameterPoint& truth, const std::vector<std::uint64_t>& m_schedule,
                              const std::vector<std::uint64_t>& seeds, const ScanOptions& options);

}  // namespace metrosym
