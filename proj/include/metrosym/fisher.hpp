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

#include <functional>
#include <string>
#include <vector>

#include "metrosym/operator_algebra.hpp"

namespace metrosym {

enum class FisherKind { quantum, classical };

struct FisherMatrix {
  std::vector<std::string> labels;
  RMatrix matrix;
  FisherKind kind = FisherKind::quantum;

  double determinant() const { return matrix.determinant(); }
};

struct QfimSpectrum {
  RVector eigenvalues;   // descending
  RMatrix eigenvectors;  // columns; first nonzero component positive
  int rank = 0;
  double rank_tolerance = 1e-9;
};

enum class DerivativeMethod { central_diff, analytic };

struct DerivativeBundle {
  DensityMatrix rho;
  std::vector<CMatrix> drho;
  DerivativeMethod method = DerivativeMethod::central_diff;
  std::vector<double> step_sizes;
};

using StateFunction = std::function<DensityMatrix(const RVector&)>;
using StepRule = std::function<double(double)>;

// 1e-5 * max(1, |theta|)
double default_step(double theta);

// The state function must be safe to call concurrently.
DerivativeBundle derivative_bundle(const StateFunction& state_fn, const RVector& point,
                                   const StepRule& step_rule = default_step);

// Spectral form; pairs with e_k + e_l <= 1e-12 Tr(rho) are skipped.
FisherMatrix qfim_mixed(const DerivativeBundle& bundle, const std::vector<std::string>& labels = {});

// 2 Tr[d_i rho d_j rho] for pure states.
FisherMatrix qfim_pure(const DerivativeBundle& bundle, const std::vector<std::string>& labels = {});

// Population and eigenvector split of the spectral form. Valid only for
// non-degenerate spectra; throws NumericalError when two eigenvalues of rho lie
// closer than `degeneracy_gap`.
FisherMatrix qfim_eigensystem_split(const DerivativeBundle& bundle, double degeneracy_gap = 1e-8,
                                    const std::vector<std::string>& labels = {});

HermitianOperator sld(const DerivativeBundle& bundle, int param_index);

// Tr(rho [L_i, L_j]); vanishing imaginary part is the compatibility condition.
Complex sld_commutator_expectation(const DerivativeBundle& bundle, int i, int j);

FisherMatrix cfim(const RVector& probabilities, const std::vector<RVector>& dprob,
                  const std::vector<std::string>& labels = {});

// Outcome probabilities Tr[rho P_k] and their derivatives.
FisherMatrix cfim_for_projectors(const DerivativeBundle& bundle, const std::vector<HermitianOperator>& projectors,
                                 const std::vector<std::string>& labels = {});

QfimSpectrum qfim_spectrum(const FisherMatrix& f, double rank_tolerance = 1e-9);

// jacobian(b, j) = d chi_b / d theta_j.
FisherMatrix reparametrize(const FisherMatrix& f, const RMatrix& jacobian,
                           const std::vector<std::string>& labels = {});

struct FactorizationResult {
  bool is_rank1_consistent = false;
  double effective_qfi = 0.0;
  double residual = 0.0;        // Frobenius norm of f - I_eff g g^T
  double eigenvector_angle = 0.0;  // radians between top eigenvector and grad
};

FactorizationResult factorization_check(const FisherMatrix& f, const RVector& grad_omega);

RMatrix pseudoinverse(const RMatrix& f, double rcond = 1e-10);

double effective_variance_via_pseudoinverse(const RMatrix& pinv, const RVector& grad_omega, double m);

}  // namespace metrosym
