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

#include <set>
#include <vector>

#include "metrosym/types.hpp"

namespace metrosym {

inline constexpr double kHermitianTolerance = 1e-12;

// Dense Hermitian matrix. Rounding-level asymmetry is symmetrized away on
// construction; anything larger is rejected.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(CMatrix m);
  explicit HermitianOperator(const RMatrix& m);

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  bool is_real() const;

  HermitianOperator operator+(const HermitianOperator& o) const;
  HermitianOperator operator-(const HermitianOperator& o) const;
  HermitianOperator operator*(double s) const;

 private:
  CMatrix m_;
};

inline HermitianOperator operator*(double s, const HermitianOperator& a) { return a * s; }

// Unit-trace positive semidefinite state.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(CMatrix m);

  static DensityMatrix pure(const CVector& psi);
  static DensityMatrix maximally_mixed(Eigen::Index dim);

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double purity() const;

 private:
  CMatrix m_;
};

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns, phase-fixed
};

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b);

// Keeps the sites listed in `keep`, in ascending site order.
// Partial trace of an arbitrary square operator; site 0 is the most significant
// tensor factor.
CMatrix partial_trace_matrix(const CMatrix& m, const std::vector<int>& local_dims, const std::set<int>& keep);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& local_dims,
                            const std::set<int>& keep);

EigenSystem eig_hermitian(const HermitianOperator& a);

DensityMatrix thermal_state(const HermitianOperator& h, double temperature);
DensityMatrix thermal_state(const EigenSystem& spectrum, double temperature);

DensityMatrix ground_state(const HermitianOperator& h, double gap_tolerance = 1e-9);

// Lowest eigenvector of h restricted to the range of an orthogonal projector.
DensityMatrix ground_state_in_subspace(const HermitianOperator& h,
                                       const HermitianOperator& projector,
                                       double gap_tolerance = 1e-9);

// Uniform mixture over the eigenvectors within `degeneracy_tolerance` of the
// ground energy; the zero-temperature limit of thermal_state.
DensityMatrix ground_manifold_mixture(const HermitianOperator& h,
                                      double degeneracy_tolerance = 1e-9);
DensityMatrix ground_manifold_mixture_in_subspace(const HermitianOperator& h, const HermitianOperator& projector,
                                                  double degeneracy_tolerance = 1e-9);

}  // namespace metrosym
