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

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace metrosym {

template <typename T>
struct real_of {
  using type = T;
};
template <typename T>
struct real_of<std::complex<T>> {
  using type = T;
};

// Kronecker product with the left operand's index major.
template <typename A, typename B>
auto kron(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename A::Scalar,
                                                       typename B::Scalar>::ReturnType;
  using Result = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return Result(Eigen::kroneckerProduct(a.template cast<Scalar>().eval(),
                                        b.template cast<Scalar>().eval()));
}

template <typename Derived>
auto max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return typename real_of<typename Derived::Scalar>::type(0);
  return m.cwiseAbs().maxCoeff();
}

// max |A_ij - conj(A_ji)|
template <typename Derived>
auto hermiticity_violation(const Eigen::MatrixBase<Derived>& m) {
  return max_abs(m - m.adjoint());
}

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  return Plain((m + m.adjoint()) / 2);
}

template <typename A, typename B>
auto commutator(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a * b - b * a).eval();
}

// Trace distance 0.5 * sum |eig(a - b)| for Hermitian inputs.
template <typename A, typename B>
double trace_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Plain = typename A::PlainObject;
  Plain diff = a - b;
  Eigen::SelfAdjointEigenSolver<Plain> es(hermitian_part(diff), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Rescale a vector's global phase so its largest-magnitude entry is real and
// non-negative. The first entry wins among near-equal magnitudes.
template <typename Derived>
void fix_phase(Eigen::MatrixBase<Derived> const& v_const) {
  auto& v = const_cast<Eigen::MatrixBase<Derived>&>(v_const);
  using Scalar = typename Derived::Scalar;
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double mag = std::abs(v(i));
    if (mag > best_mag * (1.0 + 1e-12)) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  Scalar pivot = v(best);
  v *= std::abs(pivot) / pivot;
}

}  // namespace metrosym
