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

#include "metrosym/operator_algebra.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "metrosym/linalg.hpp"

namespace metrosym {

namespace {

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

HermitianOperator::HermitianOperator(CMatrix m) : m_(std::move(m)) {
  require_square(m_, "HermitianOperator");
  double scale = std::max(1.0, max_abs(m_));
  double viol = hermiticity_violation(m_);
  if (viol > kHermitianTolerance * scale) {
    std::ostringstream os;
    os << "HermitianOperator: Hermiticity violated by " << viol;
    throw std::invalid_argument(os.str());
  }
  m_ = hermitian_part(m_);
}

HermitianOperator::HermitianOperator(const RMatrix& m)
    : HermitianOperator(CMatrix(m.cast<Complex>())) {}

bool HermitianOperator::is_real() const { return m_.imag().cwiseAbs().maxCoeff() == 0.0; }

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
  if (dim() != o.dim()) throw DimensionMismatch("HermitianOperator: dimension mismatch in sum");
  return HermitianOperator(CMatrix(m_ + o.m_));
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
  if (dim() != o.dim()) throw DimensionMismatch("HermitianOperator: dimension mismatch in difference");
  return HermitianOperator(CMatrix(m_ - o.m_));
}

HermitianOperator HermitianOperator::operator*(double s) const {
  return HermitianOperator(CMatrix(m_ * s));
}

DensityMatrix::DensityMatrix(CMatrix m) : m_(std::move(m)) {
  require_square(m_, "DensityMatrix");
  double tr_err = std::abs(m_.trace() - Complex(1.0));
  if (tr_err > 1e-12) {
    std::ostringstream os;
    os << "DensityMatrix: trace deviates from 1 by " << tr_err;
    throw std::invalid_argument(os.str());
  }
  if (hermiticity_violation(m_) > 1e-12) {
    throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
  }
  m_ = hermitian_part(m_);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    std::ostringstream os;
    os << "DensityMatrix: negative eigenvalue " << es.eigenvalues().minCoeff();
    throw std::invalid_argument(os.str());
  }
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  double n = psi.norm();
  if (n == 0.0) throw std::invalid_argument("DensityMatrix::pure: zero vector");
  CVector u = psi / n;
  return DensityMatrix(CMatrix(u * u.adjoint()));
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  return DensityMatrix(CMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim)));
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(kron(a.matrix(), b.matrix()));
}

CMatrix partial_trace_matrix(const CMatrix& m, const std::vector<int>& local_dims, const std::set<int>& keep) {
  const int n = static_cast<int>(local_dims.size());
  long total = 1;
  for (int d : local_dims) {
    if (d <= 0) throw DimensionMismatch("partial_trace: local dimensions must be positive");
    total *= d;
  }
  if (total != m.rows() || m.rows() != m.cols()) {
    std::ostringstream os;
    os << "partial_trace: local dimensions multiply to " << total << " but the operator has dimension "
       << m.rows();
    throw DimensionMismatch(os.str());
  }
  for (int s : keep) {
    if (s < 0 || s >= n) throw DimensionMismatch("partial_trace: kept site out of range");
  }

  // Row-major multi-index strides, site 0 most significant.
  std::vector<long> stride(n, 1);
  for (int s = n - 2; s >= 0; --s) stride[s] = stride[s + 1] * local_dims[s + 1];

  std::vector<int> kept(keep.begin(), keep.end());
  std::vector<int> traced;
  for (int s = 0; s < n; ++s)
    if (!keep.count(s)) traced.push_back(s);

  long dk = 1, dt = 1;
  for (int s : kept) dk *= local_dims[s];
  for (int s : traced) dt *= local_dims[s];

  auto offset = [&](const std::vector<int>& sites, long idx) {
    long off = 0;
    for (int k = static_cast<int>(sites.size()) - 1; k >= 0; --k) {
      int d = local_dims[sites[k]];
      off += (idx % d) * stride[sites[k]];
      idx /= d;
    }
    return off;
  };
  std::vector<long> kept_off(dk), traced_off(dt);
  for (long i = 0; i < dk; ++i) kept_off[i] = offset(kept, i);
  for (long i = 0; i < dt; ++i) traced_off[i] = offset(traced, i);

  CMatrix out = CMatrix::Zero(dk, dk);
  for (long a = 0; a < dk; ++a)
    for (long b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      for (long t = 0; t < dt; ++t) acc += m(kept_off[a] + traced_off[t], kept_off[b] + traced_off[t]);
      out(a, b) = acc;
    }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& local_dims,
                            const std::set<int>& keep) {
  return DensityMatrix(partial_trace_matrix(rho.matrix(), local_dims, keep));
}

EigenSystem eig_hermitian(const HermitianOperator& a) {
  EigenSystem sys;
  if (a.is_real()) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(a.matrix().real());
    if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: eigensolver did not converge");
    sys.values = es.eigenvalues();
    sys.vectors = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
    if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: eigensolver did not converge");
    sys.values = es.eigenvalues();
    sys.vectors = es.eigenvectors();
  }
  for (Eigen::Index k = 0; k < sys.vectors.cols(); ++k) fix_phase(sys.vectors.col(k));
  return sys;
}

DensityMatrix thermal_state(const EigenSystem& spectrum, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("thermal_state: temperature must be positive");
  const RVector& e = spectrum.values;
  double e_min = e.minCoeff();
  RVector w = (-(e.array() - e_min) / temperature).exp().matrix();
  w /= w.sum();
  const CMatrix& v = spectrum.vectors;
  CMatrix rho = v * w.cast<Complex>().asDiagonal() * v.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(std::move(rho));
}

DensityMatrix thermal_state(const HermitianOperator& h, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("thermal_state: temperature must be positive");
  return thermal_state(eig_hermitian(h), temperature);
}

DensityMatrix ground_state(const HermitianOperator& h, double gap_tolerance) {
  EigenSystem sys = eig_hermitian(h);
  if (sys.values.size() > 1) {
    double gap = sys.values(1) - sys.values(0);
    if (gap <= gap_tolerance) {
      std::ostringstream os;
      os << "ground_state: spectral gap " << gap << " does not exceed tolerance " << gap_tolerance;
      throw DegenerateGroundState(os.str());
    }
  }
  return DensityMatrix::pure(sys.vectors.col(0));
}

namespace {

struct SubspaceEigen {
  CMatrix basis;
  EigenSystem sys;
};

SubspaceEigen restrict_and_diagonalize(const HermitianOperator& h, const HermitianOperator& projector,
                                       const char* who) {
  if (h.dim() != projector.dim()) throw DimensionMismatch(std::string(who) + ": dimension mismatch");
  EigenSystem p = eig_hermitian(projector);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < p.values.size(); ++k)
    if (p.values(k) > 0.5) cols.push_back(k);
  if (cols.empty()) throw std::invalid_argument(std::string(who) + ": projector has empty range");
  CMatrix q(h.dim(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = p.vectors.col(cols[c]);
  HermitianOperator restricted(CMatrix(q.adjoint() * h.matrix() * q));
  return {q, eig_hermitian(restricted)};
}

}  // namespace

DensityMatrix ground_state_in_subspace(const HermitianOperator& h, const HermitianOperator& projector,
                                       double gap_tolerance) {
  auto [q, sys] = restrict_and_diagonalize(h, projector, "ground_state_in_subspace");
  if (sys.values.size() > 1 && sys.values(1) - sys.values(0) <= gap_tolerance) {
    std::ostringstream os;
    os << "ground_state_in_subspace: spectral gap " << sys.values(1) - sys.values(0)
       << " does not exceed tolerance " << gap_tolerance;
    throw DegenerateGroundState(os.str());
  }
  return DensityMatrix::pure(q * sys.vectors.col(0));
}

DensityMatrix ground_manifold_mixture_in_subspace(const HermitianOperator& h, const HermitianOperator& projector,
                                                  double degeneracy_tolerance) {
  auto [q, sys] = restrict_and_diagonalize(h, projector, "ground_manifold_mixture_in_subspace");
  Eigen::Index g = 1;
  while (g < sys.values.size() && sys.values(g) - sys.values(0) <= degeneracy_tolerance) ++g;
  const CMatrix v = q * sys.vectors.leftCols(g);
  CMatrix rho = v * v.adjoint() / static_cast<double>(g);
  return DensityMatrix(std::move(rho));
}

DensityMatrix ground_manifold_mixture(const HermitianOperator& h, double degeneracy_tolerance) {
  EigenSystem sys = eig_hermitian(h);
  Eigen::Index g = 1;
  while (g < sys.values.size() && sys.values(g) - sys.values(0) <= degeneracy_tolerance) ++g;
  const auto v = sys.vectors.leftCols(g);
  CMatrix rho = v * v.adjoint() / static_cast<double>(g);
  return DensityMatrix(std::move(rho));
}

}  // namespace metrosym
