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

#include "metrosym/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metrosym/linalg.hpp"

namespace metrosym {

namespace {

constexpr double kSupportEpsilon = 1e-12;

std::vector<std::string> default_labels(std::size_t d, const std::vector<std::string>& labels) {
  if (!labels.empty()) {
    if (labels.size() != d) throw DimensionMismatch("Fisher matrix labels do not match dimension");
    return labels;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < d; ++i) out.push_back("theta" + std::to_string(i + 1));
  return out;
}

RMatrix symmetrize(const RMatrix& m) { return (m + m.transpose()) / 2; }

// rho and its derivatives expressed in the eigenbasis of rho.
struct SpectralView {
  RVector e;
  CMatrix v;
  std::vector<CMatrix> d;
};

SpectralView spectral_view(const DerivativeBundle& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(b.rho.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("QFIM: eigendecomposition of rho failed");
  SpectralView s{es.eigenvalues(), es.eigenvectors(), {}};
  for (const auto& dr : b.drho) s.d.push_back(s.v.adjoint() * dr * s.v);
  return s;
}

}  // namespace

double default_step(double theta) { return 1e-5 * std::max(1.0, std::abs(theta)); }

DerivativeBundle derivative_bundle(const StateFunction& state_fn, const RVector& point, const StepRule& step_rule) {
  DerivativeBundle b{state_fn(point), {}, DerivativeMethod::central_diff, {}};
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    double h = step_rule(point(i));
    if (!(h > 0.0)) throw std::invalid_argument("derivative_bundle: step must be positive");
    RVector plus = point, minus = point;
    plus(i) += h;
    minus(i) -= h;
    CMatrix d = (state_fn(plus).matrix() - state_fn(minus).matrix()) / (2.0 * h);
    d = hermitian_part(d);
    d -= CMatrix::Identity(d.rows(), d.cols()) * (d.trace() / static_cast<double>(d.rows()));
    b.drho.push_back(std::move(d));
    b.step_sizes.push_back(h);
  }
  return b;
}

FisherMatrix qfim_mixed(const DerivativeBundle& bundle, const std::vector<std::string>& labels) {
  const std::size_t d = bundle.drho.size();
  SpectralView s = spectral_view(bundle);
  const double eps = kSupportEpsilon * bundle.rho.matrix().trace().real();
  const Eigen::Index n = s.e.size();
  RMatrix f = RMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      double denom = s.e(k) + s.e(l);
      if (denom <= eps) continue;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
          double term = 2.0 * std::real(s.d[i](k, l) * s.d[j](l, k)) / denom;
          f(i, j) += term;
        }
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) f(i, j) = f(j, i);
  return {default_labels(d, labels), f, FisherKind::quantum};
}

FisherMatrix qfim_pure(const DerivativeBundle& bundle, const std::vector<std::string>& labels) {
  if (bundle.rho.purity() < 1.0 - 1e-8) {
    std::ostringstream os;
    os << "qfim_pure: state purity " << bundle.rho.purity() << " is below 1 - 1e-8";
    throw std::invalid_argument(os.str());
  }
  const std::size_t d = bundle.drho.size();
  RMatrix f(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      f(i, j) = 2.0 * (bundle.drho[i] * bundle.drho[j]).trace().real();
      f(j, i) = f(i, j);
    }
  return {default_labels(d, labels), f, FisherKind::quantum};
}

FisherMatrix qfim_eigensystem_split(const DerivativeBundle& bundle, double degeneracy_gap,
                                    const std::vector<std::string>& labels) {
  const std::size_t d = bundle.drho.size();
  SpectralView s = spectral_view(bundle);
  const Eigen::Index n = s.e.size();
  for (Eigen::Index k = 1; k < n; ++k) {
    if (s.e(k) - s.e(k - 1) <= degeneracy_gap)
      throw NumericalError("qfim_eigensystem_split: density-matrix spectrum is degenerate");
  }
  const double eps = kSupportEpsilon * bundle.rho.matrix().trace().real();
  RMatrix f = RMatrix::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double acc = 0.0;
      for (Eigen::Index a = 0; a < n; ++a) {
        if (s.e(a) > eps) acc += std::real(s.d[i](a, a)) * std::real(s.d[j](a, a)) / s.e(a);
      }
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index m = 0; m < n; ++m) {
          if (a == m || s.e(a) + s.e(m) <= eps) continue;
          // <e_a|d e_m> = <e_a|d rho|e_m> / (e_m - e_a)
          double gap = s.e(m) - s.e(a);
          Complex ui = s.d[i](a, m) / gap;
          Complex uj = s.d[j](a, m) / gap;
          acc += 2.0 * gap * gap / (s.e(a) + s.e(m)) * std::real(ui * std::conj(uj));
        }
      f(i, j) = acc;
      f(j, i) = acc;
    }
  return {default_labels(d, labels), f, FisherKind::quantum};
}

HermitianOperator sld(const DerivativeBundle& bundle, int param_index) {
  if (param_index < 0 || static_cast<std::size_t>(param_index) >= bundle.drho.size())
    throw std::out_of_range("sld: parameter index out of range");
  SpectralView s = spectral_view(bundle);
  const double eps = kSupportEpsilon * bundle.rho.matrix().trace().real();
  const Eigen::Index n = s.e.size();
  const CMatrix& dr = s.d[static_cast<std::size_t>(param_index)];
  CMatrix l = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      double denom = s.e(a) + s.e(b);
      if (denom > eps) l(a, b) = 2.0 * dr(a, b) / denom;
    }
  return HermitianOperator(CMatrix(hermitian_part(CMatrix(s.v * l * s.v.adjoint()))));
}

Complex sld_commutator_expectation(const DerivativeBundle& bundle, int i, int j) {
  CMatrix li = sld(bundle, i).matrix();
  CMatrix lj = sld(bundle, j).matrix();
  return (bundle.rho.matrix() * commutator(li, lj)).trace();
}

FisherMatrix cfim(const RVector& probabilities, const std::vector<RVector>& dprob,
                  const std::vector<std::string>& labels) {
  const std::size_t d = dprob.size();
  if (probabilities.minCoeff() < 0.0) throw std::invalid_argument("cfim: negative probability");
  if (std::abs(probabilities.sum() - 1.0) > 1e-10) throw std::invalid_argument("cfim: probabilities do not sum to 1");
  for (const auto& g : dprob) {
    if (g.size() != probabilities.size()) throw DimensionMismatch("cfim: gradient length mismatch");
    if (std::abs(g.sum()) > 1e-8) throw std::invalid_argument("cfim: probability gradients do not sum to 0");
  }
  RMatrix f = RMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    if (probabilities(k) <= 1e-14) continue;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) f(i, j) += dprob[i](k) * dprob[j](k) / probabilities(k);
  }
  return {default_labels(d, labels), symmetrize(f), FisherKind::classical};
}

FisherMatrix cfim_for_projectors(const DerivativeBundle& bundle, const std::vector<HermitianOperator>& projectors,
                                 const std::vector<std::string>& labels) {
  const Eigen::Index k = static_cast<Eigen::Index>(projectors.size());
  RVector p(k);
  std::vector<RVector> dp(bundle.drho.size(), RVector(k));
  for (Eigen::Index a = 0; a < k; ++a) {
    const CMatrix& proj = projectors[static_cast<std::size_t>(a)].matrix();
    p(a) = std::max(0.0, (bundle.rho.matrix() * proj).trace().real());
    for (std::size_t i = 0; i < bundle.drho.size(); ++i) dp[i](a) = (bundle.drho[i] * proj).trace().real();
  }
  p /= p.sum();
  return cfim(p, dp, labels);
}

QfimSpectrum qfim_spectrum(const FisherMatrix& f, double rank_tolerance) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(symmetrize(f.matrix));
  if (es.info() != Eigen::Success) throw NumericalError("qfim_spectrum: eigensolver failed");
  const Eigen::Index d = f.matrix.rows();
  QfimSpectrum s;
  s.eigenvalues = es.eigenvalues().reverse();
  s.eigenvectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index c = 0; c < d; ++c) {
    auto col = s.eigenvectors.col(c);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (std::abs(col(r)) > 1e-12) {
        if (col(r) < 0) col = -col;
        break;
      }
    }
  }
  double top = d > 0 ? std::max(s.eigenvalues(0), 1e-300) : 1e-300;
  s.rank_tolerance = rank_tolerance;
  s.rank = static_cast<int>((s.eigenvalues.array() > rank_tolerance * top).count());
  return s;
}

FisherMatrix reparametrize(const FisherMatrix& f, const RMatrix& jacobian, const std::vector<std::string>& labels) {
  if (jacobian.rows() != f.matrix.rows() || jacobian.cols() != f.matrix.cols())
    throw DimensionMismatch("reparametrize: jacobian shape does not match the Fisher matrix");
  if (!jacobian.allFinite()) throw std::invalid_argument("reparametrize: jacobian has non-finite entries");
  Eigen::JacobiSVD<RMatrix> svd(jacobian);
  const RVector& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  if (smin == 0.0 || sv(0) / smin > 1e12) throw NumericalError("reparametrize: jacobian is singular");
  RMatrix inv = jacobian.inverse();
  std::vector<std::string> out_labels = labels.empty() ? f.labels : labels;
  return {out_labels, symmetrize(inv.transpose() * f.matrix * inv), f.kind};
}

FactorizationResult factorization_check(const FisherMatrix& f, const RVector& grad_omega) {
  double g2 = grad_omega.squaredNorm();
  if (g2 == 0.0) throw std::invalid_argument("factorization_check: gradient must be nonzero");
  RMatrix outer = grad_omega * grad_omega.transpose();
  FactorizationResult r;
  // least squares of f against the single matrix outer: <f, outer> / <outer, outer>
  r.effective_qfi = (f.matrix.cwiseProduct(outer)).sum() / outer.squaredNorm();
  r.residual = (f.matrix - r.effective_qfi * outer).norm();
  QfimSpectrum s = qfim_spectrum(f);
  RVector u = s.eigenvectors.col(0);
  double c = std::min(1.0, std::abs(u.dot(grad_omega)) / std::sqrt(g2));
  r.eigenvector_angle = std::acos(c);
  r.is_rank1_consistent = r.residual <= 1e-6 * f.matrix.norm() && r.eigenvector_angle <= 1e-5;
  return r;
}

RMatrix pseudoinverse(const RMatrix& f, double rcond) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(symmetrize(f));
  if (es.info() != Eigen::Success) throw NumericalError("pseudoinverse: eigensolver failed");
  const RVector& w = es.eigenvalues();
  double smax = w.cwiseAbs().maxCoeff();
  RVector inv = RVector::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (std::abs(w(i)) > rcond * smax) inv(i) = 1.0 / w(i);
  return symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

double effective_variance_via_pseudoinverse(const RMatrix& pinv, const RVector& grad_omega, double m) {
  if (!(m >= 1.0)) throw std::invalid_argument("effective_variance_via_pseudoinverse: m must be >= 1");
  return grad_omega.dot((pinv / m) * grad_omega);
}

}  // namespace metrosym
