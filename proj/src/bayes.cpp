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

#include "metrosym/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metrosym/parallel.hpp"
#include "metrosym/rng.hpp"

namespace metrosym {

namespace {

const double kLogFloor = std::log(kProbabilityFloor);

void require_2d(const PosteriorGrid& p, const char* what) {
  if (p.axes.size() != 2) throw DimensionMismatch(std::string(what) + ": a two-parameter grid is required");
}

}  // namespace

void PovmSet::validate(double tol) const {
  if (projectors.empty()) throw std::invalid_argument("PovmSet: no projectors");
  if (outcome_labels.size() != projectors.size()) throw DimensionMismatch("PovmSet: label count mismatch");
  const Eigen::Index d = projectors.front().dim();
  CMatrix sum = CMatrix::Zero(d, d);
  for (std::size_t a = 0; a < projectors.size(); ++a) {
    const CMatrix& p = projectors[a].matrix();
    if (p.rows() != d) throw DimensionMismatch("PovmSet: projector dimensions differ");
    if ((p * p - p).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("PovmSet: projector is not idempotent");
    for (std::size_t b = a + 1; b < projectors.size(); ++b) {
      if ((p * projectors[b].matrix()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("PovmSet: projectors are not mutually orthogonal");
    }
    sum += p;
  }
  if ((sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("PovmSet: projectors do not sum to the identity");
}

PovmSet povm_from_observable(const HermitianOperator& obs, double cluster_tol) {
  EigenSystem es = eig_hermitian(obs);
  PovmSet povm;
  const Eigen::Index n = es.values.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && es.values(end) - es.values(end - 1) <= cluster_tol) ++end;
    const auto v = es.vectors.middleCols(start, end - start);
    povm.projectors.emplace_back(CMatrix(v * v.adjoint()));
    povm.outcome_labels.push_back(es.values.segment(start, end - start).mean());
    start = end;
  }
  povm.validate();
  return povm;
}

PovmSet product_basis_povm(const HermitianOperator& diagonal_obs) {
  const CMatrix& m = diagonal_obs.matrix();
  CMatrix off = m;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("product_basis_povm: observable is not diagonal in the computational basis");
  PovmSet povm;
  for (Eigen::Index b = 0; b < m.rows(); ++b) {
    CMatrix p = CMatrix::Zero(m.rows(), m.cols());
    p(b, b) = 1.0;
    povm.projectors.emplace_back(std::move(p));
    povm.outcome_labels.push_back(m(b, b).real());
  }
  return povm;
}

PovmSet make_povm(const HermitianOperator& obs, PovmResolution resolution) {
  return resolution == PovmResolution::eigenspaces ? povm_from_observable(obs) : product_basis_povm(obs);
}

RVector born_probabilities(const DensityMatrix& rho, const PovmSet& povm) {
  RVector p(static_cast<Eigen::Index>(povm.size()));
  for (std::size_t k = 0; k < povm.size(); ++k) {
    const CMatrix& proj = povm.projectors[k].matrix();
    if (proj.rows() != rho.dim()) throw DimensionMismatch("born_probabilities: POVM and state dimensions differ");
    // Tr(rho P) = sum_ij rho_ij P_ji
    p(static_cast<Eigen::Index>(k)) = std::max(0.0, rho.matrix().cwiseProduct(proj.transpose()).sum().real());
  }
  double total = p.sum();
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "born_probabilities: probabilities sum to " << total;
    throw NumericalError(os.str());
  }
  return p / total;
}

RVector born_probabilities(const OutcomeModel& model, const ParameterPoint& point) {
  return born_probabilities(model.states.state(point), model.povm);
}

MeasurementRecord& MeasurementRecord::operator+=(const MeasurementRecord& other) {
  if (counts.empty()) counts.assign(other.counts.size(), 0);
  if (other.counts.size() != counts.size()) throw DimensionMismatch("MeasurementRecord: outcome counts differ");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  m += other.m;
  return *this;
}

MeasurementRecord sample_record(const RVector& probabilities, std::uint64_t m, std::uint64_t seed,
                                std::uint64_t stream) {
  const Eigen::Index k = probabilities.size();
  if (k == 0) throw std::invalid_argument("sample_record: empty probability vector");
  if (probabilities.minCoeff() < 0.0 || std::abs(probabilities.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("sample_record: invalid probability vector");
  std::vector<double> cdf(static_cast<std::size_t>(k));
  double acc = 0.0;
  Eigen::Index last = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    acc += probabilities(i);
    cdf[static_cast<std::size_t>(i)] = acc;
    if (probabilities(i) > 0.0) last = i;
  }
  MeasurementRecord rec{std::vector<std::uint64_t>(static_cast<std::size_t>(k), 0), m, seed};
  RandomStream rng(seed, stream);
  for (std::uint64_t draw = 0; draw < m; ++draw) {
    double u = rng.uniform() * acc;
    Eigen::Index idx = 0;
    while (idx < last && u >= cdf[static_cast<std::size_t>(idx)]) ++idx;
    ++rec.counts[static_cast<std::size_t>(idx)];
  }
  return rec;
}

double log_likelihood(const MeasurementRecord& record, const RVector& probabilities) {
  if (record.counts.size() != static_cast<std::size_t>(probabilities.size()))
    throw DimensionMismatch("log_likelihood: record and probability lengths differ");
  double acc = 0.0;
  for (std::size_t k = 0; k < record.counts.size(); ++k) {
    if (record.counts[k] == 0) continue;
    acc += static_cast<double>(record.counts[k]) *
           std::log(std::max(probabilities(static_cast<Eigen::Index>(k)), kProbabilityFloor));
  }
  return acc;
}

double GridAxis::trapezoid_weight(int i) const {
  if (n == 1) return 1.0;
  return (i == 0 || i == n - 1) ? 0.5 * step() : step();
}

std::vector<int> PosteriorGrid::index_of(long cell) const {
  std::vector<int> idx(axes.size());
  for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(cell % axes[static_cast<std::size_t>(a)].n);
    cell /= axes[static_cast<std::size_t>(a)].n;
  }
  return idx;
}

RVector PosteriorGrid::point_of(long cell) const {
  std::vector<int> idx = index_of(cell);
  RVector p(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t a = 0; a < axes.size(); ++a) p(static_cast<Eigen::Index>(a)) = axes[a].at(idx[a]);
  return p;
}

double PosteriorGrid::integral() const {
  double acc = 0.0;
  for (long c = 0; c < cells(); ++c) {
    std::vector<int> idx = index_of(c);
    double w = 1.0;
    for (std::size_t a = 0; a < axes.size(); ++a) w *= axes[a].trapezoid_weight(idx[a]);
    acc += w * std::exp(log_weights(c));
  }
  return acc;
}

void PosteriorGrid::normalize() {
  double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("posterior: every cell underflowed");
  log_weights.array() -= top;
  double z = integral();
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("posterior: normalization failed");
  log_weights.array() -= std::log(z);
  log_normalization += top + std::log(z);
}

PosteriorGrid uniform_prior(const std::vector<GridAxis>& axes) {
  long cells = 1;
  for (const auto& ax : axes) {
    if (ax.n < 1 || !(ax.max >= ax.min)) throw std::invalid_argument("uniform_prior: invalid grid axis");
    cells *= ax.n;
  }
  PosteriorGrid g{axes, RVector::Zero(cells), 0.0};
  g.normalize();
  g.log_normalization = 0.0;
  return g;
}

LogProbabilityTable tabulate_log_probabilities(const OutcomeModel& model, const std::vector<GridAxis>& axes,
                                               int threads) {
  PosteriorGrid shape = uniform_prior(axes);
  const long cells = shape.cells();
  const Eigen::Index k = static_cast<Eigen::Index>(model.povm.size());
  LogProbabilityTable table{axes, RMatrix(cells, k)};
  parallel_for(cells, threads, [&](long c) {
    RVector p = born_probabilities(model, shape.point_of(c));
    for (Eigen::Index o = 0; o < k; ++o) table.log_p(c, o) = std::log(std::max(p(o), kProbabilityFloor));
  });
  return table;
}

PosteriorGrid posterior_update(const PosteriorGrid& prior, const MeasurementRecord& record,
                               const LogProbabilityTable& table) {
  if (table.log_p.rows() != prior.cells()) throw DimensionMismatch("posterior_update: table does not match grid");
  if (record.counts.size() != static_cast<std::size_t>(table.log_p.cols()))
    throw DimensionMismatch("posterior_update: record does not match outcome count");
  PosteriorGrid post = prior;
  if (record.m == 0) return post;
  RVector n(table.log_p.cols());
  for (std::size_t o = 0; o < record.counts.size(); ++o) n(static_cast<Eigen::Index>(o)) = static_cast<double>(record.counts[o]);
  post.log_weights += table.log_p * n;
  post.normalize();
  return post;
}

PosteriorGrid posterior_update(const PosteriorGrid& prior, const MeasurementRecord& record,
                               const OutcomeModel& model, int threads) {
  if (record.m == 0) return prior;
  return posterior_update(prior, record, tabulate_log_probabilities(model, prior.axes, threads));
}

Marginal marginalize(const PosteriorGrid& posterior, int axis_index) {
  require_2d(posterior, "marginalize");
  if (axis_index != 0 && axis_index != 1) throw std::out_of_range("marginalize: axis index must be 0 or 1");
  const GridAxis& keep = posterior.axes[static_cast<std::size_t>(axis_index)];
  const GridAxis& other = posterior.axes[static_cast<std::size_t>(1 - axis_index)];
  Marginal m{keep, RVector::Zero(keep.n)};
  for (int i = 0; i < keep.n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < other.n; ++j) {
      long cell = axis_index == 0 ? static_cast<long>(i) * other.n + j : static_cast<long>(j) * keep.n + i;
      acc += other.trapezoid_weight(j) * posterior.density(cell);
    }
    m.density(i) = acc;
  }
  double z = 0.0;
  for (int i = 0; i < keep.n; ++i) z += keep.trapezoid_weight(i) * m.density(i);
  if (!(z > 0.0)) throw NumericalError("marginalize: marginal has zero mass");
  m.density /= z;
  return m;
}

Moments bayes_mean_and_variance(const PosteriorGrid& posterior) {
  const std::size_t d = posterior.axes.size();
  RVector mean = RVector::Zero(static_cast<Eigen::Index>(d));
  RMatrix second = RMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  double z = 0.0;
  for (long c = 0; c < posterior.cells(); ++c) {
    std::vector<int> idx = posterior.index_of(c);
    double w = posterior.density(c);
    for (std::size_t a = 0; a < d; ++a) w *= posterior.axes[a].trapezoid_weight(idx[a]);
    RVector x = posterior.point_of(c);
    z += w;
    mean += w * x;
    second += w * x * x.transpose();
  }
  mean /= z;
  RMatrix cov = second / z - mean * mean.transpose();
  return {mean, (cov + cov.transpose()) / 2};
}

MarginalMoments marginal_moments(const Marginal& marginal) {
  const GridAxis& ax = marginal.axis;
  double z = 0, m1 = 0;
  for (int i = 0; i < ax.n; ++i) {
    double w = ax.trapezoid_weight(i) * marginal.density(i);
    z += w;
    m1 += w * ax.at(i);
  }
  m1 /= z;
  double c2 = 0, c3 = 0, c4 = 0;
  for (int i = 0; i < ax.n; ++i) {
    double w = ax.trapezoid_weight(i) * marginal.density(i) / z;
    double dx = ax.at(i) - m1;
    c2 += w * dx * dx;
    c3 += w * dx * dx * dx;
    c4 += w * dx * dx * dx * dx;
  }
  MarginalMoments out;
  out.mean = m1;
  out.variance = c2;
  out.skewness = c2 > 0 ? c3 / std::pow(c2, 1.5) : 0.0;
  out.excess_kurtosis = c2 > 0 ? c4 / (c2 * c2) - 3.0 : 0.0;
  return out;
}

Gaussian bvm_reference(const ParameterPoint& truth, const FisherMatrix& qfim, double m) {
  if (truth.size() != qfim.matrix.rows()) throw DimensionMismatch("bvm_reference: truth and QFIM dimensions differ");
  Eigen::SelfAdjointEigenSolver<RMatrix> es(qfim.matrix);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e10)
    throw NumericalError("bvm_reference: QFIM is singular; the Bernstein-von Mises limit does not apply");
  return {truth, (m * qfim.matrix).inverse()};
}

CoordinateMap hyperbolic_map() {
  CoordinateMap map;
  map.name = "hyperbolic";
  map.forward = [](const RVector& t) {
    RVector out(2);
    out << 0.5 * std::log(t(0) / t(1)), std::sqrt(t(0) * t(1));
    return out;
  };
  map.inverse = [](const RVector& c) {
    RVector out(2);
    out << c(1) * std::exp(c(0)), c(1) * std::exp(-c(0));
    return out;
  };
  map.jacobian_det = [](const RVector& c) { return 2.0 * std::abs(c(1)); };
  map.jacobian = [](const RVector& t) {
    RMatrix j(2, 2);
    j << 0.5 / t(0), -0.5 / t(1), 0.5 * std::sqrt(t(1) / t(0)), 0.5 * std::sqrt(t(0) / t(1));
    return j;
  };
  return map;
}

CoordinateMap identity_map() {
  CoordinateMap map;
  map.name = "identity";
  map.forward = [](const RVector& t) { return t; };
  map.inverse = [](const RVector& c) { return c; };
  map.jacobian_det = [](const RVector&) { return 1.0; };
  map.jacobian = [](const RVector& t) { return RMatrix(RMatrix::Identity(t.size(), t.size())); };
  return map;
}

CoordinateMap coordinate_map_from_string(const std::string& name) {
  if (name == "hyperbolic") return hyperbolic_map();
  if (name == "identity") return identity_map();
  throw std::invalid_argument("unknown coordinate map '" + name + "'");
}

PosteriorGrid transform_posterior(const PosteriorGrid& posterior, const CoordinateMap& map,
                                  const std::vector<GridAxis>& target_axes, bool include_jacobian) {
  require_2d(posterior, "transform_posterior");
  if (target_axes.size() != 2) throw DimensionMismatch("transform_posterior: two target axes are required");
  const GridAxis& a0 = posterior.axes[0];
  const GridAxis& a1 = posterior.axes[1];
  auto lw = [&](int i, int j) { return posterior.log_weights(static_cast<long>(i) * a1.n + j); };
  auto locate = [](const GridAxis& ax, double x, int& i, double& frac) {
    if (ax.n == 1) {
      i = 0;
      frac = 0.0;
      return;
    }
    double f = (x - ax.min) / ax.step();
    i = std::min(static_cast<int>(std::floor(f)), ax.n - 2);
    i = std::max(i, 0);
    frac = f - i;
  };

  PosteriorGrid out = uniform_prior(target_axes);
  for (long c = 0; c < out.cells(); ++c) {
    RVector chi = out.point_of(c);
    RVector theta = map.inverse(chi);
    if (!theta.allFinite() || !a0.contains(theta(0)) || !a1.contains(theta(1))) {
      out.log_weights(c) = kLogFloor;
      continue;
    }
    int i, j;
    double fi, fj;
    locate(a0, theta(0), i, fi);
    locate(a1, theta(1), j, fj);
    int i1 = std::min(i + 1, a0.n - 1), j1 = std::min(j + 1, a1.n - 1);
    double value = (1 - fi) * (1 - fj) * lw(i, j) + fi * (1 - fj) * lw(i1, j) + (1 - fi) * fj * lw(i, j1) +
                   fi * fj * lw(i1, j1);
    if (include_jacobian) {
      double det = map.jacobian_det(chi);
      value = det > 0.0 ? value + std::log(det) : kLogFloor;
    }
    out.log_weights(c) = std::max(value, kLogFloor);
  }
  out.normalize();
  return out;
}

std::vector<RidgePoint> ridge_extract(const PosteriorGrid& posterior, int sweep_axis, double min_mass_fraction) {
  require_2d(posterior, "ridge_extract");
  if (sweep_axis != 0 && sweep_axis != 1) throw std::out_of_range("ridge_extract: sweep axis must be 0 or 1");
  const GridAxis& sweep = posterior.axes[static_cast<std::size_t>(sweep_axis)];
  const GridAxis& other = posterior.axes[static_cast<std::size_t>(1 - sweep_axis)];
  auto cell = [&](int s, int o) {
    return sweep_axis == 0 ? static_cast<long>(s) * other.n + o : static_cast<long>(o) * sweep.n + s;
  };
  std::vector<double> mass(static_cast<std::size_t>(sweep.n), 0.0);
  std::vector<int> arg(static_cast<std::size_t>(sweep.n), 0);
  for (int s = 0; s < sweep.n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < other.n; ++o) {
      double lw = posterior.log_weights(cell(s, o));
      mass[static_cast<std::size_t>(s)] += other.trapezoid_weight(o) * std::exp(lw);
      if (lw > best) {
        best = lw;
        arg[static_cast<std::size_t>(s)] = o;
      }
    }
  }
  double top = *std::max_element(mass.begin(), mass.end());
  std::vector<RidgePoint> out;
  for (int s = 0; s < sweep.n; ++s) {
    double rel = top > 0 ? mass[static_cast<std::size_t>(s)] / top : 0.0;
    if (rel > min_mass_fraction) out.push_back({sweep.at(s), other.at(arg[static_cast<std::size_t>(s)]), rel});
  }
  return out;
}

ScanResult effective_crb_scan(const LogProbabilityTable& table, const OutcomeModel& model, const CoordinateMap& map,
                              const ParameterPoint& truth, const std::vector<std::uint64_t>& m_schedule,
                              const std::vector<std::uint64_t>& seeds, const ScanOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("effective_crb_scan: at least one seed is required");
  if (options.effective_axis != 0 && options.effective_axis != 1)
    throw std::out_of_range("effective_crb_scan: effective axis must be 0 or 1");
  for (std::size_t r = 1; r < m_schedule.size(); ++r)
    if (m_schedule[r] < m_schedule[r - 1]) throw std::invalid_argument("effective_crb_scan: schedule must be non-decreasing");

  ScanResult result;
  const std::vector<std::string>& labels = model.states.spec().free_params;
  StateFunction fn = [&model](const RVector& p) { return model.states.state(p); };
  result.qfim = qfim_mixed(derivative_bundle(fn, truth), labels);
  result.qfim_mapped = reparametrize(result.qfim, map.jacobian(truth),
                                     map.name == "hyperbolic" ? std::vector<std::string>{"u", "v"} : labels);
  result.effective_qfi = result.qfim_mapped.matrix(options.effective_axis, options.effective_axis);

  const RVector p_true = born_probabilities(model, truth);
  const PosteriorGrid prior = uniform_prior(table.axes);
  std::vector<MeasurementRecord> records(seeds.size());
  for (std::size_t r = 0; r < m_schedule.size(); ++r) {
    ScanRow row;
    row.m = m_schedule[r];
    row.crb_reference = static_cast<double>(row.m) * result.effective_qfi;
    row.per_seed.resize(seeds.size());
    std::vector<PosteriorGrid> transformed(seeds.size());
    std::uint64_t prev = r == 0 ? 0 : m_schedule[r - 1];
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      records[s] += sample_record(p_true, row.m - prev, seeds[s], r + 1);
      records[s].seed = seeds[s];
    }
    parallel_for(static_cast<long>(seeds.size()), options.threads, [&](long s) {
      PosteriorGrid post = posterior_update(prior, records[static_cast<std::size_t>(s)], table);
      transformed[static_cast<std::size_t>(s)] =
          transform_posterior(post, map, options.target_axes, options.include_jacobian);
      row.per_seed[static_cast<std::size_t>(s)] =
          marginal_moments(marginalize(transformed[static_cast<std::size_t>(s)], options.effective_axis));
    });
    double mean_var = 0.0;
    for (const auto& mm : row.per_seed) mean_var += mm.variance;
    mean_var /= static_cast<double>(seeds.size());
    row.inv_var = 1.0 / mean_var;
    result.rows.push_back(std::move(row));
    if (r + 1 == m_schedule.size()) result.final_transformed = std::move(transformed);
  }
  return result;
}

ScanResult effective_crb_scan(const OutcomeModel& model, const CoordinateMap& map, const ParameterPoint& truth,
                              const std::vector<std::uint64_t>& m_schedule, const std::vector<std::uint64_t>& seeds,
                              const ScanOptions& options) {
  LogProbabilityTable table = tabulate_log_probabilities(model, options.source_axes, options.threads);
  return effective_crb_scan(table, model, map, truth, m_schedule, seeds, options);
}

}  // namespace metrosym
