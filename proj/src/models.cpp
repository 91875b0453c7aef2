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

#include "metrosym/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "metrosym/linalg.hpp"

namespace metrosym {

namespace {

const std::set<std::string> kKnownParams = {"lambda", "gamma", "h", "J", "K", "T", "B"};

double get(const ParameterMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::invalid_argument("missing model parameter '" + name + "'");
  return it->second;
}

double get_or(const ParameterMap& p, const std::string& name, double fallback) {
  auto it = p.find(name);
  return it == p.end() ? fallback : it->second;
}

RMatrix real_site(char axis, int site, int n) {
  return site_operator(pauli(axis), site, n).matrix().real();
}

// sigma_a . sigma_b
RMatrix heisenberg_bond(int a, int b, int n) {
  RMatrix out = real_site('x', a, n) * real_site('x', b, n) + real_site('z', a, n) * real_site('z', b, n);
  CMatrix yy = site_operator(pauli('y'), a, n).matrix() * site_operator(pauli('y'), b, n).matrix();
  out += yy.real();
  return out;
}

RMatrix yy_bond(int a, int b, int n) {
  CMatrix yy = site_operator(pauli('y'), a, n).matrix() * site_operator(pauli('y'), b, n).matrix();
  return yy.real();
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::xy_ring: return "XY_RING";
    case ModelKind::xy_all2all: return "XY_ALL2ALL";
    case ModelKind::heisenberg_chain: return "HEISENBERG_CHAIN";
    case ModelKind::heisenberg_trimer: return "HEISENBERG_TRIMER";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "XY_RING") return ModelKind::xy_ring;
  if (name == "XY_ALL2ALL") return ModelKind::xy_all2all;
  if (name == "HEISENBERG_CHAIN") return ModelKind::heisenberg_chain;
  if (name == "HEISENBERG_TRIMER") return ModelKind::heisenberg_trimer;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

void ModelSpec::validate() const {
  if (free_params.empty()) throw std::invalid_argument("ModelSpec: free_params must be non-empty");
  std::set<std::string> seen;
  for (const auto& name : free_params) {
    if (!kKnownParams.count(name)) throw std::invalid_argument("ModelSpec: unknown parameter '" + name + "'");
    if (!seen.insert(name).second) throw std::invalid_argument("ModelSpec: duplicate parameter '" + name + "'");
  }
  for (const auto& [name, value] : fixed_params) {
    if (!kKnownParams.count(name)) throw std::invalid_argument("ModelSpec: unknown parameter '" + name + "'");
    (void)value;
  }
  switch (kind) {
    case ModelKind::xy_ring:
    case ModelKind::xy_all2all:
      if (n_sites < 3) throw std::invalid_argument("ModelSpec: XY models need n_sites >= 3");
      break;
    case ModelKind::heisenberg_trimer:
      if (n_sites != 3) throw std::invalid_argument("ModelSpec: the trimer has exactly 3 sites");
      break;
    case ModelKind::heisenberg_chain:
      if (n_sites < 4 || n_sites % 2 != 0)
        throw std::invalid_argument("ModelSpec: the Heisenberg chain needs an even n_sites >= 4");
      break;
  }
  if (n_sites > 12) throw std::invalid_argument("ModelSpec: n_sites above 12 is not supported");
}

ParameterMap ModelSpec::resolve(const ParameterPoint& point) const {
  if (static_cast<std::size_t>(point.size()) != free_params.size()) {
    std::ostringstream os;
    os << "parameter point has " << point.size() << " entries but the model has " << free_params.size()
       << " free parameters";
    throw DimensionMismatch(os.str());
  }
  ParameterMap out = fixed_params;
  for (std::size_t i = 0; i < free_params.size(); ++i) out[free_params[i]] = point(static_cast<Eigen::Index>(i));
  return out;
}

CMatrix pauli(char axis) {
  CMatrix m(2, 2);
  switch (axis) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    case 'i': m << 1, 0, 0, 1; break;
    default: throw std::invalid_argument(std::string("pauli: unknown axis '") + axis + "'");
  }
  return m;
}

HermitianOperator site_operator(const CMatrix& local, int site, int n_sites) {
  if (site < 0 || site >= n_sites) throw DimensionMismatch("site_operator: site out of range");
  const long left = 1L << site;
  const long right = 1L << (n_sites - site - 1);
  CMatrix m = kron(kron(CMatrix::Identity(left, left), local), CMatrix::Identity(right, right));
  return HermitianOperator(std::move(m));
}

HermitianOperator fermion_parity(int n_sites) {
  const long dim = 1L << n_sites;
  RMatrix p = RMatrix::Zero(dim, dim);
  for (long b = 0; b < dim; ++b) {
    // bit set = spin down; each site contributes -sigma_z
    int ups = n_sites - __builtin_popcountl(static_cast<unsigned long>(b));
    p(b, b) = (ups % 2 == 0) ? 1.0 : -1.0;
  }
  return HermitianOperator(p);
}

ModelOperators::ModelOperators(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int n = spec_.n_sites;
  const long dim = 1L << n;
  switch (spec_.kind) {
    case ModelKind::xy_ring: {
      RMatrix xx = RMatrix::Zero(dim, dim), yy = RMatrix::Zero(dim, dim), zz = RMatrix::Zero(dim, dim);
      for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        xx += real_site('x', i, n) * real_site('x', j, n);
        yy += yy_bond(i, j, n);
        zz += real_site('z', i, n);
      }
      terms_ = {xx, yy, zz};
      break;
    }
    case ModelKind::xy_all2all: {
      RMatrix sx = RMatrix::Zero(dim, dim), sz = RMatrix::Zero(dim, dim);
      CMatrix sy = CMatrix::Zero(dim, dim);
      for (int i = 0; i < n; ++i) {
        sx += 0.5 * real_site('x', i, n);
        sy += 0.5 * site_operator(pauli('y'), i, n).matrix();
        sz += 0.5 * real_site('z', i, n);
      }
      RMatrix sy2 = (sy * sy).real();
      terms_ = {sx * sx, sy2, sz, RMatrix::Identity(dim, dim)};
      break;
    }
    case ModelKind::heisenberg_chain: {
      auto [c0, c1] = central_sites(n);
      RMatrix outer = RMatrix::Zero(dim, dim);
      for (int i = 0; i + 1 < n; ++i)
        if (i != c0) outer += heisenberg_bond(i, i + 1, n);
      terms_ = {outer, heisenberg_bond(c0, c1, n), RMatrix::Zero(dim, dim)};
      for (int i = 0; i < n; ++i) terms_[2] += 0.5 * real_site('z', i, n);
      break;
    }
    case ModelKind::heisenberg_trimer: {
      // S = sigma / 2, so S_a . S_b = (sigma_a . sigma_b) / 4
      RMatrix s12 = heisenberg_bond(0, 1, n) / 4.0;
      RMatrix s3 = (heisenberg_bond(0, 2, n) + heisenberg_bond(1, 2, n)) / 4.0;
      RMatrix sz = RMatrix::Zero(dim, dim);
      for (int i = 0; i < n; ++i) sz += 0.5 * real_site('z', i, n);
      terms_ = {s12, s3, sz};
      break;
    }
  }
}

HermitianOperator ModelOperators::hamiltonian(const ParameterMap& p) const {
  RMatrix h;
  switch (spec_.kind) {
    case ModelKind::xy_ring: {
      double lam = get(p, "lambda"), gam = get(p, "gamma"), field = get(p, "h");
      h = 0.5 * lam * (1 + gam) * terms_[0] + 0.5 * lam * (1 - gam) * terms_[1] + field * terms_[2];
      break;
    }
    case ModelKind::xy_all2all: {
      double lam = get(p, "lambda"), gam = get(p, "gamma"), field = get(p, "h");
      const double n = spec_.n_sites;
      h = lam * (1 + gam) * terms_[0] + lam * (1 - gam) * terms_[1] + 2.0 * field * terms_[2] -
          0.5 * lam * n * terms_[3];
      break;
    }
    case ModelKind::heisenberg_chain: {
      h = get(p, "J") * terms_[0] + get(p, "K") * terms_[1] + get_or(p, "B", 0.0) * terms_[2];
      break;
    }
    case ModelKind::heisenberg_trimer: {
      h = get(p, "K") * terms_[0] + get(p, "J") * terms_[1] + get_or(p, "B", 0.0) * terms_[2];
      break;
    }
  }
  return HermitianOperator(h);
}

HermitianOperator ModelOperators::hamiltonian(const ParameterPoint& point) const {
  return hamiltonian(spec_.resolve(point));
}

HermitianOperator build_hamiltonian(const ModelSpec& spec, const ParameterPoint& point) {
  return ModelOperators(spec).hamiltonian(point);
}

std::string to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::total_magnetization: return "TOTAL_MAGNETIZATION";
    case ObservableKind::central_spin_correlation: return "CENTRAL_SPIN_CORRELATION";
    case ObservableKind::s12_squared: return "S12_SQUARED";
  }
  return "?";
}

ObservableKind observable_kind_from_string(const std::string& name) {
  if (name == "TOTAL_MAGNETIZATION") return ObservableKind::total_magnetization;
  if (name == "CENTRAL_SPIN_CORRELATION") return ObservableKind::central_spin_correlation;
  if (name == "S12_SQUARED") return ObservableKind::s12_squared;
  throw std::invalid_argument("unknown observable '" + name + "'");
}

HermitianOperator restrict_to_sites(const HermitianOperator& op, int n_sites, const std::set<int>& keep) {
  const double traced_dim = std::ldexp(1.0, n_sites - static_cast<int>(keep.size()));
  CMatrix reduced = partial_trace_matrix(op.matrix(), std::vector<int>(n_sites, 2), keep) / traced_dim;
  // |op|^2 = d_traced |op_kept|^2 exactly when op = op_kept (x) identity
  double full = op.matrix().squaredNorm();
  double embedded = traced_dim * reduced.squaredNorm();
  if (full - embedded > 1e-12 * std::max(1.0, full))
    throw std::invalid_argument("restrict_to_sites: operator acts on traced-out sites");
  return HermitianOperator(std::move(reduced));
}

std::pair<int, int> central_sites(int n_sites) { return {n_sites / 2 - 1, n_sites / 2}; }

HermitianOperator observable(const ModelSpec& spec, ObservableKind kind) {
  spec.validate();
  const int n = spec.n_sites;
  switch (kind) {
    case ObservableKind::total_magnetization: {
      if (spec.kind != ModelKind::xy_ring && spec.kind != ModelKind::xy_all2all)
        throw std::invalid_argument("TOTAL_MAGNETIZATION is defined for the XY models");
      RMatrix m = RMatrix::Zero(1L << n, 1L << n);
      for (int i = 0; i < n; ++i) m += real_site('z', i, n);
      return HermitianOperator(m);
    }
    case ObservableKind::central_spin_correlation: {
      if (spec.kind != ModelKind::heisenberg_chain)
        throw std::invalid_argument("CENTRAL_SPIN_CORRELATION is defined for the Heisenberg chain");
      auto [a, b] = central_sites(n);
      return HermitianOperator(heisenberg_bond(a, b, n));
    }
    case ObservableKind::s12_squared: {
      if (spec.kind != ModelKind::heisenberg_trimer)
        throw std::invalid_argument("S12_SQUARED is defined for the Heisenberg trimer");
      // (S1 + S2)^2 = 3/2 + (sigma_1 . sigma_2) / 2
      RMatrix id = RMatrix::Identity(1L << n, 1L << n);
      return HermitianOperator(RMatrix(1.5 * id + 0.5 * heisenberg_bond(0, 1, n)));
    }
  }
  throw std::invalid_argument("unknown observable");
}

std::vector<DispersionPoint> xy_ring_dispersion(int n_sites, double lambda, double gamma, double h) {
  if (n_sites < 3) throw std::invalid_argument("xy_ring_dispersion: n_sites must be >= 3");
  std::vector<DispersionPoint> out;
  for (int n = 0; n < n_sites / 2; ++n) {
    double k = std::numbers::pi * (2 * n + 1) / n_sites;
    double a = h + lambda * std::cos(k);
    double b = lambda * gamma * std::sin(k);
    out.push_back({k, 2.0 * std::sqrt(a * a + b * b)});
  }
  return out;
}

CVector xy_ring_momentum_ground_state(int n_sites, double lambda, double gamma, double h) {
  if (n_sites % 2 != 0) throw std::invalid_argument("momentum-block ground state needs even n_sites");
  const int n = n_sites;
  const long dim = 1L << n;
  // Fermion occupation = spin up = bit clear. c_j^dag carries the string of
  // sigma_z over sites before j.
  auto create = [&](const CVector& in, int j) {
    CVector out = CVector::Zero(dim);
    for (long b = 0; b < dim; ++b) {
      if (in(b) == Complex(0.0)) continue;
      long bit = 1L << (n - 1 - j);
      if (!(b & bit)) continue;
      int sign = 1;
      for (int l = 0; l < j; ++l)
        if (b & (1L << (n - 1 - l))) sign = -sign;
      out(b & ~bit) += static_cast<double>(sign) * in(b);
    }
    return out;
  };
  auto create_mode = [&](const CVector& in, double q) {
    CVector out = CVector::Zero(dim);
    for (int j = 0; j < n; ++j) out += std::exp(Complex(0, q * j)) * create(in, j);
    return CVector(out / std::sqrt(static_cast<double>(n)));
  };

  CVector psi = CVector::Zero(dim);
  psi(dim - 1) = 1.0;  // all spins down: the fermion vacuum
  for (const auto& [k, eps] : xy_ring_dispersion(n, lambda, gamma, h)) {
    (void)eps;
    double theta = std::atan2(-lambda * gamma * std::sin(k), h + lambda * std::cos(k));
    double q = std::numbers::pi - k;
    CVector pair = create_mode(create_mode(psi, -q), q);
    psi = std::cos(theta / 2) * psi + Complex(0, -1) * std::sin(theta / 2) * pair;
  }
  psi.normalize();
  fix_phase(psi);
  return psi;
}

double xy_ring_lambda_gamma_det_n4(double lambda, double gamma, double h) {
  double l2 = lambda * lambda, g2 = gamma * gamma, h2 = h * h;
  double den = 4 * h2 * h2 + 4 * h2 * (g2 - 1) * l2 + (g2 + 1) * (g2 + 1) * l2 * l2;
  return 8 * h2 * g2 * l2 * l2 / (den * den);
}

namespace {

double ring_sum(int n_sites, double lambda, double gamma, double h) {
  double s = 0.0;
  for (const auto& [k, eps] : xy_ring_dispersion(n_sites, lambda, gamma, h)) {
    s += 16.0 * std::sin(k) * std::sin(k) / std::pow(eps, 4);
  }
  return s;
}

RMatrix reorder(const RMatrix& m, bool swap) {
  if (!swap) return m;
  RMatrix out(2, 2);
  out << m(1, 1), m(1, 0), m(0, 1), m(0, 0);
  return out;
}

}  // namespace

double xy_ring_effective_qfi(int n_sites, double lambda, double gamma, double h) {
  return gamma * gamma * std::pow(lambda, 4) * ring_sum(n_sites, lambda, gamma, h);
}

RMatrix xy_ring_lambda_h_pseudoinverse(int n_sites, double lambda, double gamma, double h) {
  double s = ring_sum(n_sites, lambda, gamma, h);
  double r2 = h * h + lambda * lambda;
  RMatrix m(2, 2);
  m << h * h, -h * lambda, -h * lambda, lambda * lambda;
  return m / (s * gamma * gamma * r2 * r2);
}

double xy_n3_top_eigenvalue(double lambda, double gamma, double h) {
  double l = lambda, g = gamma;
  double num = 3 * (4 * h * h * (g * g + l * l) + 4 * h * l * l * l + l * l * l * l);
  double den = (3 * g * g + 1) * l * l + 4 * h * h + 4 * h * l;
  return num / (den * den);
}

RVector xy_n3_null_vector(double lambda, double gamma, double h) {
  RVector v(2);
  v << -lambda * (2 * h + lambda), 2 * gamma * h;
  return v.normalized();
}

AnalyticQfim analytic_qfim(const ModelSpec& spec, const ParameterPoint& point,
                           const std::pair<std::string, std::string>& pair) {
  ParameterMap p = spec.resolve(point);
  auto is_pair = [&](const char* a, const char* b) {
    return (pair.first == a && pair.second == b) || (pair.first == b && pair.second == a);
  };
  bool xy = spec.kind == ModelKind::xy_ring || (spec.kind == ModelKind::xy_all2all && spec.n_sites == 3);
  if (xy && spec.n_sites == 3 && is_pair("lambda", "gamma")) {
    double l = get(p, "lambda"), g = get(p, "gamma"), h = get(p, "h");
    double chi = std::pow((3 * g * g + 1) * l * l + 4 * h * h + 4 * h * l, 2);
    RMatrix m(2, 2);
    m << 12 * g * g * h * h, 6 * g * h * l * (2 * h + l), 6 * g * h * l * (2 * h + l),
        3 * l * l * (l + 2 * h) * (l + 2 * h);
    return {reorder(m / chi, pair.first != "lambda"), AnalyticForm::n3_lambda_gamma};
  }
  if (spec.kind == ModelKind::xy_ring && is_pair("lambda", "gamma")) {
    double l = get(p, "lambda"), g = get(p, "gamma"), h = get(p, "h");
    RMatrix m = RMatrix::Zero(2, 2);
    for (const auto& [k, eps] : xy_ring_dispersion(spec.n_sites, l, g, h)) {
      double c = 16.0 * std::sin(k) * std::sin(k) / std::pow(eps, 4);
      double a = h + l * std::cos(k);
      RMatrix blk(2, 2);
      blk << h * h * g * g, h * g * l * a, h * g * l * a, l * l * a * a;
      m += c * blk;
    }
    return {reorder(m, pair.first != "lambda"), AnalyticForm::ring_lambda_gamma};
  }
  if (spec.kind == ModelKind::xy_ring && is_pair("lambda", "h")) {
    double l = get(p, "lambda"), g = get(p, "gamma"), h = get(p, "h");
    double s = ring_sum(spec.n_sites, l, g, h);
    RMatrix m(2, 2);
    m << h * h, -h * l, -h * l, l * l;
    return {reorder(s * g * g * m, pair.first != "lambda"), AnalyticForm::ring_lambda_h};
  }
  if (spec.kind == ModelKind::heisenberg_trimer && is_pair("K", "T")) {
    AnalyticQfim q = trimer_reduced_qfim(get(p, "J"), get(p, "K"), get(p, "T"));
    q.matrix = reorder(q.matrix, pair.first != "K");
    return q;
  }
  throw std::invalid_argument("analytic_qfim: no closed form for " + to_string(spec.kind) + " with (" +
                              pair.first + ", " + pair.second + ")");
}

std::vector<TrimerLevel> trimer_levels(double j, double k) {
  return {{-0.75 * k, 2, 0.5, 0}, {0.25 * k - j, 2, 0.5, 1}, {0.25 * k + 0.5 * j, 4, 1.5, 1}};
}

namespace {

struct TrimerWeights {
  double p[3];  // per-state probability of each level
};

TrimerWeights trimer_weights(double j, double k, double temperature) {
  auto levels = trimer_levels(j, k);
  double e_min = std::min({levels[0].energy, levels[1].energy, levels[2].energy});
  double z = 0.0, w[3];
  for (int i = 0; i < 3; ++i) {
    w[i] = std::exp(-(levels[i].energy - e_min) / temperature);
    z += levels[i].degeneracy * w[i];
  }
  return {{w[0] / z, w[1] / z, w[2] / z}};
}

}  // namespace

TrimerPopulations trimer_reduced_populations(double j, double k, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("trimer_reduced_populations: T must be positive");
  TrimerWeights w = trimer_weights(j, k, temperature);
  return {2.0 * w.p[0], (2.0 / 3.0) * w.p[1] + (4.0 / 3.0) * w.p[2]};
}

double trimer_contour_K_of_T(double j, double temperature, double omega) {
  if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("trimer_contour_K_of_T: omega must lie in (0, 2)");
  if (!(temperature > 0.0)) throw std::invalid_argument("trimer_contour_K_of_T: T must be positive");
  double t = temperature;
  // log of e^{-J/2T} (2 + e^{3J/2T}) evaluated without overflow
  double a = 3.0 * j / (2.0 * t);
  double log_factor = -j / (2.0 * t) + (a > 0 ? a + std::log1p(2.0 * std::exp(-a)) : std::log(2.0 + std::exp(a)));
  return t * (std::log((2.0 - omega) / omega) + log_factor);
}

AnalyticQfim trimer_reduced_qfim(double j, double k, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("trimer_reduced_qfim: T must be positive");
  auto levels = trimer_levels(j, k);
  TrimerWeights w = trimer_weights(j, k, temperature);
  const double t = temperature;
  // d(E_i / T) with respect to (K, T)
  double dk[3], dt[3];
  for (int i = 0; i < 3; ++i) {
    dk[i] = (i == 0 ? -0.75 : 0.25) / t;
    dt[i] = -levels[i].energy / (t * t);
  }
  double mean_k = 0, mean_t = 0;
  for (int i = 0; i < 3; ++i) {
    mean_k += levels[i].degeneracy * w.p[i] * dk[i];
    mean_t += levels[i].degeneracy * w.p[i] * dt[i];
  }
  RVector dp_k(3), dp_t(3);
  for (int i = 0; i < 3; ++i) {
    dp_k(i) = w.p[i] * (mean_k - dk[i]);
    dp_t(i) = w.p[i] * (mean_t - dt[i]);
  }
  RVector g0(2), g1(2);
  g0 << 2.0 * dp_k(0), 2.0 * dp_t(0);
  g1 << (2.0 / 3.0) * dp_k(1) + (4.0 / 3.0) * dp_k(2), (2.0 / 3.0) * dp_t(1) + (4.0 / 3.0) * dp_t(2);
  TrimerPopulations pop = trimer_reduced_populations(j, k, t);
  RMatrix m = 3.0 * g1 * g1.transpose() / pop.p_triplet + g0 * g0.transpose() / pop.p_singlet;
  return {m, AnalyticForm::trimer_populations};
}

AnalyticQfim two_level_qfim(double p, double q, const RVector& grad_p, const RVector& grad_q) {
  (void)q;
  if (grad_p.size() != grad_q.size()) throw DimensionMismatch("two_level_qfim: gradient lengths differ");
  double s = std::sin(2.0 * p);
  RMatrix m = 4.0 * grad_p * grad_p.transpose() + s * s * grad_q * grad_q.transpose();
  return {m, AnalyticForm::two_level_pq};
}

StateModel::StateModel(ModelSpec spec, StateRecipe recipe) : ops_(std::move(spec)), recipe_(std::move(recipe)) {
  if (recipe_.parity_sector) {
    int s = *recipe_.parity_sector;
    if (s != 1 && s != -1) throw std::invalid_argument("parity sector must be +1 or -1");
    const int n = ops_.spec().n_sites;
    HermitianOperator p = fermion_parity(n);
    RMatrix id = RMatrix::Identity(p.dim(), p.dim());
    parity_projector_ = HermitianOperator(RMatrix(0.5 * (id + s * p.matrix().real())));
  }
  if (recipe_.kind == StateKind::reduced_thermal) {
    if (recipe_.kept_sites.empty()) throw std::invalid_argument("reduced state needs kept sites");
    for (int s : recipe_.kept_sites)
      if (s < 0 || s >= ops_.spec().n_sites) throw std::invalid_argument("kept site out of range");
  }
}

DensityMatrix StateModel::state(const ParameterPoint& point) const {
  ParameterMap p = ops_.spec().resolve(point);
  HermitianOperator h = ops_.hamiltonian(p);
  switch (recipe_.kind) {
    case StateKind::ground: {
      if (parity_projector_) {
        if (recipe_.degenerate == DegeneratePolicy::average)
          return ground_manifold_mixture_in_subspace(h, *parity_projector_, recipe_.gap_tolerance);
        return ground_state_in_subspace(h, *parity_projector_, recipe_.gap_tolerance);
      }
      if (recipe_.degenerate == DegeneratePolicy::average) return ground_manifold_mixture(h, recipe_.gap_tolerance);
      return ground_state(h, recipe_.gap_tolerance);
    }
    case StateKind::thermal:
      return thermal_state(h, get(p, "T"));
    case StateKind::reduced_thermal: {
      DensityMatrix full = thermal_state(h, get(p, "T"));
      return partial_trace(full, std::vector<int>(ops_.spec().n_sites, 2), recipe_.kept_sites);
    }
  }
  throw std::logic_error("unhandled state kind");
}

std::optional<std::string> StateModel::regime_warning(const ParameterPoint& point) const {
  if (ops_.spec().kind != ModelKind::xy_all2all) return std::nullopt;
  ParameterMap p = ops_.spec().resolve(point);
  double lam = get(p, "lambda"), gam = get(p, "gamma"), h = get(p, "h");
  if (h != 1.0 || !(lam > 0.0) || !(gam > 0.0))
    return std::string("all-to-all model outside h = 1, lambda > 0, gamma > 0");
  return std::nullopt;
}

}  // namespace metrosym
