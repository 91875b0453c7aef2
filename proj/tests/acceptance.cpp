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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metrosym/bayes.hpp"
#include "metrosym/commands.hpp"
#include "metrosym/config.hpp"
#include "metrosym/fisher.hpp"
#include "metrosym/models.hpp"
#include "metrosym/rng.hpp"

using namespace metrosym;

namespace {

// Pinned tolerances.
constexpr double kQfimRelTol = 1e-6;
constexpr double kSingularDetRatio = 1e-10;
constexpr double kDetRelTol = 1e-6;
constexpr double kAngleTol = 1e-5;
constexpr double kG1RelTol = 1e-6;
constexpr double kPinvRelTol = 1e-8;
constexpr double kTrimerEnergyTol = 1e-10;
constexpr double kTrimerOmega = 1.4;
constexpr double kTrimerOmegaTol = 0.05;
constexpr double kContourTol = 1e-9;
constexpr double kThermalRelTol = 1e-4;
constexpr double kSlopeRelTol = 0.2;
constexpr double kCovRelTol = 0.2;
constexpr double kSigmaBound = 3.0;
constexpr int kSeedsRequired = 95;
constexpr double kRidgeCells = 2.0;
constexpr double kRidgeRatio = 1.375;
constexpr double kRatioLoLambdaH = 0.85, kRatioHiLambdaH = 1.15;
constexpr double kRatioLoAll2All = 0.75, kRatioHiAll2All = 1.25;
constexpr double kSkewTol = 0.2;
constexpr double kKurtTol = 0.5;
constexpr double kCrit1Seconds = 5.0;
constexpr double kCrit7Seconds = 300.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, x);
  return buf;
}

RVector point2(double a, double b) {
  RVector p(2);
  p << a, b;
  return p;
}

class Uniform {
 public:
  explicit Uniform(std::uint64_t stream) : rng_(20260101, stream) {}
  double operator()(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }

 private:
  RandomStream rng_;
};

StateFunction state_fn(const ModelSpec& spec, const StateRecipe& recipe) {
  auto model = std::make_shared<StateModel>(spec, recipe);
  return [model](const RVector& p) { return model->state(p); };
}

StateRecipe even_ground() {
  StateRecipe r;
  r.parity_sector = 1;
  return r;
}

double max_entry_rel(const RMatrix& a, const RMatrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::abs(b(i, j)));
  return worst;
}

double expectation(const DensityMatrix& rho, const HermitianOperator& op) {
  return (rho.matrix() * op.matrix()).trace().real();
}

ModelSpec ring(int n, ParameterMap fixed, std::vector<std::string> free) {
  return ModelSpec{ModelKind::xy_ring, n, std::move(fixed), std::move(free)};
}

// Numeric pure-state QFIM against the closed forms.
Outcome criterion_1() {
  auto t0 = Clock::now();
  Uniform u(1);
  struct Case {
    ModelSpec spec;
    std::pair<std::string, std::string> pair;
    double worst = 0.0;
  };
  std::vector<Case> cases = {{ring(4, {{"h", 1.0}}, {"lambda", "gamma"}), {"lambda", "gamma"}},
                             {ring(4, {{"gamma", 1.0}}, {"lambda", "h"}), {"lambda", "h"}},
                             {ring(3, {{"h", 1.0}}, {"lambda", "gamma"}), {"lambda", "gamma"}}};
  for (auto& c : cases) {
    StateFunction fn = state_fn(c.spec, even_ground());
    for (int i = 0; i < 50; ++i) {
      RVector p = point2(u(0.2, 1.5), u(0.2, 1.5));
      RMatrix numeric = qfim_pure(derivative_bundle(fn, p)).matrix;
      RMatrix exact = analytic_qfim(c.spec, p, c.pair).matrix;
      c.worst = std::max(c.worst, max_entry_rel(numeric, exact));
    }
  }
  double secs = seconds_since(t0);
  bool pass = secs < kCrit1Seconds;
  for (const auto& c : cases) pass = pass && c.worst < kQfimRelTol;
  return {pass, "max entry rel err: ring (lambda,gamma) " + fmt("%.2e", cases[0].worst) + ", ring (lambda,h) " +
                    fmt("%.2e", cases[1].worst) + ", N=3 " + fmt("%.2e", cases[2].worst) + "; " +
                    fmt("%.2f", secs) + " s"};
}

// det of the (lambda, h) QFIM vanishes; det of the (lambda, gamma) QFIM matches its closed form.
Outcome criterion_2() {
  Uniform u(2);
  ModelSpec lh = ring(4, {{"gamma", 1.0}}, {"lambda", "h"});
  StateFunction lh_fn = state_fn(lh, even_ground());
  double worst_ratio = 0.0;
  for (int i = 0; i < 50; ++i) {
    RMatrix f = qfim_pure(derivative_bundle(lh_fn, point2(u(0.2, 1.5), u(0.2, 1.5)))).matrix;
    worst_ratio = std::max(worst_ratio, std::abs(f.determinant()) / f.squaredNorm());
  }

  double worst_det = 0.0, min_det = INFINITY;
  for (int i = 0; i < 50; ++i) {
    auto sign = [&u]() { return u(0.0, 1.0) < 0.5 ? -1.0 : 1.0; };
    double l = sign() * u(0.2, 1.5), g = sign() * u(0.2, 1.5), h = sign() * u(0.2, 1.5);
    ModelSpec lg = ring(4, {{"h", h}}, {"lambda", "gamma"});
    RMatrix f = qfim_pure(derivative_bundle(state_fn(lg, even_ground()), point2(l, g))).matrix;
    double exact = xy_ring_lambda_gamma_det_n4(l, g, h);
    worst_det = std::max(worst_det, std::abs(f.determinant() - exact) / std::abs(exact));
    min_det = std::min(min_det, f.determinant());
  }
  bool pass = worst_ratio <= kSingularDetRatio && worst_det < kDetRelTol && min_det > 0.0;
  return {pass, "max det/|I|^2 (lambda,h) " + fmt("%.2e", worst_ratio) + "; (lambda,gamma) det rel err " +
                    fmt("%.2e", worst_det) + ", min det " + fmt("%.3e", min_det)};
}

RVector grad_ratio(double l, double h) { return point2(-h / (l * l), 1.0 / l); }

// Rank-one QFIM: top eigenvector along grad(h / lambda), eigenvalue I_Omega |grad|^2.
Outcome criterion_3() {
  Uniform u(3);
  ModelSpec lh = ring(4, {{"gamma", 1.0}}, {"lambda", "h"});
  StateFunction fn = state_fn(lh, even_ground());
  double worst_angle = 0.0, worst_g1 = 0.0;
  for (int i = 0; i < 50; ++i) {
    double l = u(0.2, 1.5), h = u(0.2, 1.5);
    FisherMatrix f = qfim_pure(derivative_bundle(fn, point2(l, h)));
    RVector grad = grad_ratio(l, h);
    worst_angle = std::max(worst_angle, factorization_check(f, grad).eigenvector_angle);
    double g1 = qfim_spectrum(f).eigenvalues(0);
    double expected = xy_ring_effective_qfi(4, l, 1.0, h) * grad.squaredNorm();
    worst_g1 = std::max(worst_g1, std::abs(g1 - expected) / expected);
  }
  bool pass = worst_angle < kAngleTol && worst_g1 < kG1RelTol;
  return {pass, "max angle " + fmt("%.2e", worst_angle) + " rad, max G1 rel err " + fmt("%.2e", worst_g1)};
}

// grad^T I^+ grad / M equals 1 / (M I_Omega).
Outcome criterion_4() {
  Uniform u(4);
  const double m = 1000.0;
  double worst = 0.0, worst_closed = 0.0;
  for (int i = 0; i < 20; ++i) {
    double l = u(0.2, 1.5), h = u(0.2, 1.5), g = u(0.2, 1.5);
    ModelSpec lh = ring(4, {{"gamma", g}}, {"lambda", "h"});
    RMatrix f = analytic_qfim(lh, point2(l, h), {"lambda", "h"}).matrix;
    RVector grad = grad_ratio(l, h);
    double expected = 1.0 / (m * xy_ring_effective_qfi(4, l, g, h));
    double via_svd = effective_variance_via_pseudoinverse(pseudoinverse(f), grad, m);
    double via_closed = effective_variance_via_pseudoinverse(xy_ring_lambda_h_pseudoinverse(4, l, g, h), grad, m);
    worst = std::max(worst, std::abs(via_svd - expected) / expected);
    worst_closed = std::max(worst_closed, std::abs(via_closed - expected) / expected);
  }
  bool pass = worst < kPinvRelTol && worst_closed < kPinvRelTol;
  return {pass, "max rel err " + fmt("%.2e", worst) + " (SVD pseudoinverse), " + fmt("%.2e", worst_closed) +
                    " (closed form)"};
}

Outcome criterion_5() {
  Uniform u(5);
  double worst_energy = 0.0;
  bool degeneracies_ok = true;
  for (int i = 0; i < 10; ++i) {
    double j = u(-2.0, 2.0), k = u(-2.0, 2.0);
    ModelSpec spec{ModelKind::heisenberg_trimer, 3, {{"J", j}, {"B", 0.0}}, {"K"}};
    RVector p(1);
    p << k;
    RVector ed = eig_hermitian(build_hamiltonian(spec, p)).values;
    std::vector<double> analytic;
    int total = 0;
    for (const auto& level : trimer_levels(j, k)) {
      total += level.degeneracy;
      for (int d = 0; d < level.degeneracy; ++d) analytic.push_back(level.energy);
    }
    std::sort(analytic.begin(), analytic.end());
    degeneracies_ok = degeneracies_ok && total == 8 && ed.size() == 8;
    for (int n = 0; n < 8 && n < ed.size(); ++n)
      worst_energy = std::max(worst_energy, std::abs(ed(n) - analytic[std::size_t(n)]));
  }

  double omega = trimer_reduced_populations(1.0, 0.5, 1.0).omega();

  double worst_trip = 0.0;
  for (int i = 0; i < 20; ++i) {
    double k = u(-0.5, 2.0), t = u(0.1, 3.0);
    double back = trimer_contour_K_of_T(1.0, t, trimer_reduced_populations(1.0, k, t).omega());
    worst_trip = std::max(worst_trip, std::abs(back - k));
  }

  ModelSpec reduced{ModelKind::heisenberg_trimer, 3, {{"J", 1.0}}, {"K", "T"}};
  StateRecipe recipe;
  recipe.kind = StateKind::reduced_thermal;
  recipe.kept_sites = {0, 1};
  StateFunction fn = state_fn(reduced, recipe);
  int rank_one = 0;
  for (int i = 0; i < 20; ++i) {
    RVector p = point2(u(-0.5, 2.0), u(0.2, 3.0));
    if (qfim_spectrum(qfim_mixed(derivative_bundle(fn, p))).rank == 1) ++rank_one;
  }

  bool pass = worst_energy < kTrimerEnergyTol && degeneracies_ok &&
              std::abs(omega - kTrimerOmega) < kTrimerOmegaTol && worst_trip < kContourTol && rank_one == 20;
  return {pass, "energy err " + fmt("%.2e", worst_energy) + ", Omega(1,0.5,1) = " + fmt("%.4f", omega) +
                    ", round trip err " + fmt("%.2e", worst_trip) + ", rank-1 at " + std::to_string(rank_one) +
                    "/20 points"};
}

double spectral_gap(const ModelSpec& spec, const RVector& point) {
  RVector e = eig_hermitian(build_hamiltonian(spec, point)).values;
  return e(1) - e(0);
}

RMatrix thermal_qfim(double lambda, double gamma, double temperature) {
  ModelSpec spec = ring(4, {{"h", 1.0}, {"T", temperature}}, {"lambda", "gamma"});
  StateRecipe recipe;
  recipe.kind = StateKind::thermal;
  return qfim_mixed(derivative_bundle(state_fn(spec, recipe), point2(lambda, gamma))).matrix;
}

Outcome criterion_6() {
  ModelSpec ground_spec = ring(4, {{"h", 1.0}}, {"lambda", "gamma"});
  RVector p = point2(0.6, 0.5);
  double gap = spectral_gap(ground_spec, p);
  StateRecipe global_ground;
  RMatrix ground = qfim_pure(derivative_bundle(state_fn(ground_spec, global_ground), p)).matrix;
  RMatrix thermal = thermal_qfim(0.6, 0.5, gap / 20.0);
  double entry_err = max_entry_rel(thermal, ground);

  // At gamma = 0 the ground-state determinant vanishes and the thermal one is
  // activated across the gap.
  RVector p0 = point2(0.6, 0.0);
  double gap0 = spectral_gap(ground_spec, p0);
  const int n = 16;
  RVector x(n), y(n);
  for (int i = 0; i < n; ++i) {
    double beta = (5.0 + 15.0 * i / (n - 1)) / gap0;
    x(i) = beta;
    y(i) = std::log(thermal_qfim(0.6, 0.0, 1.0 / beta).determinant());
  }
  double xm = x.mean(), ym = y.mean();
  double slope = ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
  double slope_err = std::abs(slope / -gap0 - 1.0);

  bool pass = entry_err < kThermalRelTol && slope_err < kSlopeRelTol && std::isfinite(slope);
  return {pass, "gap " + fmt("%.4f", gap) + ", max entry rel err at T = gap/20 " + fmt("%.2e", entry_err) +
                    "; gamma = 0 gap " + fmt("%.4f", gap0) + ", log-det slope " + fmt("%.4f", slope) +
                    " (rel err " + fmt("%.3f", slope_err) + ")"};
}

std::string config_path(const std::string& name) { return std::string(METROSYM_CONFIG_DIR) + "/" + name; }

Outcome criterion_7() {
  auto t0 = Clock::now();
  ExperimentConfig config = load_config(config_path("ring_lambda_gamma.yaml"));
  OutcomeModel model = make_outcome_model(config);
  LogProbabilityTable table = tabulate_log_probabilities(model, config.grid);
  RVector p_true = born_probabilities(model, config.truth);
  StateFunction fn = [&model](const RVector& p) { return model.states.state(p); };
  FisherMatrix qfim = qfim_mixed(derivative_bundle(fn, config.truth));
  const double m = static_cast<double>(config.m_total);
  RMatrix crb = bvm_reference(config.truth, qfim, m).covariance;

  const PosteriorGrid prior = uniform_prior(config.grid);
  RMatrix mean_cov = RMatrix::Zero(2, 2);
  int within = 0, cov_ok = 0;
  const int n_seeds = 100;
  for (int s = 1; s <= n_seeds; ++s) {
    MeasurementRecord record{std::vector<std::uint64_t>(model.povm.size(), 0), 0, std::uint64_t(s)};
    std::uint64_t batch = 0;
    while (record.m < config.m_total) {
      std::uint64_t k = std::min(config.batch_size, config.m_total - record.m);
      record += sample_record(p_true, k, std::uint64_t(s), ++batch);
    }
    Moments mom = bayes_mean_and_variance(posterior_update(prior, record, table));
    mean_cov += mom.covariance / n_seeds;
    if (max_entry_rel(mom.covariance, crb) < kCovRelTol) ++cov_ok;
    bool ok = true;
    for (int i = 0; i < 2; ++i)
      ok = ok && std::abs(mom.mean(i) - config.truth(i)) <= kSigmaBound * std::sqrt(mom.covariance(i, i));
    if (ok) ++within;
  }
  double cov_err = max_entry_rel(mean_cov, crb);
  double secs = seconds_since(t0);
  bool pass = cov_err < kCovRelTol && within >= kSeedsRequired && secs < kCrit7Seconds;
  return {pass, "seed-averaged posterior covariance max entry rel err " + fmt("%.3f", cov_err) + " (" +
                    std::to_string(cov_ok) + "/100 single seeds within 0.2), " + std::to_string(within) +
                    "/100 seeds within 3 sigma; " + fmt("%.1f", secs) + " s"};
}

// Largest ridge deviation in grid cells, or infinity when a ridge point has no
// reference.
double ridge_deviation(const BayesRunResult& run, const GridAxis& argmax_axis,
                       const std::function<std::optional<double>(double)>& reference) {
  double worst = 0.0;
  for (const auto& pt : run.ridge) {
    auto ref = reference(pt.sweep);
    if (!ref) return INFINITY;
    worst = std::max(worst, std::abs(pt.argmax - *ref) / argmax_axis.step());
  }
  return worst;
}

Outcome criterion_8() {
  ExperimentConfig lh = load_config(config_path("ring_lambda_h_ridge.yaml"));
  BayesRunResult lh_run = cmd_bayes_run(lh, RunOptions{});
  double lh_dev = ridge_deviation(lh_run, lh.grid[0], [](double h) { return std::optional<double>(h / kRidgeRatio); });

  ExperimentConfig hz = load_config(config_path("heisenberg_reduced.yaml"));
  BayesRunResult hz_run = cmd_bayes_run(hz, RunOptions{});
  StateModel states(hz.model, hz.state);
  HermitianOperator obs = measured_observable(hz);
  auto omega = [&](double k, double t) { return expectation(states.state(point2(k, t)), obs); };
  const double omega_true = omega(hz.truth(0), hz.truth(1));
  const GridAxis& k_axis = hz.grid[0];
  auto contour = [&](double t) -> std::optional<double> {
    auto f = [&](double k) { return omega(k, t) - omega_true; };
    for (int i = 0; i + 1 < k_axis.n; ++i) {
      double a = k_axis.at(i), b = k_axis.at(i + 1);
      double fa = f(a), fb = f(b);
      if (fa == 0.0) return a;
      if ((fa < 0.0) == (fb < 0.0)) continue;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (a + b), fm = f(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    return std::nullopt;
  };
  double hz_dev = ridge_deviation(hz_run, k_axis, contour);

  bool pass = lh_run.singular && hz_run.singular && !lh_run.ridge.empty() && !hz_run.ridge.empty() &&
              lh_dev <= kRidgeCells && hz_dev <= kRidgeCells;
  return {pass, "(lambda,h) ridge " + std::to_string(lh_run.ridge.size()) + " points, max dev " +
                    fmt("%.2f", lh_dev) + " cells; Heisenberg ridge " + std::to_string(hz_run.ridge.size()) +
                    " points, max dev " + fmt("%.2f", hz_dev) + " cells"};
}

Outcome criterion_9() {
  ScanResult lh = cmd_transform_scan(load_config(config_path("ring_lambda_h_transform.yaml")), RunOptions{});
  ScanResult a2a = cmd_transform_scan(load_config(config_path("all2all_lambda_gamma_transform.yaml")), RunOptions{});
  const ScanRow& lh_last = lh.rows.back();
  const ScanRow& a2a_last = a2a.rows.back();
  double lh_ratio = lh_last.inv_var / lh_last.crb_reference;
  double a2a_ratio = a2a_last.inv_var / a2a_last.crb_reference;
  double skew = 0.0, kurt = 0.0;
  for (const auto& mm : lh_last.per_seed) {
    skew = std::max(skew, std::abs(mm.skewness));
    kurt = std::max(kurt, std::abs(mm.excess_kurtosis));
  }
  bool pass = lh_ratio >= kRatioLoLambdaH && lh_ratio <= kRatioHiLambdaH && a2a_ratio >= kRatioLoAll2All &&
              a2a_ratio <= kRatioHiAll2All && skew < kSkewTol && kurt < kKurtTol;
  return {pass, "(lambda,h) ratio " + fmt("%.3f", lh_ratio) + " at M = " + std::to_string(lh_last.m) +
                    ", all-to-all ratio " + fmt("%.3f", a2a_ratio) + " at M = " + std::to_string(a2a_last.m) +
                    "; P(u) max |skew| " + fmt("%.3f", skew) + ", max |excess kurtosis| " + fmt("%.3f", kurt)};
}

}  // namespace

// Usage: acceptance [--known-failure N]...
// A known failure still prints FAIL but does not set the exit status.
int main(int argc, char** argv) {
  std::set<std::size_t> known;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failure N]...\n");
      return 2;
    }
  }

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {"analytic vs numeric QFIM", criterion_1},
      {"singularity classification", criterion_2},
      {"eigenvector field", criterion_3},
      {"pseudoinverse effective variance", criterion_4},
      {"trimer end to end", criterion_5},
      {"thermal limit", criterion_6},
      {"BVM convergence", criterion_7},
      {"singular ridge", criterion_8},
      {"effective CRB recovery", criterion_9},
  };
  int failures = 0, blocking = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    bool tolerated = !o.pass && known.count(i + 1);
    if (!o.pass) ++failures;
    if (!o.pass && !tolerated) ++blocking;
    std::printf("%s %zu %s: %s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                tolerated ? " [known failure]" : "");
    std::fflush(stdout);
  }
  bool covered = failures == 0;
  std::printf("%s 10 figure content covered by criteria 1-9: %s\n", covered ? "PASS" : "FAIL",
              covered ? "all quantitative checks hold" : "inherits the failures above");
  if (!covered && blocking == 0 && !known.count(10)) ++blocking;
  return blocking == 0 ? 0 : 1;
}
