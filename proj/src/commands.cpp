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

#include "metrosym/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>

#include "metrosym/io.hpp"
#include "metrosym/parallel.hpp"
#include "metrosym/rng.hpp"

namespace metrosym {

namespace {

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json metadata(const std::string& command, const ExperimentConfig& config) {
  return {{"command", command},
          {"version", kVersion},
          {"rng", RandomStream::kAlgorithm},
          {"timestamp", utc_timestamp()},
          {"config", to_json(config)}};
}

// CSV files carry provenance as comment lines; no timestamp, so reruns are
// byte-identical.
std::vector<std::string> csv_provenance(const std::string& command, const ExperimentConfig& config) {
  return {"metrosym " + std::string(kVersion) + " " + command, std::string("rng ") + RandomStream::kAlgorithm,
          "config " + to_json(config).dump()};
}

std::string out_path(const RunOptions& options, const std::string& name) {
  return (std::filesystem::path(options.out_dir) / name).string();
}

void write_json(const RunOptions& options, const std::string& name, const nlohmann::json& j) {
  write_text_file(out_path(options, name), j.dump(1) + "\n");
}

StateFunction state_function(const StateModel& model) {
  return [&model](const RVector& p) { return model.state(p); };
}

nlohmann::json moments_json(const MarginalMoments& m) {
  return {{"mean", m.mean}, {"variance", m.variance}, {"skewness", m.skewness},
          {"excess_kurtosis", m.excess_kurtosis}};
}

}  // namespace

ExperimentConfig resolve_config(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig c = config;
  if (options.seed) c.seed = *options.seed;
  if (!options.out_dir.empty()) c.output = options.out_dir;
  return c;
}

HermitianOperator measured_observable(const ExperimentConfig& config) {
  HermitianOperator obs = observable(config.model, config.observable);
  if (config.state.kind == StateKind::reduced_thermal)
    return restrict_to_sites(obs, config.model.n_sites, config.state.kept_sites);
  return obs;
}

OutcomeModel make_outcome_model(const ExperimentConfig& config) {
  return {StateModel(config.model, config.state), make_povm(measured_observable(config), config.povm_resolution)};
}

QfimReport cmd_qfim(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = resolve_config(config_in, options);
  OutcomeModel model = make_outcome_model(config);
  const auto& labels = config.model.free_params;
  DerivativeBundle bundle = derivative_bundle(state_function(model.states), config.truth);

  QfimReport r;
  r.qfim = qfim_mixed(bundle, labels);
  r.cfim = cfim_for_projectors(bundle, model.povm.projectors, labels);
  r.spectrum = qfim_spectrum(r.qfim);
  r.determinant = r.qfim.determinant();
  r.singular = r.spectrum.rank < static_cast<int>(labels.size());
  r.pseudoinverse = pseudoinverse(r.qfim.matrix);
  const Eigen::Index d = static_cast<Eigen::Index>(labels.size());
  r.sld_commutator_imag = RMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j) r.sld_commutator_imag(i, j) = sld_commutator_expectation(bundle, int(i), int(j)).imag();

  nlohmann::json j = metadata("qfim", config);
  j["truth"] = std::vector<double>(config.truth.data(), config.truth.data() + config.truth.size());
  j["qfim"] = to_json(r.qfim);
  j["cfim"] = to_json(r.cfim);
  j["povm_outcomes"] = model.povm.outcome_labels;
  j["spectrum"] = to_json(r.spectrum);
  j["determinant"] = r.determinant;
  j["singular"] = r.singular;
  j["rank"] = r.spectrum.rank;
  j["pseudoinverse"] = matrix_json(r.pseudoinverse);
  j["sld_commutator_imag"] = matrix_json(r.sld_commutator_imag);
  j["sld_commutator_max_abs"] = r.sld_commutator_imag.cwiseAbs().maxCoeff();
  if (d == 2) {
    try {
      AnalyticQfim a = analytic_qfim(config.model, config.truth, {labels[0], labels[1]});
      j["analytic_qfim"] = matrix_json(a.matrix);
      j["analytic_relative_deviation"] = (a.matrix - r.qfim.matrix).norm() / a.matrix.norm();
    } catch (const std::invalid_argument&) {
    }
  }
  if (auto w = model.states.regime_warning(config.truth)) j["warning"] = *w;
  r.json = j;

  if (!options.out_dir.empty()) {
    ensure_directory(options.out_dir);
    write_json(options, "qfim.json", j);
  }
  return r;
}

std::vector<PhaseDiagramRow> cmd_phase_diagram(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = resolve_config(config_in, options);
  if (!config.phase_diagram) throw ConfigError("phase-diagram needs a phase_diagram section");
  const PhaseDiagramSpec& pd = *config.phase_diagram;
  const PhaseAxis& ax1 = pd.axes[0];
  const PhaseAxis& ax2 = pd.axes[1];
  const long cells = static_cast<long>(ax1.n) * ax2.n;
  const PovmSet povm = make_povm(measured_observable(config), config.povm_resolution);

  std::vector<PhaseDiagramRow> rows(static_cast<std::size_t>(cells));
  parallel_for(cells, options.threads, [&](long c) {
    const double a = ax1.at(static_cast<int>(c / ax2.n));
    const double b = ax2.at(static_cast<int>(c % ax2.n));
    ModelSpec spec = config.model;
    RVector point = config.truth;
    for (const auto& [name, value] : {std::pair{ax1.param, a}, std::pair{ax2.param, b}}) {
      bool is_free = false;
      for (std::size_t i = 0; i < spec.free_params.size(); ++i)
        if (spec.free_params[i] == name) {
          point(static_cast<Eigen::Index>(i)) = value;
          is_free = true;
        }
      if (!is_free) spec.fixed_params[name] = value;
    }
    PhaseDiagramRow row{a, b, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    StateModel states(spec, config.state);
    try {
      row.det_qfim = qfim_mixed(derivative_bundle(state_function(states), point)).determinant();
    } catch (const NumericalError&) {
    }
    if (pd.with_bayes) {
      bool inside = true;
      for (std::size_t i = 0; i < config.grid.size(); ++i) inside = inside && config.grid[i].contains(point(Eigen::Index(i)));
      if (inside) {
        try {
          OutcomeModel model{states, povm};
          MeasurementRecord rec =
              sample_record(born_probabilities(model, point), pd.bayes_m, config.seed, static_cast<std::uint64_t>(c) + 1);
          PosteriorGrid post = posterior_update(uniform_prior(config.grid), rec, tabulate_log_probabilities(model, config.grid));
          row.var_bayes = bayes_mean_and_variance(post).covariance.trace();
        } catch (const NumericalError&) {
        }
      }
    }
    rows[static_cast<std::size_t>(c)] = row;
  });

  if (!options.out_dir.empty()) {
    ensure_directory(options.out_dir);
    std::vector<std::string> header{"axis1", "axis2", "det_qfim"};
    if (pd.with_bayes) header.push_back("var_bayes");
    CsvTable table(header);
    for (const auto& r : rows) {
      std::vector<double> v{r.axis1, r.axis2, r.det_qfim};
      if (pd.with_bayes) v.push_back(r.var_bayes);
      table.add_row(v);
    }
    auto comments = csv_provenance("phase-diagram", config);
    comments.push_back("axis1 = " + ax1.param + ", axis2 = " + ax2.param +
                       (pd.with_bayes ? ", var_bayes = trace of the posterior covariance" : ""));
    write_text_file(out_path(options, "phase_diagram.csv"), table.render(comments));
  }
  return rows;
}

BayesRunResult cmd_bayes_run(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = resolve_config(config_in, options);
  if (config.grid.size() != 2) throw ConfigError("bayes-run needs a two-parameter model");
  OutcomeModel model = make_outcome_model(config);
  LogProbabilityTable table = tabulate_log_probabilities(model, config.grid, options.threads);
  const RVector p_true = born_probabilities(model, config.truth);

  BayesRunResult result;
  QfimSpectrum spectrum =
      qfim_spectrum(qfim_mixed(derivative_bundle(state_function(model.states), config.truth)));
  result.singular = spectrum.rank < 2;

  if (!options.out_dir.empty()) ensure_directory(options.out_dir);
  auto snapshot = [&](const PosteriorGrid& post, std::uint64_t m) {
    if (options.out_dir.empty()) return;
    nlohmann::json j = metadata("bayes-run", config);
    j["M"] = m;
    j["posterior"] = to_json(post);
    write_json(options, "posterior_M" + std::to_string(m) + ".json", j);
  };
  auto is_checkpoint = [&](std::uint64_t m) {
    for (auto c : config.checkpoints)
      if (c == m) return true;
    return false;
  };

  result.posterior = uniform_prior(config.grid);
  result.record = MeasurementRecord{std::vector<std::uint64_t>(model.povm.size(), 0), 0, config.seed};
  result.trace.push_back({0, bayes_mean_and_variance(result.posterior)});
  if (is_checkpoint(0)) snapshot(result.posterior, 0);

  std::uint64_t batch_index = 0;
  while (result.record.m < config.m_total) {
    std::uint64_t n = std::min(config.batch_size, config.m_total - result.record.m);
    MeasurementRecord batch = sample_record(p_true, n, config.seed, ++batch_index);
    result.posterior = posterior_update(result.posterior, batch, table);
    result.record += batch;
    result.trace.push_back({result.record.m, bayes_mean_and_variance(result.posterior)});
    if (is_checkpoint(result.record.m)) snapshot(result.posterior, result.record.m);
  }
  if (result.singular)
    result.ridge = ridge_extract(result.posterior, config.ridge.sweep_axis, config.ridge.min_mass_fraction);

  if (!options.out_dir.empty()) {
    snapshot(result.posterior, result.record.m);
    CsvTable trace({"M", "mean_1", "var_1", "mean_2", "var_2", "cov_12"});
    for (const auto& t : result.trace)
      trace.add_row({static_cast<double>(t.m), t.moments.mean(0), t.moments.covariance(0, 0), t.moments.mean(1),
                     t.moments.covariance(1, 1), t.moments.covariance(0, 1)});
    write_text_file(out_path(options, "trace.csv"), trace.render(csv_provenance("bayes-run", config)));

    nlohmann::json rec = metadata("bayes-run", config);
    rec["record"] = to_json(result.record, model.povm.outcome_labels);
    rec["singular"] = result.singular;
    rec["qfim_spectrum"] = to_json(spectrum);
    write_json(options, "record.json", rec);

    if (result.singular) {
      CsvTable ridge({"sweep", "argmax", "mass"});
      for (const auto& p : result.ridge) ridge.add_row({p.sweep, p.argmax, p.mass});
      auto comments = csv_provenance("bayes-run", config);
      comments.push_back("sweep axis " + config.model.free_params[std::size_t(config.ridge.sweep_axis)]);
      write_text_file(out_path(options, "ridge.csv"), ridge.render(comments));
    }
  }
  return result;
}

ScanResult cmd_transform_scan(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = resolve_config(config_in, options);
  if (!config.transform) throw ConfigError("transform-scan needs a transform section");
  if (config.grid.size() != 2) throw ConfigError("transform-scan needs a two-parameter model");
  const TransformSpec& ts = *config.transform;
  OutcomeModel model = make_outcome_model(config);
  CoordinateMap map = coordinate_map_from_string(ts.map);

  ScanOptions opt;
  opt.source_axes = config.grid;
  opt.target_axes = ts.target_axes;
  opt.effective_axis = ts.effective_axis;
  opt.include_jacobian = ts.include_jacobian;
  opt.threads = options.threads;
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < ts.n_seeds; ++s) seeds.push_back(config.seed + static_cast<std::uint64_t>(s));

  ScanResult result = effective_crb_scan(model, map, config.truth, ts.m_schedule, seeds, opt);

  if (!options.out_dir.empty()) {
    ensure_directory(options.out_dir);
    CsvTable table({"M", "inv_var", "crb_reference"});
    for (const auto& row : result.rows) table.add_row({static_cast<double>(row.m), row.inv_var, row.crb_reference});
    write_text_file(out_path(options, "transform_scan.csv"), table.render(csv_provenance("transform-scan", config)));

    nlohmann::json j = metadata("transform-scan", config);
    j["qfim"] = to_json(result.qfim);
    j["qfim_mapped"] = to_json(result.qfim_mapped);
    j["effective_qfi"] = result.effective_qfi;
    j["seeds"] = seeds;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : result.rows) {
      nlohmann::json per_seed = nlohmann::json::array();
      for (const auto& m : row.per_seed) per_seed.push_back(moments_json(m));
      j["rows"].push_back({{"M", row.m}, {"inv_var", row.inv_var}, {"crb_reference", row.crb_reference},
                           {"ratio", row.inv_var / row.crb_reference}, {"per_seed", per_seed}});
    }
    write_json(options, "transform_scan.json", j);
    for (std::size_t s = 0; s < result.final_transformed.size(); ++s) {
      nlohmann::json snap = metadata("transform-scan", config);
      snap["seed"] = seeds[s];
      snap["M"] = result.rows.back().m;
      snap["coordinates"] = ts.map == "hyperbolic" ? std::vector<std::string>{"u", "v"} : config.model.free_params;
      snap["posterior"] = to_json(result.final_transformed[s]);
      write_json(options, "transformed_seed" + std::to_string(seeds[s]) + ".json", snap);
    }
  }
  return result;
}

}  // namespace metrosym
