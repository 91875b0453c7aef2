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

#include "metrosym/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace metrosym {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void require_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void require_keys(const YAML::Node& node, const std::string& what, const std::set<std::string>& allowed) const {
    require_map(node, what);
    for (const auto& kv : node) {
      std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "cannot read " + what + " from '" + node.Scalar() + "'");
    }
  }

  std::uint64_t count(const YAML::Node& node, const std::string& what) const {
    if (node.IsScalar() && !node.Scalar().empty() && node.Scalar()[0] == '-')
      fail(node, what + " must be non-negative");
    if (node.IsScalar()) {
      // accept 1e4 style as long as it is an exact non-negative integer
      double x = scalar<double>(node, what);
      if (x < 0 || x != std::floor(x) || x > 1.8e19) fail(node, what + " must be a non-negative integer");
      return static_cast<std::uint64_t>(x);
    }
    fail(node, what + " must be a scalar");
  }

  template <typename T>
  std::vector<T> list(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    std::vector<T> out;
    for (const auto& item : node) out.push_back(scalar<T>(item, what + " entry"));
    return out;
  }

  std::vector<std::uint64_t> count_list(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    std::vector<std::uint64_t> out;
    for (const auto& item : node) out.push_back(count(item, what + " entry"));
    return out;
  }

  GridAxis axis(const YAML::Node& node, const std::string& what) const {
    require_keys(node, what, {"min", "max", "n"});
    GridAxis ax;
    if (node["min"]) ax.min = scalar<double>(node["min"], what + ".min");
    if (node["max"]) ax.max = scalar<double>(node["max"], what + ".max");
    if (node["n"]) ax.n = scalar<int>(node["n"], what + ".n");
    if (ax.n < 1) fail(node, what + ".n must be at least 1");
    if (!(ax.max > ax.min) && ax.n > 1) fail(node, what + " needs max > min");
    return ax;
  }

  std::vector<GridAxis> axes(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list of axes");
    std::vector<GridAxis> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(axis(node[i], what + "[" + std::to_string(i) + "]"));
    return out;
  }

  ModelSpec model(const YAML::Node& node) const {
    require_keys(node, "model", {"kind", "n_sites", "fixed", "free"});
    if (!node["kind"]) fail(node, "model.kind is required");
    if (!node["free"]) fail(node, "model.free is required");
    ModelSpec spec;
    try {
      spec.kind = model_kind_from_string(scalar<std::string>(node["kind"], "model.kind"));
    } catch (const std::invalid_argument& e) {
      fail(node["kind"], e.what());
    }
    spec.n_sites = spec.kind == ModelKind::heisenberg_trimer ? 3 : 4;
    if (node["n_sites"]) spec.n_sites = scalar<int>(node["n_sites"], "model.n_sites");
    if (node["fixed"]) {
      require_map(node["fixed"], "model.fixed");
      for (const auto& kv : node["fixed"])
        spec.fixed_params[kv.first.as<std::string>()] = scalar<double>(kv.second, "model.fixed value");
    }
    spec.free_params = list<std::string>(node["free"], "model.free");
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      fail(node, e.what());
    }
    return spec;
  }

  StateRecipe state(const YAML::Node& node) const {
    require_keys(node, "state", {"kind", "kept_sites", "parity_sector", "degenerate", "gap_tolerance"});
    StateRecipe r;
    if (node["kind"]) {
      std::string k = scalar<std::string>(node["kind"], "state.kind");
      if (k == "ground") r.kind = StateKind::ground;
      else if (k == "thermal") r.kind = StateKind::thermal;
      else if (k == "reduced_thermal") r.kind = StateKind::reduced_thermal;
      else fail(node["kind"], "state.kind must be ground, thermal or reduced_thermal");
    }
    if (node["kept_sites"])
      for (int s : list<int>(node["kept_sites"], "state.kept_sites")) r.kept_sites.insert(s);
    if (node["parity_sector"]) {
      int s = scalar<int>(node["parity_sector"], "state.parity_sector");
      if (s != 1 && s != -1) fail(node["parity_sector"], "state.parity_sector must be +1 or -1");
      r.parity_sector = s;
    }
    if (node["degenerate"]) {
      std::string d = scalar<std::string>(node["degenerate"], "state.degenerate");
      if (d == "reject") r.degenerate = DegeneratePolicy::reject;
      else if (d == "average") r.degenerate = DegeneratePolicy::average;
      else fail(node["degenerate"], "state.degenerate must be reject or average");
    }
    if (node["gap_tolerance"]) r.gap_tolerance = scalar<double>(node["gap_tolerance"], "state.gap_tolerance");
    if (r.kind == StateKind::reduced_thermal && r.kept_sites.empty())
      fail(node, "state.kept_sites is required for reduced_thermal");
    return r;
  }

  TransformSpec transform(const YAML::Node& node) const {
    require_keys(node, "transform",
                 {"map", "target_axes", "effective_axis", "include_jacobian", "m_schedule", "n_seeds"});
    TransformSpec t;
    if (node["map"]) t.map = scalar<std::string>(node["map"], "transform.map");
    if (t.map != "hyperbolic" && t.map != "identity") fail(node["map"], "transform.map must be hyperbolic or identity");
    if (!node["target_axes"]) fail(node, "transform.target_axes is required");
    t.target_axes = axes(node["target_axes"], "transform.target_axes");
    if (t.target_axes.size() != 2) fail(node["target_axes"], "transform.target_axes needs two axes");
    if (node["effective_axis"]) t.effective_axis = scalar<int>(node["effective_axis"], "transform.effective_axis");
    if (t.effective_axis != 0 && t.effective_axis != 1)
      fail(node["effective_axis"], "transform.effective_axis must be 0 or 1");
    if (node["include_jacobian"])
      t.include_jacobian = scalar<bool>(node["include_jacobian"], "transform.include_jacobian");
    if (!node["m_schedule"]) fail(node, "transform.m_schedule is required");
    t.m_schedule = count_list(node["m_schedule"], "transform.m_schedule");
    if (t.m_schedule.empty()) fail(node["m_schedule"], "transform.m_schedule must not be empty");
    for (std::size_t i = 1; i < t.m_schedule.size(); ++i)
      if (t.m_schedule[i] < t.m_schedule[i - 1]) fail(node["m_schedule"], "transform.m_schedule must be non-decreasing");
    if (node["n_seeds"]) t.n_seeds = scalar<int>(node["n_seeds"], "transform.n_seeds");
    if (t.n_seeds < 1) fail(node["n_seeds"], "transform.n_seeds must be at least 1");
    return t;
  }

  PhaseDiagramSpec phase(const YAML::Node& node) const {
    require_keys(node, "phase_diagram", {"axes", "with_bayes", "bayes_m"});
    PhaseDiagramSpec p;
    if (!node["axes"] || !node["axes"].IsSequence() || node["axes"].size() != 2)
      fail(node, "phase_diagram.axes must list exactly two axes");
    for (std::size_t i = 0; i < 2; ++i) {
      const YAML::Node a = node["axes"][i];
      std::string what = "phase_diagram.axes[" + std::to_string(i) + "]";
      require_keys(a, what, {"param", "min", "max", "n", "spacing"});
      PhaseAxis ax;
      if (!a["param"]) fail(a, what + ".param is required");
      ax.param = scalar<std::string>(a["param"], what + ".param");
      if (a["min"]) ax.min = scalar<double>(a["min"], what + ".min");
      if (a["max"]) ax.max = scalar<double>(a["max"], what + ".max");
      if (a["n"]) ax.n = scalar<int>(a["n"], what + ".n");
      if (a["spacing"]) {
        std::string s = scalar<std::string>(a["spacing"], what + ".spacing");
        if (s == "log") ax.log_spacing = true;
        else if (s != "linear") fail(a["spacing"], what + ".spacing must be linear or log");
      }
      if (ax.n < 1) fail(a, what + ".n must be at least 1");
      if (ax.log_spacing && !(ax.min > 0.0)) fail(a, what + " needs min > 0 for log spacing");
      p.axes.push_back(ax);
    }
    if (p.axes[0].param == p.axes[1].param) fail(node["axes"], "phase_diagram axes must differ");
    if (node["with_bayes"]) p.with_bayes = scalar<bool>(node["with_bayes"], "phase_diagram.with_bayes");
    if (node["bayes_m"]) p.bayes_m = count(node["bayes_m"], "phase_diagram.bayes_m");
    return p;
  }

  RidgeSpec ridge(const YAML::Node& node) const {
    require_keys(node, "ridge", {"sweep_axis", "min_mass_fraction"});
    RidgeSpec r;
    if (node["sweep_axis"]) r.sweep_axis = scalar<int>(node["sweep_axis"], "ridge.sweep_axis");
    if (r.sweep_axis != 0 && r.sweep_axis != 1) fail(node["sweep_axis"], "ridge.sweep_axis must be 0 or 1");
    if (node["min_mass_fraction"])
      r.min_mass_fraction = scalar<double>(node["min_mass_fraction"], "ridge.min_mass_fraction");
    return r;
  }

  ExperimentConfig root(const YAML::Node& node) const {
    require_keys(node, "config",
                 {"model", "state", "truth", "observable", "povm_resolution", "grid", "prior", "m_total",
                  "batch_size", "seed", "checkpoints", "ridge", "transform", "phase_diagram", "output"});
    ExperimentConfig c;
    if (!node["model"]) fail(node, "model section is required");
    c.model = model(node["model"]);
    if (node["state"]) c.state = state(node["state"]);
    if (!node["truth"]) fail(node, "truth is required");
    std::vector<double> t = list<double>(node["truth"], "truth");
    c.truth = Eigen::Map<RVector>(t.data(), static_cast<Eigen::Index>(t.size()));
    if (t.size() != c.model.free_params.size())
      fail(node["truth"], "truth has " + std::to_string(t.size()) + " entries but model.free has " +
                              std::to_string(c.model.free_params.size()));
    if (node["observable"]) {
      try {
        c.observable = observable_kind_from_string(scalar<std::string>(node["observable"], "observable"));
      } catch (const std::invalid_argument& e) {
        fail(node["observable"], e.what());
      }
    }
    try {
      (void)observable(c.model, c.observable);
    } catch (const std::invalid_argument& e) {
      fail(node["observable"] ? node["observable"] : node, e.what());
    }
    if (node["povm_resolution"]) {
      std::string r = scalar<std::string>(node["povm_resolution"], "povm_resolution");
      if (r == "eigenspaces") c.povm_resolution = PovmResolution::eigenspaces;
      else if (r == "product_basis") c.povm_resolution = PovmResolution::product_basis;
      else fail(node["povm_resolution"], "povm_resolution must be eigenspaces or product_basis");
    }
    if (node["grid"]) {
      c.grid = axes(node["grid"], "grid");
    } else {
      c.grid.assign(c.model.free_params.size(), GridAxis{0.0, 2.0, 200});
    }
    if (c.grid.size() != c.model.free_params.size())
      fail(node["grid"], "grid needs one axis per free parameter");
    for (std::size_t i = 0; i < c.grid.size(); ++i)
      if (!c.grid[i].contains(c.truth(static_cast<Eigen::Index>(i))))
        fail(node["grid"] ? node["grid"] : node["truth"], "grid axis " + std::to_string(i) + " does not contain the truth");
    if (node["prior"]) {
      c.prior = scalar<std::string>(node["prior"], "prior");
      if (c.prior != "uniform") fail(node["prior"], "prior must be uniform");
    }
    if (node["m_total"]) c.m_total = count(node["m_total"], "m_total");
    if (node["batch_size"]) c.batch_size = count(node["batch_size"], "batch_size");
    if (c.batch_size < 1) fail(node["batch_size"], "batch_size must be at least 1");
    if (c.m_total != 0 && c.m_total < c.batch_size) fail(node["m_total"] ? node["m_total"] : node, "m_total must be >= batch_size");
    if (node["seed"]) c.seed = count(node["seed"], "seed");
    if (node["checkpoints"]) c.checkpoints = count_list(node["checkpoints"], "checkpoints");
    for (auto m : c.checkpoints)
      if (m > c.m_total) fail(node["checkpoints"], "checkpoint beyond m_total");
    if (node["ridge"]) c.ridge = ridge(node["ridge"]);
    if (node["transform"]) c.transform = transform(node["transform"]);
    if (node["phase_diagram"]) {
      c.phase_diagram = phase(node["phase_diagram"]);
      for (const auto& ax : c.phase_diagram->axes) {
        bool known = c.model.fixed_params.count(ax.param) > 0;
        for (const auto& f : c.model.free_params) known = known || f == ax.param;
        if (!known) fail(node["phase_diagram"], "phase_diagram axis '" + ax.param + "' is not a model parameter");
      }
    }
    if (node["output"]) c.output = scalar<std::string>(node["output"], "output");
    if (c.state.kind != StateKind::ground) {
      bool has_t = c.model.fixed_params.count("T") > 0;
      for (const auto& f : c.model.free_params) has_t = has_t || f == "T";
      if (!has_t) fail(node["state"], "thermal states need a temperature T in model.fixed or model.free");
    }
    try {
      StateModel probe(c.model, c.state);
      (void)probe;
      if (c.state.kind == StateKind::reduced_thermal)
        (void)restrict_to_sites(observable(c.model, c.observable), c.model.n_sites, c.state.kept_sites);
    } catch (const std::invalid_argument& e) {
      fail(node["state"] ? node["state"] : node, e.what());
    }
    return c;
  }

 private:
  std::string source_;
};

nlohmann::json axis_json(const GridAxis& a) { return {{"min", a.min}, {"max", a.max}, {"n", a.n}}; }

}  // namespace

double PhaseAxis::at(int i) const {
  if (n == 1) return min;
  double f = static_cast<double>(i) / (n - 1);
  if (log_spacing) return min * std::pow(max / min, f);
  return min + (max - min) * f;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (static_cast<std::size_t>(truth.size()) != model.free_params.size())
    throw ConfigError("truth length does not match model.free");
  if (grid.size() != model.free_params.size()) throw ConfigError("grid needs one axis per free parameter");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!grid[i].contains(truth(static_cast<Eigen::Index>(i)))) throw ConfigError("grid does not contain the truth");
  if (batch_size < 1 || (m_total != 0 && m_total < batch_size))
    throw ConfigError("need m_total >= batch_size >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ": " << e.msg;
    throw ConfigError(os.str());
  }
  if (!node || node.IsNull()) throw ConfigError(source + ": empty config");
  ExperimentConfig c = Reader(source).root(node);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["model"] = {{"kind", to_string(c.model.kind)},
                {"n_sites", c.model.n_sites},
                {"fixed", c.model.fixed_params},
                {"free", c.model.free_params}};
  const char* kinds[] = {"ground", "thermal", "reduced_thermal"};
  nlohmann::json state = {{"kind", kinds[static_cast<int>(c.state.kind)]},
                          {"degenerate", c.state.degenerate == DegeneratePolicy::average ? "average" : "reject"},
                          {"gap_tolerance", c.state.gap_tolerance}};
  if (!c.state.kept_sites.empty()) state["kept_sites"] = c.state.kept_sites;
  if (c.state.parity_sector) state["parity_sector"] = *c.state.parity_sector;
  j["state"] = state;
  j["truth"] = std::vector<double>(c.truth.data(), c.truth.data() + c.truth.size());
  j["observable"] = to_string(c.observable);
  j["povm_resolution"] = c.povm_resolution == PovmResolution::eigenspaces ? "eigenspaces" : "product_basis";
  j["grid"] = nlohmann::json::array();
  for (const auto& a : c.grid) j["grid"].push_back(axis_json(a));
  j["prior"] = c.prior;
  j["m_total"] = c.m_total;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["checkpoints"] = c.checkpoints;
  j["ridge"] = {{"sweep_axis", c.ridge.sweep_axis}, {"min_mass_fraction", c.ridge.min_mass_fraction}};
  if (c.transform) {
    nlohmann::json t = {{"map", c.transform->map},
                        {"effective_axis", c.transform->effective_axis},
                        {"include_jacobian", c.transform->include_jacobian},
                        {"m_schedule", c.transform->m_schedule},
                        {"n_seeds", c.transform->n_seeds}};
    t["target_axes"] = nlohmann::json::array();
    for (const auto& a : c.transform->target_axes) t["target_axes"].push_back(axis_json(a));
    j["transform"] = t;
  }
  if (c.phase_diagram) {
    nlohmann::json p = {{"with_bayes", c.phase_diagram->with_bayes}, {"bayes_m", c.phase_diagram->bayes_m}};
    p["axes"] = nlohmann::json::array();
    for (const auto& a : c.phase_diagram->axes)
      p["axes"].push_back({{"param", a.param},
                           {"min", a.min},
                           {"max", a.max},
                           {"n", a.n},
                           {"spacing", a.log_spacing ? "log" : "linear"}});
    j["phase_diagram"] = p;
  }
  j["output"] = c.output;
  return j;
}

}  // namespace metrosym
