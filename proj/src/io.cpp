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

#include "metrosym/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace metrosym {

nlohmann::json matrix_json(const RMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const FisherMatrix& f) {
  return {{"labels", f.labels},
          {"kind", f.kind == FisherKind::quantum ? "quantum" : "classical"},
          {"matrix", matrix_json(f.matrix)}};
}

nlohmann::json to_json(const QfimSpectrum& s) {
  return {{"eigenvalues", std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size())},
          {"eigenvectors", matrix_json(s.eigenvectors)},
          {"rank", s.rank},
          {"rank_tolerance", s.rank_tolerance}};
}

nlohmann::json to_json(const PosteriorGrid& g) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : g.axes) axes.push_back({{"min", a.min}, {"max", a.max}, {"n", a.n}});
  std::vector<double> lw(g.log_weights.data(), g.log_weights.data() + g.log_weights.size());
  return {{"axes", axes}, {"layout", "row-major, last axis fastest"}, {"log_weights", lw},
          {"log_normalization", g.log_normalization}};
}

nlohmann::json to_json(const MeasurementRecord& r, const std::vector<double>& outcome_labels) {
  return {{"seed", r.seed}, {"M", r.m}, {"outcome_labels", outcome_labels}, {"counts", r.counts}};
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw DimensionMismatch("CsvTable: row width does not match header");
  rows_.push_back(row);
}

std::string CsvTable::render(const std::vector<std::string>& comments) const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path)) throw IoError("cannot create output directory '" + path + "'");
}

}  // namespace metrosym
