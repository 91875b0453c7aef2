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

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrosym/bayes.hpp"
#include "metrosym/fisher.hpp"

namespace metrosym {

inline constexpr const char* kVersion = "0.1.0";

nlohmann::json matrix_json(const RMatrix& m);  // row-major nested arrays
nlohmann::json to_json(const FisherMatrix& f);
nlohmann::json to_json(const QfimSpectrum& s);
nlohmann::json to_json(const PosteriorGrid& g);
nlohmann::json to_json(const MeasurementRecord& r, const std::vector<double>& outcome_labels);

// %.17g: round-trips every double.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  // Comment lines start with '#' and precede the header.
  std::string render(const std::vector<std::string>& comments = {}) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

}  // namespace metrosym
