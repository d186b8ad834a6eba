// Copyright 2026 The inertia_id Authors
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

// CSV tables and standalone SVG charts for experiment reports.

#ifndef INERTIA_ID_REPORT_H_
#define INERTIA_ID_REPORT_H_

#include <string>
#include <vector>

namespace inertia_id {

// Shortest text that reads back to the same double.
std::string FormatNumber(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void AddRow(std::vector<std::string> row);
  void WriteCsv(const std::string& path) const;
  static Table ReadCsv(const std::string& path);
  // Value of `column` in the first row whose first cell is `key`.
  const std::string& At(const std::string& key, const std::string& column) const;
};

struct BarSeries {
  std::string name;
  std::vector<double> values;  // one per category
};

void WriteBarChartSvg(const std::string& path, const std::string& title,
                      const std::vector<std::string>& categories,
                      const std::vector<BarSeries>& series, const std::string& y_label,
                      bool log_scale = false);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void WriteLineChartSvg(const std::string& path, const std::string& title,
                       const std::vector<LineSeries>& series, const std::string& x_label,
                       const std::string& y_label, bool log_scale = false);

}  // namespace inertia_id

#endif  // INERTIA_ID_REPORT_H_
