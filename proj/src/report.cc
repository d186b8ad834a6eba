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

#include "inertia_id/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "inertia_id/common.h"

namespace inertia_id {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;  // legend column
constexpr double kTop = 50.0;
constexpr double kBottom = 80.0;
const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Maps data values to pixel heights on a linear or log10 axis.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double Frac(double v) const {
    if (log) v = std::log10(std::max(v, std::pow(10.0, lo)));
    return (v - lo) / (hi - lo);
  }
};

Axis MakeAxis(const std::vector<double>& values, bool log_scale) {
  Axis a;
  a.log = log_scale;
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (double v : values) {
    if (!std::isfinite(v) || (log_scale && v <= 0.0)) continue;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mn)) {
    mn = log_scale ? 1.0 : 0.0;
    mx = mn + 1.0;
  }
  if (log_scale) {
    a.lo = std::floor(std::log10(mn));
    a.hi = std::ceil(std::log10(mx));
    if (a.hi <= a.lo) a.hi = a.lo + 1.0;
  } else {
    a.lo = std::min(0.0, mn);
    a.hi = mx > a.lo ? mx * 1.05 : a.lo + 1.0;
  }
  return a;
}

void Frame(std::ostream& out, const std::string& title, const Axis& axis,
           const std::string& y_label) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
      << Escape(title) << "</text>\n";
  const double plot_h = kHeight - kTop - kBottom;
  const int ticks = axis.log ? static_cast<int>(axis.hi - axis.lo) : 5;
  for (int i = 0; i <= ticks; ++i) {
    const double f = static_cast<double>(i) / ticks;
    const double y = kTop + plot_h * (1.0 - f);
    const double v = axis.log ? std::pow(10.0, axis.lo + i) : axis.lo + f * (axis.hi - axis.lo);
    out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << y << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << Num(v)
        << "</text>\n";
  }
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<text transform=\"translate(18," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(y_label) << "</text>\n";
}

void Legend(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << y - 10
        << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[i % 8] << "\"/>\n"
        << "<text x=\"" << kWidth - kRight + 32 << "\" y=\"" << y << "\">" << Escape(names[i])
        << "</text>\n";
  }
}

void Save(const std::string& path, const std::ostringstream& svg) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << svg.str() << "</svg>\n";
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string CsvCell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string FormatNumber(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void Table::AddRow(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::kShapeMismatch, "table row has " + std::to_string(row.size()) +
                                               " cells, expected " +
                                               std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

void Table::WriteCsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << CsvCell(columns[c]);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << CsvCell(row[c]);
    out << '\n';
  }
}

Table Table::ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, path + " is empty");
  t.columns = SplitCsvLine(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.AddRow(SplitCsvLine(line));
  }
  return t;
}

const std::string& Table::At(const std::string& key, const std::string& column) const {
  const auto col = std::find(columns.begin(), columns.end(), column);
  if (col == columns.end()) throw Error(ErrorCode::kInvalidArgument, "no column " + column);
  for (const auto& row : rows) {
    if (row[0] == key) return row[col - columns.begin()];
  }
  throw Error(ErrorCode::kInvalidArgument, "no row " + key);
}

void WriteBarChartSvg(const std::string& path, const std::string& title,
                      const std::vector<std::string>& categories,
                      const std::vector<BarSeries>& series, const std::string& y_label,
                      bool log_scale) {
  std::vector<double> all;
  std::vector<std::string> names;
  for (const auto& s : series) {
    if (s.values.size() != categories.size()) {
      throw Error(ErrorCode::kShapeMismatch, "bar series '" + s.name + "' length");
    }
    all.insert(all.end(), s.values.begin(), s.values.end());
    names.push_back(s.name);
  }
  const Axis axis = MakeAxis(all, log_scale);
  std::ostringstream svg;
  Frame(svg, title, axis, y_label);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double group_w = plot_w / std::max<std::size_t>(1, categories.size());
  const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, series.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double x0 = kLeft + group_w * static_cast<double>(c) + 0.1 * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[c];
      if (!std::isfinite(v)) continue;
      const double h = plot_h * std::clamp(axis.Frac(v), 0.0, 1.0);
      svg << "<rect x=\"" << x0 + bar_w * static_cast<double>(s) << "\" y=\""
          << kTop + plot_h - h << "\" width=\"" << bar_w << "\" height=\"" << h << "\" fill=\""
          << kPalette[s % 8] << "\"><title>" << Escape(series[s].name) << ": " << Num(v)
          << "</title></rect>\n";
    }
    const double xc = kLeft + group_w * (static_cast<double>(c) + 0.5);
    svg << "<text transform=\"translate(" << xc << "," << kTop + plot_h + 14
        << ") rotate(30)\" font-size=\"11\">" << Escape(categories[c]) << "</text>\n";
  }
  Legend(svg, names);
  Save(path, svg);
}

void WriteLineChartSvg(const std::string& path, const std::string& title,
                       const std::vector<LineSeries>& series, const std::string& x_label,
                       const std::string& y_label, bool log_scale) {
  std::vector<double> ys;
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  std::vector<std::string> names;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::kShapeMismatch, "line series length");
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    for (double x : s.x) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
    }
    names.push_back(s.name);
  }
  if (!(x_hi > x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
  }
  const Axis axis = MakeAxis(ys, log_scale);
  std::ostringstream svg;
  Frame(svg, title, axis, y_label);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[s % 8]
        << "\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      const double px = kLeft + plot_w * (series[s].x[i] - x_lo) / (x_hi - x_lo);
      const double py = kTop + plot_h * (1.0 - std::clamp(axis.Frac(series[s].y[i]), 0.0, 1.0));
      svg << px << ',' << py << ' ';
    }
    svg << "\"/>\n";
  }
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop + plot_h + 18 << "\">" << Num(x_lo)
      << "</text>\n<text x=\"" << kWidth - kRight << "\" y=\"" << kTop + plot_h + 18
      << "\" text-anchor=\"end\">" << Num(x_hi) << "</text>\n<text x=\""
      << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 30 << "\" text-anchor=\"middle\">"
      << Escape(x_label) << "</text>\n";
  Legend(svg, names);
  Save(path, svg);
}

}  // namespace inertia_id
