// Copyright 2026 The MSS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mss/bench.hpp"

namespace mss {

namespace {

double field_value(const ExperimentRecord& r, const std::string& field) {
  if (field == "eps") return r.eps;
  if (field == "mse") return r.mse;
  if (field == "bits_per_user") return r.bits_per_user;
  if (field == "decode_ms") return r.decode_ms;
  if (field == "dra_empirical") return r.dra_empirical;
  if (field == "dra_analytic") return r.dra_analytic;
  if (field == "kappa") return r.kappa;
  if (field == "solver_iters") return static_cast<double>(r.solver_iters);
  throw std::invalid_argument("svg: unknown field " + field);
}

std::string group_value(const ExperimentRecord& r, const std::string& field) {
  if (field == "mech") return to_string(r.mech);
  if (field == "dist") return r.dist;
  if (field == "k") return std::to_string(r.k);
  throw std::invalid_argument("svg: unknown group field " + field);
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

void emit_svg(const std::vector<ExperimentRecord>& records, const std::string& path,
              const std::string& x_field, const std::string& y_field,
              const std::string& group_field) {
  if (records.empty()) throw std::invalid_argument("emit_svg: no records");

  // Mean y per (group, x).
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (const auto& r : records) {
    const double y = field_value(r, y_field);
    if (std::isnan(y)) continue;
    auto& cell = series[group_value(r, group_field)][field_value(r, x_field)];
    cell.first += y;
    cell.second += 1;
  }
  if (series.empty()) throw std::invalid_argument("emit_svg: no plottable values");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [name, pts] : series) {
    for (auto& [x, cell] : pts) {
      const double y = cell.first / cell.second;
      cell.first = y;
      cell.second = 1;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const bool log_y = ymin > 0.0 && ymax / ymin > 50.0;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  double lo = ty(ymin), hi = ty(ymax);
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  double xlo = xmin, xhi = xmax;
  if (xhi - xlo < 1e-12) {
    xhi += 1.0;
    xlo -= 1.0;
  }

  const double width = 720, height = 480;
  const double ml = 80, mr = 170, mt = 30, mb = 55;
  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (ty(y) - lo) / (hi - lo) * (height - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";

  // Ticks.
  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xlo + (xhi - xlo) * i / nticks;
    const double gx = px(fx);
    svg << "<line x1=\"" << gx << "\" y1=\"" << height - mb << "\" x2=\"" << gx << "\" y2=\""
        << height - mb + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << gx << "\" y=\"" << height - mb + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fx << "</text>\n";

    const double fyt = lo + (hi - lo) * i / nticks;
    const double fy = log_y ? std::pow(10.0, fyt) : fyt;
    const double gy = height - mb - (fyt - lo) / (hi - lo) * (height - mt - mb);
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
        << "\" stroke=\"black\"/>\n";
    std::ostringstream lab;
    lab.precision(3);
    lab << fy;
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << lab.str() << "</text>\n";
  }
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">" << x_field << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (mt + height - mb) / 2 << ")\">" << y_field << (log_y ? " (log scale)" : "")
      << "</text>\n";

  int color = 0;
  double legend_y = mt + 10;
  for (const auto& [name, pts] : series) {
    const char* stroke = kPalette[color % 8];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, cell] : pts) svg << px(x) << "," << py(cell.first) << " ";
    svg << "\"/>\n";
    for (const auto& [x, cell] : pts) {
      svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(cell.first) << "\" r=\"3\" fill=\""
          << stroke << "\"/>\n";
    }
    svg << "<line x1=\"" << width - mr + 16 << "\" y1=\"" << legend_y << "\" x2=\""
        << width - mr + 40 << "\" y2=\"" << legend_y << "\" stroke=\"" << stroke
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - mr + 46 << "\" y=\"" << legend_y + 4 << "\" font-size=\"12\">"
        << name << "</text>\n";
    legend_y += 18;
    ++color;
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("emit_svg: cannot open " + path);
  out << svg.str();
  if (!out) throw IoError("emit_svg: write failed for " + path);
}

}  // namespace mss
