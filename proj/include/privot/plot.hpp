// Copyright 2026 The privot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Minimal standalone SVG scatter/line plots. Output bytes depend only on
// the input series, so plots can be hashed for provenance.

#ifndef PRIVOT_PLOT_HPP_
#define PRIVOT_PLOT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "privot/common.hpp"

namespace privot {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  enum class Style { line, scatter } style = Style::line;
};

struct PlotOptions {
  std::string title, xlabel, ylabel;
  int width = 640, height = 480;
};

namespace plot_detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

}  // namespace plot_detail

inline void plot_svg(const std::vector<Series>& series, const std::string& path,
                     const PlotOptions& opts = {}) {
  require(!series.empty(), "plot needs at least one series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const Series& s : series) {
    require(!s.points.empty(), "series '" + s.label + "' is empty");
    for (auto [x, y] : s.points) {
      require(std::isfinite(x) && std::isfinite(y), "series must be finite");
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax == ymin) {
    ymin -= 1;
    ymax += 1;
  }

  const double ml = 60, mr = 20, mt = 36, mb = 48;
  const double pw = opts.width - ml - mr, ph = opts.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  using plot_detail::num;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(opts.width) + "\" height=\"" +
         std::to_string(opts.height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (!opts.title.empty())
    svg += "<text x=\"" + num(ml + pw / 2) +
           "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + opts.title +
           "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 4.0;
    const double fy = ymin + (ymax - ymin) * t / 4.0;
    svg += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(mt + ph + 16) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + num(fx) + "</text>\n";
    svg += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(sy(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + num(fy) + "</text>\n";
  }
  if (!opts.xlabel.empty())
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" +
           num(opts.height - 10.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + opts.xlabel +
           "</text>\n";
  if (!opts.ylabel.empty())
    svg += "<text x=\"14\" y=\"" + num(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " +
           num(mt + ph / 2) + ")\">" + opts.ylabel + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kColors[si % 6];
    if (s.style == Series::Style::line) {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i) svg += ' ';
        svg += num(sx(s.points[i].first)) + "," + num(sy(s.points[i].second));
      }
      svg += "\"/>\n";
    } else {
      for (auto [x, y] : s.points)
        svg += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) +
               "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.7\"/>\n";
    }
    svg += "<text x=\"" + num(ml + pw - 8) + "\" y=\"" +
           num(mt + 16 + 14.0 * static_cast<double>(si)) +
           "\" text-anchor=\"end\" font-size=\"12\" fill=\"" + color + "\">" +
           s.label + "</text>\n";
  }
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open for writing: " + path);
  out << svg;
  if (!out) throw RuntimeFailure("write failed: " + path);
}

}  // namespace privot

#endif  // PRIVOT_PLOT_HPP_
