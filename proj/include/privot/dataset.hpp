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
// Sample containers, synthetic boundary-curve generators, and the CSV
// interchange format (17 significant digits, lossless for binary64).

#ifndef PRIVOT_DATASET_HPP_
#define PRIVOT_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privot/common.hpp"
#include "privot/rng.hpp"

namespace privot {

struct Dataset {
  MatrixXd points;  // n x d
  std::string name;
  std::optional<std::uint64_t> seed;
  // Optional per-coordinate [lo, hi] box, one row per coordinate.
  std::optional<Eigen::MatrixX2d> bounds;

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index d() const { return points.cols(); }
};

inline void validate(const Dataset& ds) {
  require(ds.points.rows() >= 1 && ds.points.cols() >= 1,
          "dataset must have n >= 1 and d >= 1");
  require(ds.points.allFinite(), "dataset contains non-finite entries");
  if (ds.bounds) {
    require(ds.bounds->rows() == ds.points.cols(),
            "bounds must have one row per coordinate");
    for (Eigen::Index j = 0; j < ds.points.cols(); ++j) {
      const double lo = (*ds.bounds)(j, 0), hi = (*ds.bounds)(j, 1);
      require(lo <= hi, "bounds with lo > hi");
      require((ds.points.col(j).array() >= lo).all() &&
                  (ds.points.col(j).array() <= hi).all(),
              "point outside declared bounds");
    }
  }
}

// Discrete distribution given by weighted atoms. Default weights are 1/m.
struct EmpiricalDistribution {
  MatrixXd points;   // m x d
  VectorXd weights;  // length m, nonnegative, sums to 1

  static EmpiricalDistribution uniform(MatrixXd pts) {
    EmpiricalDistribution e;
    const Eigen::Index m = pts.rows();
    require(m >= 1, "empirical distribution needs at least one atom");
    e.points = std::move(pts);
    e.weights = VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    return e;
  }

  static EmpiricalDistribution weighted(MatrixXd pts, VectorXd w) {
    EmpiricalDistribution e;
    require(pts.rows() == w.size(), "weights length must match atom count");
    require((w.array() >= 0).all(), "weights must be nonnegative");
    require(std::fabs(w.sum() - 1.0) <= 1e-12, "weights must sum to 1");
    e.points = std::move(pts);
    e.weights = std::move(w);
    return e;
  }
};

// ---------------------------------------------------------------------------
// Synthetic manifolds. All are boundary curves in the plane and sampling is
// uniform by arc length.
// ---------------------------------------------------------------------------

enum class ManifoldKind { half_circle, ellipse, rectangle };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::half_circle;
  double radius = 1.0;              // half_circle
  double semi_axis_a = 1.0;         // ellipse
  double semi_axis_b = 0.5;         // ellipse
  double side_w = 2.0;              // rectangle
  double side_h = 1.0;              // rectangle
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
};

inline void validate(const ManifoldSpec& spec) {
  require(spec.n >= 1, "manifold sample count must be >= 1");
  switch (spec.kind) {
    case ManifoldKind::half_circle:
      require(spec.radius > 0, "half_circle radius must be positive");
      break;
    case ManifoldKind::ellipse:
      require(spec.semi_axis_a > 0 && spec.semi_axis_b > 0,
              "ellipse semi-axes must be positive");
      break;
    case ManifoldKind::rectangle:
      require(spec.side_w > 0 && spec.side_h > 0,
              "rectangle sides must be positive");
      break;
  }
}

inline std::string manifold_kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::half_circle: return "half_circle";
    case ManifoldKind::ellipse: return "ellipse";
    case ManifoldKind::rectangle: return "rectangle";
  }
  return "?";
}

namespace manifold_detail {

// Rectangle boundary point at perimeter position s, walking
// bottom -> right -> top -> left from the lower-left corner.
inline Eigen::Vector2d rectangle_at(double w, double h, double s) {
  const double hw = w / 2, hh = h / 2;
  if (s < w) return {-hw + s, -hh};
  s -= w;
  if (s < h) return {hw, -hh + s};
  s -= h;
  if (s < w) return {hw - s, hh};
  s -= w;
  return {-hw, hh - s};
}

// Ellipse arc-length table over parameter t in [0, 2pi], composite Simpson
// per segment. Used to invert s(t) for arc-length-uniform sampling; the
// emitted points satisfy the ellipse equation exactly by construction, the
// table accuracy only affects uniformity.
struct EllipseArcTable {
  double a, b;
  std::vector<double> t;    // grid
  std::vector<double> cum;  // cumulative arc length at t[i]

  EllipseArcTable(double a_, double b_, int segments = 8192) : a(a_), b(b_) {
    auto speed = [&](double tt) {
      const double s = std::sin(tt), c = std::cos(tt);
      return std::sqrt(a * a * s * s + b * b * c * c);
    };
    const double two_pi = 2.0 * 3.14159265358979323846;
    t.resize(segments + 1);
    cum.resize(segments + 1);
    cum[0] = 0;
    t[0] = 0;
    for (int i = 1; i <= segments; ++i) {
      t[i] = two_pi * i / segments;
      const double m = 0.5 * (t[i - 1] + t[i]);
      cum[i] = cum[i - 1] + (t[i] - t[i - 1]) / 6.0 *
                                (speed(t[i - 1]) + 4 * speed(m) + speed(t[i]));
    }
  }

  double total() const { return cum.back(); }

  double t_at_arclength(double s) const {
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t i = static_cast<std::size_t>(
        std::max<std::ptrdiff_t>(1, it - cum.begin()));
    if (i >= cum.size()) i = cum.size() - 1;
    const double frac = (s - cum[i - 1]) / std::max(cum[i] - cum[i - 1], 1e-300);
    return t[i - 1] + frac * (t[i] - t[i - 1]);
  }
};

}  // namespace manifold_detail

// Uniform-by-arc-length samples on the manifold, deterministic given seed.
inline Dataset synth_manifold(const ManifoldSpec& spec) {
  validate(spec);
  const double pi = 3.14159265358979323846;
  Dataset ds;
  ds.points.resize(spec.n, 2);
  ds.name = manifold_kind_name(spec.kind);
  ds.seed = spec.seed;
  CounterRng base = substream(spec.seed, "manifold");

  switch (spec.kind) {
    case ManifoldKind::half_circle: {
      for (Eigen::Index i = 0; i < spec.n; ++i) {
        const double theta = base.fork(static_cast<std::uint64_t>(i)).uniform() * pi;
        ds.points(i, 0) = spec.center.x() + spec.radius * std::cos(theta);
        ds.points(i, 1) = spec.center.y() + spec.radius * std::sin(theta);
      }
      break;
    }
    case ManifoldKind::rectangle: {
      const double perimeter = 2.0 * (spec.side_w + spec.side_h);
      for (Eigen::Index i = 0; i < spec.n; ++i) {
        const double s = base.fork(static_cast<std::uint64_t>(i)).uniform() * perimeter;
        ds.points.row(i) =
            (spec.center + manifold_detail::rectangle_at(spec.side_w, spec.side_h, s))
                .transpose();
      }
      break;
    }
    case ManifoldKind::ellipse: {
      manifold_detail::EllipseArcTable table(spec.semi_axis_a, spec.semi_axis_b);
      for (Eigen::Index i = 0; i < spec.n; ++i) {
        const double s = base.fork(static_cast<std::uint64_t>(i)).uniform() * table.total();
        const double t = table.t_at_arclength(s);
        ds.points(i, 0) = spec.center.x() + spec.semi_axis_a * std::cos(t);
        ds.points(i, 1) = spec.center.y() + spec.semi_axis_b * std::sin(t);
      }
      break;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV interchange. One sample per row, comma separated, 17 significant
// digits. Lines starting with '#' are comments. A JSON sidecar
// <path>.meta.json carries {name, seed, bounds}.
// ---------------------------------------------------------------------------

inline std::string metadata_path(const std::string& csv_path) {
  return csv_path + ".meta.json";
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  validate(ds);
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open for writing: " + path);
  char buf[40];
  for (Eigen::Index i = 0; i < ds.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.points.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.points(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path);

  nlohmann::json meta;
  meta["name"] = ds.name;
  if (ds.seed) meta["seed"] = *ds.seed;
  if (ds.bounds) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index j = 0; j < ds.bounds->rows(); ++j)
      rows.push_back({(*ds.bounds)(j, 0), (*ds.bounds)(j, 1)});
    meta["bounds"] = rows;
  }
  std::ofstream mout(metadata_path(path));
  if (mout) mout << meta.dump(2) << '\n';
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  Eigen::Index d = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    std::vector<double> row;
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (p < end) {
      char* q = nullptr;
      const double v = std::strtod(p, &q);
      if (q == p)
        throw InvalidArgument("non-numeric cell at " + path + ":" +
                              std::to_string(line_no));
      row.push_back(v);
      p = q;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',')
          throw InvalidArgument("expected ',' at " + path + ":" +
                                std::to_string(line_no));
        ++p;
      }
    }
    if (d < 0) d = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != d)
      throw InvalidArgument("ragged row at " + path + ":" +
                            std::to_string(line_no) + " (expected " +
                            std::to_string(d) + " columns, got " +
                            std::to_string(row.size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("empty dataset: " + path);

  Dataset ds;
  ds.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (Eigen::Index i = 0; i < ds.points.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      ds.points(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  std::ifstream min(metadata_path(path));
  if (min) {
    nlohmann::json meta = nlohmann::json::parse(min, nullptr, false);
    if (!meta.is_discarded()) {
      if (meta.contains("name")) ds.name = meta["name"].get<std::string>();
      if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
      if (meta.contains("bounds")) {
        Eigen::MatrixX2d b(meta["bounds"].size(), 2);
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
          b(j, 0) = meta["bounds"][static_cast<std::size_t>(j)][0].get<double>();
          b(j, 1) = meta["bounds"][static_cast<std::size_t>(j)][1].get<double>();
        }
        ds.bounds = b;
      }
    }
  }
  validate(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// Deterministic split into parts of sizes proportional to `fractions`
// (largest-remainder rounding), after a seeded Fisher-Yates shuffle.
// ---------------------------------------------------------------------------

inline std::vector<Dataset> split(const Dataset& ds,
                                  const std::vector<double>& fractions,
                                  std::uint64_t seed) {
  validate(ds);
  require(!fractions.empty(), "need at least one fraction");
  double sum = 0;
  for (double f : fractions) {
    require(f > 0, "fractions must be positive");
    sum += f;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, "fractions must sum to 1");

  const Eigen::Index n = ds.n();
  const std::size_t parts = fractions.size();
  std::vector<Eigen::Index> sizes(parts);
  std::vector<std::pair<double, std::size_t>> remainders(parts);
  Eigen::Index assigned = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const double exact = fractions[p] * static_cast<double>(n);
    sizes[p] = static_cast<Eigen::Index>(std::floor(exact));
    remainders[p] = {exact - std::floor(exact), p};
    assigned += sizes[p];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (Eigen::Index r = 0; r < n - assigned; ++r)
    ++sizes[remainders[static_cast<std::size_t>(r) % parts].second];
  for (std::size_t p = 0; p < parts; ++p)
    require(sizes[p] >= 1, "fraction implies an empty part (index " +
                               std::to_string(p) + ")");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng = substream(seed, "split");
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  std::vector<Dataset> out(parts);
  Eigen::Index pos = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    out[p].points.resize(sizes[p], ds.d());
    for (Eigen::Index i = 0; i < sizes[p]; ++i)
      out[p].points.row(i) = ds.points.row(order[static_cast<std::size_t>(pos + i)]);
    out[p].name = ds.name + "/part" + std::to_string(p);
    out[p].seed = seed;
    out[p].bounds = ds.bounds;
    pos += sizes[p];
  }
  return out;
}

}  // namespace privot

#endif  // PRIVOT_DATASET_HPP_
