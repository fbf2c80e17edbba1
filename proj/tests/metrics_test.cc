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

#include "privot/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"
#include "privot/plot.hpp"
#include "test_util.hpp"

namespace privot {
namespace {

TEST(EmpiricalW2, ClosedFormsAndBruteForce) {
  MatrixXd a(1, 1), b(1, 1);
  a << 0;
  b << 3;
  EXPECT_DOUBLE_EQ(empirical_w2(a, a), 0.0);
  EXPECT_DOUBLE_EQ(empirical_w2(a, b), 9.0);

  CounterRng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd A(6, 2), B(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        A(i, j) = rng.uniform_in(-1, 1);
        B(i, j) = rng.uniform_in(-1, 1);
      }
    const MatrixXd C = pairwise_lp_cost(A, B, 2);
    EXPECT_NEAR(empirical_w2(A, B), testutil::brute_force_uniform_ot(C), 1e-12);
    EXPECT_NEAR(empirical_w2(A, B), empirical_w2(B, A), 1e-12);
  }
}

TEST(EmpiricalW2, IdentityOfIndiscernibles) {
  CounterRng rng(62);
  MatrixXd A(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) A(i, j) = rng.uniform_in(-1, 1);
  MatrixXd shuffled(5, 2);
  const int order[5] = {3, 0, 4, 1, 2};
  for (int i = 0; i < 5; ++i) shuffled.row(i) = A.row(order[i]);
  EXPECT_NEAR(empirical_w2(A, shuffled), 0.0, 1e-15);
  MatrixXd moved = A;
  moved(0, 0) += 0.5;
  EXPECT_GT(empirical_w2(A, moved), 1e-4);
}

TEST(ManifoldError, HalfCircleClosedForms) {
  ManifoldSpec spec;
  spec.kind = ManifoldKind::half_circle;
  spec.radius = 1.0;
  spec.n = 1;
  EXPECT_DOUBLE_EQ(manifold_distance({2, 0}, spec), 1.0);
  EXPECT_NEAR(manifold_distance({0, -1}, spec), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(manifold_distance({std::sqrt(0.5), std::sqrt(0.5)}, spec), 0.0, 1e-15);
  // Interior point above the axis projects radially.
  EXPECT_NEAR(manifold_distance({0, 0.25}, spec), 0.75, 1e-15);
}

TEST(ManifoldError, OnManifoldPointsScoreZero) {
  for (const auto kind :
       {ManifoldKind::half_circle, ManifoldKind::ellipse, ManifoldKind::rectangle}) {
    ManifoldSpec spec;
    spec.kind = kind;
    spec.radius = 1.0;
    spec.semi_axis_a = 1.5;
    spec.semi_axis_b = 0.5;
    spec.side_w = 2.0;
    spec.side_h = 1.0;
    spec.n = 500;
    spec.seed = 63;
    const Dataset ds = synth_manifold(spec);
    EXPECT_LE(manifold_error(ds, spec), 1e-10) << manifold_kind_name(kind);
  }
}

TEST(ManifoldError, RectangleCases) {
  ManifoldSpec spec;
  spec.kind = ManifoldKind::rectangle;
  spec.side_w = 2.0;
  spec.side_h = 1.0;
  spec.n = 1;
  EXPECT_DOUBLE_EQ(manifold_distance({0, 0}, spec), 0.5);      // center
  EXPECT_DOUBLE_EQ(manifold_distance({2, 0.5}, spec), 1.0);    // right of corner
  EXPECT_NEAR(manifold_distance({1.3, 0.9}, spec), 0.5, 1e-15);  // outside corner
}

TEST(ManifoldError, EllipseAgainstDenseParameterScan) {
  ManifoldSpec spec;
  spec.kind = ManifoldKind::ellipse;
  spec.semi_axis_a = 1.5;
  spec.semi_axis_b = 0.5;
  spec.n = 1;
  CounterRng rng(64);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Vector2d p(rng.uniform_in(-2, 2), rng.uniform_in(-2, 2));
    double best = std::numeric_limits<double>::infinity();
    const int grid = 400000;
    for (int i = 0; i < grid; ++i) {
      const double t = 2 * 3.14159265358979323846 * i / grid;
      best = std::min(best,
                      (p - Eigen::Vector2d(1.5 * std::cos(t), 0.5 * std::sin(t))).norm());
    }
    EXPECT_NEAR(manifold_distance(p, spec), best, 1e-6) << "trial " << trial;
  }
}

TEST(FitLogLog, PlantedSlopes) {
  std::vector<double> n = {1000, 4000, 16000, 64000};
  std::vector<double> root(n.size()), flat(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    root[i] = 3.0 / std::sqrt(n[i]);
    flat[i] = 0.7;
  }
  EXPECT_NEAR(fit_loglog(n, root).slope, -0.5, 1e-12);
  EXPECT_NEAR(fit_loglog(n, flat).slope, 0.0, 1e-12);
  EXPECT_LE(fit_loglog(n, root).residual, 1e-12);
}

TEST(FitLogLog, RejectsNonPositive) {
  EXPECT_THROW(fit_loglog({10, 20}, {0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(fit_loglog({10}, {0.5}), InvalidArgument);
}

TEST(RateStudy, ValidatesShape) {
  RateStudyConfig cfg;
  cfg.n_values = {100, 200};
  EXPECT_THROW(rate_study(cfg), InvalidArgument);
  cfg.n_values = {100, 200, 400, 800};
  cfg.seeds = 1;
  EXPECT_THROW(rate_study(cfg), InvalidArgument);
}

TEST(PlotSvg, EmptyInputRejected) {
  EXPECT_THROW(plot_svg({}, "/tmp/privot_empty.svg"), InvalidArgument);
}

TEST(PlotSvg, TwoPointLineHasExactlyOnePolyline) {
  Series s;
  s.label = "line";
  s.points = {{0, 0}, {1, 1}};
  const std::string path =
      (std::filesystem::temp_directory_path() / "privot_line.svg").string();
  plot_svg({s}, path);
  std::ifstream in(path);
  std::string svg((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  std::size_t count = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  EXPECT_EQ(count, 1u);
}

TEST(PlotSvg, ByteDeterministic) {
  Series s;
  s.label = "pts";
  s.style = Series::Style::scatter;
  CounterRng rng(65);
  for (int i = 0; i < 20; ++i)
    s.points.emplace_back(rng.uniform_in(-1, 1), rng.uniform_in(-1, 1));
  const auto dir = std::filesystem::temp_directory_path();
  plot_svg({s}, (dir / "privot_a.svg").string());
  plot_svg({s}, (dir / "privot_b.svg").string());
  EXPECT_EQ(hash_file((dir / "privot_a.svg").string()),
            hash_file((dir / "privot_b.svg").string()));
}

}  // namespace
}  // namespace privot
