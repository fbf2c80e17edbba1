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
// Evaluation measures: exact 2-Wasserstein between small empirical sets,
// mean Euclidean distance to the synthetic manifolds, and the empirical
// convergence-rate harness with its log-log fit.

#ifndef PRIVOT_METRICS_HPP_
#define PRIVOT_METRICS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "privot/common.hpp"
#include "privot/dataset.hpp"
#include "privot/entropic_ot.hpp"
#include "privot/exact_ot.hpp"
#include "privot/generator.hpp"
#include "privot/privacy.hpp"
#include "privot/trainer.hpp"

namespace privot {

// Exact squared 2-Wasserstein between uniform empirical measures.
inline double empirical_w2(const MatrixXd& A, const MatrixXd& B) {
  require(A.cols() == B.cols(), "dimension mismatch");
  const MatrixXd C = pairwise_lp_cost(A, B, 2);
  const VectorXd a = VectorXd::Constant(A.rows(), 1.0 / static_cast<double>(A.rows()));
  const VectorXd b = VectorXd::Constant(B.rows(), 1.0 / static_cast<double>(B.rows()));
  return exact_ot_lp(C, a, b).value;
}

inline double empirical_w2(const Dataset& A, const Dataset& B) {
  return empirical_w2(A.points, B.points);
}

namespace metrics_detail {

// Robust point-to-ellipse distance (first-quadrant bisection on the
// level-set parameter; handles points inside the evolute).
inline double point_ellipse_distance(double e0, double e1, double y0, double y1) {
  // Axis order with e0 >= e1.
  if (e0 < e1) {
    std::swap(e0, e1);
    std::swap(y0, y1);
  }
  y0 = std::fabs(y0);
  y1 = std::fabs(y1);
  if (y1 > 0) {
    if (y0 > 0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0) return 0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double n0 = r0 * z0;
      double s0 = z1 - 1.0;
      double s1 = g < 0 ? 0.0 : std::hypot(n0, z1) - 1.0;
      double s = 0;
      for (int i = 0; i < 200; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0), ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0)
          s0 = s;
        else if (g < 0)
          s1 = s;
        else
          break;
      }
      const double x0 = r0 * y0 / (s + r0), x1 = y1 / (s + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::fabs(y1 - e1);
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (denom0 > 0 && numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    return std::hypot(e0 * xde0 - y0, e1 * std::sqrt(1.0 - xde0 * xde0));
  }
  return std::fabs(y0 - e0);
}

}  // namespace metrics_detail

// Exact Euclidean distance from one point to the manifold.
inline double manifold_distance(const Eigen::Vector2d& point,
                                const ManifoldSpec& spec) {
  const Eigen::Vector2d v = point - spec.center;
  switch (spec.kind) {
    case ManifoldKind::half_circle: {
      // Upper half arc; below the axis the nearest points are the endpoints.
      if (v.y() >= 0) return std::fabs(v.norm() - spec.radius);
      const double dx = std::fabs(v.x()) - spec.radius;
      return std::hypot(dx, v.y());
    }
    case ManifoldKind::rectangle: {
      const Eigen::Vector2d q(std::fabs(v.x()) - spec.side_w / 2,
                              std::fabs(v.y()) - spec.side_h / 2);
      const double outside = std::hypot(std::max(q.x(), 0.0), std::max(q.y(), 0.0));
      const double inside = std::min(std::max(q.x(), q.y()), 0.0);
      return std::fabs(outside + inside);
    }
    case ManifoldKind::ellipse:
      return metrics_detail::point_ellipse_distance(spec.semi_axis_a,
                                                    spec.semi_axis_b, v.x(), v.y());
  }
  throw InvalidArgument("unsupported manifold kind");
}

// Mean distance of a point set to the manifold.
inline double manifold_error(const MatrixXd& points, const ManifoldSpec& spec) {
  require(points.cols() == 2, "manifold metrics are two-dimensional");
  double s = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    s += manifold_distance(points.row(i).transpose(), spec);
  return s / static_cast<double>(points.rows());
}

inline double manifold_error(const Dataset& ds, const ManifoldSpec& spec) {
  return manifold_error(ds.points, spec);
}

// ---------------------------------------------------------------------------
// Convergence-rate harness.
// ---------------------------------------------------------------------------

struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // root-mean-square residual in log space
};

inline LogLogFit fit_loglog(const std::vector<double>& n,
                            const std::vector<double>& gap) {
  require(n.size() == gap.size() && n.size() >= 2, "need at least two points");
  const auto m = static_cast<double>(n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    require(n[i] > 0 && gap[i] > 0, "log-log fit needs positive inputs");
    const double x = std::log(n[i]), y = std::log(gap[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  LogLogFit fit;
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double r = std::log(gap[i]) - (fit.intercept + fit.slope * std::log(n[i]));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / m);
  return fit;
}

struct RateStudyConfig {
  ManifoldSpec manifold;  // n is overridden per cell
  MechanismSpec mech;
  TrainConfig train;      // loss, p, lambda, batch, steps, optimizer
  std::vector<int> layer_dims;
  MlpGenerator::OutAct out_act = MlpGenerator::OutAct::linear;
  LatentSpec latent;
  std::vector<Eigen::Index> n_values;
  int seeds = 3;
  Eigen::Index eval_batch = 256;
  std::uint64_t seed = 0;
  enum class Baseline { none, largest_n } baseline = Baseline::none;
};

struct RateStudyResult {
  std::vector<Eigen::Index> n_values;
  std::vector<double> distances;  // per-n seed-averaged W_{p,lambda} to held-out data
  std::vector<double> gaps;       // fit inputs after baseline handling
  std::vector<Eigen::Index> excluded_n;  // cells dropped for non-positive gaps
  LogLogFit fit;
};

// Per cell (n, seed): draw fresh raw data, privatize, train to the fixed
// budget, and measure W_{p,lambda} between generated samples and a held-out
// privatized draw. Averages over seeds, then fits slope on (log n, log gap).
// With Baseline::none the asymptote 0.99 * min(distance) is subtracted
// before the fit.
inline RateStudyResult rate_study(const RateStudyConfig& cfg) {
  require(cfg.n_values.size() >= 4, "need at least 4 dataset sizes");
  require(cfg.seeds >= 3, "need at least 3 seeds");
  for (std::size_t i = 1; i < cfg.n_values.size(); ++i)
    require(cfg.n_values[i] > cfg.n_values[i - 1],
            "n values must be strictly increasing");

  RateStudyResult out;
  out.n_values = cfg.n_values;
  const CounterRng root(cfg.seed);
  for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
    double acc = 0;
    for (int s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t cell =
          root.fork(static_cast<std::uint64_t>(ni * 1000 + static_cast<std::size_t>(s))).key();
      ManifoldSpec data_spec = cfg.manifold;
      data_spec.n = cfg.n_values[ni];
      data_spec.seed = substream(cell, "raw").key();
      const Dataset raw = synth_manifold(data_spec);
      const Dataset priv = privatize(raw, cfg.mech, substream(cell, "noise").key());

      ManifoldSpec held_spec = cfg.manifold;
      held_spec.n = cfg.eval_batch;
      held_spec.seed = substream(cell, "heldout").key();
      const Dataset held_raw = synth_manifold(held_spec);
      const Dataset held_priv =
          privatize(held_raw, cfg.mech, substream(cell, "heldout-noise").key());

      MlpGenerator gen = make_generator(cfg.layer_dims, cfg.out_act,
                                        substream(cell, "init").key());
      TrainConfig tc = cfg.train;
      tc.seed = substream(cell, "train").key();
      tc.eval_every = 0;
      train(priv, gen, cfg.latent, tc);

      const MatrixXd z = sample_latent(cfg.latent, cfg.eval_batch,
                                       substream(cell, "eval-latent").key());
      const MatrixXd gen_pts = forward(gen, z);
      const VectorXd u = VectorXd::Constant(
          cfg.eval_batch, 1.0 / static_cast<double>(cfg.eval_batch));
      SinkhornOptions eopts;
      eopts.lambda = tc.lambda;
      eopts.tol = 1e-7;
      eopts.max_iter = 5000;
      eopts.compute_plan = false;
      const MatrixXd c = pairwise_lp_cost(gen_pts, held_priv.points, tc.p);
      acc += sinkhorn(c, u, u, eopts).objective;
    }
    out.distances.push_back(acc / cfg.seeds);
  }

  double floor = 0;
  if (cfg.baseline == RateStudyConfig::Baseline::none) {
    floor = 0.99 * *std::min_element(out.distances.begin(), out.distances.end());
  } else {
    floor = out.distances.back();
  }
  std::vector<double> fit_n, fit_gap;
  for (std::size_t i = 0; i < out.distances.size(); ++i) {
    const double gap = out.distances[i] - floor;
    if (gap <= 0) {
      out.excluded_n.push_back(out.n_values[i]);
      continue;
    }
    fit_n.push_back(static_cast<double>(out.n_values[i]));
    fit_gap.push_back(gap);
    out.gaps.push_back(gap);
  }
  require(fit_n.size() >= 2, "too few positive gaps for a slope fit");
  out.fit = fit_loglog(fit_n, fit_gap);
  return out;
}

}  // namespace privot

#endif  // PRIVOT_METRICS_HPP_
