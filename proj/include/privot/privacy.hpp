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
// Local-DP mechanisms and data conditioning. The Laplace mechanism with
// sensitivity D and budget eps adds i.i.d. Laplace(0, D/eps) per coordinate.
// The Gaussian mechanism adds N(0, sigma^2) where sigma must strictly exceed
//   (c + sqrt(c^2 + eps)) / (eps * sqrt(2)) * D,  c^2 = ln(2/(sqrt(16 delta + 1) - 1)),
// which we enforce with a 1e-9 relative margin so the strict inequality is
// checkable in floating point.

#ifndef PRIVOT_PRIVACY_HPP_
#define PRIVOT_PRIVACY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "privot/common.hpp"
#include "privot/dataset.hpp"
#include "privot/rng.hpp"

namespace privot {

enum class MechanismKind { laplace, gaussian };

struct MechanismSpec {
  MechanismKind kind = MechanismKind::laplace;
  double sensitivity = 0;  // l1 for laplace, l2 for gaussian
  double epsilon = 0;
  double delta = 0;  // 0 iff laplace
  double noise_scale = 0;
};

inline std::string mechanism_kind_name(MechanismKind k) {
  return k == MechanismKind::laplace ? "laplace" : "gaussian";
}

// Threshold of the Gaussian-mechanism noise bound for given (sensitivity,
// epsilon, delta); any sigma strictly above it satisfies (eps, delta)-LDP.
inline double gaussian_sigma_threshold(double sensitivity, double epsilon,
                                       double delta) {
  require(sensitivity > 0, "sensitivity must be positive");
  require(epsilon > 0, "epsilon must be positive");
  require(delta > 0 && delta < 0.5, "delta must lie in (0, 0.5)");
  // sqrt(16d+1)-1 is computed cancellation-free so c^2 stays accurate for
  // delta near 0.
  const double root_m1 = 16.0 * delta / (std::sqrt(16.0 * delta + 1.0) + 1.0);
  const double c2 = std::log(2.0) - std::log(root_m1);
  const double c = std::sqrt(std::max(c2, 0.0));
  return (c + std::sqrt(c2 + epsilon)) / (epsilon * std::sqrt(2.0)) * sensitivity;
}

inline MechanismSpec calibrate_laplace(double l1_sensitivity, double epsilon) {
  require(l1_sensitivity > 0, "sensitivity must be positive");
  require(epsilon > 0, "epsilon must be positive");
  MechanismSpec m;
  m.kind = MechanismKind::laplace;
  m.sensitivity = l1_sensitivity;
  m.epsilon = epsilon;
  m.delta = 0;
  m.noise_scale = l1_sensitivity / epsilon;
  return m;
}

inline MechanismSpec calibrate_gaussian(double l2_sensitivity, double epsilon,
                                        double delta) {
  const double threshold = gaussian_sigma_threshold(l2_sensitivity, epsilon, delta);
  MechanismSpec m;
  m.kind = MechanismKind::gaussian;
  m.sensitivity = l2_sensitivity;
  m.epsilon = epsilon;
  m.delta = delta;
  m.noise_scale = threshold * (1.0 + 1e-9);
  return m;
}

// Numerical inverse of the Gaussian calibration: the epsilon at which the
// calibrated sigma equals the given one. The threshold is strictly
// decreasing in epsilon, so bisection over log(epsilon) finds the unique
// root. Epsilons are searched in [1e-12, 1e12]; a sigma outside the
// corresponding range has no representable budget and is an error.
inline double invert_gaussian(double sigma, double l2_sensitivity, double delta) {
  require(sigma > 0, "sigma must be positive");
  const double eps_lo = 1e-12, eps_hi = 1e12;
  auto calibrated = [&](double eps) {
    return gaussian_sigma_threshold(l2_sensitivity, eps, delta) * (1.0 + 1e-9);
  };
  if (sigma >= calibrated(eps_lo))
    throw InvalidArgument("sigma too large: epsilon below supported range");
  if (sigma <= calibrated(eps_hi))
    throw InvalidArgument("sigma below the floor reachable at epsilon = 1e12");
  double lo = std::log(eps_lo), hi = std::log(eps_hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (calibrated(std::exp(mid)) > sigma)
      lo = mid;  // need larger epsilon to reduce sigma
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return std::exp(0.5 * (lo + hi));
}

// l_p norm of the coordinate-wise absolute suprema of a dataset; the
// sensitivity bound used when calibrating an additive mechanism for data in
// a known coordinate box.
inline double sensitivity_bound(const Dataset& ds, int p) {
  require(p == 1 || p == 2, "p must be 1 or 2");
  VectorXd m = ds.points.cwiseAbs().colwise().maxCoeff();
  return p == 1 ? m.lpNorm<1>() : m.lpNorm<2>();
}

// Adds mechanism noise to every coordinate. Row i uses the stream
// fork(seed-substream, i), so results do not depend on evaluation order.
inline Dataset privatize(const Dataset& ds, const MechanismSpec& mech,
                         std::uint64_t seed) {
  validate(ds);
  require(mech.noise_scale > 0, "mechanism must be calibrated");
  Dataset out;
  out.points.resize(ds.n(), ds.d());
  out.name = ds.name + "+" + mechanism_kind_name(mech.kind);
  out.seed = seed;
  const CounterRng base = substream(seed, "noise");
  const Eigen::Index n = ds.n(), d = ds.d();
  par::for_blocks(n, 256, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      CounterRng row = base.fork(static_cast<std::uint64_t>(i));
      for (Eigen::Index j = 0; j < d; ++j) {
        const double noise = mech.kind == MechanismKind::laplace
                                 ? row.laplace(mech.noise_scale)
                                 : mech.noise_scale * row.normal();
        out.points(i, j) = ds.points(i, j) + noise;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Norm clipping. l2 is radial scaling; l1 is the exact Euclidean projection
// onto the l1 ball via the sorted-threshold simplex projection.
// ---------------------------------------------------------------------------

inline Dataset clip_l2(const Dataset& ds, double radius) {
  require(radius > 0, "radius must be positive");
  Dataset out = ds;
  for (Eigen::Index i = 0; i < out.n(); ++i) {
    const double nrm = out.points.row(i).norm();
    if (nrm > radius) out.points.row(i) *= radius / nrm;
  }
  out.bounds.reset();
  return out;
}

namespace clip_detail {

// Projection of |v| onto the simplex of radius `radius` expressed as the
// soft threshold tau; rows already inside the ball are left untouched by
// the caller.
inline double l1_threshold(VectorXd abs_sorted_desc, double radius) {
  double cumsum = 0;
  double tau = 0;
  for (Eigen::Index j = 0; j < abs_sorted_desc.size(); ++j) {
    cumsum += abs_sorted_desc[j];
    const double cand = (cumsum - radius) / static_cast<double>(j + 1);
    if (abs_sorted_desc[j] - cand > 0) tau = cand;
  }
  return tau;
}

}  // namespace clip_detail

inline Dataset clip_l1(const Dataset& ds, double radius) {
  require(radius > 0, "radius must be positive");
  Dataset out = ds;
  const Eigen::Index d = out.d();
  for (Eigen::Index i = 0; i < out.n(); ++i) {
    if (out.points.row(i).lpNorm<1>() <= radius) continue;
    VectorXd a = out.points.row(i).cwiseAbs();
    std::sort(a.data(), a.data() + d, std::greater<double>());
    const double tau = clip_detail::l1_threshold(a, radius);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = out.points(i, j);
      const double mag = std::max(std::fabs(v) - tau, 0.0);
      out.points(i, j) = v < 0 ? -mag : mag;
    }
  }
  out.bounds.reset();
  return out;
}

// ---------------------------------------------------------------------------
// Orthonormal 2-D type-II DCT over each sample reshaped row-major to h x w,
// and per-sample magnitude-quantile zeroing of coefficients.
// ---------------------------------------------------------------------------

namespace dct_detail {

inline MatrixXd dct_matrix(Eigen::Index n) {
  MatrixXd D(n, n);
  const double pi = 3.14159265358979323846;
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double s = std::sqrt(2.0 / static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      D(k, i) = (k == 0 ? s0 : s) *
                std::cos(pi * (2.0 * static_cast<double>(i) + 1.0) *
                         static_cast<double>(k) / (2.0 * static_cast<double>(n)));
  return D;
}

inline Dataset apply_separable(const Dataset& ds, Eigen::Index h, Eigen::Index w,
                               bool inverse) {
  require(h >= 1 && w >= 1, "h and w must be positive");
  require(ds.d() == h * w, "sample dimension must equal h*w");
  using RowMajorMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const MatrixXd Dh = dct_matrix(h);
  const MatrixXd Dw = dct_matrix(w);
  Dataset out = ds;
  out.bounds.reset();
  Eigen::RowVectorXd row(h * w);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    row = ds.points.row(i);
    Eigen::Map<const RowMajorMatrix> img(row.data(), h, w);
    RowMajorMatrix y;
    if (inverse)
      y = Dh.transpose() * img * Dw;
    else
      y = Dh * img * Dw.transpose();
    out.points.row(i) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), h * w);
  }
  return out;
}

}  // namespace dct_detail

inline Dataset dct2(const Dataset& ds, Eigen::Index h, Eigen::Index w) {
  return dct_detail::apply_separable(ds, h, w, false);
}

inline Dataset idct2(const Dataset& ds, Eigen::Index h, Eigen::Index w) {
  return dct_detail::apply_separable(ds, h, w, true);
}

// Zeroes each sample's small-magnitude coefficients. The keep threshold is
// the (r+1)-th smallest absolute value with r = ceil(q*d) capped at d-1, and
// only entries strictly below it are zeroed, which is unambiguous at ties.
inline Dataset coefficient_clip(const Dataset& ds, double quantile) {
  require(quantile >= 0 && quantile < 1, "quantile must lie in [0, 1)");
  Dataset out = ds;
  out.bounds.reset();
  if (quantile == 0) return out;
  const Eigen::Index d = ds.d();
  std::vector<double> mag(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      mag[static_cast<std::size_t>(j)] = std::fabs(ds.points(i, j));
    std::sort(mag.begin(), mag.end());
    const auto rank = static_cast<std::size_t>(std::min<double>(
        std::ceil(quantile * static_cast<double>(d)), static_cast<double>(d - 1)));
    const double threshold = mag[rank];
    for (Eigen::Index j = 0; j < d; ++j)
      if (std::fabs(out.points(i, j)) < threshold) out.points(i, j) = 0;
  }
  return out;
}

}  // namespace privot

#endif  // PRIVOT_PRIVACY_HPP_
