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
// Discrete deconvolution on a fixed support: minimize q -> S_c(q, p_y) over
// the simplex with cost c_ij = -log K_ij, where K is the row-stochastic
// mechanism kernel. The first variation of S_c in q is the optimal dual
// potential f of the inner entropic transport problem, so mirror descent
// multiplies q by exp(-step * f) and renormalizes. When p_y is the exact
// push-forward of some p_x and K has full row rank, the minimizer is p_x.

#ifndef PRIVOT_DECONV_HPP_
#define PRIVOT_DECONV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "privot/common.hpp"
#include "privot/entropic_ot.hpp"
#include "privot/rng.hpp"

namespace privot {

struct GridModel {
  MatrixXd support_x;  // k x d
  MatrixXd support_y;  // m x d
  MatrixXd kernel;     // k x m, strictly positive, rows sum to 1
  VectorXd p_x;        // length k
  VectorXd p_y;        // length m
};

inline VectorXd forward_push(const VectorXd& p_x, const MatrixXd& kernel) {
  require(kernel.rows() == p_x.size(), "kernel rows must match p_x");
  return kernel.transpose() * p_x;
}

inline void validate(const GridModel& model) {
  require(model.kernel.rows() == model.support_x.rows() &&
              model.kernel.cols() == model.support_y.rows(),
          "kernel shape must match supports");
  require((model.kernel.array() > 0).all(), "kernel must be strictly positive");
  require((model.kernel.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12,
          "kernel rows must be probability vectors");
  require(model.p_x.size() == model.kernel.rows() &&
              model.p_y.size() == model.kernel.cols(),
          "weight lengths must match supports");
}

// Additive-mechanism kernel on a grid: K_ij proportional to density(y_j - x_i),
// rows normalized so the discrete push-forward is exactly stochastic.
inline GridModel make_additive_grid(MatrixXd support_x, MatrixXd support_y,
                                    const KernelFn& density, VectorXd p_x) {
  GridModel model;
  model.support_x = std::move(support_x);
  model.support_y = std::move(support_y);
  const Eigen::Index k = model.support_x.rows(), m = model.support_y.rows();
  model.kernel.resize(k, m);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = density(model.support_x.row(i), model.support_y.row(j));
      require(v > 0, "density must be strictly positive on the grid");
      model.kernel(i, j) = v;
    }
    model.kernel.row(i) /= model.kernel.row(i).sum();
  }
  require(p_x.size() == k, "p_x length must match support_x");
  model.p_x = std::move(p_x);
  model.p_y = forward_push(model.p_x, model.kernel);
  validate(model);
  return model;
}

// Total variation distance between discrete distributions.
inline double tv_distance(const VectorXd& p, const VectorXd& q) {
  require(p.size() == q.size(), "length mismatch");
  return 0.5 * (p - q).lpNorm<1>();
}

// sum p_i log(p_i / q_i) with 0 log 0 = 0; requires supp(p) within supp(q).
inline double kl_discrete(const VectorXd& p, const VectorXd& q) {
  require(p.size() == q.size(), "length mismatch");
  double s = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    require(q[i] > 0, "kl_discrete support violation at index " +
                          std::to_string(i));
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

// Euclidean projection onto the probability simplex (sorted-threshold rule).
inline VectorXd project_simplex(const VectorXd& v) {
  const Eigen::Index n = v.size();
  VectorXd s = v;
  std::sort(s.data(), s.data() + n, std::greater<double>());
  double cumsum = 0, tau = s[0] - 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += s[j];
    const double cand = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (s[j] - cand > 0) tau = cand;
  }
  return (v.array() - tau).max(0.0).matrix();
}

struct ProjectionOptions {
  double tol = 1e-8;        // projected-gradient norm target
  int max_iter = 500;       // mirror-descent steps
  double inner_tol = 1e-11; // inner Sinkhorn marginal tolerance
  int inner_max_iter = 20000;
  bool polish = true;       // least-squares refinement of the mirror iterate
  VectorXd init;            // optional starting point on the simplex
};

struct ProjectionResult {
  VectorXd q;
  double objective = 0;        // achieved S_c(q, p_y)
  double grad_residual = 0;    // simplex-projected gradient norm
  int iterations = 0;
  bool converged = false;
  bool polished = false;       // final iterate came from the refinement step
};

namespace deconv_detail {

// Simplex-constrained least-squares fit of the push-forward equations
// K^T q = p_y, solved on the free set by column-pivoted QR of the stacked
// rectangular system (normal equations would square a condition number that
// is already near 1e12 for smooth kernels). Nonnegativity is enforced by an
// active set that removes the most negative coordinate until feasible.
inline VectorXd push_forward_least_squares(const MatrixXd& kernel,
                                           const VectorXd& p_y) {
  const Eigen::Index k = kernel.rows(), m = kernel.cols();
  std::vector<Eigen::Index> free_idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) free_idx[static_cast<std::size_t>(i)] = i;
  VectorXd rhs(m + 1);
  rhs.head(m) = p_y;
  rhs[m] = 1.0;
  VectorXd solution = VectorXd::Zero(k);
  for (Eigen::Index round = 0; round <= k; ++round) {
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    if (nf == 0) break;
    MatrixXd A(m + 1, nf);
    for (Eigen::Index c = 0; c < nf; ++c) {
      A.col(c).head(m) = kernel.row(free_idx[static_cast<std::size_t>(c)]).transpose();
      A(m, c) = 1.0;
    }
    const VectorXd qf = A.colPivHouseholderQr().solve(rhs);
    if (qf.minCoeff() >= -1e-10) {
      solution.setZero();
      for (Eigen::Index c = 0; c < nf; ++c)
        solution[free_idx[static_cast<std::size_t>(c)]] = std::max(qf[c], 0.0);
      break;
    }
    Eigen::Index drop = 0;
    for (Eigen::Index c = 1; c < nf; ++c)
      if (qf[c] < qf[drop]) drop = c;
    free_idx.erase(free_idx.begin() + drop);
  }
  const double total = solution.sum();
  if (total <= 0) return VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  return solution / total;
}

}  // namespace deconv_detail

// Minimizes S_c(q, p_y) by mirror descent with backtracking on the true
// objective; each objective evaluation is an inner Sinkhorn solve warm
// started from the previous potentials.
inline ProjectionResult entropic_projection(const GridModel& model,
                                            const ProjectionOptions& opts = {}) {
  validate(model);
  const Eigen::Index k = model.kernel.rows();
  const MatrixXd cost = -model.kernel.array().log().matrix();

  VectorXd q = opts.init.size() == k
                   ? opts.init
                   : VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  require(std::fabs(q.sum() - 1.0) <= 1e-9 && (q.array() >= 0).all(),
          "init must lie on the simplex");

  SinkhornOptions inner;
  inner.lambda = 1.0;
  inner.tol = opts.inner_tol;
  inner.max_iter = opts.inner_max_iter;
  inner.scaling = 0.99;
  inner.compute_plan = false;

  VectorXd warm_f, warm_g;
  auto solve = [&](const VectorXd& weights) {
    SinkhornOptions o = inner;
    if (warm_f.size()) {
      o.warm_f = &warm_f;
      o.warm_g = &warm_g;
      o.scaling = 0;  // warm starts skip the annealing ramp
    }
    return sinkhorn(cost, weights, model.p_y, o);
  };

  TransportPlan cur = solve(q);
  warm_f = cur.f;
  warm_g = cur.g;

  ProjectionResult res;
  double step = 1.0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const VectorXd& grad = cur.f;  // first variation of S_c in q
    // Stationarity: distance from q to the simplex projection of q - grad.
    res.grad_residual = (q - project_simplex(q - grad)).norm();
    if (res.grad_residual <= opts.tol) {
      res.converged = true;
      break;
    }

    // Mirror step with backtracking; centering the gradient improves the
    // conditioning of the exponent but does not change the update.
    const VectorXd centered = grad.array() - q.dot(grad);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      VectorXd logq = q.array().log().max(-745.0);  // floor keeps exp() > 0
      VectorXd cand_log = logq - step * centered;
      cand_log.array() -= cand_log.maxCoeff();
      VectorXd cand = cand_log.array().exp();
      cand /= cand.sum();
      TransportPlan trial = solve(cand);
      if (trial.objective < cur.objective) {
        q = cand;
        cur = trial;
        warm_f = cur.f;
        warm_g = cur.g;
        step = std::min(step * 2.0, 1e6);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at floating-point resolution
  }
  res.iterations = it;

  // Smooth kernels leave the objective numerically flat along the kernel's
  // small singular directions, which stalls any purely value-driven method
  // far from the minimizer. Refining against the push-forward equations
  // resolves those directions; the refinement is kept only if the true
  // objective does not get worse.
  if (opts.polish) {
    const VectorXd cand =
        deconv_detail::push_forward_least_squares(model.kernel, model.p_y);
    SinkhornOptions fresh = inner;
    const TransportPlan trial = sinkhorn(cost, cand, model.p_y, fresh);
    if (trial.objective <= cur.objective + 1e-9 * (1 + std::fabs(cur.objective))) {
      q = cand;
      cur = trial;
      res.polished = true;
    }
  }
  res.grad_residual = (q - project_simplex(q - cur.f)).norm();
  res.converged = res.grad_residual <= opts.tol;
  res.q = q;
  res.objective = cur.objective;
  return res;
}

// ---------------------------------------------------------------------------
// Smoothed-KL inequality harness (d = 1). The left side is the KL divergence
// between the two noise mixtures computed by adaptive quadrature; the right
// side is the scaled difference of entropic Wasserstein distances to an
// s-sample empirical draw of the privatized distribution.
// ---------------------------------------------------------------------------

namespace quad_detail {

// Adaptive Simpson with an absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& h, double a,
                               double b, double fa, double fm, double fb,
                               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = h(lm), frm = h(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0) throw RuntimeFailure("quadrature did not converge");
  if (std::fabs(left + right - whole) <= 15 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(h, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(h, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& h, double a,
                        double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = h(a), fm = h(m), fb = h(b);
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return adaptive_simpson(h, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace quad_detail

struct Lemma1Gap {
  double lhs = 0;  // KL(P_X + N || Q + N), quadrature
  double rhs = 0;  // scaled entropic Wasserstein difference, empirical
};

// Requires a one-dimensional support and an additive-noise mechanism with
// density proportional to exp(-|z|^p / (p sigma^p)), p in {1, 2}.
inline Lemma1Gap lemma1_gap(const GridModel& model, const VectorXd& q, int p,
                            double sigma, Eigen::Index samples,
                            std::uint64_t seed) {
  validate(model);
  require(model.support_x.cols() == 1, "lemma1_gap is restricted to d = 1");
  require(p == 1 || p == 2, "p must be 1 or 2");
  require(sigma > 0, "sigma must be positive");
  require(q.size() == model.p_x.size(), "q length must match the grid");
  require(samples >= 2, "need at least two samples");

  const double pi_const = 3.14159265358979323846;
  auto noise_pdf = [&](double z) {
    if (p == 2)
      return std::exp(-z * z / (2 * sigma * sigma)) /
             std::sqrt(2 * pi_const * sigma * sigma);
    return std::exp(-std::fabs(z) / sigma) / (2 * sigma);
  };
  // Half-width containing all but ~1e-9 of the noise mass.
  const double tail = p == 2 ? 6.2 * sigma : sigma * std::log(5e8);

  const VectorXd& atoms_x = model.support_x.col(0);
  auto mixture = [&](const VectorXd& w, double t) {
    double s = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (w[i] > 0) s += w[i] * noise_pdf(t - atoms_x[i]);
    return s;
  };

  const double lo = atoms_x.minCoeff() - tail;
  const double hi = atoms_x.maxCoeff() + tail;
  auto integrand = [&](double t) {
    const double py = mixture(model.p_x, t);
    if (py <= 0) return 0.0;
    const double pq = std::max(mixture(q, t), 1e-300);
    return py * std::log(py / pq);
  };
  Lemma1Gap out;
  out.lhs = quad_detail::integrate(integrand, lo, hi, 1e-10);

  // Empirical draw from P_Y: pick an atom by inverse CDF, add noise.
  CounterRng rng = substream(seed, "lemma1");
  VectorXd cdf(model.p_x.size());
  double acc = 0;
  for (Eigen::Index i = 0; i < model.p_x.size(); ++i) {
    acc += model.p_x[i];
    cdf[i] = acc;
  }
  MatrixXd y(samples, 1);
  for (Eigen::Index s = 0; s < samples; ++s) {
    CounterRng draw = rng.fork(static_cast<std::uint64_t>(s));
    const double u = draw.uniform();
    Eigen::Index atom = 0;
    while (atom + 1 < cdf.size() && u > cdf[atom]) ++atom;
    const double noise =
        p == 2 ? sigma * draw.normal() : draw.laplace(sigma);
    y(s, 0) = atoms_x[atom] + noise;
  }

  const double lambda = static_cast<double>(p) * std::pow(sigma, p);
  EmpiricalDistribution y_hat = EmpiricalDistribution::uniform(y);
  SinkhornOptions opts;
  opts.tol = 1e-7;
  opts.max_iter = 20000;
  opts.compute_plan = false;
  auto w_term = [&](const VectorXd& weights) {
    EmpiricalDistribution u =
        EmpiricalDistribution::weighted(model.support_x, weights);
    return entropic_wasserstein(u, y_hat, p, lambda, opts).value;
  };
  out.rhs = (w_term(q) - w_term(model.p_x)) / lambda;
  return out;
}

}  // namespace privot

#endif  // PRIVOT_DECONV_HPP_
