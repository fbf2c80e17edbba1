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
// Entropic optimal transport in the log domain. For cost C, weights (a, b)
// and regularization lambda, the solver alternates soft-min updates on the
// scaled potentials
//   f_i = -lambda * LSE_j(log b_j + (g_j - C_ij)/lambda)
//   g_j = -lambda * LSE_i(log a_i + (f_i - C_ij)/lambda)
// so the optimal plan is pi_ij = a_i b_j exp((f_i + g_j - C_ij)/lambda).
// Soft-min updates never overflow, which matters because cost/lambda ratios
// around 1e3 appear in the intended workloads. An optional epsilon-scaling
// schedule anneals the effective lambda geometrically from max(C) down to
// the target before iterating to tolerance.
//
// Potentials are reported in the gauge sum_i a_i f_i = sum_j b_j g_j, which
// makes them unique. The dual objective sum a_i f_i + sum b_j g_j equals the
// primal <pi, C> + lambda * I(pi) at the optimum.

#ifndef PRIVOT_ENTROPIC_OT_HPP_
#define PRIVOT_ENTROPIC_OT_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "privot/common.hpp"
#include "privot/dataset.hpp"

namespace privot {

// ---------------------------------------------------------------------------
// Cost specification and matrices.
// ---------------------------------------------------------------------------

using KernelFn = std::function<double(const Eigen::RowVectorXd&,
                                      const Eigen::RowVectorXd&)>;

struct CostSpec {
  enum class Kind { lp_power, neg_log_kernel };
  Kind kind = Kind::lp_power;
  int p = 2;            // lp_power: cost ||x - y||_p^p with p in {1, 2}
  double lambda = 1.0;  // regularization, > 0
  KernelFn kernel;      // neg_log_kernel: strictly positive density
};

inline CostSpec lp_cost(int p, double lambda) {
  require(p == 1 || p == 2, "p must be 1 or 2");
  require(lambda > 0, "lambda must be positive");
  CostSpec s;
  s.kind = CostSpec::Kind::lp_power;
  s.p = p;
  s.lambda = lambda;
  return s;
}

inline CostSpec neg_log_kernel_cost(KernelFn kernel, double lambda = 1.0) {
  require(lambda > 0, "lambda must be positive");
  CostSpec s;
  s.kind = CostSpec::Kind::neg_log_kernel;
  s.lambda = lambda;
  s.kernel = std::move(kernel);
  return s;
}

// Product Gaussian density of x - y with per-coordinate deviation sigma.
inline KernelFn gaussian_density_kernel(double sigma) {
  require(sigma > 0, "sigma must be positive");
  return [sigma](const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
    const double d = static_cast<double>(x.size());
    const double two_pi = 2.0 * 3.14159265358979323846;
    return std::exp(-(x - y).squaredNorm() / (2 * sigma * sigma)) /
           std::pow(two_pi * sigma * sigma, d / 2.0);
  };
}

// Product Laplace density of x - y with per-coordinate scale sigma.
inline KernelFn laplace_density_kernel(double sigma) {
  require(sigma > 0, "sigma must be positive");
  return [sigma](const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
    const double d = static_cast<double>(x.size());
    return std::exp(-(x - y).lpNorm<1>() / sigma) / std::pow(2 * sigma, d);
  };
}

struct CostMatrix {
  MatrixXd entries;  // m x k, finite and >= 0 for lp costs
  std::string rows_from, cols_from;
};

inline MatrixXd pairwise_lp_cost(const MatrixXd& X, const MatrixXd& Y, int p) {
  require(X.cols() == Y.cols(), "dimension mismatch between point sets");
  require(p == 1 || p == 2, "p must be 1 or 2");
  MatrixXd C(X.rows(), Y.rows());
  par::for_blocks(X.rows(), 64, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      if (p == 2)
        C.row(i) = (Y.rowwise() - X.row(i)).rowwise().squaredNorm().transpose();
      else
        C.row(i) = (Y.rowwise() - X.row(i)).cwiseAbs().rowwise().sum().transpose();
    }
  });
  return C;
}

inline CostMatrix cost_matrix(const EmpiricalDistribution& X,
                              const EmpiricalDistribution& Y,
                              const CostSpec& spec) {
  require(X.points.cols() == Y.points.cols(),
          "dimension mismatch between distributions");
  CostMatrix cm;
  if (spec.kind == CostSpec::Kind::lp_power) {
    cm.entries = pairwise_lp_cost(X.points, Y.points, spec.p);
    return cm;
  }
  require(static_cast<bool>(spec.kernel), "neg_log_kernel cost needs a kernel");
  cm.entries.resize(X.points.rows(), Y.points.rows());
  for (Eigen::Index i = 0; i < X.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < Y.points.rows(); ++j) {
      const double k = spec.kernel(X.points.row(i), Y.points.row(j));
      if (!(k > 0))
        throw InvalidArgument("kernel vanishes at pair (" + std::to_string(i) +
                              ", " + std::to_string(j) + "): cost is infinite");
      cm.entries(i, j) = -std::log(k);
    }
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Sinkhorn-Knopp.
// ---------------------------------------------------------------------------

struct SinkhornOptions {
  double lambda = 1.0;
  double tol = 1e-9;        // L1 marginal residual target
  int max_iter = 10000;     // full sweeps, annealing included
  double scaling = 0.99;    // epsilon-scaling decay factor; 0 disables
  bool compute_plan = true; // materialize pi and plan statistics
  const VectorXd* warm_f = nullptr;
  const VectorXd* warm_g = nullptr;
};

struct TransportPlan {
  MatrixXd pi;
  VectorXd f, g;               // scaled dual potentials
  double transport_cost = 0;   // <pi, C>
  double mutual_information = 0;
  double objective = 0;        // dual value: sum a_i f_i + sum b_j g_j
  int iterations = 0;
  double marginal_residual = 0;
  bool converged = false;
};

// KL of the plan against the product of its prescribed marginals, with
// 0 log 0 = 0.
inline double mutual_information(const MatrixXd& pi, const VectorXd& a,
                                 const VectorXd& b) {
  require(pi.rows() == a.size() && pi.cols() == b.size(),
          "plan shape must match marginals");
  const Eigen::Index m = pi.rows(), k = pi.cols();
  VectorXd per_row(m);
  par::for_blocks(m, 64, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      double s = 0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double p = pi(i, j);
        if (p > 0) s += p * std::log(p / (a[i] * b[j]));
      }
      per_row[i] = s;
    }
  });
  return per_row.sum();
}

namespace sinkhorn_detail {

// log sum_j exp(x_j) over a dense expression that may contain -inf entries.
template <typename Derived>
double logsumexp(const Eigen::ArrayBase<Derived>& x) {
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;  // all -inf (or an overflow defect)
  return mx + std::log((x - mx).exp().sum());
}

inline VectorXd log_weights(const VectorXd& w) {
  VectorXd lw(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    lw[i] = w[i] > 0 ? std::log(w[i])
                     : -std::numeric_limits<double>::infinity();
  return lw;
}

}  // namespace sinkhorn_detail

inline TransportPlan sinkhorn(const MatrixXd& C, const VectorXd& a,
                              const VectorXd& b, const SinkhornOptions& opts) {
  using RowMajorMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index m = C.rows(), k = C.cols();
  require(a.size() == m && b.size() == k, "weights must match the cost matrix");
  require((a.array() >= 0).all() && (b.array() >= 0).all(),
          "weights must be nonnegative");
  require(std::fabs(a.sum() - 1.0) <= 1e-9 && std::fabs(b.sum() - 1.0) <= 1e-9,
          "weights must sum to 1");
  require(opts.lambda > 0, "lambda must be positive");
  require(C.allFinite(), "cost matrix must be finite");

  const RowMajorMatrix Cr = C;  // row-contiguous copy for the f-update
  const VectorXd loga = sinkhorn_detail::log_weights(a);
  const VectorXd logb = sinkhorn_detail::log_weights(b);

  VectorXd f = opts.warm_f && opts.warm_f->size() == m ? *opts.warm_f
                                                       : VectorXd::Zero(m);
  VectorXd g = opts.warm_g && opts.warm_g->size() == k ? *opts.warm_g
                                                       : VectorXd::Zero(k);
  VectorXd f_new(m), row_gap(m);

  const double lambda = opts.lambda;
  double lambda_eff = lambda;
  if (opts.scaling > 0 && opts.scaling < 1)
    lambda_eff = std::max(lambda, C.maxCoeff());

  TransportPlan plan;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const double le = lambda_eff;
    par::for_blocks(m, 64, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
      for (Eigen::Index i = lo; i < hi; ++i) {
        const double lse = sinkhorn_detail::logsumexp(
            (logb.array() + (g.array() - Cr.row(i).transpose().array()) / le));
        f_new[i] = -le * lse;
        row_gap[i] = a[i] * std::fabs(std::expm1((f[i] - f_new[i]) / le));
      }
    });
    f.swap(f_new);
    par::for_blocks(k, 64, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
      for (Eigen::Index j = lo; j < hi; ++j) {
        const double lse = sinkhorn_detail::logsumexp(
            (loga.array() + (f.array() - C.col(j).array()) / le));
        g[j] = -le * lse;
      }
    });
    if (!f.allFinite() || !g.allFinite())
      throw RuntimeFailure("sinkhorn produced non-finite potentials");

    if (lambda_eff > lambda) {
      lambda_eff = std::max(lambda, lambda_eff * opts.scaling);
      continue;  // keep annealing; residuals are measured at target lambda
    }
    // Column marginals are exact after the g-update; the row gap measures
    // the L1 row-marginal error of the state entering this sweep.
    if (iter > 0 && row_gap.sum() <= opts.tol) {
      plan.converged = true;
      ++iter;
      break;
    }
  }
  plan.iterations = iter;

  // Gauge: equalize the weighted means of the two potentials.
  const double shift = 0.5 * (a.dot(f) - b.dot(g));
  f.array() -= shift;
  g.array() += shift;
  plan.f = f;
  plan.g = g;
  plan.objective = a.dot(f) + b.dot(g);

  if (opts.compute_plan) {
    plan.pi.resize(m, k);
    VectorXd cost_per_row(m);
    par::for_blocks(m, 64, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
      for (Eigen::Index i = lo; i < hi; ++i) {
        plan.pi.row(i) = ((f[i] + g.array() - Cr.row(i).transpose().array()) /
                              lambda + loga[i] + logb.array())
                             .exp();
        cost_per_row[i] = plan.pi.row(i).dot(Cr.row(i));
      }
    });
    plan.transport_cost = cost_per_row.sum();
    plan.mutual_information = mutual_information(plan.pi, a, b);
    const double row_res = (plan.pi.rowwise().sum() - a).lpNorm<1>();
    const double col_res = (plan.pi.colwise().sum().transpose() - b).lpNorm<1>();
    plan.marginal_residual = std::max(row_res, col_res);
    plan.converged = plan.marginal_residual <= opts.tol;
  }
  return plan;
}

// Max violation of the two soft-min optimality conditions, in the scaled
// convention. Invariant under the f + t, g - t gauge freedom; a converged
// plan certifies a small value.
inline double dual_residual(const TransportPlan& plan, const MatrixXd& C,
                            const VectorXd& a, const VectorXd& b,
                            double lambda) {
  const Eigen::Index m = C.rows(), k = C.cols();
  require(plan.f.size() == m && plan.g.size() == k, "plan carries no duals");
  const VectorXd loga = sinkhorn_detail::log_weights(a);
  const VectorXd logb = sinkhorn_detail::log_weights(b);
  double worst = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lse = sinkhorn_detail::logsumexp(
        (logb.array() + (plan.g.array() - C.row(i).transpose().array()) / lambda));
    worst = std::max(worst, std::fabs(plan.f[i] + lambda * lse));
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const double lse = sinkhorn_detail::logsumexp(
        (loga.array() + (plan.f.array() - C.col(j).array()) / lambda));
    worst = std::max(worst, std::fabs(plan.g[j] + lambda * lse));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Entropic p-Wasserstein and the debiased divergence.
// ---------------------------------------------------------------------------

struct EntropicValue {
  double value = 0;  // lambda-scaled objective
  TransportPlan plan;
};

// W_{p,lambda}(X, Y) = lambda * S_c with cost ||x-y||_p^p / lambda solved at
// unit regularization. The returned dual value is checked against the primal
// from the plan whenever the solve converged.
inline EntropicValue entropic_wasserstein(const EmpiricalDistribution& X,
                                          const EmpiricalDistribution& Y,
                                          int p, double lambda,
                                          SinkhornOptions opts = {}) {
  require(lambda > 0, "lambda must be positive");
  MatrixXd C = pairwise_lp_cost(X.points, Y.points, p);
  C /= lambda;
  opts.lambda = 1.0;
  EntropicValue out;
  out.plan = sinkhorn(C, X.weights, Y.weights, opts);
  out.value = lambda * out.plan.objective;
  if (out.plan.converged) {
    const double primal =
        out.plan.transport_cost + out.plan.mutual_information;
    const double gap = std::fabs(out.plan.objective - primal);
    // The gap is bounded by the marginal residual times the potential size.
    const double potential_scale =
        out.plan.f.cwiseAbs().maxCoeff() + out.plan.g.cwiseAbs().maxCoeff();
    const double bound = 1e-9 * std::max(1.0, std::fabs(out.plan.objective)) +
                         10.0 * out.plan.marginal_residual * potential_scale;
    if (gap > std::max(1e-6, bound))
      throw RuntimeFailure("entropic_wasserstein duality certificate violated");
  }
  return out;
}

// S_c(X, Y) - S_c(X, X)/2 - S_c(Y, Y)/2 in the lambda-scaled convention.
inline double sinkhorn_divergence(const EmpiricalDistribution& X,
                                  const EmpiricalDistribution& Y,
                                  const CostSpec& spec,
                                  SinkhornOptions opts = {}) {
  opts.lambda = spec.lambda;
  auto value = [&](const EmpiricalDistribution& U,
                   const EmpiricalDistribution& V) {
    const CostMatrix cm = cost_matrix(U, V, spec);
    const TransportPlan plan = sinkhorn(cm.entries, U.weights, V.weights, opts);
    return plan.objective;
  };
  return value(X, Y) - 0.5 * value(X, X) - 0.5 * value(Y, Y);
}

}  // namespace privot

#endif  // PRIVOT_ENTROPIC_OT_HPP_
