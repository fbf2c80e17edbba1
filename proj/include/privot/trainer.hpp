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
// Minibatch entropic-transport GAN training on privatized data. Each step
// samples a data batch and a latent batch, solves for a transport plan
// between them, and descends the gradient of <pi, C> with the plan held
// fixed (the envelope rule; the plan is not differentiated through).
// Raw data, when provided, feeds evaluation metrics only; no gradient path
// touches it.

#ifndef PRIVOT_TRAINER_HPP_
#define PRIVOT_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "privot/common.hpp"
#include "privot/dataset.hpp"
#include "privot/entropic_ot.hpp"
#include "privot/exact_ot.hpp"
#include "privot/generator.hpp"
#include "privot/privacy.hpp"
#include "privot/rng.hpp"

namespace privot {

enum class TrainLoss { entropic, unregularized, divergence };

inline std::string train_loss_name(TrainLoss l) {
  switch (l) {
    case TrainLoss::entropic: return "entropic";
    case TrainLoss::unregularized: return "unreg";
    case TrainLoss::divergence: return "divergence";
  }
  return "?";
}

struct TrainConfig {
  TrainLoss loss = TrainLoss::entropic;
  int p = 1;
  double lambda = 1.0;          // ignored by the unregularized loss
  Eigen::Index batch = 512;
  int sinkhorn_iters = 300;     // L
  double sinkhorn_tol = 1e-6;
  double sinkhorn_scaling = 0.9;
  double lr = 1e-4;
  OptimizerState::Kind optimizer = OptimizerState::Kind::rmsprop;
  long steps = 1000;
  std::uint64_t seed = 0;
  long eval_every = 0;          // 0 disables periodic evaluation
  Eigen::Index eval_batch = 512;
};

inline void validate(const TrainConfig& cfg) {
  require(cfg.batch >= 2, "batch must be >= 2");
  require(cfg.p == 1 || cfg.p == 2, "p must be 1 or 2");
  if (cfg.loss != TrainLoss::unregularized)
    require(cfg.lambda > 0, "lambda must be positive");
  require(cfg.lr > 0, "learning rate must be positive");
  require(cfg.steps >= 0, "steps must be nonnegative");
}

// Mechanism-matched configuration: p and lambda follow the privatization
// noise (Laplace pairs with p = 1 and lambda = sigma, Gaussian with p = 2
// and lambda = 2 sigma^2).
inline TrainConfig matched_config(const MechanismSpec& mech, TrainConfig base) {
  if (mech.kind == MechanismKind::laplace) {
    base.p = 1;
    base.lambda = mech.noise_scale;
  } else {
    base.p = 2;
    base.lambda = 2.0 * mech.noise_scale * mech.noise_scale;
  }
  const double expected =
      static_cast<double>(base.p) * std::pow(mech.noise_scale, base.p);
  require(std::fabs(base.lambda - expected) <= 1e-12 * expected,
          "mechanism-matched lambda must equal p * sigma^p");
  validate(base);
  return base;
}

struct HistoryRecord {
  long step = 0;
  double loss = 0;
  double w2_raw = std::numeric_limits<double>::quiet_NaN();
  double wlam_priv = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
  bool sinkhorn_converged = true;
};

struct TrainHistory {
  std::vector<HistoryRecord> records;
  long sinkhorn_warnings = 0;
};

// History CSV: step, loss, w2_raw, wlam_priv, seconds.
inline void write_history_csv(const TrainHistory& history,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open for writing: " + path);
  out << "step,loss,w2_raw,wlam_priv,seconds\n";
  char buf[160];
  for (const auto& r : history.records) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.3f\n", r.step,
                  r.loss, r.w2_raw, r.wlam_priv, r.seconds);
    out << buf;
  }
}

namespace trainer_detail {

inline std::uint64_t child_seed(std::uint64_t seed, std::string_view name,
                                std::uint64_t index) {
  return substream(seed, name).fork(index).key();
}

// d<pi, C>/dG contracted over the data side: for p = 2 the j-th row is
// sum_i pi_ij * 2 (G_j - y_i); for p = 1 it is the plan-weighted coordinate
// sign pattern with sign(0) = 0.
inline MatrixXd plan_gradient(const MatrixXd& pi, const MatrixXd& y,
                              const MatrixXd& gen_pts, int p) {
  const Eigen::Index bz = gen_pts.rows(), d = gen_pts.cols();
  MatrixXd up(bz, d);
  if (p == 2) {
    const VectorXd colmass = pi.colwise().sum();
    up = 2.0 * (colmass.asDiagonal() * gen_pts - pi.transpose() * y);
    return up;
  }
  up.setZero();
  const Eigen::Index by = y.rows();
  par::for_blocks(bz, 32, [&](Eigen::Index, Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index j = lo; j < hi; ++j) {
      for (Eigen::Index i = 0; i < by; ++i) {
        const double w = pi(i, j);
        if (w == 0) continue;
        for (Eigen::Index c = 0; c < d; ++c) {
          const double diff = gen_pts(j, c) - y(i, c);
          if (diff > 0)
            up(j, c) += w;
          else if (diff < 0)
            up(j, c) -= w;
        }
      }
    }
  });
  return up;
}

}  // namespace trainer_detail

struct LossGrad {
  double value = 0;
  VectorXd grad;
  bool sinkhorn_converged = true;
};

// Builds C_ij = c(y_i, G(z_j)), obtains a plan for the configured loss, and
// backpropagates the fixed-plan gradient through the generator.
inline LossGrad loss_and_grad(const MatrixXd& batch_y, const MatrixXd& batch_z,
                              const MlpGenerator& gen, const TrainConfig& cfg) {
  require(batch_y.rows() >= 1 && batch_z.rows() >= 1, "batches must be non-empty");
  ForwardCache cache;
  const MatrixXd gen_pts = forward(gen, batch_z, &cache);
  require(gen_pts.cols() == batch_y.cols(),
          "generator output dimension must match the data");

  const Eigen::Index by = batch_y.rows(), bz = batch_z.rows();
  const VectorXd a = VectorXd::Constant(by, 1.0 / static_cast<double>(by));
  const VectorXd b = VectorXd::Constant(bz, 1.0 / static_cast<double>(bz));
  const MatrixXd C = pairwise_lp_cost(batch_y, gen_pts, cfg.p);
  if (!C.allFinite()) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "non-finite transport cost (lambda=%g, max |data|=%g, "
                  "max |generated|=%g)",
                  cfg.lambda, batch_y.cwiseAbs().maxCoeff(),
                  gen_pts.cwiseAbs().maxCoeff());
    throw RuntimeFailure(buf);
  }

  SinkhornOptions opts;
  opts.lambda = cfg.lambda;
  opts.tol = cfg.sinkhorn_tol;
  opts.max_iter = cfg.sinkhorn_iters;
  opts.scaling = cfg.sinkhorn_scaling;

  LossGrad out;
  MatrixXd upstream;
  if (cfg.loss == TrainLoss::unregularized) {
    require(by == bz, "the unregularized loss needs equal batch sizes");
    const ExactPlan exact = exact_ot_lp(C, a, b);
    out.value = exact.value;
    upstream = trainer_detail::plan_gradient(exact.plan, batch_y, gen_pts, cfg.p);
  } else {
    const TransportPlan plan = sinkhorn(C, a, b, opts);
    out.sinkhorn_converged = plan.converged;
    out.value = plan.objective;
    upstream = trainer_detail::plan_gradient(plan.pi, batch_y, gen_pts, cfg.p);
    if (cfg.loss == TrainLoss::divergence) {
      const MatrixXd Cgg = pairwise_lp_cost(gen_pts, gen_pts, cfg.p);
      const TransportPlan gg = sinkhorn(Cgg, b, b, opts);
      out.sinkhorn_converged = out.sinkhorn_converged && gg.converged;
      // Symmetric fixed-plan gradient of -S(G, G)/2; both plan sides touch
      // the generator.
      upstream -=
          0.5 * (trainer_detail::plan_gradient(gg.pi, gen_pts, gen_pts, cfg.p) +
                 trainer_detail::plan_gradient(gg.pi.transpose(), gen_pts,
                                               gen_pts, cfg.p));
      const MatrixXd Cyy = pairwise_lp_cost(batch_y, batch_y, cfg.p);
      const TransportPlan yy = sinkhorn(Cyy, a, a, opts);
      out.value -= 0.5 * (gg.objective + yy.objective);
    }
  }
  out.grad = backward(gen, cache, upstream);
  return out;
}

// Runs Algorithm-style training: sample a data batch with replacement,
// sample fresh latent noise, take one optimizer step on the fixed-plan
// gradient. Deterministic given (data, config, seed).
inline TrainHistory train(const Dataset& privatized, MlpGenerator& gen,
                          const LatentSpec& latent, const TrainConfig& cfg,
                          const Dataset* eval_raw = nullptr) {
  validate(privatized);
  validate(cfg);
  require(gen.layer_dims.front() == latent.dim,
          "latent spec does not match the generator");
  require(gen.layer_dims.back() == privatized.d(),
          "generator output dimension must match the data");

  TrainHistory history;
  OptimizerState opt = cfg.optimizer == OptimizerState::Kind::rmsprop
                           ? OptimizerState::rmsprop(cfg.lr, gen.theta.size())
                           : OptimizerState::adam(cfg.lr, gen.theta.size());

  // Fixed evaluation batches; raw data is used here and nowhere else.
  MatrixXd eval_priv, eval_raw_pts;
  if (cfg.eval_every > 0) {
    CounterRng er = substream(cfg.seed, "eval");
    Eigen::Index ne = std::min<Eigen::Index>(cfg.eval_batch, privatized.n());
    if (eval_raw) ne = std::min(ne, eval_raw->n());
    eval_priv.resize(ne, privatized.d());
    for (Eigen::Index i = 0; i < ne; ++i)
      eval_priv.row(i) = privatized.points.row(
          static_cast<Eigen::Index>(er.below(static_cast<std::uint64_t>(privatized.n()))));
    if (eval_raw) {
      eval_raw_pts.resize(ne, eval_raw->d());
      for (Eigen::Index i = 0; i < ne; ++i)
        eval_raw_pts.row(i) = eval_raw->points.row(
            static_cast<Eigen::Index>(er.below(static_cast<std::uint64_t>(eval_raw->n()))));
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const CounterRng data_rng = substream(cfg.seed, "data");
  const Eigen::Index n = privatized.n();
  MatrixXd batch_y(cfg.batch, privatized.d());

  for (long t = 0; t < cfg.steps; ++t) {
    CounterRng step_rng = data_rng.fork(static_cast<std::uint64_t>(t));
    for (Eigen::Index i = 0; i < cfg.batch; ++i)
      batch_y.row(i) = privatized.points.row(
          static_cast<Eigen::Index>(step_rng.below(static_cast<std::uint64_t>(n))));
    const MatrixXd batch_z = sample_latent(
        latent, cfg.batch,
        trainer_detail::child_seed(cfg.seed, "latent", static_cast<std::uint64_t>(t)));

    LossGrad lg;
    try {
      lg = loss_and_grad(batch_y, batch_z, gen, cfg);
    } catch (const RuntimeFailure& e) {
      throw RuntimeFailure("step " + std::to_string(t) + ": " + e.what());
    }
    if (!std::isfinite(lg.value)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "non-finite loss at step %ld (lambda=%g, max cost=%g)", t,
                    cfg.lambda,
                    pairwise_lp_cost(batch_y, forward(gen, batch_z), cfg.p)
                        .maxCoeff());
      throw RuntimeFailure(buf);
    }
    if (!lg.sinkhorn_converged) ++history.sinkhorn_warnings;
    optimizer_step(opt, gen.theta, lg.grad);

    const bool last = t + 1 == cfg.steps;
    if (cfg.eval_every > 0 && ((t + 1) % cfg.eval_every == 0 || last)) {
      HistoryRecord rec;
      rec.step = t + 1;
      rec.loss = lg.value;
      rec.sinkhorn_converged = lg.sinkhorn_converged;
      const MatrixXd z_eval = sample_latent(
          latent, eval_priv.rows(),
          trainer_detail::child_seed(cfg.seed, "eval-latent",
                                     static_cast<std::uint64_t>(t)));
      const MatrixXd gen_eval = forward(gen, z_eval);
      {
        const VectorXd u = VectorXd::Constant(
            gen_eval.rows(), 1.0 / static_cast<double>(gen_eval.rows()));
        SinkhornOptions eopts;
        eopts.lambda = cfg.lambda > 0 ? cfg.lambda : 1.0;
        eopts.tol = 1e-7;
        eopts.max_iter = 5000;
        eopts.compute_plan = false;
        const MatrixXd cp = pairwise_lp_cost(gen_eval, eval_priv, cfg.p);
        rec.wlam_priv = sinkhorn(cp, u, u, eopts).objective;
        if (eval_raw_pts.rows() == gen_eval.rows()) {
          const MatrixXd craw = pairwise_lp_cost(gen_eval, eval_raw_pts, 2);
          rec.w2_raw = exact_ot_lp(craw, u, u).value;
        }
      }
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      history.records.push_back(rec);
    }
  }
  return history;
}

}  // namespace privot

#endif  // PRIVOT_TRAINER_HPP_
