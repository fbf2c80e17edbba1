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

#include "privot/entropic_ot.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "privot/exact_ot.hpp"
#include "privot/rng.hpp"
#include "test_util.hpp"

namespace privot {
namespace {

VectorXd uniform_weights(Eigen::Index n) {
  return VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

EmpiricalDistribution random_points(Eigen::Index n, Eigen::Index d,
                                    std::uint64_t seed) {
  CounterRng rng(seed);
  MatrixXd pts(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) pts(i, j) = rng.uniform_in(-1, 1);
  return EmpiricalDistribution::uniform(std::move(pts));
}

TEST(CostMatrix, LpPowerDefinitions) {
  EmpiricalDistribution X = EmpiricalDistribution::uniform(MatrixXd::Zero(1, 1));
  MatrixXd ypts(1, 1);
  ypts << 3;
  EmpiricalDistribution Y = EmpiricalDistribution::uniform(ypts);
  EXPECT_DOUBLE_EQ(cost_matrix(X, X, lp_cost(2, 1)).entries(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(cost_matrix(X, Y, lp_cost(1, 1)).entries(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(cost_matrix(X, Y, lp_cost(2, 1)).entries(0, 0), 9.0);
}

TEST(CostMatrix, NegLogGaussianKernelAtZeroDistance) {
  EmpiricalDistribution X = EmpiricalDistribution::uniform(MatrixXd::Zero(1, 2));
  const CostMatrix cm = cost_matrix(X, X, neg_log_kernel_cost(gaussian_density_kernel(1.0)));
  // (d/2) log(2 pi) for d = 2.
  EXPECT_NEAR(cm.entries(0, 0), 1.8378770664093454, 1e-12);
}

TEST(CostMatrix, VanishingKernelNamesThePair) {
  EmpiricalDistribution X = random_points(2, 1, 3);
  KernelFn k = [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).norm() < 1e-12 ? 1.0 : 0.0;
  };
  try {
    cost_matrix(X, X, neg_log_kernel_cost(k));
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 1)"), std::string::npos) << e.what();
  }
}

TEST(CostMatrix, DimensionMismatchRejected) {
  EmpiricalDistribution X = random_points(2, 1, 3);
  EmpiricalDistribution Y = random_points(2, 2, 4);
  EXPECT_THROW(cost_matrix(X, Y, lp_cost(2, 1)), InvalidArgument);
}

TEST(Sinkhorn, SingleCellInstance) {
  MatrixXd C(1, 1);
  C << 3.7;
  for (const double lambda : {1e-3, 1.0, 1e6}) {
    SinkhornOptions opts;
    opts.lambda = lambda;
    const TransportPlan plan = sinkhorn(C, uniform_weights(1), uniform_weights(1), opts);
    EXPECT_TRUE(plan.converged);
    EXPECT_NEAR(plan.pi(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(plan.transport_cost, 3.7, 1e-12);
    EXPECT_NEAR(plan.mutual_information, 0.0, 1e-12);
  }
}

TEST(Sinkhorn, MaxEntropyLimitIsProductCoupling) {
  MatrixXd C(2, 2);
  C << 0, 1, 1, 0;
  SinkhornOptions opts;
  opts.lambda = 1e6;
  const TransportPlan plan = sinkhorn(C, uniform_weights(2), uniform_weights(2), opts);
  EXPECT_TRUE(plan.converged);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(plan.pi(i, j), 0.25, 1e-6);
  EXPECT_NEAR(plan.transport_cost, 0.5, 1e-5);
}

TEST(Sinkhorn, SmallLambdaApproachesExactTransport) {
  MatrixXd C(2, 2);
  C << 0, 1, 1, 0;
  SinkhornOptions opts;
  opts.lambda = 1e-3;
  const TransportPlan plan = sinkhorn(C, uniform_weights(2), uniform_weights(2), opts);
  EXPECT_TRUE(plan.converged);
  EXPECT_NEAR(plan.transport_cost, 0.0, 1e-3);
}

TEST(Sinkhorn, FeasibilityDualityAndResidualInvariants) {
  CounterRng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 4 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::Index k = 4 + static_cast<Eigen::Index>(rng.below(8));
    MatrixXd C(m, k);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < k; ++j) C(i, j) = rng.uniform();
    SinkhornOptions opts;
    opts.lambda = 0.05 + rng.uniform();
    opts.tol = 1e-9;
    const VectorXd a = uniform_weights(m), b = uniform_weights(k);
    const TransportPlan plan = sinkhorn(C, a, b, opts);
    ASSERT_TRUE(plan.converged);
    EXPECT_LE(plan.marginal_residual, 1e-9);
    const double primal =
        plan.transport_cost + opts.lambda * plan.mutual_information;
    EXPECT_LE(std::fabs(plan.objective - primal), 1e-6);
    EXPECT_LE(dual_residual(plan, C, a, b, opts.lambda), 1e-6);
    EXPECT_GE(plan.mutual_information, -1e-12);
    // Gauge convention.
    EXPECT_NEAR(a.dot(plan.f), b.dot(plan.g), 1e-9);
  }
}

TEST(Sinkhorn, SymmetryUnderTransposition) {
  CounterRng rng(71);
  MatrixXd C(5, 7);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) C(i, j) = rng.uniform();
  SinkhornOptions opts;
  opts.lambda = 0.3;
  const TransportPlan fwd = sinkhorn(C, uniform_weights(5), uniform_weights(7), opts);
  const TransportPlan rev = sinkhorn(C.transpose(), uniform_weights(7),
                                     uniform_weights(5), opts);
  EXPECT_NEAR(fwd.objective, rev.objective,
              1e-9 * std::max(1.0, std::fabs(fwd.objective)));
}

TEST(Sinkhorn, DeterministicPotentials) {
  CounterRng rng(72);
  MatrixXd C(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) C(i, j) = rng.uniform();
  SinkhornOptions opts;
  opts.lambda = 0.2;
  const TransportPlan p1 = sinkhorn(C, uniform_weights(6), uniform_weights(6), opts);
  const TransportPlan p2 = sinkhorn(C, uniform_weights(6), uniform_weights(6), opts);
  EXPECT_EQ(hash_vector(p1.f), hash_vector(p2.f));
  EXPECT_EQ(hash_vector(p1.g), hash_vector(p2.g));
}

TEST(Sinkhorn, ThreadCountIndependent) {
  CounterRng rng(73);
  MatrixXd C(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) C(i, j) = rng.uniform();
  SinkhornOptions opts;
  opts.lambda = 0.1;
  const int saved = par::max_threads();
  par::set_max_threads(1);
  const TransportPlan p1 = sinkhorn(C, uniform_weights(40), uniform_weights(40), opts);
  par::set_max_threads(4);
  const TransportPlan p2 = sinkhorn(C, uniform_weights(40), uniform_weights(40), opts);
  par::set_max_threads(saved);
  EXPECT_EQ(hash_vector(p1.f), hash_vector(p2.f));
  EXPECT_EQ(hash_matrix(p1.pi), hash_matrix(p2.pi));
}

TEST(Sinkhorn, NonConvergenceIsReported) {
  CounterRng rng(19);
  MatrixXd C(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) C(i, j) = rng.uniform();
  SinkhornOptions opts;
  opts.lambda = 0.01;
  opts.tol = 1e-12;
  opts.max_iter = 2;
  opts.scaling = 0;
  const TransportPlan plan = sinkhorn(C, uniform_weights(6), uniform_weights(6), opts);
  EXPECT_FALSE(plan.converged);
  EXPECT_GT(plan.marginal_residual, 1e-12);
}

TEST(Sinkhorn, RegularizationMonotonicity) {
  CounterRng rng(74);
  MatrixXd C(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) C(i, j) = rng.uniform();
  const double mean_c = C.mean();
  double prev_cost = -1;
  for (const double factor : {0.001, 0.01, 0.1, 1.0}) {
    SinkhornOptions opts;
    opts.lambda = factor * mean_c;
    const TransportPlan plan = sinkhorn(C, uniform_weights(6), uniform_weights(6), opts);
    EXPECT_GE(plan.transport_cost, prev_cost - 1e-9);
    prev_cost = plan.transport_cost;
  }
  // The regularized objective approaches the exact transport value from
  // above as lambda shrinks.
  const double lp = exact_ot_lp(C, uniform_weights(6), uniform_weights(6)).value;
  SinkhornOptions tight;
  tight.lambda = 0.001 * mean_c;
  const TransportPlan plan = sinkhorn(C, uniform_weights(6), uniform_weights(6), tight);
  EXPECT_GE(plan.objective, lp - 1e-9);
  EXPECT_LE(plan.transport_cost - lp, 0.02 * std::max(1.0, lp));
}

TEST(MutualInformation, ClosedFormsAndOracle) {
  const Eigen::Index m = 4;
  const VectorXd u = uniform_weights(m);
  const MatrixXd product = u * u.transpose();
  EXPECT_NEAR(mutual_information(product, u, u), 0.0, 1e-14);
  const MatrixXd diag = MatrixXd::Identity(m, m) / static_cast<double>(m);
  EXPECT_NEAR(mutual_information(diag, u, u), std::log(4.0), 1e-12);

  CounterRng rng(21);
  MatrixXd pi(3, 5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) pi(i, j) = rng.uniform_open();
  pi /= pi.sum();
  const VectorXd a = pi.rowwise().sum();
  const VectorXd b = pi.colwise().sum();
  EXPECT_NEAR(mutual_information(pi, a, b),
              testutil::mutual_information_direct(pi, a, b), 1e-12);
}

TEST(DualResidual, GaugeShiftInvariance) {
  CounterRng rng(75);
  MatrixXd C(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) C(i, j) = rng.uniform();
  SinkhornOptions opts;
  opts.lambda = 0.5;
  const VectorXd a = uniform_weights(4), b = uniform_weights(4);
  TransportPlan plan = sinkhorn(C, a, b, opts);
  const double base = dual_residual(plan, C, a, b, opts.lambda);
  plan.f.array() += 1.0;
  plan.g.array() -= 1.0;
  const double shifted = dual_residual(plan, C, a, b, opts.lambda);
  EXPECT_NEAR(base, shifted, 1e-12);
}

TEST(EntropicWasserstein, ClosedForms) {
  MatrixXd zero = MatrixXd::Zero(1, 1);
  MatrixXd three(1, 1);
  three << 3;
  const EmpiricalDistribution X = EmpiricalDistribution::uniform(zero);
  const EmpiricalDistribution Y = EmpiricalDistribution::uniform(three);
  EXPECT_NEAR(entropic_wasserstein(X, X, 2, 1.0).value, 0.0, 1e-12);
  EXPECT_NEAR(entropic_wasserstein(X, Y, 2, 1.0).value, 9.0, 1e-9);
  EXPECT_NEAR(entropic_wasserstein(X, Y, 1, 0.5).value, 3.0, 1e-9);
}

TEST(EntropicWasserstein, DominatesExactAndConvergesAsLambdaShrinks) {
  const EmpiricalDistribution X = random_points(5, 2, 81);
  const EmpiricalDistribution Y = random_points(5, 2, 82);
  const MatrixXd C = pairwise_lp_cost(X.points, Y.points, 2);
  const double exact = exact_ot_lp(C, X.weights, Y.weights).value;
  double prev = std::numeric_limits<double>::infinity();
  for (const double lambda : {1.0, 0.1, 0.01, 0.001}) {
    const double w = entropic_wasserstein(X, Y, 2, lambda).value;
    EXPECT_GE(w, exact - 1e-9);
    EXPECT_LE(w, prev + 1e-9);
    prev = w;
  }
  EXPECT_NEAR(prev, exact, 0.01 * std::max(1.0, exact));
}

TEST(EntropicWasserstein, ScaledObjectiveIdentity) {
  // The lambda-scaled solve and the unit solve on cost/lambda agree.
  const EmpiricalDistribution X = random_points(6, 2, 83);
  const EmpiricalDistribution Y = random_points(7, 2, 84);
  for (const double lambda : {0.05, 0.7, 4.0}) {
    const double via_op = entropic_wasserstein(X, Y, 2, lambda).value;
    const MatrixXd C = pairwise_lp_cost(X.points, Y.points, 2);
    SinkhornOptions opts;
    opts.lambda = lambda;
    const TransportPlan plan = sinkhorn(C, X.weights, Y.weights, opts);
    EXPECT_NEAR(via_op, plan.objective,
                1e-9 * std::max(1.0, std::fabs(via_op)));
  }
}

TEST(SinkhornDivergence, DebiasingAndNonnegativity) {
  const EmpiricalDistribution X = random_points(6, 2, 91);
  const EmpiricalDistribution Y = random_points(6, 2, 92);
  const CostSpec spec = lp_cost(2, 0.5);
  EXPECT_NEAR(sinkhorn_divergence(X, X, spec), 0.0, 1e-9);

  MatrixXd zero = MatrixXd::Zero(1, 1);
  MatrixXd three(1, 1);
  three << 3;
  EXPECT_NEAR(sinkhorn_divergence(EmpiricalDistribution::uniform(zero),
                                  EmpiricalDistribution::uniform(three),
                                  lp_cost(2, 1.0)),
              9.0, 1e-9);

  CounterRng rng(93);
  for (int trial = 0; trial < 5; ++trial) {
    const EmpiricalDistribution A = random_points(5, 2, 100 + static_cast<std::uint64_t>(trial));
    const EmpiricalDistribution B = random_points(8, 2, 200 + static_cast<std::uint64_t>(trial));
    EXPECT_GE(sinkhorn_divergence(A, B, spec), -1e-9);
  }
}

}  // namespace
}  // namespace privot
