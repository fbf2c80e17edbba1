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

#include "privot/generator.hpp"

#include <cmath>
#include <filesystem>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace privot {
namespace {

TEST(SampleLatent, MomentsSupportAndDeterminism) {
  LatentSpec unit{.dim = 2, .law = LatentSpec::Law::uniform01};
  const MatrixXd z = sample_latent(unit, 100000, 4);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(z.col(j).mean(), 0.5, 0.005);

  LatentSpec sym{.dim = 3, .law = LatentSpec::Law::uniform_sym};
  const MatrixXd s = sample_latent(sym, 5000, 5);
  EXPECT_GE(s.minCoeff(), -1.0);
  EXPECT_LE(s.maxCoeff(), 1.0);

  const MatrixXd again = sample_latent(sym, 5000, 5);
  EXPECT_EQ(hash_matrix(s), hash_matrix(again));
}

TEST(Forward, ZeroParametersGiveZeroOutput) {
  MlpGenerator gen = make_generator({2, 4, 2}, MlpGenerator::OutAct::linear, 1);
  gen.theta.setZero();
  const MatrixXd z = sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 8, 2);
  EXPECT_LE(forward(gen, z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, IdentityLinearLayer) {
  MlpGenerator gen = make_generator({2, 2}, MlpGenerator::OutAct::linear, 1);
  gen.theta.setZero();
  // Weight is (out x in) at the head of the flat vector, column-major.
  gen.theta[0] = 1;  // W(0,0)
  gen.theta[3] = 1;  // W(1,1)
  const MatrixXd z = sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 5, 3);
  EXPECT_LE((forward(gen, z) - z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, MatchesStraightLineReference) {
  const MlpGenerator gen =
      make_generator({3, 16, 8, 2}, MlpGenerator::OutAct::tanh_act, 9);
  const MatrixXd z = sample_latent({.dim = 3, .law = LatentSpec::Law::uniform_sym}, 10, 10);
  const MatrixXd out = forward(gen, z);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    std::vector<double> zi(3);
    for (int j = 0; j < 3; ++j) zi[static_cast<std::size_t>(j)] = z(i, j);
    const auto ref = testutil::mlp_forward_reference(gen, zi);
    for (int j = 0; j < 2; ++j)
      EXPECT_NEAR(out(i, j), ref[static_cast<std::size_t>(j)],
                  1e-12 * std::max(1.0, std::fabs(ref[static_cast<std::size_t>(j)])));
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  const MlpGenerator gen = make_generator({2, 8, 2}, MlpGenerator::OutAct::linear, 11);
  const MatrixXd z = sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 4, 12);
  ForwardCache cache;
  forward(gen, z, &cache);
  const VectorXd grad = backward(gen, cache, MatrixXd::Zero(4, 2));
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, SingleLinearLayerClosedForm) {
  MlpGenerator gen = make_generator({3, 2}, MlpGenerator::OutAct::linear, 13);
  const MatrixXd z = sample_latent({.dim = 3, .law = LatentSpec::Law::uniform_sym}, 6, 14);
  ForwardCache cache;
  forward(gen, z, &cache);
  MatrixXd upstream(6, 2);
  upstream.setRandom();
  const VectorXd grad = backward(gen, cache, upstream);
  // d/dW = upstream^T z, d/db = column sums of upstream.
  const MatrixXd gw_expected = upstream.transpose() * z;
  Eigen::Map<const MatrixXd> gw(grad.data(), 2, 3);
  Eigen::Map<const VectorXd> gb(grad.data() + 6, 2);
  EXPECT_LE((gw - gw_expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((gb - upstream.colwise().sum().transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

// Directional finite differences against the analytic gradient, on both
// architectures of the test matrix.
TEST(Backward, MatchesFiniteDifferences) {
  struct Case {
    std::vector<int> dims;
    MlpGenerator::OutAct act;
  };
  const std::vector<Case> cases = {
      {{2, 256, 256, 2}, MlpGenerator::OutAct::linear},
      {{2, 64, 64, 48}, MlpGenerator::OutAct::tanh_act}};
  for (const auto& [dims, act] : cases) {
    const MlpGenerator gen = make_generator(dims, act, 15);
    const MatrixXd z =
        sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 5, 16);
    MatrixXd upstream(5, dims.back());
    CounterRng urng(17);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (int j = 0; j < dims.back(); ++j) upstream(i, j) = urng.uniform_in(-1, 1);

    ForwardCache cache;
    forward(gen, z, &cache);
    const VectorXd grad = backward(gen, cache, upstream);

    auto loss = [&](const VectorXd& theta) {
      MlpGenerator g2 = gen;
      g2.theta = theta;
      return (forward(g2, z).array() * upstream.array()).sum();
    };
    CounterRng rng(18);
    for (int trial = 0; trial < 8; ++trial) {
      VectorXd dir(gen.theta.size());
      for (Eigen::Index t = 0; t < dir.size(); ++t) dir[t] = rng.uniform_in(-1, 1);
      dir /= dir.norm();
      const double fd = testutil::directional_derivative(loss, gen.theta, dir, 1e-5);
      const double analytic = grad.dot(dir);
      EXPECT_NEAR(fd, analytic, 1e-4 * std::max(1.0, std::fabs(analytic)))
          << "dims[1]=" << dims[1] << " trial " << trial;
    }
  }
}

TEST(Forward, PerturbationBoundedByParameterChange) {
  const MlpGenerator gen = make_generator({2, 256, 256, 2}, MlpGenerator::OutAct::linear, 19);
  const MatrixXd z = sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 16, 20);
  const MatrixXd base = forward(gen, z);
  // Layer-wise product of operator-norm bounds times layer input norms.
  double poly = 0;
  {
    double prefix = std::max(1.0, z.cwiseAbs().maxCoeff() * std::sqrt(2.0));
    for (int l = 0; l < gen.layers(); ++l) {
      double suffix = 1;
      for (int j = l + 1; j < gen.layers(); ++j) suffix *= gen.weight(j).norm();
      poly += std::max(1.0, prefix) * std::max(1.0, suffix);
      prefix *= gen.weight(l).norm();
    }
    poly *= 16;  // batch row count
  }
  CounterRng rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    MlpGenerator g2 = gen;
    VectorXd dtheta(gen.theta.size());
    for (Eigen::Index t = 0; t < dtheta.size(); ++t) dtheta[t] = rng.uniform_in(-1, 1);
    dtheta *= 1e-3 / dtheta.norm();
    g2.theta += dtheta;
    const double change = (forward(g2, z) - base).cwiseAbs().maxCoeff();
    EXPECT_LE(change, 10.0 * dtheta.norm() * poly);
  }
}

TEST(Forward, TanhOutputStaysBounded) {
  MlpGenerator gen = make_generator({2, 32, 2}, MlpGenerator::OutAct::tanh_act, 22);
  gen.theta *= 50;  // large weights saturate the output
  const MatrixXd z = sample_latent({.dim = 2, .law = LatentSpec::Law::uniform_sym}, 64, 23);
  const MatrixXd out = forward(gen, z);
  EXPECT_LE(out.cwiseAbs().maxCoeff(), 1.0);
}

TEST(OptimizerStep, ZeroGradientLeavesParametersUnchanged) {
  for (const auto kind : {OptimizerState::Kind::rmsprop, OptimizerState::Kind::adam}) {
    OptimizerState st = kind == OptimizerState::Kind::rmsprop
                            ? OptimizerState::rmsprop(1e-3, 4)
                            : OptimizerState::adam(1e-3, 4);
    VectorXd theta(4);
    theta << 1, 2, 3, 4;
    const VectorXd before = theta;
    optimizer_step(st, theta, VectorXd::Zero(4));
    EXPECT_LE((theta - before).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(OptimizerStep, AdamFirstStepHandComputed) {
  // Bias-corrected first step: m-hat = g, v-hat = g^2, so the update is
  // -lr * g / (|g| + eps), a signed step of nearly lr.
  OptimizerState st = OptimizerState::adam(0.01, 1);
  VectorXd theta = VectorXd::Zero(1);
  VectorXd grad(1);
  grad << 3.5;
  optimizer_step(st, theta, grad);
  const double expected = -0.01 * 3.5 / (3.5 + 1e-8);
  EXPECT_NEAR(theta[0], expected, 1e-15);
}

TEST(OptimizerStep, DeterministicTrajectories) {
  auto run = [&]() {
    OptimizerState st = OptimizerState::rmsprop(1e-2, 3);
    VectorXd theta(3);
    theta << 0.5, -0.25, 1.0;
    CounterRng rng(24);
    for (int t = 0; t < 50; ++t) {
      VectorXd g(3);
      for (int j = 0; j < 3; ++j) g[j] = rng.uniform_in(-1, 1);
      optimizer_step(st, theta, g);
    }
    return theta;
  };
  const VectorXd a = run(), b = run();
  EXPECT_EQ(hash_vector(a), hash_vector(b));
}

TEST(Checkpoint, BitExactRoundTrip) {
  const MlpGenerator gen = make_generator({4, 32, 3}, MlpGenerator::OutAct::tanh_act, 25);
  const LatentSpec latent{.dim = 4, .law = LatentSpec::Law::uniform01};
  const std::string path =
      (std::filesystem::temp_directory_path() / "privot_ckpt.bin").string();
  save_checkpoint(gen, latent, 25, path);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.gen.layer_dims, gen.layer_dims);
  EXPECT_EQ(back.gen.out_act, gen.out_act);
  EXPECT_EQ(back.latent.dim, 4);
  EXPECT_EQ(back.latent.law, LatentSpec::Law::uniform01);
  EXPECT_EQ(hash_vector(back.gen.theta), hash_vector(gen.theta));

  save_checkpoint(back.gen, back.latent, back.seed, path + "2");
  EXPECT_EQ(hash_file(path), hash_file(path + "2"));
}

TEST(Checkpoint, TruncatedFileRejected) {
  const MlpGenerator gen = make_generator({2, 4, 2}, MlpGenerator::OutAct::linear, 26);
  const std::string path =
      (std::filesystem::temp_directory_path() / "privot_trunc.bin").string();
  save_checkpoint(gen, {.dim = 2, .law = LatentSpec::Law::uniform_sym}, 26, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(load_checkpoint(path), InvalidArgument);
}

}  // namespace
}  // namespace privot
