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
// Small feed-forward generators with explicit reverse-mode gradients.
// Parameters live in one flat vector (per layer: weight matrix then bias)
// so the optimizers are architecture-agnostic. relu'(0) is defined as 0.

#ifndef PRIVOT_GENERATOR_HPP_
#define PRIVOT_GENERATOR_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privot/common.hpp"
#include "privot/rng.hpp"

namespace privot {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

struct LatentSpec {
  enum class Law { uniform_sym, uniform01 };  // (-1,1) or (0,1) per coordinate
  int dim = 2;
  Law law = Law::uniform_sym;
};

inline std::string latent_law_name(LatentSpec::Law law) {
  return law == LatentSpec::Law::uniform_sym ? "uniform_sym" : "uniform01";
}

inline MatrixXd sample_latent(const LatentSpec& spec, Eigen::Index batch,
                              std::uint64_t seed) {
  require(spec.dim >= 1, "latent dim must be >= 1");
  require(batch >= 1, "batch must be >= 1");
  MatrixXd z(batch, spec.dim);
  const CounterRng base = substream(seed, "latent");
  for (Eigen::Index i = 0; i < batch; ++i) {
    CounterRng row = base.fork(static_cast<std::uint64_t>(i));
    for (int j = 0; j < spec.dim; ++j)
      z(i, j) = spec.law == LatentSpec::Law::uniform_sym
                    ? row.uniform_in(-1.0, 1.0)
                    : row.uniform();
  }
  return z;
}

struct MlpGenerator {
  std::vector<int> layer_dims;  // latent, hidden..., output
  enum class OutAct { linear, tanh_act } out_act = OutAct::linear;
  VectorXd theta;

  int layers() const { return static_cast<int>(layer_dims.size()) - 1; }

  Eigen::Index param_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < layers(); ++l)
      n += static_cast<Eigen::Index>(layer_dims[l] + 1) * layer_dims[l + 1];
    return n;
  }

  Eigen::Index weight_offset(int layer) const {
    Eigen::Index off = 0;
    for (int l = 0; l < layer; ++l)
      off += static_cast<Eigen::Index>(layer_dims[l] + 1) * layer_dims[l + 1];
    return off;
  }

  // Weight of `layer` as an (out x in) map into the flat vector.
  Eigen::Map<const MatrixXd> weight(int layer) const {
    return {theta.data() + weight_offset(layer), layer_dims[layer + 1],
            layer_dims[layer]};
  }
  Eigen::Map<const VectorXd> bias(int layer) const {
    return {theta.data() + weight_offset(layer) +
                static_cast<Eigen::Index>(layer_dims[layer]) * layer_dims[layer + 1],
            layer_dims[layer + 1]};
  }
};

inline std::string out_act_name(MlpGenerator::OutAct a) {
  return a == MlpGenerator::OutAct::linear ? "linear" : "tanh";
}

// Uniform(-s, s) initialization with s = sqrt(1/fan_in), drawn in flat
// parameter order from the "init" substream of the seed.
inline MlpGenerator make_generator(std::vector<int> layer_dims,
                                   MlpGenerator::OutAct out_act,
                                   std::uint64_t seed) {
  require(layer_dims.size() >= 2, "generator needs at least one layer");
  for (int d : layer_dims) require(d >= 1, "layer dims must be positive");
  MlpGenerator gen;
  gen.layer_dims = std::move(layer_dims);
  gen.out_act = out_act;
  gen.theta.resize(gen.param_count());
  CounterRng rng = substream(seed, "init");
  Eigen::Index pos = 0;
  for (int l = 0; l < gen.layers(); ++l) {
    const double bound = std::sqrt(1.0 / gen.layer_dims[static_cast<std::size_t>(l)]);
    const Eigen::Index count =
        static_cast<Eigen::Index>(gen.layer_dims[l] + 1) * gen.layer_dims[l + 1];
    for (Eigen::Index t = 0; t < count; ++t)
      gen.theta[pos++] = rng.uniform_in(-bound, bound);
  }
  return gen;
}

// Activations kept for the backward pass. activations[0] is the input batch,
// pre[l] the affine output of layer l, activations[l+1] its activation.
struct ForwardCache {
  std::vector<MatrixXd> pre;
  std::vector<MatrixXd> activations;
};

inline MatrixXd forward(const MlpGenerator& gen, const MatrixXd& z,
                        ForwardCache* cache = nullptr) {
  require(z.cols() == gen.layer_dims.front(), "latent dimension mismatch");
  require(gen.theta.allFinite(), "generator parameters must be finite");
  MatrixXd h = z;
  if (cache) {
    cache->pre.clear();
    cache->activations.assign(1, h);
  }
  for (int l = 0; l < gen.layers(); ++l) {
    MatrixXd pre = (h * gen.weight(l).transpose()).rowwise() +
                   gen.bias(l).transpose();
    if (l + 1 < gen.layers()) {
      h = pre.cwiseMax(0.0);  // relu
    } else {
      switch (gen.out_act) {
        case MlpGenerator::OutAct::linear: h = pre; break;
        case MlpGenerator::OutAct::tanh_act: h = pre.array().tanh(); break;
      }
    }
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->activations.push_back(h);
    }
  }
  return h;
}

// Exact reverse-mode gradient of the forward map contracted with
// d(loss)/d(output).
inline VectorXd backward(const MlpGenerator& gen, const ForwardCache& cache,
                         const MatrixXd& upstream) {
  require(static_cast<int>(cache.pre.size()) == gen.layers(),
          "cache does not match the generator");
  require(upstream.rows() == cache.activations.back().rows() &&
              upstream.cols() == cache.activations.back().cols(),
          "upstream shape mismatch");
  VectorXd grad = VectorXd::Zero(gen.theta.size());
  MatrixXd delta;
  for (int l = gen.layers() - 1; l >= 0; --l) {
    if (l == gen.layers() - 1) {
      switch (gen.out_act) {
        case MlpGenerator::OutAct::linear:
          delta = upstream;
          break;
        case MlpGenerator::OutAct::tanh_act:
          delta = upstream.array() *
                  (1.0 - cache.activations.back().array().square());
          break;
      }
    } else {
      delta = (delta * gen.weight(l + 1)).array() *
              (cache.pre[static_cast<std::size_t>(l)].array() > 0).cast<double>();
    }
    const MatrixXd& input = cache.activations[static_cast<std::size_t>(l)];
    const Eigen::Index out_dim = gen.layer_dims[l + 1];
    const Eigen::Index in_dim = gen.layer_dims[l];
    Eigen::Map<MatrixXd> gw(grad.data() + gen.weight_offset(l), out_dim, in_dim);
    Eigen::Map<VectorXd> gb(grad.data() + gen.weight_offset(l) + out_dim * in_dim,
                            out_dim);
    gw = delta.transpose() * input;
    gb = delta.colwise().sum();
  }
  return grad;
}

// ---------------------------------------------------------------------------
// First-order optimizers on the flat parameter vector.
// ---------------------------------------------------------------------------

struct OptimizerState {
  enum class Kind { rmsprop, adam } kind = Kind::rmsprop;
  double lr = 1e-4;
  VectorXd v;  // second-moment accumulator
  VectorXd m;  // first-moment accumulator (adam)
  long step = 0;

  static OptimizerState rmsprop(double lr, Eigen::Index n) {
    OptimizerState s;
    s.kind = Kind::rmsprop;
    s.lr = lr;
    s.v = VectorXd::Zero(n);
    return s;
  }
  static OptimizerState adam(double lr, Eigen::Index n) {
    OptimizerState s;
    s.kind = Kind::adam;
    s.lr = lr;
    s.v = VectorXd::Zero(n);
    s.m = VectorXd::Zero(n);
    return s;
  }
};

inline void optimizer_step(OptimizerState& state, VectorXd& theta,
                           const VectorXd& grad) {
  require(theta.size() == grad.size() && theta.size() == state.v.size(),
          "optimizer shape mismatch");
  require(state.lr > 0, "learning rate must be positive");
  constexpr double kEps = 1e-8;
  ++state.step;
  if (state.kind == OptimizerState::Kind::rmsprop) {
    state.v = 0.9 * state.v.array() + 0.1 * grad.array().square();
    theta.array() -= state.lr * grad.array() / (state.v.array().sqrt() + kEps);
    return;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999;
  state.m = kBeta1 * state.m.array() + (1 - kBeta1) * grad.array();
  state.v = kBeta2 * state.v.array() + (1 - kBeta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  theta.array() -= state.lr * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + kEps);
}

// ---------------------------------------------------------------------------
// Checkpoints: a single-line JSON header, a newline, then the raw
// little-endian binary64 parameter block. Round trips are bit exact.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const MlpGenerator& gen, const LatentSpec& latent,
                            std::uint64_t seed, const std::string& path) {
  nlohmann::json header;
  header["layer_dims"] = gen.layer_dims;
  header["hidden_activation"] = "relu";
  header["output_activation"] = out_act_name(gen.out_act);
  header["latent"] = {{"dim", latent.dim}, {"law", latent_law_name(latent.law)}};
  header["seed"] = seed;
  header["param_count"] = gen.param_count();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open for writing: " + path);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(gen.theta.data()),
            static_cast<std::streamsize>(gen.theta.size() * sizeof(double)));
  if (!out) throw RuntimeFailure("write failed: " + path);
}

struct Checkpoint {
  MlpGenerator gen;
  LatentSpec latent;
  std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open: " + path);
  std::string header_line;
  std::getline(in, header_line);
  nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded())
    throw InvalidArgument("corrupt checkpoint header: " + path);
  Checkpoint ck;
  ck.gen.layer_dims = header["layer_dims"].get<std::vector<int>>();
  ck.gen.out_act = header["output_activation"] == "tanh"
                       ? MlpGenerator::OutAct::tanh_act
                       : MlpGenerator::OutAct::linear;
  ck.latent.dim = header["latent"]["dim"].get<int>();
  ck.latent.law = header["latent"]["law"] == "uniform01"
                      ? LatentSpec::Law::uniform01
                      : LatentSpec::Law::uniform_sym;
  ck.seed = header["seed"].get<std::uint64_t>();
  const auto count = header["param_count"].get<Eigen::Index>();
  require(count == ck.gen.param_count(), "checkpoint parameter count mismatch");
  ck.gen.theta.resize(count);
  in.read(reinterpret_cast<char*>(ck.gen.theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
    throw InvalidArgument("truncated checkpoint: " + path);
  return ck;
}

}  // namespace privot

#endif  // PRIVOT_GENERATOR_HPP_
