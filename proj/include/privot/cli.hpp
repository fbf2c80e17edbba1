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
// Single-entry command line for the whole pipeline. Every run prints exactly
// one JSON object to stdout carrying the resolved configuration, seeds, and
// FNV-64 hashes of the written artifacts; logs go to stderr. Values from a
// --config JSON file are applied before flag parsing, so flags win. Exit
// codes: 0 success, 2 argument or config validation error, 1 runtime error.

#ifndef PRIVOT_CLI_HPP_
#define PRIVOT_CLI_HPP_

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "privot/common.hpp"
#include "privot/dataset.hpp"
#include "privot/deconv.hpp"
#include "privot/entropic_ot.hpp"
#include "privot/exact_ot.hpp"
#include "privot/generator.hpp"
#include "privot/metrics.hpp"
#include "privot/plot.hpp"
#include "privot/privacy.hpp"
#include "privot/rng.hpp"
#include "privot/trainer.hpp"

namespace privot::cli {

constexpr const char* kVersion = "privot 0.1.0";

namespace detail {

using nlohmann::json;

// Binds config-file keys to the same variables the flags write to. Unknown
// keys and type mismatches are reported with a JSON-pointer path.
class ConfigBinder {
 public:
  explicit ConfigBinder(std::string command) : command_(std::move(command)) {}

  template <typename T>
  void bind(const std::string& key, T* target) {
    entries_[key] = [this, key, target](const json& v) {
      try {
        *target = v.get<T>();
      } catch (const json::exception&) {
        throw InvalidArgument("/" + command_ + "/" + key +
                              ": unexpected value type");
      }
    };
  }

  void apply(const json& section) const {
    if (!section.is_object())
      throw InvalidArgument("/" + command_ + ": expected an object");
    for (const auto& [key, value] : section.items()) {
      auto it = entries_.find(key);
      if (it == entries_.end())
        throw InvalidArgument("/" + command_ + "/" + key + ": unknown key");
      it->second(value);
    }
  }

 private:
  std::string command_;
  std::map<std::string, std::function<void(const json&)>> entries_;
};

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config: " + path);
  json cfg = json::parse(in, nullptr, false);
  if (cfg.is_discarded()) throw InvalidArgument("config is not valid JSON: " + path);
  if (!cfg.is_object()) throw InvalidArgument("config root must be an object");
  return cfg;
}

inline std::string resolve_out(const std::string& outdir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  std::filesystem::create_directories(outdir);
  return (std::filesystem::path(outdir) / p).string();
}

inline void add_artifact(json& result, const std::string& name,
                         const std::string& path) {
  result["artifacts"][name] = {{"path", path},
                               {"fnv64", hash_hex(hash_file(path))}};
}

inline void emit(const json& result) { std::cout << result.dump() << "\n"; }

inline ManifoldSpec parse_manifold(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ','))
      params.push_back(std::strtod(tok.c_str(), nullptr));
  }
  ManifoldSpec spec;
  spec.n = 1;  // callers override
  if (kind == "half_circle") {
    spec.kind = ManifoldKind::half_circle;
    if (!params.empty()) spec.radius = params[0];
  } else if (kind == "ellipse") {
    spec.kind = ManifoldKind::ellipse;
    if (params.size() >= 2) {
      spec.semi_axis_a = params[0];
      spec.semi_axis_b = params[1];
    }
  } else if (kind == "rectangle") {
    spec.kind = ManifoldKind::rectangle;
    if (params.size() >= 2) {
      spec.side_w = params[0];
      spec.side_h = params[1];
    }
  } else {
    throw InvalidArgument("unknown manifold '" + kind + "'");
  }
  validate(spec);
  return spec;
}

inline std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    dims.push_back(static_cast<int>(std::strtol(tok.c_str(), nullptr, 10)));
  return dims;
}

inline MechanismSpec make_mechanism(const std::string& kind, double sensitivity,
                                    double eps, double delta) {
  if (kind == "laplace") {
    if (delta != 0)
      throw InvalidArgument("laplace mechanism requires delta = 0");
    return calibrate_laplace(sensitivity, eps);
  }
  if (kind == "gaussian") return calibrate_gaussian(sensitivity, eps, delta);
  throw InvalidArgument("unknown mechanism '" + kind + "'");
}

inline json mechanism_json(const MechanismSpec& m) {
  return {{"kind", mechanism_kind_name(m.kind)},
          {"sensitivity", m.sensitivity},
          {"epsilon", m.epsilon},
          {"delta", m.delta},
          {"noise_scale", m.noise_scale}};
}

}  // namespace detail

// Parses and runs one invocation. Never writes to stdout except the single
// result JSON line of a successful (or attempted) command.
inline int run(int argc, const char* const* argv) {
  using detail::json;

  CLI::App app{"entropic optimal transport training on privatized data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string outdir = std::getenv("PRIVOT_OUTDIR") ? std::getenv("PRIVOT_OUTDIR") : ".";
  int threads = 0;
  std::string config_path;
  app.add_option("--outdir", outdir, "directory for output artifacts");
  app.add_option("--threads", threads, "worker threads (0 = hardware count)");

  json file_cfg = json::object();

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "sample a synthetic manifold");
  struct {
    std::string kind = "half_circle";
    double radius = 1.0, a = 1.0, b = 0.5, w = 2.0, h = 1.0;
    double cx = 0.0, cy = 0.0;
    std::int64_t n = 1000;
    std::uint64_t seed = 0;
    std::string out = "data.csv";
  } sy;
  detail::ConfigBinder synth_cfg("synth");
  synth->add_option("--config", config_path, "JSON config file");
  synth->add_option("--kind", sy.kind, "half_circle | ellipse | rectangle");
  synth->add_option("--radius", sy.radius, "half circle radius");
  synth->add_option("--semi-a", sy.a, "ellipse semi-axis a");
  synth->add_option("--semi-b", sy.b, "ellipse semi-axis b");
  synth->add_option("--side-w", sy.w, "rectangle width");
  synth->add_option("--side-h", sy.h, "rectangle height");
  synth->add_option("--center-x", sy.cx, "center x");
  synth->add_option("--center-y", sy.cy, "center y");
  synth->add_option("--n", sy.n, "sample count");
  synth->add_option("--seed", sy.seed, "seed");
  synth->add_option("--out", sy.out, "output CSV");
  synth_cfg.bind("kind", &sy.kind);
  synth_cfg.bind("radius", &sy.radius);
  synth_cfg.bind("semi-a", &sy.a);
  synth_cfg.bind("semi-b", &sy.b);
  synth_cfg.bind("side-w", &sy.w);
  synth_cfg.bind("side-h", &sy.h);
  synth_cfg.bind("center-x", &sy.cx);
  synth_cfg.bind("center-y", &sy.cy);
  synth_cfg.bind("n", &sy.n);
  synth_cfg.bind("seed", &sy.seed);
  synth_cfg.bind("out", &sy.out);

  // --- privatize -----------------------------------------------------------
  auto* priv = app.add_subcommand("privatize", "apply an LDP mechanism");
  struct {
    std::string mech = "laplace";
    double eps = 1.0, delta = 0.0, sensitivity = 1.0;
    std::string in, out = "priv.csv";
    std::uint64_t seed = 0;
  } pv;
  detail::ConfigBinder priv_cfg("privatize");
  priv->add_option("--config", config_path, "JSON config file");
  priv->add_option("--mech", pv.mech, "laplace | gaussian");
  priv->add_option("--eps", pv.eps, "privacy budget epsilon");
  priv->add_option("--delta", pv.delta, "privacy budget delta (gaussian)");
  priv->add_option("--sensitivity", pv.sensitivity, "l1 or l2 sensitivity");
  priv->add_option("--in", pv.in, "input CSV")->required();
  priv->add_option("--out", pv.out, "output CSV");
  priv->add_option("--seed", pv.seed, "seed");
  priv_cfg.bind("mech", &pv.mech);
  priv_cfg.bind("eps", &pv.eps);
  priv_cfg.bind("delta", &pv.delta);
  priv_cfg.bind("sensitivity", &pv.sensitivity);
  priv_cfg.bind("in", &pv.in);
  priv_cfg.bind("out", &pv.out);
  priv_cfg.bind("seed", &pv.seed);

  // --- sinkhorn ------------------------------------------------------------
  auto* sink = app.add_subcommand("sinkhorn", "entropic transport between CSVs");
  struct {
    std::string x, y;
    int p = 2;
    double lambda = 1.0, tol = 1e-9, scaling = 0.99;
    std::int64_t max_iter = 10000;
  } sk;
  detail::ConfigBinder sink_cfg("sinkhorn");
  sink->add_option("--config", config_path, "JSON config file");
  sink->add_option("--x", sk.x, "first point set CSV")->required();
  sink->add_option("--y", sk.y, "second point set CSV")->required();
  sink->add_option("--p", sk.p, "cost exponent, 1 or 2");
  sink->add_option("--lambda", sk.lambda, "regularization");
  sink->add_option("--tol", sk.tol, "marginal tolerance");
  sink->add_option("--max-iter", sk.max_iter, "iteration cap");
  sink->add_option("--scaling", sk.scaling, "epsilon-scaling factor, 0 disables");
  sink_cfg.bind("x", &sk.x);
  sink_cfg.bind("y", &sk.y);
  sink_cfg.bind("p", &sk.p);
  sink_cfg.bind("lambda", &sk.lambda);
  sink_cfg.bind("tol", &sk.tol);
  sink_cfg.bind("max-iter", &sk.max_iter);
  sink_cfg.bind("scaling", &sk.scaling);

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a generator");
  struct {
    std::string data, eval_raw, out = "model.ckpt", history = "history.csv";
    std::string loss = "entropic", optimizer = "rmsprop";
    std::string hidden = "256,256", out_act = "linear", latent_law = "uniform_sym";
    int p = 1, latent_dim = 2;
    double lambda = 1.0, lr = 1e-4, sinkhorn_tol = 1e-6, scaling = 0.9;
    std::int64_t batch = 512, steps = 1000, sinkhorn_iters = 300;
    std::int64_t eval_every = 100, eval_batch = 512;
    std::uint64_t seed = 0;
  } tr;
  detail::ConfigBinder train_cfg("train");
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--data", tr.data, "privatized training CSV")->required();
  train_cmd->add_option("--loss", tr.loss, "entropic | unreg | divergence");
  train_cmd->add_option("--p", tr.p, "cost exponent, 1 or 2");
  train_cmd->add_option("--lambda", tr.lambda, "regularization");
  train_cmd->add_option("--batch", tr.batch, "batch size");
  train_cmd->add_option("--sinkhorn-iters", tr.sinkhorn_iters, "inner iteration cap");
  train_cmd->add_option("--sinkhorn-tol", tr.sinkhorn_tol, "inner tolerance");
  train_cmd->add_option("--scaling", tr.scaling, "inner epsilon-scaling factor");
  train_cmd->add_option("--lr", tr.lr, "learning rate");
  train_cmd->add_option("--optimizer", tr.optimizer, "rmsprop | adam");
  train_cmd->add_option("--steps", tr.steps, "training steps");
  train_cmd->add_option("--seed", tr.seed, "seed");
  train_cmd->add_option("--eval-raw", tr.eval_raw, "raw CSV for metrics only");
  train_cmd->add_option("--eval-every", tr.eval_every, "evaluation cadence, 0 = off");
  train_cmd->add_option("--eval-batch", tr.eval_batch, "evaluation batch size");
  train_cmd->add_option("--hidden", tr.hidden, "hidden layer sizes, comma separated");
  train_cmd->add_option("--latent-dim", tr.latent_dim, "latent dimension");
  train_cmd->add_option("--latent-law", tr.latent_law, "uniform_sym | uniform01");
  train_cmd->add_option("--out-act", tr.out_act, "linear | tanh");
  train_cmd->add_option("--out", tr.out, "checkpoint path");
  train_cmd->add_option("--history", tr.history, "history CSV path");
  train_cfg.bind("data", &tr.data);
  train_cfg.bind("loss", &tr.loss);
  train_cfg.bind("p", &tr.p);
  train_cfg.bind("lambda", &tr.lambda);
  train_cfg.bind("batch", &tr.batch);
  train_cfg.bind("sinkhorn-iters", &tr.sinkhorn_iters);
  train_cfg.bind("sinkhorn-tol", &tr.sinkhorn_tol);
  train_cfg.bind("scaling", &tr.scaling);
  train_cfg.bind("lr", &tr.lr);
  train_cfg.bind("optimizer", &tr.optimizer);
  train_cfg.bind("steps", &tr.steps);
  train_cfg.bind("seed", &tr.seed);
  train_cfg.bind("eval-raw", &tr.eval_raw);
  train_cfg.bind("eval-every", &tr.eval_every);
  train_cfg.bind("eval-batch", &tr.eval_batch);
  train_cfg.bind("hidden", &tr.hidden);
  train_cfg.bind("latent-dim", &tr.latent_dim);
  train_cfg.bind("latent-law", &tr.latent_law);
  train_cfg.bind("out-act", &tr.out_act);
  train_cfg.bind("out", &tr.out);
  train_cfg.bind("history", &tr.history);

  // --- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained generator");
  struct {
    std::string model, raw, priv_csv, manifold, out = "metrics.json", samples_out;
    std::int64_t samples = 1024;
    int p = 2;
    double lambda = 1.0;
    std::uint64_t seed = 0;
  } ev;
  detail::ConfigBinder eval_cfg("eval");
  eval_cmd->add_option("--config", config_path, "JSON config file");
  eval_cmd->add_option("--model", ev.model, "checkpoint path")->required();
  eval_cmd->add_option("--raw", ev.raw, "raw data CSV");
  eval_cmd->add_option("--priv", ev.priv_csv, "privatized data CSV");
  eval_cmd->add_option("--manifold", ev.manifold,
                       "manifold spec, e.g. half_circle:1.0");
  eval_cmd->add_option("--samples", ev.samples, "generated sample count");
  eval_cmd->add_option("--p", ev.p, "cost exponent for the privatized metric");
  eval_cmd->add_option("--lambda", ev.lambda, "regularization for the metric");
  eval_cmd->add_option("--seed", ev.seed, "seed");
  eval_cmd->add_option("--out", ev.out, "metrics JSON path");
  eval_cmd->add_option("--save-samples", ev.samples_out, "write generated CSV");
  eval_cfg.bind("model", &ev.model);
  eval_cfg.bind("raw", &ev.raw);
  eval_cfg.bind("priv", &ev.priv_csv);
  eval_cfg.bind("manifold", &ev.manifold);
  eval_cfg.bind("samples", &ev.samples);
  eval_cfg.bind("p", &ev.p);
  eval_cfg.bind("lambda", &ev.lambda);
  eval_cfg.bind("seed", &ev.seed);
  eval_cfg.bind("out", &ev.out);
  eval_cfg.bind("save-samples", &ev.samples_out);

  // --- deconv-check --------------------------------------------------------
  auto* deconv_cmd = app.add_subcommand("deconv-check",
                                        "grid deconvolution recovery check");
  struct {
    std::int64_t grid = 16;
    double sigma = 0.2, tol = 1e-8;
    std::string mech = "gaussian";
    std::int64_t max_iter = 500;
    std::uint64_t seed = 0;
  } dc;
  detail::ConfigBinder deconv_cfg("deconv-check");
  deconv_cmd->add_option("--config", config_path, "JSON config file");
  deconv_cmd->add_option("--grid", dc.grid, "grid size on [0,1]");
  deconv_cmd->add_option("--sigma", dc.sigma, "mechanism noise scale");
  deconv_cmd->add_option("--mech", dc.mech, "gaussian | laplace");
  deconv_cmd->add_option("--seed", dc.seed, "seed for the random target");
  deconv_cmd->add_option("--tol", dc.tol, "stationarity tolerance");
  deconv_cmd->add_option("--max-iter", dc.max_iter, "mirror-descent cap");
  deconv_cfg.bind("grid", &dc.grid);
  deconv_cfg.bind("sigma", &dc.sigma);
  deconv_cfg.bind("mech", &dc.mech);
  deconv_cfg.bind("seed", &dc.seed);
  deconv_cfg.bind("tol", &dc.tol);
  deconv_cfg.bind("max-iter", &dc.max_iter);

  // --- rate-study ----------------------------------------------------------
  auto* rate_cmd = app.add_subcommand("rate-study",
                                      "dataset-size convergence study");
  struct {
    std::string manifold = "half_circle:1.0", mech = "gaussian";
    double eps = 5.0, delta = 1e-4, sensitivity = 1.4142135623730951;
    std::string loss = "entropic", optimizer = "rmsprop", hidden = "64,64";
    double lr = 1e-4;
    std::int64_t batch = 256, steps = 400, sinkhorn_iters = 200;
    std::string n_values = "1000,4000,16000,64000";
    std::int64_t seeds = 3, eval_batch = 256;
    std::uint64_t seed = 0;
    std::string out = "rate.csv";
  } rs;
  detail::ConfigBinder rate_cfg("rate-study");
  rate_cmd->add_option("--config", config_path, "JSON config file");
  rate_cmd->add_option("--manifold", rs.manifold, "manifold spec");
  rate_cmd->add_option("--mech", rs.mech, "laplace | gaussian");
  rate_cmd->add_option("--eps", rs.eps, "privacy budget epsilon");
  rate_cmd->add_option("--delta", rs.delta, "privacy budget delta");
  rate_cmd->add_option("--sensitivity", rs.sensitivity, "mechanism sensitivity");
  rate_cmd->add_option("--loss", rs.loss, "entropic | unreg | divergence");
  rate_cmd->add_option("--optimizer", rs.optimizer, "rmsprop | adam");
  rate_cmd->add_option("--hidden", rs.hidden, "hidden layer sizes");
  rate_cmd->add_option("--lr", rs.lr, "learning rate");
  rate_cmd->add_option("--batch", rs.batch, "batch size");
  rate_cmd->add_option("--steps", rs.steps, "steps per cell");
  rate_cmd->add_option("--sinkhorn-iters", rs.sinkhorn_iters, "inner cap");
  rate_cmd->add_option("--n", rs.n_values, "dataset sizes, comma separated");
  rate_cmd->add_option("--seeds", rs.seeds, "seeds per size");
  rate_cmd->add_option("--eval-batch", rs.eval_batch, "held-out batch size");
  rate_cmd->add_option("--seed", rs.seed, "root seed");
  rate_cmd->add_option("--out", rs.out, "per-size CSV output");
  rate_cfg.bind("manifold", &rs.manifold);
  rate_cfg.bind("mech", &rs.mech);
  rate_cfg.bind("eps", &rs.eps);
  rate_cfg.bind("delta", &rs.delta);
  rate_cfg.bind("sensitivity", &rs.sensitivity);
  rate_cfg.bind("loss", &rs.loss);
  rate_cfg.bind("optimizer", &rs.optimizer);
  rate_cfg.bind("hidden", &rs.hidden);
  rate_cfg.bind("lr", &rs.lr);
  rate_cfg.bind("batch", &rs.batch);
  rate_cfg.bind("steps", &rs.steps);
  rate_cfg.bind("sinkhorn-iters", &rs.sinkhorn_iters);
  rate_cfg.bind("n", &rs.n_values);
  rate_cfg.bind("seeds", &rs.seeds);
  rate_cfg.bind("eval-batch", &rs.eval_batch);
  rate_cfg.bind("seed", &rs.seed);
  rate_cfg.bind("out", &rs.out);

  // --- plot ----------------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot", "render series to SVG");
  struct {
    std::vector<std::string> scatter;  // CSV files of 2-d points
    std::vector<std::string> lines;    // file:xcol:ycol with a header row
    std::string out = "plot.svg", title, xlabel, ylabel;
  } pl;
  detail::ConfigBinder plot_cfg("plot");
  plot_cmd->add_option("--config", config_path, "JSON config file");
  plot_cmd->add_option("--scatter", pl.scatter, "2-column CSV to scatter");
  plot_cmd->add_option("--line", pl.lines, "history CSV as file:xcol:ycol");
  plot_cmd->add_option("--out", pl.out, "SVG path");
  plot_cmd->add_option("--title", pl.title, "plot title");
  plot_cmd->add_option("--xlabel", pl.xlabel, "x axis label");
  plot_cmd->add_option("--ylabel", pl.ylabel, "y axis label");
  plot_cfg.bind("scatter", &pl.scatter);
  plot_cfg.bind("line", &pl.lines);
  plot_cfg.bind("out", &pl.out);
  plot_cfg.bind("title", &pl.title);
  plot_cfg.bind("xlabel", &pl.xlabel);
  plot_cfg.bind("ylabel", &pl.ylabel);

  // Global flags remain valid after the subcommand name.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  // Config files are applied before parsing so that flags override them.
  try {
    for (int i = 1; i + 1 < argc || i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
      if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
      file_cfg = detail::load_config_file(config_path);
      for (const auto& [cmd, section] : file_cfg.items()) {
        if (cmd == "synth")
          synth_cfg.apply(section);
        else if (cmd == "privatize")
          priv_cfg.apply(section);
        else if (cmd == "sinkhorn")
          sink_cfg.apply(section);
        else if (cmd == "train")
          train_cfg.apply(section);
        else if (cmd == "eval")
          eval_cfg.apply(section);
        else if (cmd == "deconv-check")
          deconv_cfg.apply(section);
        else if (cmd == "rate-study")
          rate_cfg.apply(section);
        else if (cmd == "plot")
          plot_cfg.apply(section);
        else
          throw InvalidArgument("/" + cmd + ": unknown command section");
      }
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help() << std::flush;
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (threads > 0) par::set_max_threads(threads);

  try {
    json result;
    if (*synth) {
      ManifoldSpec spec = detail::parse_manifold(
          sy.kind + ":" +
          (sy.kind == "half_circle"
               ? std::to_string(sy.radius)
               : sy.kind == "ellipse"
                     ? std::to_string(sy.a) + "," + std::to_string(sy.b)
                     : std::to_string(sy.w) + "," + std::to_string(sy.h)));
      spec.center = {sy.cx, sy.cy};
      spec.n = sy.n;
      spec.seed = sy.seed;
      const Dataset ds = synth_manifold(spec);
      const std::string out_path = detail::resolve_out(outdir, sy.out);
      save_csv(ds, out_path);
      result["command"] = "synth";
      result["config"] = {{"kind", sy.kind},   {"radius", sy.radius},
                          {"semi-a", sy.a},    {"semi-b", sy.b},
                          {"side-w", sy.w},    {"side-h", sy.h},
                          {"center-x", sy.cx}, {"center-y", sy.cy},
                          {"n", sy.n},         {"seed", sy.seed},
                          {"out", sy.out}};
      result["n"] = ds.n();
      detail::add_artifact(result, "out", out_path);
    } else if (*priv) {
      const Dataset in = load_csv(pv.in);
      const MechanismSpec mech =
          detail::make_mechanism(pv.mech, pv.sensitivity, pv.eps, pv.delta);
      const Dataset out = privatize(in, mech, pv.seed);
      const std::string out_path = detail::resolve_out(outdir, pv.out);
      save_csv(out, out_path);
      result["command"] = "privatize";
      result["config"] = {{"mech", pv.mech},
                          {"eps", pv.eps},
                          {"delta", pv.delta},
                          {"sensitivity", pv.sensitivity},
                          {"in", pv.in},
                          {"out", pv.out},
                          {"seed", pv.seed}};
      result["mechanism"] = detail::mechanism_json(mech);
      detail::add_artifact(result, "out", out_path);
    } else if (*sink) {
      const Dataset X = load_csv(sk.x);
      const Dataset Y = load_csv(sk.y);
      SinkhornOptions opts;
      opts.tol = sk.tol;
      opts.max_iter = static_cast<int>(sk.max_iter);
      opts.scaling = sk.scaling;
      const EntropicValue r = entropic_wasserstein(
          EmpiricalDistribution::uniform(X.points),
          EmpiricalDistribution::uniform(Y.points), sk.p, sk.lambda, opts);
      result["command"] = "sinkhorn";
      result["config"] = {{"x", sk.x},     {"y", sk.y},
                          {"p", sk.p},     {"lambda", sk.lambda},
                          {"tol", sk.tol}, {"max-iter", sk.max_iter},
                          {"scaling", sk.scaling}};
      result["value"] = r.value;
      result["transport_cost"] = sk.lambda * r.plan.transport_cost;
      result["mutual_information"] = r.plan.mutual_information;
      result["iterations"] = r.plan.iterations;
      result["marginal_residual"] = r.plan.marginal_residual;
      result["converged"] = r.plan.converged;
    } else if (*train_cmd) {
      const Dataset data = load_csv(tr.data);
      Dataset raw;
      const bool have_raw = !tr.eval_raw.empty();
      if (have_raw) raw = load_csv(tr.eval_raw);

      TrainConfig cfg;
      if (tr.loss == "entropic")
        cfg.loss = TrainLoss::entropic;
      else if (tr.loss == "unreg")
        cfg.loss = TrainLoss::unregularized;
      else if (tr.loss == "divergence")
        cfg.loss = TrainLoss::divergence;
      else
        throw InvalidArgument("unknown loss '" + tr.loss + "'");
      cfg.p = tr.p;
      cfg.lambda = tr.lambda;
      cfg.batch = tr.batch;
      cfg.sinkhorn_iters = static_cast<int>(tr.sinkhorn_iters);
      cfg.sinkhorn_tol = tr.sinkhorn_tol;
      cfg.sinkhorn_scaling = tr.scaling;
      cfg.lr = tr.lr;
      cfg.optimizer = tr.optimizer == "adam" ? OptimizerState::Kind::adam
                                             : OptimizerState::Kind::rmsprop;
      cfg.steps = tr.steps;
      cfg.seed = tr.seed;
      cfg.eval_every = tr.eval_every;
      cfg.eval_batch = tr.eval_batch;

      LatentSpec latent;
      latent.dim = tr.latent_dim;
      latent.law = tr.latent_law == "uniform01" ? LatentSpec::Law::uniform01
                                                : LatentSpec::Law::uniform_sym;
      std::vector<int> dims;
      dims.push_back(latent.dim);
      for (int hdim : detail::parse_dims(tr.hidden)) dims.push_back(hdim);
      dims.push_back(static_cast<int>(data.d()));
      MlpGenerator gen = make_generator(
          dims,
          tr.out_act == "tanh" ? MlpGenerator::OutAct::tanh_act
                               : MlpGenerator::OutAct::linear,
          tr.seed);

      const TrainHistory history =
          train(data, gen, latent, cfg, have_raw ? &raw : nullptr);
      const std::string ckpt_path = detail::resolve_out(outdir, tr.out);
      const std::string hist_path = detail::resolve_out(outdir, tr.history);
      save_checkpoint(gen, latent, tr.seed, ckpt_path);
      write_history_csv(history, hist_path);
      result["command"] = "train";
      result["config"] = {{"data", tr.data},
                          {"loss", tr.loss},
                          {"p", tr.p},
                          {"lambda", tr.lambda},
                          {"batch", tr.batch},
                          {"sinkhorn-iters", tr.sinkhorn_iters},
                          {"sinkhorn-tol", tr.sinkhorn_tol},
                          {"scaling", tr.scaling},
                          {"lr", tr.lr},
                          {"optimizer", tr.optimizer},
                          {"steps", tr.steps},
                          {"seed", tr.seed},
                          {"eval-raw", tr.eval_raw},
                          {"eval-every", tr.eval_every},
                          {"eval-batch", tr.eval_batch},
                          {"hidden", tr.hidden},
                          {"latent-dim", tr.latent_dim},
                          {"latent-law", tr.latent_law},
                          {"out-act", tr.out_act},
                          {"out", tr.out},
                          {"history", tr.history}};
      result["sinkhorn_warnings"] = history.sinkhorn_warnings;
      if (!history.records.empty()) {
        const auto& last = history.records.back();
        result["final"] = {{"step", last.step},
                           {"loss", last.loss},
                           {"w2_raw", std::isfinite(last.w2_raw)
                                          ? json(last.w2_raw)
                                          : json(nullptr)},
                           {"wlam_priv", last.wlam_priv}};
      }
      detail::add_artifact(result, "model", ckpt_path);
      detail::add_artifact(result, "history", hist_path);
    } else if (*eval_cmd) {
      const Checkpoint ck = load_checkpoint(ev.model);
      const MatrixXd z = sample_latent(ck.latent, ev.samples, ev.seed);
      const MatrixXd gen_pts = forward(ck.gen, z);
      json metrics;
      if (!ev.manifold.empty()) {
        const ManifoldSpec spec = detail::parse_manifold(ev.manifold);
        metrics["manifold_error"] = manifold_error(gen_pts, spec);
      }
      if (!ev.raw.empty()) {
        const Dataset raw = load_csv(ev.raw);
        CounterRng sub = substream(ev.seed, "eval-raw");
        const Eigen::Index m = std::min<Eigen::Index>(ev.samples, raw.n());
        MatrixXd pick(m, raw.d());
        for (Eigen::Index i = 0; i < m; ++i)
          pick.row(i) = raw.points.row(static_cast<Eigen::Index>(
              sub.below(static_cast<std::uint64_t>(raw.n()))));
        metrics["w2_raw"] = empirical_w2(gen_pts.topRows(m), pick);
      }
      if (!ev.priv_csv.empty()) {
        const Dataset priv_data = load_csv(ev.priv_csv);
        CounterRng sub = substream(ev.seed, "eval-priv");
        const Eigen::Index m = std::min<Eigen::Index>(ev.samples, priv_data.n());
        MatrixXd pick(m, priv_data.d());
        for (Eigen::Index i = 0; i < m; ++i)
          pick.row(i) = priv_data.points.row(static_cast<Eigen::Index>(
              sub.below(static_cast<std::uint64_t>(priv_data.n()))));
        SinkhornOptions opts;
        opts.tol = 1e-7;
        opts.max_iter = 5000;
        metrics["wlam_priv"] =
            entropic_wasserstein(EmpiricalDistribution::uniform(gen_pts.topRows(m)),
                                 EmpiricalDistribution::uniform(pick), ev.p,
                                 ev.lambda, opts)
                .value;
      }
      const std::string out_path = detail::resolve_out(outdir, ev.out);
      {
        std::ofstream mo(out_path);
        if (!mo) throw RuntimeFailure("cannot open for writing: " + out_path);
        mo << metrics.dump(2) << "\n";
      }
      result["command"] = "eval";
      result["config"] = {{"model", ev.model},     {"raw", ev.raw},
                          {"priv", ev.priv_csv},   {"manifold", ev.manifold},
                          {"samples", ev.samples}, {"p", ev.p},
                          {"lambda", ev.lambda},   {"seed", ev.seed},
                          {"out", ev.out},         {"save-samples", ev.samples_out}};
      result["metrics"] = metrics;
      detail::add_artifact(result, "metrics", out_path);
      if (!ev.samples_out.empty()) {
        Dataset gen_ds;
        gen_ds.points = gen_pts;
        gen_ds.name = "generated";
        gen_ds.seed = ev.seed;
        const std::string samples_path = detail::resolve_out(outdir, ev.samples_out);
        save_csv(gen_ds, samples_path);
        detail::add_artifact(result, "samples", samples_path);
      }
    } else if (*deconv_cmd) {
      require(dc.grid >= 2, "grid must have at least 2 points");
      MatrixXd support(dc.grid, 1);
      for (Eigen::Index i = 0; i < dc.grid; ++i)
        support(i, 0) = static_cast<double>(i) / static_cast<double>(dc.grid - 1);
      CounterRng rng = substream(dc.seed, "px");
      VectorXd p_x(dc.grid);
      for (Eigen::Index i = 0; i < dc.grid; ++i)
        p_x[i] = -std::log(rng.uniform_open());
      p_x /= p_x.sum();
      const KernelFn density = dc.mech == "laplace"
                                   ? laplace_density_kernel(dc.sigma)
                                   : gaussian_density_kernel(dc.sigma);
      const GridModel model = make_additive_grid(support, support, density, p_x);
      ProjectionOptions opts;
      opts.tol = dc.tol;
      opts.max_iter = static_cast<int>(dc.max_iter);
      const ProjectionResult res = entropic_projection(model, opts);
      result["command"] = "deconv-check";
      result["config"] = {{"grid", dc.grid},   {"sigma", dc.sigma},
                          {"mech", dc.mech},   {"seed", dc.seed},
                          {"tol", dc.tol},     {"max-iter", dc.max_iter}};
      result["tv_error"] = tv_distance(res.q, model.p_x);
      result["objective"] = res.objective;
      result["iterations"] = res.iterations;
      result["converged"] = res.converged;
    } else if (*rate_cmd) {
      RateStudyConfig cfg;
      cfg.manifold = detail::parse_manifold(rs.manifold);
      cfg.mech = detail::make_mechanism(rs.mech, rs.sensitivity, rs.eps,
                                        rs.mech == "laplace" ? 0.0 : rs.delta);
      TrainConfig base;
      base.loss = rs.loss == "unreg"
                      ? TrainLoss::unregularized
                      : rs.loss == "divergence" ? TrainLoss::divergence
                                                : TrainLoss::entropic;
      base.batch = rs.batch;
      base.steps = rs.steps;
      base.lr = rs.lr;
      base.sinkhorn_iters = static_cast<int>(rs.sinkhorn_iters);
      base.optimizer = rs.optimizer == "adam" ? OptimizerState::Kind::adam
                                              : OptimizerState::Kind::rmsprop;
      cfg.train = matched_config(cfg.mech, base);
      cfg.latent.dim = 2;
      cfg.layer_dims.push_back(cfg.latent.dim);
      for (int hdim : detail::parse_dims(rs.hidden)) cfg.layer_dims.push_back(hdim);
      cfg.layer_dims.push_back(2);
      for (int nv : detail::parse_dims(rs.n_values)) cfg.n_values.push_back(nv);
      cfg.seeds = static_cast<int>(rs.seeds);
      cfg.eval_batch = rs.eval_batch;
      cfg.seed = rs.seed;
      const RateStudyResult res = rate_study(cfg);
      const std::string out_path = detail::resolve_out(outdir, rs.out);
      {
        std::ofstream out(out_path);
        if (!out) throw RuntimeFailure("cannot open for writing: " + out_path);
        out << "n,distance\n";
        for (std::size_t i = 0; i < res.n_values.size(); ++i)
          out << res.n_values[i] << "," << res.distances[i] << "\n";
      }
      result["command"] = "rate-study";
      result["config"] = {{"manifold", rs.manifold},
                          {"mech", rs.mech},
                          {"eps", rs.eps},
                          {"delta", rs.delta},
                          {"sensitivity", rs.sensitivity},
                          {"loss", rs.loss},
                          {"optimizer", rs.optimizer},
                          {"hidden", rs.hidden},
                          {"lr", rs.lr},
                          {"batch", rs.batch},
                          {"steps", rs.steps},
                          {"sinkhorn-iters", rs.sinkhorn_iters},
                          {"n", rs.n_values},
                          {"seeds", rs.seeds},
                          {"eval-batch", rs.eval_batch},
                          {"seed", rs.seed},
                          {"out", rs.out}};
      result["slope"] = res.fit.slope;
      result["intercept"] = res.fit.intercept;
      result["residual"] = res.fit.residual;
      detail::add_artifact(result, "out", out_path);
    } else if (*plot_cmd) {
      std::vector<Series> series;
      for (const std::string& file : pl.scatter) {
        const Dataset ds = load_csv(file);
        require(ds.d() >= 2, "scatter input needs at least 2 columns");
        Series s;
        s.label = std::filesystem::path(file).stem().string();
        s.style = Series::Style::scatter;
        for (Eigen::Index i = 0; i < ds.n(); ++i)
          s.points.emplace_back(ds.points(i, 0), ds.points(i, 1));
        series.push_back(std::move(s));
      }
      for (const std::string& spec_text : pl.lines) {
        std::stringstream ss(spec_text);
        std::string file, xcol, ycol;
        std::getline(ss, file, ':');
        std::getline(ss, xcol, ':');
        std::getline(ss, ycol, ':');
        require(!file.empty() && !xcol.empty() && !ycol.empty(),
                "--line expects file:xcol:ycol");
        std::ifstream in(file);
        if (!in) throw InvalidArgument("cannot open: " + file);
        std::string header;
        std::getline(in, header);
        std::vector<std::string> cols;
        std::stringstream hs(header);
        std::string tok;
        while (std::getline(hs, tok, ',')) cols.push_back(tok);
        int xi = -1, yi = -1;
        for (std::size_t i = 0; i < cols.size(); ++i) {
          if (cols[i] == xcol) xi = static_cast<int>(i);
          if (cols[i] == ycol) yi = static_cast<int>(i);
        }
        require(xi >= 0 && yi >= 0, "columns not found in " + file);
        Series s;
        s.label = ycol;
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          std::stringstream ls(line);
          std::vector<double> vals;
          while (std::getline(ls, tok, ','))
            vals.push_back(std::strtod(tok.c_str(), nullptr));
          s.points.emplace_back(vals[static_cast<std::size_t>(xi)],
                                vals[static_cast<std::size_t>(yi)]);
        }
        series.push_back(std::move(s));
      }
      const std::string out_path = detail::resolve_out(outdir, pl.out);
      PlotOptions popts;
      popts.title = pl.title;
      popts.xlabel = pl.xlabel;
      popts.ylabel = pl.ylabel;
      plot_svg(series, out_path, popts);
      result["command"] = "plot";
      result["config"] = {{"scatter", pl.scatter}, {"line", pl.lines},
                          {"out", pl.out},         {"title", pl.title},
                          {"xlabel", pl.xlabel},   {"ylabel", pl.ylabel}};
      detail::add_artifact(result, "out", out_path);
    }
    result["version"] = kVersion;
    result["outdir"] = outdir;
    detail::emit(result);
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace privot::cli

#endif  // PRIVOT_CLI_HPP_
