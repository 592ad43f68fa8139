#include "blockadmm/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "blockadmm/baseline.hpp"
#include "blockadmm/batch_admm.hpp"
#include "blockadmm/nmf.hpp"
#include "blockadmm/online_admm.hpp"
#include "blockadmm/schedule.hpp"
#include "blockadmm/serialize.hpp"
#include "blockadmm/standard_admm.hpp"

namespace blockadmm {

namespace {

Matrix init_weight(Index out, Index in, const TrainConfig& cfg, Rng& rng) {
  switch (cfg.weight_init) {
    case WeightInit::Normal: {
      const Scalar sigma = cfg.init_sigma > 0
                               ? cfg.init_sigma
                               : 1.0 / std::sqrt(static_cast<Scalar>(in));
      return init_normal(out, in, sigma, rng);
    }
    case WeightInit::UniformSmall:
      return init_uniform(out, in, 0.0, cfg.uniform_init_hi, rng);
    case WeightInit::Identity:
      if (out != in) {
        throw ConfigError("weight_init=identity needs square layers (" +
                          std::to_string(out) + "x" + std::to_string(in) +
                          ")");
      }
      return Matrix::Identity(out, in);
  }
  throw ConfigError("unknown weight init");
}

std::vector<Scalar> broadcast_beta(const TrainConfig& cfg,
                                   std::size_t blocks) {
  if (cfg.beta.size() == 1) {
    return std::vector<Scalar>(blocks, cfg.beta[0]);
  }
  if (cfg.beta.size() != blocks) {
    throw ConfigError("config: beta lists " + std::to_string(cfg.beta.size()) +
                      " values for " + std::to_string(blocks) + " blocks");
  }
  return cfg.beta;
}

BatchAdmmConfig to_batch_config(const TrainConfig& cfg, std::size_t blocks) {
  BatchAdmmConfig out;
  out.beta = broadcast_beta(cfg, blocks);
  out.z_lr = cfg.z_lr;
  out.theta_lr = cfg.theta_lr;
  out.z_optim = cfg.z_optim;
  out.theta_optim = cfg.theta_optim;
  out.primal_steps = cfg.primal_steps;
  out.theta_batch = cfg.batch;
  out.repeat_theta = cfg.repeat_theta;
  out.dual_init_hi = cfg.dual_init;
  return out;
}

std::vector<Index> parse_idx_spec(const std::string& spec,
                                  std::string* images, std::string* labels) {
  const std::string body = spec.substr(4);
  const auto comma = body.find(',');
  if (comma == std::string::npos) {
    throw ConfigError("data: idx source needs '<images>,<labels>': " + spec);
  }
  *images = body.substr(0, comma);
  *labels = body.substr(comma + 1);
  return {};
}

}  // namespace

std::vector<Layer> build_layers(const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < cfg.arch.size(); ++i) {
    const Index in = cfg.arch[i];
    const Index out = cfg.arch[i + 1];
    Matrix w = init_weight(out, in, cfg, rng);
    if (cfg.bias) {
      layers.push_back(linear_layer(std::move(w), Vector::Zero(out)));
    } else {
      layers.push_back(linear_layer(std::move(w)));
    }
    if (cfg.relu_activation && i + 2 < cfg.arch.size()) {
      layers.push_back(relu_layer());
    }
  }
  return layers;
}

std::vector<Block> build_blocks(const TrainConfig& cfg, Rng& rng) {
  std::vector<Layer> layers = build_layers(cfg, rng);
  std::vector<int> boundaries = cfg.split;
  if (cfg.split_auto) {
    boundaries.clear();
    for (std::size_t i = 1; i < layers.size(); ++i) {
      if (layers[i].kind == Layer::Kind::Linear) {
        boundaries.push_back(static_cast<int>(i));
      }
    }
  }
  return split_network(std::move(layers), boundaries);
}

std::pair<Dataset, Dataset> resolve_data(const TrainConfig& cfg, Rng& rng,
                                         LowRankTruth* truth) {
  if (cfg.data.rfind("idx:", 0) == 0) {
    std::string images, labels;
    parse_idx_spec(cfg.data, &images, &labels);
    Dataset pool = load_idx(images, labels);
    if (!cfg.test_data.empty()) {
      if (cfg.test_data.rfind("idx:", 0) != 0) {
        throw ConfigError("test_data must be an idx:<images>,<labels> source");
      }
      std::string timg, tlab;
      parse_idx_spec(cfg.test_data, &timg, &tlab);
      Dataset test = load_idx(timg, tlab);
      pool.split = "train";
      test.split = "test";
      return {std::move(pool), std::move(test)};
    }
    if (cfg.train_subset <= 0 || cfg.test_subset <= 0) {
      throw ConfigError(
          "idx data without test_data needs train_subset and test_subset");
    }
    return stratified_split(pool, cfg.train_subset, cfg.test_subset, rng);
  }
  if (cfg.data == "synth:linear-teacher") {
    return synth_linear_teacher(cfg.synth_dim, cfg.synth_classes,
                                cfg.synth_train, cfg.synth_test,
                                cfg.synth_margin, cfg.synth_noise, rng);
  }
  if (cfg.data == "synth:two-moons") {
    return {synth_two_moons(cfg.synth_train, cfg.synth_noise, rng, "train"),
            synth_two_moons(cfg.synth_test, cfg.synth_noise, rng, "test")};
  }
  if (cfg.data == "synth:low-rank-nonneg") {
    return synth_low_rank_nonneg(cfg.synth_dim, cfg.synth_rank,
                                 cfg.synth_classes, cfg.synth_train,
                                 cfg.synth_test, rng, truth);
  }
  throw ConfigError("unknown data source '" + cfg.data + "'");
}

RunResult run_train(const TrainConfig& cfg, const std::string& out_dir,
                    const std::string& stem_in) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const std::string stem =
      stem_in.empty() ? method_name(cfg.method) : stem_in;

  Rng rng(cfg.seed);
  const auto [train, test] = resolve_data(cfg, rng);

  RunResult result;
  result.metrics_csv = out_dir + "/" + stem + ".csv";
  result.model_bin = out_dir + "/" + stem + ".model";

  switch (cfg.method) {
    case Method::BlockAdmm: {
      std::vector<Block> blocks = build_blocks(cfg, rng);
      const BatchAdmmConfig bc = to_batch_config(cfg, blocks.size());
      result.metrics =
          batch_admm_train(blocks, train.x, train.y, &test.x, &test.y,
                           cfg.loss, bc, cfg.epochs, rng);
      save_model(result.model_bin, blocks);
      break;
    }
    case Method::Online: {
      std::vector<Block> blocks = build_blocks(cfg, rng);
      OnlineAdmmConfig oc;
      oc.beta = broadcast_beta(cfg, blocks.size());
      oc.z_lr = cfg.z_lr;
      oc.theta_lr = cfg.theta_lr;
      oc.z_optim = cfg.z_optim;
      oc.theta_optim = cfg.theta_optim;
      oc.batch = cfg.batch;
      oc.additive_dual_form = cfg.online_additive_dual;
      oc.dual_init_hi = cfg.dual_init;
      result.metrics = online_train(blocks, train.x, train.y, &test.x,
                                    &test.y, cfg.loss, oc, cfg.epochs, rng);
      save_model(result.model_bin, blocks);
      break;
    }
    case Method::StandardAdmm: {
      StandardAdmmConfig sc;
      sc.beta = cfg.beta[0];
      sc.gamma = cfg.gamma;
      sc.lambda = cfg.lambda;
      sc.init_hi = cfg.uniform_init_hi;
      sc.ce_z_steps = cfg.ce_z_steps;
      StandardAdmmState state;
      result.metrics =
          standard_admm_train(cfg.arch, train.x, train.y, &test.x, &test.y,
                              cfg.loss, sc, cfg.epochs, rng, &state);
      // persist the weights as one relu-separated block
      std::vector<Layer> layers;
      for (std::size_t l = 0; l < state.w.size(); ++l) {
        layers.push_back(linear_layer(state.w[l]));
        if (l + 1 < state.w.size()) layers.push_back(relu_layer());
      }
      save_model(result.model_bin, split_network(std::move(layers), {}));
      break;
    }
    case Method::Sgd:
    case Method::Adam: {
      std::vector<Layer> layers = build_layers(cfg, rng);
      std::vector<Block> net = split_network(std::move(layers), {});
      BaselineConfig bc;
      bc.optim = cfg.method == Method::Sgd ? Optim::Sgd : Optim::Adam;
      bc.lr = cfg.theta_lr;
      bc.batch = cfg.batch;
      result.metrics = baseline_train(net[0], train.x, train.y, &test.x,
                                      &test.y, cfg.loss, bc, cfg.epochs, rng);
      save_model(result.model_bin, net);
      break;
    }
    case Method::DeepFacto: {
      std::vector<Block> blocks = build_blocks(cfg, rng);
      DeepFactoConfig dc;
      dc.admm = to_batch_config(cfg, blocks.size());
      dc.gamma = cfg.gamma;
      dc.rank = cfg.nmf_rank;
      dc.position = cfg.nmf_insert - 1;
      dc.phase1_max_iters = cfg.nmf_phase1_iters;
      dc.phase1_tol = cfg.nmf_phase1_tol;
      dc.pg_steps = cfg.nmf_pg_steps;
      dc.pg_lr = cfg.nmf_pg_lr;
      DeepFactoRun run = deepfacto_train(blocks, train.x, train.y, &test.x,
                                         &test.y, cfg.loss, dc, cfg.epochs,
                                         rng);
      result.metrics = std::move(run.metrics);
      save_model(result.model_bin, blocks, &run.nmf);
      break;
    }
    case Method::Convergence: {
      std::vector<Block> blocks = build_blocks(cfg, rng);
      ConvergenceConfig cc;
      cc.admm = to_batch_config(cfg, blocks.size());
      cc.schedule.rho0 = cfg.rho0;
      cc.schedule.c = cfg.rho_c;
      cc.schedule.eta0 = cfg.eta0;
      cc.schedule.eta_q = cfg.eta_q;
      cc.schedule.eps0 = cfg.eps0;
      cc.schedule.eps_q = cfg.eps_q;
      cc.inner_cap0 = cfg.inner_cap0;
      cc.inner_growth = cfg.inner_growth;
      cc.batch_growth = cfg.batch_growth;
      ConvergenceRun run =
          convergence_mode_train(blocks, train.x, train.y, &test.x, &test.y,
                                 cfg.loss, cc, cfg.epochs, rng);
      result.metrics = std::move(run.metrics);
      result.trace_csv = out_dir + "/" + stem + "_trace.csv";
      write_trace_csv(result.trace_csv, run.trace);
      save_model(result.model_bin, blocks);
      break;
    }
  }

  write_metrics_csv(result.metrics_csv, result.metrics);
  return result;
}

Scalar run_eval(const std::string& model_path, const TrainConfig& cfg,
                const std::string& split) {
  Rng rng(cfg.seed);
  const auto [train, test] = resolve_data(cfg, rng);
  const Dataset& ds = split == "train" ? train : test;
  const LoadedModel model = load_model(model_path);
  const Matrix pred =
      model.nmf ? deepfacto_predict(model.blocks, *model.nmf, ds.x)
                : straight_through(model.blocks, ds.x);
  return accuracy(ds.y, pred);
}

void write_scores_csv(const std::string& path, const Matrix& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open scores file for writing: " + path);
  out << "factor";
  for (Index j = 0; j < scores.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Index i = 0; i < scores.rows(); ++i) {
    out << i;
    for (Index j = 0; j < scores.cols(); ++j) {
      out << ',' << format_csv_value(scores(i, j));
    }
    out << '\n';
  }
}

void run_nmf_project(const std::string& model_path, const TrainConfig& cfg,
                     const std::string& out_csv) {
  const LoadedModel model = load_model(model_path);
  if (!model.nmf) {
    throw DataError("model has no factorization section: " + model_path);
  }
  Rng rng(cfg.seed);
  const auto [train, test] = resolve_data(cfg, rng);

  Matrix cur = train.x;
  for (int t = 0; t <= model.nmf->position; ++t) {
    cur = block_forward(model.blocks[t], cur);
  }
  write_scores_csv(out_csv, project_scores(model.nmf->basis, cur));
}

void run_gen_synth(const TrainConfig& cfg, const std::string& out_dir) {
  if (cfg.data.rfind("synth:", 0) != 0) {
    throw ConfigError("gen-synth needs a synth:<kind> data source");
  }
  std::filesystem::create_directories(out_dir);
  Rng rng(cfg.seed);
  const auto [train, test] = resolve_data(cfg, rng);
  write_dataset_csv(out_dir + "/train_x.csv", out_dir + "/train_y.csv",
                    train);
  write_dataset_csv(out_dir + "/test_x.csv", out_dir + "/test_y.csv", test);
}

std::vector<RunResult> run_bench(const TrainConfig& cfg,
                                 const std::string& out_dir) {
  if (cfg.bench_methods.empty()) {
    throw ConfigError("bench needs 'methods = <m1>,<m2>,...' in the config");
  }
  std::vector<RunResult> results;
  for (const std::string& name : cfg.bench_methods) {
    TrainConfig sub = cfg;
    sub.method = parse_method(name);
    results.push_back(run_train(sub, out_dir, name));
  }
  return results;
}

}  // namespace blockadmm
