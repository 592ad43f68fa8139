#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockadmm/loss.hpp"
#include "blockadmm/optim.hpp"
#include "blockadmm/types.hpp"

namespace blockadmm {

enum class Method {
  BlockAdmm,
  Online,
  StandardAdmm,
  Sgd,
  Adam,
  DeepFacto,
  Convergence,
};

enum class WeightInit { Normal, UniformSmall, Identity };

/// Flat key = value run configuration. Unknown keys are rejected at parse
/// time. See the README for the full grammar.
struct TrainConfig {
  Method method = Method::BlockAdmm;

  // network
  std::vector<Index> arch;
  bool relu_activation = true;
  std::vector<int> split;  // layer indices starting new blocks
  bool split_auto = false;
  bool bias = false;
  WeightInit weight_init = WeightInit::Normal;
  Scalar init_sigma = 0;  // 0 picks 1/sqrt(fan_in)
  Scalar uniform_init_hi = 1e-4;

  // objective and optimization
  LossKind loss = LossKind::Mse;
  std::vector<Scalar> beta{1.0};  // broadcast to all blocks when single
  Scalar gamma = 10.0;
  Scalar z_lr = 0.5;
  Scalar theta_lr = 5e-3;
  Scalar lambda = 5e-5;
  int epochs = 100;
  int batch = 64;
  int primal_steps = 3;
  Optim z_optim = Optim::Adam;
  Optim theta_optim = Optim::Adam;
  bool repeat_theta = true;
  Scalar dual_init = 1e-4;
  int ce_z_steps = 50;

  // factorization insert
  int nmf_rank = 4;
  int nmf_insert = 1;  // block whose output is factorized, 1-based
  int nmf_phase1_iters = 200;
  Scalar nmf_phase1_tol = 1e-6;
  int nmf_pg_steps = 5;
  Scalar nmf_pg_lr = 0.05;

  // online mode
  bool online_additive_dual = false;  // online_penalty = norm2 | additive

  // convergence mode
  Scalar rho0 = 1.0;
  Scalar rho_c = 0.9;
  Scalar eta0 = 1.0;
  Scalar eta_q = 0.95;
  Scalar eps0 = 1.0;
  Scalar eps_q = 0.95;
  int inner_cap0 = 20;
  Scalar inner_growth = 1.1;
  Scalar batch_growth = 1.1;

  // data
  std::string data;       // idx:<images>,<labels> | synth:<kind>
  std::string test_data;  // optional idx:<images>,<labels>
  Index train_subset = 0;  // 0 = all (idx without test_data requires > 0)
  Index test_subset = 0;
  Index synth_dim = 16;
  Index synth_classes = 4;
  Index synth_rank = 8;
  Index synth_train = 512;
  Index synth_test = 256;
  Scalar synth_noise = 0.0;
  Scalar synth_margin = 0.2;

  std::uint64_t seed = 1;

  // bench subcommand
  std::vector<std::string> bench_methods;

  void validate() const;
};

TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::string& path);

std::string method_name(Method m);
Method parse_method(const std::string& name);

}  // namespace blockadmm
