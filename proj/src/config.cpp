#include "blockadmm/config.hpp"

#include <fstream>
#include <sstream>

namespace blockadmm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

Scalar to_scalar(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const Scalar out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v +
                      "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

Optim parse_optim(const std::string& key, const std::string& v) {
  if (v == "adam") return Optim::Adam;
  if (v == "sgd") return Optim::Sgd;
  throw ConfigError("config key '" + key + "': unknown optimizer '" + v +
                    "'");
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::BlockAdmm: return "block-admm";
    case Method::Online: return "online";
    case Method::StandardAdmm: return "standard-admm";
    case Method::Sgd: return "sgd";
    case Method::Adam: return "adam";
    case Method::DeepFacto: return "deepfacto";
    case Method::Convergence: return "convergence";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "block-admm") return Method::BlockAdmm;
  if (name == "online") return Method::Online;
  if (name == "standard-admm") return Method::StandardAdmm;
  if (name == "sgd") return Method::Sgd;
  if (name == "adam") return Method::Adam;
  if (name == "deepfacto") return Method::DeepFacto;
  if (name == "convergence") return Method::Convergence;
  throw ConfigError("unknown method '" + name + "'");
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");
    }

    if (key == "method") {
      cfg.method = parse_method(value);
    } else if (key == "arch") {
      cfg.arch.clear();
      for (const auto& p : split_list(value)) {
        cfg.arch.push_back(static_cast<Index>(to_long(key, p)));
      }
    } else if (key == "activation") {
      if (value == "relu") {
        cfg.relu_activation = true;
      } else if (value == "none") {
        cfg.relu_activation = false;
      } else {
        throw ConfigError("config key 'activation': unknown value '" + value +
                          "'");
      }
    } else if (key == "split") {
      cfg.split.clear();
      cfg.split_auto = false;
      if (value == "auto") {
        cfg.split_auto = true;
      } else if (value != "none") {
        for (const auto& p : split_list(value)) {
          cfg.split.push_back(static_cast<int>(to_long(key, p)));
        }
      }
    } else if (key == "loss") {
      if (value == "mse") {
        cfg.loss = LossKind::Mse;
      } else if (value == "ce") {
        cfg.loss = LossKind::SoftmaxCe;
      } else {
        throw ConfigError("config key 'loss': unknown value '" + value + "'");
      }
    } else if (key == "beta") {
      cfg.beta.clear();
      for (const auto& p : split_list(value)) {
        cfg.beta.push_back(to_scalar(key, p));
      }
    } else if (key == "gamma") {
      cfg.gamma = to_scalar(key, value);
    } else if (key == "z_lr") {
      cfg.z_lr = to_scalar(key, value);
    } else if (key == "theta_lr") {
      cfg.theta_lr = to_scalar(key, value);
    } else if (key == "lambda") {
      cfg.lambda = to_scalar(key, value);
    } else if (key == "epochs") {
      cfg.epochs = static_cast<int>(to_long(key, value));
    } else if (key == "batch") {
      cfg.batch = static_cast<int>(to_long(key, value));
    } else if (key == "primal_steps") {
      cfg.primal_steps = static_cast<int>(to_long(key, value));
    } else if (key == "z_optim") {
      cfg.z_optim = parse_optim(key, value);
    } else if (key == "theta_optim") {
      cfg.theta_optim = parse_optim(key, value);
    } else if (key == "repeat_theta") {
      cfg.repeat_theta = to_bool(key, value);
    } else if (key == "bias") {
      cfg.bias = to_bool(key, value);
    } else if (key == "weight_init") {
      if (value == "normal") {
        cfg.weight_init = WeightInit::Normal;
      } else if (value == "uniform") {
        cfg.weight_init = WeightInit::UniformSmall;
      } else if (value == "identity") {
        cfg.weight_init = WeightInit::Identity;
      } else {
        throw ConfigError("config key 'weight_init': unknown value '" +
                          value + "'");
      }
    } else if (key == "init_sigma") {
      cfg.init_sigma = to_scalar(key, value);
    } else if (key == "uniform_init_hi") {
      cfg.uniform_init_hi = to_scalar(key, value);
    } else if (key == "dual_init") {
      cfg.dual_init = to_scalar(key, value);
    } else if (key == "ce_z_steps") {
      cfg.ce_z_steps = static_cast<int>(to_long(key, value));
    } else if (key == "nmf_rank") {
      cfg.nmf_rank = static_cast<int>(to_long(key, value));
    } else if (key == "nmf_insert") {
      cfg.nmf_insert = static_cast<int>(to_long(key, value));
    } else if (key == "nmf_phase1_iters") {
      cfg.nmf_phase1_iters = static_cast<int>(to_long(key, value));
    } else if (key == "nmf_phase1_tol") {
      cfg.nmf_phase1_tol = to_scalar(key, value);
    } else if (key == "nmf_pg_steps") {
      cfg.nmf_pg_steps = static_cast<int>(to_long(key, value));
    } else if (key == "nmf_pg_lr") {
      cfg.nmf_pg_lr = to_scalar(key, value);
    } else if (key == "online_penalty") {
      if (value == "norm2") {
        cfg.online_additive_dual = false;
      } else if (value == "additive") {
        cfg.online_additive_dual = true;
      } else {
        throw ConfigError("config key 'online_penalty': unknown value '" +
                          value + "'");
      }
    } else if (key == "rho0") {
      cfg.rho0 = to_scalar(key, value);
    } else if (key == "rho_c") {
      cfg.rho_c = to_scalar(key, value);
    } else if (key == "eta0") {
      cfg.eta0 = to_scalar(key, value);
    } else if (key == "eta_q") {
      cfg.eta_q = to_scalar(key, value);
    } else if (key == "eps0") {
      cfg.eps0 = to_scalar(key, value);
    } else if (key == "eps_q") {
      cfg.eps_q = to_scalar(key, value);
    } else if (key == "inner_cap0") {
      cfg.inner_cap0 = static_cast<int>(to_long(key, value));
    } else if (key == "inner_growth") {
      cfg.inner_growth = to_scalar(key, value);
    } else if (key == "batch_growth") {
      cfg.batch_growth = to_scalar(key, value);
    } else if (key == "data") {
      cfg.data = value;
    } else if (key == "test_data") {
      cfg.test_data = value;
    } else if (key == "train_subset") {
      cfg.train_subset = static_cast<Index>(to_long(key, value));
    } else if (key == "test_subset") {
      cfg.test_subset = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_dim") {
      cfg.synth_dim = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_classes") {
      cfg.synth_classes = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_rank") {
      cfg.synth_rank = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_train") {
      cfg.synth_train = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_test") {
      cfg.synth_test = static_cast<Index>(to_long(key, value));
    } else if (key == "synth_noise") {
      cfg.synth_noise = to_scalar(key, value);
    } else if (key == "synth_margin") {
      cfg.synth_margin = to_scalar(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
    } else if (key == "methods") {
      cfg.bench_methods = split_list(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void TrainConfig::validate() const {
  if (arch.size() < 2) {
    throw ConfigError("config: arch needs at least input and output sizes");
  }
  for (Index d : arch) {
    if (d <= 0) throw ConfigError("config: arch sizes must be positive");
  }
  if (beta.empty()) throw ConfigError("config: beta must not be empty");
  for (Scalar b : beta) {
    if (!(b > 0)) throw ConfigError("config: beta must be positive");
  }
  if (!(gamma > 0) || !(z_lr > 0) || !(theta_lr > 0) || !(lambda >= 0)) {
    throw ConfigError("config: rates must be positive (lambda nonnegative)");
  }
  if (epochs < 1 || batch < 1 || primal_steps < 1) {
    throw ConfigError(
        "config: epochs, batch and primal_steps must be at least 1");
  }
  if (data.empty()) throw ConfigError("config: data source is required");
  if (!(rho0 > 0) || !(rho_c > 0 && rho_c < 1)) {
    throw ConfigError("config: need rho0 > 0 and rho_c in (0,1)");
  }
  if (!(eta_q > 0 && eta_q < 1) || !(eps_q > 0 && eps_q < 1)) {
    throw ConfigError("config: eta_q and eps_q must lie in (0,1)");
  }
  if (method == Method::DeepFacto && nmf_rank < 1) {
    throw ConfigError("config: nmf_rank must be positive");
  }
}

}  // namespace blockadmm
