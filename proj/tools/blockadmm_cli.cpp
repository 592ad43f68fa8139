// Command-line driver: train / eval / nmf-project / gen-synth / bench.
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric
// failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "blockadmm/config.hpp"
#include "blockadmm/runner.hpp"

namespace {

blockadmm::TrainConfig load_config(const std::string& path,
                                   long long seed_override) {
  blockadmm::TrainConfig cfg = blockadmm::parse_config_file(path);
  if (seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed_override);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-splitting ADMM trainer for feed-forward networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string model_path;
  std::string split = "test";
  std::string out_csv = "scores.csv";
  long long seed_override = -1;

  auto* train = app.add_subcommand("train", "train with the configured method");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--seed", seed_override, "seed override");

  auto* eval = app.add_subcommand("eval", "accuracy of a checkpoint");
  eval->add_option("--model", model_path, "model checkpoint")->required();
  eval->add_option("--config", config_path, "config with the data source")
      ->required();
  eval->add_option("--split", split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  eval->add_option("--seed", seed_override, "seed override");

  auto* project = app.add_subcommand(
      "nmf-project", "score-matrix CSV for a factorization checkpoint");
  project->add_option("--model", model_path, "model checkpoint")->required();
  project->add_option("--config", config_path, "config with the data source")
      ->required();
  project->add_option("--out", out_csv, "output CSV path");
  project->add_option("--seed", seed_override, "seed override");

  auto* gen = app.add_subcommand("gen-synth", "write a synthetic dataset");
  gen->add_option("--config", config_path, "config file")->required();
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--seed", seed_override, "seed override");

  auto* bench = app.add_subcommand(
      "bench", "run the configured method list on one dataset");
  bench->add_option("--config", config_path, "config file")->required();
  bench->add_option("--out", out_dir, "output directory");
  bench->add_option("--seed", seed_override, "seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const blockadmm::TrainConfig cfg = load_config(config_path, seed_override);
    if (train->parsed()) {
      const auto result = blockadmm::run_train(cfg, out_dir);
      std::printf("wrote %s and %s\n", result.metrics_csv.c_str(),
                  result.model_bin.c_str());
      if (!result.metrics.empty()) {
        std::printf("final: loss %.6g, test accuracy %.4f\n",
                    result.metrics.back().train_loss,
                    result.metrics.back().test_accuracy);
      }
    } else if (eval->parsed()) {
      std::printf("accuracy %.6f\n",
                  blockadmm::run_eval(model_path, cfg, split));
    } else if (project->parsed()) {
      blockadmm::run_nmf_project(model_path, cfg, out_csv);
      std::printf("wrote %s\n", out_csv.c_str());
    } else if (gen->parsed()) {
      blockadmm::run_gen_synth(cfg, out_dir);
      std::printf("wrote dataset CSVs to %s\n", out_dir.c_str());
    } else if (bench->parsed()) {
      const auto results = blockadmm::run_bench(cfg, out_dir);
      for (const auto& r : results) {
        std::printf("wrote %s\n", r.metrics_csv.c_str());
      }
    }
  } catch (const blockadmm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const blockadmm::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const blockadmm::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
