#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blockadmm/config.hpp"
#include "blockadmm/dataset.hpp"
#include "blockadmm/layer.hpp"
#include "blockadmm/metrics.hpp"

namespace blockadmm {

/// Layers built from cfg.arch with the configured activation, bias and
/// weight initialization.
std::vector<Layer> build_layers(const TrainConfig& cfg, Rng& rng);

/// build_layers + split_network. `split = auto` puts every Linear layer in
/// its own block.
std::vector<Block> build_blocks(const TrainConfig& cfg, Rng& rng);

/// Train/test pair from the configured source (IDX files with an optional
/// stratified subset, or one of the synthetic generators).
std::pair<Dataset, Dataset> resolve_data(const TrainConfig& cfg, Rng& rng,
                                         LowRankTruth* truth = nullptr);

struct RunResult {
  std::vector<MetricsRecord> metrics;
  std::string metrics_csv;
  std::string model_bin;
  std::string trace_csv;  // convergence mode only
};

/// Runs the configured method and writes metrics.csv + model.bin (+
/// trace.csv) into out_dir. File stem defaults to the method name.
RunResult run_train(const TrainConfig& cfg, const std::string& out_dir,
                    const std::string& stem = "");

/// Accuracy of a checkpoint on the configured dataset split.
Scalar run_eval(const std::string& model_path, const TrainConfig& cfg,
                const std::string& split);

/// Projects the dataset through a factorization checkpoint and writes the
/// score matrix CSV (rows = factors, columns = samples).
void run_nmf_project(const std::string& model_path, const TrainConfig& cfg,
                     const std::string& out_csv);

/// Writes the configured synthetic dataset as CSV files under out_dir.
void run_gen_synth(const TrainConfig& cfg, const std::string& out_dir);

/// Runs every method in cfg.bench_methods on the same data and seed; one
/// metrics CSV per method.
std::vector<RunResult> run_bench(const TrainConfig& cfg,
                                 const std::string& out_dir);

void write_scores_csv(const std::string& path, const Matrix& scores);

}  // namespace blockadmm
