#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspforge/baselines.hpp"
#include "graspforge/config.hpp"
#include "graspforge/eval.hpp"
#include "graspforge/pretrain.hpp"

namespace gf {

// End-to-end orchestration used by both the CLI subcommands and the
// acceptance suite. Every function is deterministic in (config, seed) for any
// worker count and writes its artifacts under the given directory.

Dataset pipeline_collect(const RunConfig& cfg, const std::string& out_dir, int workers,
                         std::optional<int> trials_override = std::nullopt,
                         std::optional<std::uint64_t> seed_override = std::nullopt);

TestSet pipeline_test_set(const RunConfig& cfg, const std::string& scratch_dir, int workers,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

// aux pretraining (or plain init when disabled/asked for scratch)
ModelParams pipeline_init_model(const RunConfig& cfg, bool pretrained, int workers,
                                PretrainResult* pretrain_out = nullptr);

// stage-0 training on a collected dataset
ModelParams pipeline_train(const RunConfig& cfg, const Dataset& d0, const ModelParams& init,
                           int workers, TrainResult* curve = nullptr,
                           std::optional<TrainConfig> schedule_override = std::nullopt,
                           std::optional<int> aug_factor_override = std::nullopt);

// stage-k fine-tune on an arbitrary aggregated dataset (used by ablations)
ModelParams pipeline_finetune(const RunConfig& cfg, const ModelParams& base,
                              const AggregatedDataset& data, std::uint64_t seed, int workers);

struct BaselineModels {
    HeuristicParams heuristic_default;     // angle rule only
    HeuristicParams heuristic_with_limit;  // + thin-object veto
    HeuristicParams heuristic_optimistic;  // grid-searched on the test set
    double heuristic_optimistic_accuracy = 0.0;
    double patch_px_per_mm = 0.0;
    KnnModel knn;
    int knn_best_k = 0;
    double knn_optimistic_accuracy = 0.0;
    SvmModel svm;
};

BaselineModels pipeline_baselines(const RunConfig& cfg, const Dataset& train, const TestSet& test);

StageRunConfig make_stage_run_config(const RunConfig& cfg, std::uint64_t seed);

struct BenchOptions {
    bool with_scratch = false;   // also train a from-scratch learner
    bool with_stage = true;      // run the staged curriculum
    bool with_baselines = true;
};

struct BenchBundle {
    Dataset d0;
    TestSet test;
    PretrainResult pretrain;
    ModelParams learner;                 // pretrained trunk + stage-0 training
    std::optional<ModelParams> scratch;  // scratch init + stage-0 training
    BaselineModels baselines;
    std::vector<StageResult> stages;     // stage 1..n
    AccuracyReport report;
};

// collect -> (pretrain) -> train -> stage -> baselines -> compare_all; the
// full paper pipeline. Writes dataset/report artifacts under run_dir.
BenchBundle run_bench_pipeline(const RunConfig& cfg, const std::string& run_dir, int workers,
                               const BenchOptions& opts = {});

// Table-I style dataset statistics block
std::string dataset_stats_text(const Dataset& random_trials,
                               const std::vector<StageResult>& stages,
                               const DatasetStats& test_stats);

}  // namespace gf
