#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graspforge/collector.hpp"
#include "graspforge/model.hpp"

namespace gf {

// Anything that can score a patch for all 18 angle bins. Implemented by the
// CNN and by test stubs.
struct PatchScorer {
    virtual ~PatchScorer() = default;
    virtual std::array<double, kAngleBins> scores18(const Image& patch) const = 0;
    virtual double score(const Image& patch, int bin) const { return scores18(patch)[bin]; }
};

struct ModelScorer final : PatchScorer {
    const ModelParams* model;
    explicit ModelScorer(const ModelParams& m) : model(&m) {}
    std::array<double, kAngleBins> scores18(const Image& patch) const override {
        return forward(*model, patch).scores;
    }
};

// Graspability prior over sampled patch centers: entries(i,j) is the scorer's
// bin-j score for patch i.
struct PriorMatrix {
    int n_patches = 0;
    std::vector<double> entries;  // n_patches x 18, row-major
    std::vector<Vec2> centers_mm;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * kAngleBins + j]; }
};

struct StageConfig {
    int gamma = 3;
    int n_patches = 800;
    int trials_per_stage = 1000;
    double novel_object_fraction = 0.5;
    double epsilon = 1e-3;           // exploration floor for importance sampling
    std::string sampling_law = "score";  // score | softmax | rank
};

// Patch centers sampled uniformly over occupied-component ROIs (trial
// collector's sampler); rows are the scorer's 18 scores.
PriorMatrix build_prior(const PatchScorer& scorer, const Image& image, const Mask& occupancy,
                        const Workspace& ws, const GripperSpec& gripper,
                        const PatchConfig& patch_cfg, Rng& rng, int n_patches = 800);

// draws (patch index, bin) with probability by the configured law; default
// proportional to max(entry, epsilon)
std::pair<int, int> importance_sample(const PriorMatrix& prior, Rng& rng,
                                      double epsilon = 1e-3,
                                      const std::string& law = "score");

struct WeightedRecord {
    TrialRecord record;
    int weight = 1;
};

struct AggregatedDataset {
    std::vector<WeightedRecord> records;
    std::string root_dir;

    std::size_t effective_size() const;
    static AggregatedDataset from_dataset(const Dataset& d);  // all weights 1
};

// D_k = { D_{k-1}, Gamma * d_k }: appends d_new with the replication weight
AggregatedDataset aggregate(const AggregatedDataset& d_prev, const Dataset& d_new, int gamma);

// effective multiset -> training samples with rotation augmentation
std::vector<TrainingSample> build_training_set(const AggregatedDataset& ds,
                                               const GripperSpec& gripper, const Workspace& ws,
                                               const PatchConfig& patch_cfg,
                                               const AugmentConfig& aug, std::uint64_t seed);
std::vector<TrainingSample> build_training_set(const Dataset& ds, const GripperSpec& gripper,
                                               const Workspace& ws, const PatchConfig& patch_cfg,
                                               const AugmentConfig& aug, std::uint64_t seed);

// aggregated CSV (trial format + weight column)
void write_aggregated_csv(const std::string& path, const AggregatedDataset& ds);

struct StageReport {
    int stage = 0;
    std::size_t trials = 0;
    std::size_t positives = 0;
    double grasp_rate = 0.0;
    double mean_prior_score_failed = 0.0;  // sampler confidence on failed grasps
};

struct StageResult {
    Dataset d_k;
    AggregatedDataset D_k;
    ModelParams model_k;
    StageReport report;
};

struct StageRunConfig {
    CollectConfig collect;
    StageConfig stage;
    AugmentConfig augment;
    TrainConfig finetune;  // defaults to stagek_schedule values
    std::uint64_t seed = 0;
};

// One curriculum stage: importance-sampled collection (mixing seen and novel
// scene libraries), aggregation with Gamma, fine-tune with the stage schedule.
StageResult run_stage(const ModelParams& model_prev, int k, const AggregatedDataset& D_prev,
                      const StageRunConfig& cfg, const std::vector<ObjectShape>& seen_library,
                      const std::vector<ObjectShape>& novel_library, const Workspace& ws,
                      const GripperSpec& gripper, const std::string& root_dir,
                      int workers = 1);

}  // namespace gf
