#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "graspforge/baselines.hpp"
#include "graspforge/collector.hpp"
#include "graspforge/eval.hpp"
#include "graspforge/model.hpp"
#include "graspforge/staged.hpp"

namespace gf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full run configuration, one section per module. Defaults are the desk-scale
// setup; every key can be overridden in the config file or via
// GRASPFORGE_<SECTION>_<KEY> environment variables.
struct RunConfig {
    std::uint64_t seed = 7;

    Workspace workspace;             // [workspace] width_mm height_mm px_per_mm
    double background_shade = 0.95;  // [workspace] background
    GripperSpec gripper;             // [gripper]

    int scene_objects = 8;           // [scene] n_objects
    int scene_min_objects = 3;       // [scene] min_objects
    int scene_max_attempts = 2000;   // [scene] max_place_attempts

    std::vector<std::string> shapes_seen;   // [shapes] seen  ("@seen" = builtin group)
    std::vector<std::string> shapes_novel;  // [shapes] novel
    std::vector<std::string> shapes_test;   // [shapes] test

    int collect_trials = 2000;       // [collect] trials
    int collect_streams = 4;         // [collect] streams
    int collect_stall_refresh = 150; // [collect] stall_refresh

    PatchConfig patch;          // [patch] input_side context_scale
    AugmentConfig augment;      // [patch] aug_factor aug_bin_aligned

    std::string train_arch = "desk";  // [train] arch
    TrainConfig train;                // [train] lr epochs batch momentum

    bool pretrain_enabled = true;  // [pretrain] enabled
    int pretrain_samples = 2000;   // [pretrain] samples
    TrainConfig pretrain;          // [pretrain] lr epochs (batch/momentum shared defaults)

    int stage_count = 1;        // [stage] stages
    StageConfig stage;          // [stage] gamma n_patches trials_per_stage novel_fraction epsilon law
    TrainConfig stage_train;    // [stage] lr epochs

    int eval_test_trials = 5000;    // [eval] test_trials
    bool eval_balance = true;       // [eval] balance
    double eval_threshold = 0.5;    // [eval] threshold
    RerankConfig rerank_cfg;        // [eval] topk neighbors radius_mm candidates
    double eval_jitter_mm = 0.0;    // [eval] jitter_mm
    int eval_rate_tries = 500;      // [eval] rate_tries
    int clutter_runs = 5;           // [eval] clutter_runs
    int clutter_cap = 400;          // [eval] clutter_cap

    std::vector<int> ablate_sizes = {500, 1000, 2000, 5000, 10000};  // [ablate] sizes
    int ablate_seeds = 3;                                            // [ablate] seeds
    int ablate_epochs = 10;                                          // [ablate] epochs
    int ablate_aug_factor = 1;                                       // [ablate] aug_factor

    // resolved helpers
    std::vector<ObjectShape> seen_shapes() const;
    std::vector<ObjectShape> novel_shapes() const;
    std::vector<ObjectShape> test_shapes() const;
    std::vector<std::string> training_shape_names() const;  // seen + novel
    CollectConfig make_collect_config() const;
    Architecture make_architecture() const;
};

// Parses a TOML-like file: [section] headers, key = value lines, '#' comments,
// list values as comma-separated strings. Unknown sections/keys are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
// default-config text with all keys, suitable for bootstrapping a run
std::string default_config_text();

// applies GRASPFORGE_<SECTION>_<KEY>=value environment overrides
void apply_env_overrides(RunConfig& cfg);

}  // namespace gf
