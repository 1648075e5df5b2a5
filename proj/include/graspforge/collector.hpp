#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspforge/patch.hpp"
#include "graspforge/raster.hpp"
#include "graspforge/rng.hpp"
#include "graspforge/scene.hpp"

namespace gf {

struct RegionOfInterest {
    int row0 = 0, col0 = 0;  // top-left pixel
    int height = 0, width = 0;
};

struct TrialRecord {
    std::string scene_id;
    GraspConfig grasp;
    bool label = false;
    int stage = 0;
    std::string patch_path;      // canonical resized patch (PGM)
    std::string patch_src_path;  // oversized source crop for augmentation (PGM)
};

struct Dataset {
    std::vector<TrialRecord> records;
    std::uint64_t seed = 0;
    std::string root_dir;  // patch/scene paths are relative to this
};

struct DatasetStats {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t total = 0;
    std::optional<double> grasp_rate;  // unset for an empty dataset
};

// connected components (8-connectivity) of an occupancy mask, as bounding
// boxes in scan order
std::vector<RegionOfInterest> occupancy_components(const Mask& occupancy);

// uniform choice among components; throws std::runtime_error on an empty mask
RegionOfInterest sample_roi(const Mask& occupancy, Rng& rng);
RegionOfInterest sample_roi(const std::vector<RegionOfInterest>& components, Rng& rng);

// uniform pixel inside the ROI, returned as that pixel's mm center;
// theta uniform over [0,180)
GraspConfig sample_grasp(const RegionOfInterest& roi, const Workspace& ws, Rng& rng);

struct CollectConfig {
    int n_trials = 2000;
    int n_objects = 8;
    int min_objects = 3;     // regenerate scene below this
    int stall_refresh = 150; // also regenerate after this many straight failures
    int streams = 4;         // fixed logical partition; independent of worker count
    double background_shade = 0.95;
    SceneGenConfig scene_gen;
    PatchConfig patch;
    bool store_patches = true;  // write patch PGMs (scene files always written)
};

// one executed trial against `scene`; extracts and stores patches under
// `root_dir` using `trial_id` for file names
TrialRecord execute_trial(const Scene& scene, const RenderResult& view,
                          const GraspConfig& grasp, const GripperSpec& gripper,
                          int stage, const std::string& scene_id,
                          const std::string& trial_id, const std::string& root_dir,
                          const CollectConfig& cfg, GraspOutcome* outcome_out = nullptr);

// full random-trial protocol; deterministic in (seed, cfg) for any `workers`
Dataset collect(const CollectConfig& cfg, const std::vector<ObjectShape>& library,
                const Workspace& ws, const GripperSpec& gripper, std::uint64_t seed,
                const std::string& root_dir, int workers = 1, int stage = 0);

DatasetStats summarize(const Dataset& ds);
DatasetStats summarize(const Dataset& ds, int stage_filter);

// CSV persistence: header scene_id,x_mm,y_mm,theta_deg,label,stage,patch_path
void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset read_dataset_csv(const std::string& path, const std::string& root_dir);

// load a record's canonical patch / source crop
Image load_patch(const Dataset& ds, const TrialRecord& rec);
Image load_source_crop(const Dataset& ds, const TrialRecord& rec);

}  // namespace gf
