#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graspforge/collector.hpp"
#include "graspforge/staged.hpp"

namespace gf {

struct TestRecord {
    std::vector<std::uint8_t> pixels;  // canonical patch
    int side = 0;
    int bin = 0;
    int label = 0;
};

struct TestSet {
    std::vector<TestRecord> records;
    std::uint64_t seed = 0;
    bool balanced = false;
    std::vector<std::string> library_names;
};

// Collects held-out interactions and optionally balances classes by
// subsampling the majority. Enforces library disjointness by shape name.
TestSet build_test_set(const std::vector<ObjectShape>& heldout_library,
                       const std::vector<std::string>& training_library_names,
                       int n_interactions, bool balance, std::uint64_t seed,
                       const Workspace& ws, const GripperSpec& gripper,
                       const CollectConfig& collect_cfg, const std::string& scratch_dir,
                       int workers = 1);

struct AccuracyEntry {
    std::string method;
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
};

struct AccuracyReport {
    std::vector<AccuracyEntry> entries;
    std::string to_text() const;   // aligned table
    std::string to_csv() const;
};

// prediction = score(patch, executed bin) >= threshold
AccuracyEntry accuracy(const PatchScorer& scorer, const TestSet& test,
                       const std::string& method_name, double threshold = 0.5);

AccuracyReport compare_all(const std::vector<std::pair<std::string, const PatchScorer*>>& methods,
                           const TestSet& test, double threshold = 0.5);

// ---- grasp selection policies ----

struct RerankConfig {
    int n_candidates = 800;
    int top_k = 10;
    int n_neighbors = 10;
    double neighborhood_radius_mm = 5.0;
    bool same_bin_neighbors = false;  // neighbor score: max over bins (default) or the candidate's bin
};

struct RerankCandidate {
    Vec2 center_mm{};
    int bin = 0;
    double score = 0.0;     // original candidate score
    double reranked = 0.0;  // mean best neighbor score
};

struct RerankResult {
    GraspConfig chosen;
    std::vector<RerankCandidate> candidates;  // the top-K, in score order
};

// top-K candidates by max-over-bins score, re-ranked by the mean of their
// neighborhoods' best angle scores; deterministic tie-breaks by sample index
RerankResult rerank(const PatchScorer& scorer, const Image& image, const Mask& occupancy,
                    const Workspace& ws, const GripperSpec& gripper,
                    const PatchConfig& patch_cfg, const RerankConfig& cfg, Rng& rng);

using GraspPolicy =
    std::function<GraspConfig(const Scene&, const RenderResult&, Rng&)>;

GraspPolicy make_argmax_policy(const PatchScorer& scorer, const Workspace& ws,
                               const GripperSpec& gripper, const PatchConfig& patch_cfg,
                               int n_candidates = 800);
GraspPolicy make_rerank_policy(const PatchScorer& scorer, const Workspace& ws,
                               const GripperSpec& gripper, const PatchConfig& patch_cfg,
                               const RerankConfig& cfg);
// the trial-collector's random protocol as a policy
GraspPolicy make_random_policy(const Workspace& ws);

struct GraspRateConfig {
    int n_tries = 500;
    int n_objects = 8;
    double jitter_mm = 0.0;  // gaussian execution noise on (x,y)
    int streams = 4;
    double background_shade = 0.95;
    SceneGenConfig scene_gen;
};

// fresh scene per try, policy-chosen grasp, oracle adjudication
double grasp_rate_eval(const GraspPolicy& policy, const std::vector<ObjectShape>& library,
                       const Workspace& ws, const GripperSpec& gripper,
                       const GraspRateConfig& cfg, std::uint64_t seed, int workers = 1);

struct ClutterInteraction {
    GraspConfig grasp;
    bool success = false;
    int objects_remaining = 0;
};

struct ClutterRunLog {
    std::vector<ClutterInteraction> interactions;
    bool cleared = false;
    int total_interactions = 0;
};

struct ClutterConfig {
    int n_objects = 10;
    int interaction_cap = 400;
    int n_runs = 5;
    double jitter_mm = 0.0;
    double background_shade = 0.95;
    SceneGenConfig scene_gen;
};

struct ClutterResult {
    std::vector<ClutterRunLog> runs;
    double mean_interactions = 0.0;  // over all runs (cap counts for uncleared)
};

ClutterResult clutter_removal(const GraspPolicy& policy, const std::vector<ObjectShape>& library,
                              const Workspace& ws, const GripperSpec& gripper,
                              const ClutterConfig& cfg, std::uint64_t seed);

// JSON-lines, one interaction per line
void write_clutter_log(const std::string& path, const ClutterResult& result);

}  // namespace gf
