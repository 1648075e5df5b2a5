#include "graspforge/staged.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace gf {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

PriorMatrix build_prior(const PatchScorer& scorer, const Image& image, const Mask& occupancy,
                        const Workspace& ws, const GripperSpec& gripper,
                        const PatchConfig& patch_cfg, Rng& rng, int n_patches) {
    const auto components = occupancy_components(occupancy);
    if (components.empty())
        throw std::runtime_error("build_prior: empty workspace (no occupied pixels)");
    PriorMatrix prior;
    prior.n_patches = n_patches;
    prior.entries.resize(static_cast<std::size_t>(n_patches) * kAngleBins);
    prior.centers_mm.resize(n_patches);
    for (int i = 0; i < n_patches; ++i) {
        const RegionOfInterest roi = sample_roi(components, rng);
        const GraspConfig g = sample_grasp(roi, ws, rng);  // theta draw unused here
        prior.centers_mm[i] = {g.x_mm, g.y_mm};
        const Patch p = extract_patch(image, g, gripper, ws, patch_cfg);
        const auto scores = scorer.scores18(p.pixels);
        for (int j = 0; j < kAngleBins; ++j)
            prior.entries[static_cast<std::size_t>(i) * kAngleBins + j] = scores[j];
    }
    return prior;
}

std::pair<int, int> importance_sample(const PriorMatrix& prior, Rng& rng, double epsilon,
                                      const std::string& law) {
    const std::size_t n = prior.entries.size();
    if (n == 0) throw std::invalid_argument("importance_sample: empty prior");
    std::vector<double> weights(n);
    if (law == "score") {
        for (std::size_t i = 0; i < n; ++i) weights[i] = std::max(prior.entries[i], epsilon);
    } else if (law == "softmax") {
        double m = prior.entries[0];
        for (double v : prior.entries) m = std::max(m, v);
        for (std::size_t i = 0; i < n; ++i) weights[i] = std::exp(prior.entries[i] - m);
    } else if (law == "rank") {
        // weight 1/(rank+1), best rank 0
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (prior.entries[a] != prior.entries[b]) return prior.entries[a] > prior.entries[b];
            return a < b;
        });
        for (std::size_t r = 0; r < n; ++r) weights[idx[r]] = 1.0 / static_cast<double>(r + 1);
    } else {
        throw std::invalid_argument("importance_sample: unknown law " + law);
    }
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::runtime_error("importance_sample: bad weight");
        total += w;
    }
    if (total <= 0.0) throw std::runtime_error("importance_sample: all-zero weights");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i];
        if (u < acc) {
            chosen = i;
            break;
        }
    }
    return {static_cast<int>(chosen / kAngleBins), static_cast<int>(chosen % kAngleBins)};
}

std::size_t AggregatedDataset::effective_size() const {
    std::size_t n = 0;
    for (const WeightedRecord& r : records) n += static_cast<std::size_t>(r.weight);
    return n;
}

AggregatedDataset AggregatedDataset::from_dataset(const Dataset& d) {
    AggregatedDataset out;
    out.root_dir = d.root_dir;
    out.records.reserve(d.records.size());
    for (const TrialRecord& r : d.records) out.records.push_back({r, 1});
    return out;
}

AggregatedDataset aggregate(const AggregatedDataset& d_prev, const Dataset& d_new, int gamma) {
    if (gamma < 1) throw std::invalid_argument("aggregate: gamma < 1");
    AggregatedDataset out = d_prev;
    if (out.root_dir.empty()) out.root_dir = d_new.root_dir;
    else if (!d_new.root_dir.empty() && d_new.root_dir != out.root_dir)
        throw std::invalid_argument("aggregate: datasets live in different roots");
    for (const TrialRecord& r : d_new.records) out.records.push_back({r, gamma});
    return out;
}

namespace {

std::vector<TrainingSample> build_samples(const std::vector<WeightedRecord>& records,
                                          const std::string& root_dir,
                                          const GripperSpec& gripper, const Workspace& ws,
                                          const PatchConfig& patch_cfg,
                                          const AugmentConfig& aug, std::uint64_t seed) {
    const int crop_side = context_crop_side(gripper, ws, patch_cfg.context_scale);
    std::vector<TrainingSample> out;
    out.reserve(records.size() * static_cast<std::size_t>(aug.factor));
    Rng rng = Rng::derive(seed, rng_tag::kAugment);
    for (const WeightedRecord& wr : records) {
        const Image src = read_pgm(root_dir + "/" + wr.record.patch_src_path);
        for (int rep = 0; rep < wr.weight; ++rep) {
            auto views = augment_sample(src, wr.record.grasp.theta_deg,
                                        wr.record.label ? 1 : 0, crop_side,
                                        patch_cfg.input_side, patch_cfg.fill, aug, rng);
            for (TrainingSample& s : views) out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace

std::vector<TrainingSample> build_training_set(const AggregatedDataset& ds,
                                               const GripperSpec& gripper, const Workspace& ws,
                                               const PatchConfig& patch_cfg,
                                               const AugmentConfig& aug, std::uint64_t seed) {
    return build_samples(ds.records, ds.root_dir, gripper, ws, patch_cfg, aug, seed);
}

std::vector<TrainingSample> build_training_set(const Dataset& ds, const GripperSpec& gripper,
                                               const Workspace& ws, const PatchConfig& patch_cfg,
                                               const AugmentConfig& aug, std::uint64_t seed) {
    return build_training_set(AggregatedDataset::from_dataset(ds), gripper, ws, patch_cfg, aug,
                              seed);
}

void write_aggregated_csv(const std::string& path, const AggregatedDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "scene_id,x_mm,y_mm,theta_deg,label,stage,patch_path,weight\n";
    for (const WeightedRecord& wr : ds.records) {
        const TrialRecord& r = wr.record;
        out << r.scene_id << "," << fmt_double(r.grasp.x_mm) << "," << fmt_double(r.grasp.y_mm)
            << "," << fmt_double(r.grasp.theta_deg) << "," << (r.label ? 1 : 0) << ","
            << r.stage << "," << r.patch_path << "," << wr.weight << "\n";
    }
}

namespace {

struct StageStreamResult {
    std::vector<TrialRecord> records;
    std::vector<double> failed_prior_scores;
};

StageStreamResult run_stage_stream(int stream, int trials, const ModelParams& model, int k,
                                   const StageRunConfig& cfg,
                                   const std::vector<ObjectShape>& seen_library,
                                   const std::vector<ObjectShape>& novel_library,
                                   const Workspace& ws, const GripperSpec& gripper,
                                   const std::string& root_dir) {
    StageStreamResult res;
    const ModelScorer scorer(model);
    Rng rng = Rng::derive(cfg.seed, rng_tag::kStage,
                          (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(stream));
    Scene scene;
    RenderResult view;
    int scene_counter = 0;
    std::string scene_id;

    auto fresh_scene = [&]() {
        const bool use_novel =
            !novel_library.empty() && rng.uniform() < cfg.stage.novel_object_fraction;
        const auto& lib = use_novel ? novel_library : seen_library;
        const std::uint64_t scene_seed =
            mix64(mix64(cfg.seed + 0x57a9e + k) + (static_cast<std::uint64_t>(stream) << 32) +
                  static_cast<std::uint64_t>(scene_counter));
        scene = generate_scene(scene_seed, cfg.collect.n_objects, lib, ws, cfg.collect.scene_gen);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "k%d_s%02d_%05d", k, stream, scene_counter);
        scene_id = buf;
        ++scene_counter;
        view = render(scene, cfg.collect.background_shade);
        write_scene_file(root_dir + "/scenes/" + scene_id + ".txt", scene);
    };

    auto refresh_view = [&]() {
        view = render(scene, cfg.collect.background_shade);
        char buf[80];
        std::snprintf(buf, sizeof(buf), "k%d_s%02d_%05d", k, stream, scene_counter);
        scene_id = buf;
        ++scene_counter;
        write_scene_file(root_dir + "/scenes/" + scene_id + ".txt", scene);
    };

    fresh_scene();
    int failure_streak = 0;
    for (int t = 0; t < trials; ++t) {
        if (static_cast<int>(scene.placements.size()) < cfg.collect.min_objects ||
            (cfg.collect.stall_refresh > 0 && failure_streak >= cfg.collect.stall_refresh)) {
            fresh_scene();
            failure_streak = 0;
        }
        const PriorMatrix prior =
            build_prior(scorer, view.image, view.occupancy, ws, gripper, cfg.collect.patch,
                        rng, cfg.stage.n_patches);
        const auto [pi, bin] =
            importance_sample(prior, rng, cfg.stage.epsilon, cfg.stage.sampling_law);
        GraspConfig grasp;
        grasp.x_mm = prior.centers_mm[pi].x;
        grasp.y_mm = prior.centers_mm[pi].y;
        grasp.theta_deg = bin_center_deg(bin);
        char tbuf[64];
        std::snprintf(tbuf, sizeof(tbuf), "k%d_t%02d_%06d", k, stream, t);
        GraspOutcome outcome;
        TrialRecord rec = execute_trial(scene, view, grasp, gripper, k, scene_id, tbuf,
                                        root_dir, cfg.collect, &outcome);
        if (!outcome.success) res.failed_prior_scores.push_back(prior.at(pi, bin));
        res.records.push_back(std::move(rec));
        if (outcome.success && outcome.object_id) {
            scene = remove_object(scene, *outcome.object_id);
            refresh_view();
            failure_streak = 0;
        } else {
            ++failure_streak;
        }
    }
    return res;
}

}  // namespace

StageResult run_stage(const ModelParams& model_prev, int k, const AggregatedDataset& D_prev,
                      const StageRunConfig& cfg, const std::vector<ObjectShape>& seen_library,
                      const std::vector<ObjectShape>& novel_library, const Workspace& ws,
                      const GripperSpec& gripper, const std::string& root_dir, int workers) {
    if (k < 1) throw std::invalid_argument("run_stage: k must be >= 1");
    fs::create_directories(root_dir + "/scenes");
    if (cfg.collect.store_patches) fs::create_directories(root_dir + "/patches");

    StageResult result;
    result.report.stage = k;

    const int streams = std::max(1, cfg.collect.streams);
    const int total = cfg.stage.trials_per_stage;
    std::vector<int> quota(streams, total / streams);
    for (int s = 0; s < total % streams; ++s) ++quota[s];

    std::vector<StageStreamResult> parts(streams);
    if (total > 0) {
        const int nworkers = std::max(1, std::min(workers, streams));
        if (nworkers == 1) {
            for (int s = 0; s < streams; ++s)
                parts[s] = run_stage_stream(s, quota[s], model_prev, k, cfg, seen_library,
                                            novel_library, ws, gripper, root_dir);
        } else {
            std::vector<std::thread> pool;
            std::mutex mtx;
            std::size_t next = 0;
            for (int wkr = 0; wkr < nworkers; ++wkr) {
                pool.emplace_back([&]() {
                    for (;;) {
                        std::size_t s;
                        {
                            std::lock_guard<std::mutex> lk(mtx);
                            if (next >= parts.size()) return;
                            s = next++;
                        }
                        parts[s] = run_stage_stream(static_cast<int>(s), quota[s], model_prev,
                                                    k, cfg, seen_library, novel_library, ws,
                                                    gripper, root_dir);
                    }
                });
            }
            for (auto& th : pool) th.join();
        }
    }

    result.d_k.seed = cfg.seed;
    result.d_k.root_dir = root_dir;
    double failed_score_sum = 0.0;
    std::size_t failed_n = 0;
    for (StageStreamResult& p : parts) {
        for (TrialRecord& r : p.records) result.d_k.records.push_back(std::move(r));
        for (double v : p.failed_prior_scores) failed_score_sum += v;
        failed_n += p.failed_prior_scores.size();
    }

    const DatasetStats st = summarize(result.d_k);
    result.report.trials = st.total;
    result.report.positives = st.positives;
    result.report.grasp_rate = st.grasp_rate.value_or(0.0);
    result.report.mean_prior_score_failed =
        failed_n > 0 ? failed_score_sum / static_cast<double>(failed_n) : 0.0;

    result.D_k = aggregate(D_prev, result.d_k, cfg.stage.gamma);

    result.model_k = model_prev;
    auto samples = build_training_set(result.D_k, gripper, ws, cfg.collect.patch, cfg.augment,
                                      mix64(cfg.seed + k));
    train(result.model_k, samples, {cfg.finetune}, workers);
    return result;
}

}  // namespace gf
