#include "graspforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace gf {

TestSet build_test_set(const std::vector<ObjectShape>& heldout_library,
                       const std::vector<std::string>& training_library_names,
                       int n_interactions, bool balance, std::uint64_t seed,
                       const Workspace& ws, const GripperSpec& gripper,
                       const CollectConfig& collect_cfg, const std::string& scratch_dir,
                       int workers) {
    std::set<std::string> train_names(training_library_names.begin(),
                                      training_library_names.end());
    for (const ObjectShape& s : heldout_library) {
        if (train_names.count(s.name))
            throw std::invalid_argument("build_test_set: held-out shape '" + s.name +
                                        "' appears in the training library");
    }

    CollectConfig cfg = collect_cfg;
    cfg.n_trials = n_interactions;
    const Dataset ds = collect(cfg, heldout_library, ws, gripper, seed, scratch_dir, workers);

    TestSet test;
    test.seed = seed;
    test.balanced = balance;
    for (const ObjectShape& s : heldout_library) test.library_names.push_back(s.name);

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        (ds.records[i].label ? pos : neg).push_back(i);
    }

    std::vector<std::size_t> keep;
    if (!balance) {
        keep.resize(ds.records.size());
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    } else {
        if (pos.empty())
            throw std::runtime_error("build_test_set: no positives to balance with");
        Rng rng = Rng::derive(seed, 0xba1a9cedULL);
        auto subsample = [&rng](std::vector<std::size_t>& v, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = i + rng.uniform_int(static_cast<int>(v.size() - i));
                std::swap(v[i], v[j]);
            }
            v.resize(n);
        };
        const std::size_t n = std::min(pos.size(), neg.size());
        if (pos.size() > n) subsample(pos, n);
        if (neg.size() > n) subsample(neg, n);
        keep.insert(keep.end(), pos.begin(), pos.end());
        keep.insert(keep.end(), neg.begin(), neg.end());
        std::sort(keep.begin(), keep.end());  // collection order
    }

    test.records.reserve(keep.size());
    for (std::size_t i : keep) {
        const TrialRecord& r = ds.records[i];
        const Image patch = load_patch(ds, r);
        TestRecord tr;
        tr.pixels = quantize_image(patch);
        tr.side = patch.w;
        tr.bin = bin_angle(r.grasp.theta_deg);
        tr.label = r.label ? 1 : 0;
        test.records.push_back(std::move(tr));
    }
    return test;
}

AccuracyEntry accuracy(const PatchScorer& scorer, const TestSet& test,
                       const std::string& method_name, double threshold) {
    AccuracyEntry e;
    e.method = method_name;
    for (const TestRecord& r : test.records) {
        const Image patch = dequantize_image(r.pixels, r.side, r.side);
        const double s = scorer.score(patch, r.bin);
        const int pred = s >= threshold ? 1 : 0;
        if (pred == r.label) ++e.correct;
        ++e.total;
    }
    e.accuracy = e.total > 0 ? static_cast<double>(e.correct) / e.total : 0.0;
    return e;
}

AccuracyReport compare_all(const std::vector<std::pair<std::string, const PatchScorer*>>& methods,
                           const TestSet& test, double threshold) {
    AccuracyReport rep;
    for (const auto& [name, scorer] : methods)
        rep.entries.push_back(accuracy(*scorer, test, name, threshold));
    return rep;
}

std::string AccuracyReport::to_text() const {
    std::size_t name_w = 6;
    for (const AccuracyEntry& e : entries) name_w = std::max(name_w, e.method.size());
    std::ostringstream out;
    out << std::left;
    out.width(static_cast<std::streamsize>(name_w + 2));
    out << "method";
    out << "accuracy  correct/total\n";
    for (const AccuracyEntry& e : entries) {
        out.width(static_cast<std::streamsize>(name_w + 2));
        out << e.method;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f    %zu/%zu", e.accuracy, e.correct, e.total);
        out << buf << "\n";
    }
    return out.str();
}

std::string AccuracyReport::to_csv() const {
    std::ostringstream out;
    out << "method,accuracy,correct,total\n";
    for (const AccuracyEntry& e : entries) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", e.accuracy);
        out << e.method << "," << buf << "," << e.correct << "," << e.total << "\n";
    }
    return out.str();
}

RerankResult rerank(const PatchScorer& scorer, const Image& image, const Mask& occupancy,
                    const Workspace& ws, const GripperSpec& gripper,
                    const PatchConfig& patch_cfg, const RerankConfig& cfg, Rng& rng) {
    const auto components = occupancy_components(occupancy);
    if (components.empty()) throw std::runtime_error("rerank: degenerate scene (no objects)");

    struct Cand {
        Vec2 center;
        int bin;
        double score;
        int index;
    };
    std::vector<Cand> all;
    all.reserve(cfg.n_candidates);
    for (int i = 0; i < cfg.n_candidates; ++i) {
        const RegionOfInterest roi = sample_roi(components, rng);
        const GraspConfig g = sample_grasp(roi, ws, rng);
        const Patch p = extract_patch(image, g, gripper, ws, patch_cfg);
        const auto scores = scorer.scores18(p.pixels);
        int best_bin = 0;
        for (int b = 1; b < kAngleBins; ++b)
            if (scores[b] > scores[best_bin]) best_bin = b;
        all.push_back({{g.x_mm, g.y_mm}, best_bin, scores[best_bin], i});
    }
    std::stable_sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;  // deterministic tie-break: lowest sample index
    });
    const int top_k = std::min<int>(cfg.top_k, static_cast<int>(all.size()));

    RerankResult res;
    res.candidates.reserve(top_k);
    int best = 0;
    for (int i = 0; i < top_k; ++i) {
        const Cand& c = all[i];
        double reranked = c.score;  // no neighbors: candidate's own score
        if (cfg.n_neighbors > 0) {
            double acc = 0.0;
            for (int nb = 0; nb < cfg.n_neighbors; ++nb) {
                // uniform over the disc of neighborhood_radius around the center
                double dx = 0.0, dy = 0.0;
                do {
                    dx = rng.uniform(-1.0, 1.0);
                    dy = rng.uniform(-1.0, 1.0);
                } while (dx * dx + dy * dy > 1.0);
                GraspConfig ng;
                ng.x_mm = std::clamp(c.center.x + dx * cfg.neighborhood_radius_mm, 0.5 / ws.px_per_mm,
                                     ws.width_mm - 0.5 / ws.px_per_mm);
                ng.y_mm = std::clamp(c.center.y + dy * cfg.neighborhood_radius_mm, 0.5 / ws.px_per_mm,
                                     ws.height_mm - 0.5 / ws.px_per_mm);
                const Patch np = extract_patch(image, ng, gripper, ws, patch_cfg);
                const auto nscores = scorer.scores18(np.pixels);
                if (cfg.same_bin_neighbors) {
                    acc += nscores[c.bin];
                } else {
                    acc += *std::max_element(nscores.begin(), nscores.end());
                }
            }
            reranked = acc / cfg.n_neighbors;
        }
        res.candidates.push_back({c.center, c.bin, c.score, reranked});
        if (res.candidates[i].reranked > res.candidates[best].reranked) best = i;
    }
    const RerankCandidate& win = res.candidates[best];
    res.chosen.x_mm = win.center_mm.x;
    res.chosen.y_mm = win.center_mm.y;
    res.chosen.theta_deg = bin_center_deg(win.bin);
    return res;
}

GraspPolicy make_argmax_policy(const PatchScorer& scorer, const Workspace& ws,
                               const GripperSpec& gripper, const PatchConfig& patch_cfg,
                               int n_candidates) {
    RerankConfig cfg;
    cfg.n_candidates = n_candidates;
    cfg.top_k = 1;
    cfg.n_neighbors = 0;
    return [&scorer, ws, gripper, patch_cfg, cfg](const Scene&, const RenderResult& view,
                                                  Rng& rng) {
        return rerank(scorer, view.image, view.occupancy, ws, gripper, patch_cfg, cfg, rng)
            .chosen;
    };
}

GraspPolicy make_rerank_policy(const PatchScorer& scorer, const Workspace& ws,
                               const GripperSpec& gripper, const PatchConfig& patch_cfg,
                               const RerankConfig& cfg) {
    return [&scorer, ws, gripper, patch_cfg, cfg](const Scene&, const RenderResult& view,
                                                  Rng& rng) {
        return rerank(scorer, view.image, view.occupancy, ws, gripper, patch_cfg, cfg, rng)
            .chosen;
    };
}

GraspPolicy make_random_policy(const Workspace& ws) {
    return [ws](const Scene&, const RenderResult& view, Rng& rng) {
        const RegionOfInterest roi = sample_roi(view.occupancy, rng);
        return sample_grasp(roi, ws, rng);
    };
}

namespace {

GraspConfig apply_jitter(const GraspConfig& g, double jitter_mm, const Workspace& ws, Rng& rng) {
    if (jitter_mm <= 0.0) return g;
    GraspConfig out = g;
    out.x_mm = std::clamp(g.x_mm + jitter_mm * rng.gaussian(), 0.0, ws.width_mm);
    out.y_mm = std::clamp(g.y_mm + jitter_mm * rng.gaussian(), 0.0, ws.height_mm);
    return out;
}

}  // namespace

double grasp_rate_eval(const GraspPolicy& policy, const std::vector<ObjectShape>& library,
                       const Workspace& ws, const GripperSpec& gripper,
                       const GraspRateConfig& cfg, std::uint64_t seed, int workers) {
    const int streams = std::max(1, cfg.streams);
    std::vector<int> quota(streams, cfg.n_tries / streams);
    for (int s = 0; s < cfg.n_tries % streams; ++s) ++quota[s];

    std::vector<std::size_t> successes(streams, 0);
    auto run_stream = [&](int s) {
        Rng rng = Rng::derive(seed, rng_tag::kEval, static_cast<std::uint64_t>(s));
        Rng jitter_rng = Rng::derive(seed, rng_tag::kJitter, static_cast<std::uint64_t>(s));
        for (int t = 0; t < quota[s]; ++t) {
            const std::uint64_t scene_seed =
                mix64(seed + 0xe7a1) + (static_cast<std::uint64_t>(s) << 24) +
                static_cast<std::uint64_t>(t);
            const Scene scene = generate_scene(scene_seed, cfg.n_objects, library, ws,
                                               cfg.scene_gen);
            const RenderResult view = render(scene, cfg.background_shade);
            GraspConfig g = policy(scene, view, rng);
            g = apply_jitter(g, cfg.jitter_mm, ws, jitter_rng);
            if (grasp_oracle(scene, g, gripper).success) ++successes[s];
        }
    };

    const int nworkers = std::max(1, std::min(workers, streams));
    if (nworkers == 1) {
        for (int s = 0; s < streams; ++s) run_stream(s);
    } else {
        std::vector<std::thread> pool;
        std::mutex mtx;
        std::size_t next = 0;
        for (int w = 0; w < nworkers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t s;
                    {
                        std::lock_guard<std::mutex> lk(mtx);
                        if (next >= static_cast<std::size_t>(streams)) return;
                        s = next++;
                    }
                    run_stream(static_cast<int>(s));
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::size_t total_success = 0;
    for (std::size_t s : successes) total_success += s;
    return cfg.n_tries > 0 ? static_cast<double>(total_success) / cfg.n_tries : 0.0;
}

ClutterResult clutter_removal(const GraspPolicy& policy, const std::vector<ObjectShape>& library,
                              const Workspace& ws, const GripperSpec& gripper,
                              const ClutterConfig& cfg, std::uint64_t seed) {
    ClutterResult result;
    double total = 0.0;
    for (int run = 0; run < cfg.n_runs; ++run) {
        Rng rng = Rng::derive(seed, 0xc1a77e50ULL, static_cast<std::uint64_t>(run));
        Rng jitter_rng = Rng::derive(seed, rng_tag::kJitter, 0xc100 + run);
        Scene scene = generate_scene(mix64(seed + 0xc1a7) + run, cfg.n_objects, library, ws,
                                     cfg.scene_gen);
        ClutterRunLog log;
        while (!scene.placements.empty() &&
               log.total_interactions < cfg.interaction_cap) {
            const RenderResult view = render(scene, cfg.background_shade);
            GraspConfig g = policy(scene, view, rng);
            g = apply_jitter(g, cfg.jitter_mm, ws, jitter_rng);
            const GraspOutcome out = grasp_oracle(scene, g, gripper);
            if (out.success && out.object_id) scene = remove_object(scene, *out.object_id);
            ++log.total_interactions;
            log.interactions.push_back(
                {g, out.success, static_cast<int>(scene.placements.size())});
        }
        log.cleared = scene.placements.empty();
        total += log.total_interactions;
        result.runs.push_back(std::move(log));
    }
    result.mean_interactions = cfg.n_runs > 0 ? total / cfg.n_runs : 0.0;
    return result;
}

void write_clutter_log(const std::string& path, const ClutterResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (std::size_t run = 0; run < result.runs.size(); ++run) {
        const ClutterRunLog& log = result.runs[run];
        for (std::size_t i = 0; i < log.interactions.size(); ++i) {
            const ClutterInteraction& in = log.interactions[i];
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "{\"run\":%zu,\"interaction\":%zu,\"x_mm\":%.3f,\"y_mm\":%.3f,"
                          "\"theta_deg\":%.2f,\"success\":%s,\"objects_remaining\":%d}",
                          run, i, in.grasp.x_mm, in.grasp.y_mm, in.grasp.theta_deg,
                          in.success ? "true" : "false", in.objects_remaining);
            out << buf << "\n";
        }
    }
}

}  // namespace gf
