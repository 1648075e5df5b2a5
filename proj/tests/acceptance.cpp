// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Heavy fixtures (the frozen seeded benchmark) are built lazily and
// shared across criteria. Run with --criterion N to run one criterion, or
// --calibrate to print the measured values behind the pinned goldens.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graspforge/pipeline.hpp"
#include "graspforge/shapes.hpp"
#include "oracles.hpp"

using namespace gf;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Frozen benchmark configuration. All sizes and tolerances are pinned here;
// nothing is deferred to later calibration except the golden accuracy values
// below, which were measured once on this configuration and then frozen.
// ---------------------------------------------------------------------------

constexpr std::uint64_t kBenchSeed = 7;

RunConfig acceptance_config() {
    RunConfig cfg = parse_config_text(default_config_text());
    cfg.seed = kBenchSeed;
    cfg.collect_trials = 2000;
    cfg.collect_streams = 4;
    cfg.augment.factor = 2;        // benchmark training uses 2 rotated copies
    cfg.pretrain_samples = 1500;
    cfg.pretrain.epochs = 8;
    cfg.eval_test_trials = 20000;  // balanced test set must reach >= 1000 records
    cfg.stage.trials_per_stage = 1000;  // also the stage grasp-rate sample
    cfg.ablate_epochs = 8;
    cfg.ablate_aug_factor = 1;
    return cfg;
}

// Golden values measured once at spec freeze on the configuration above
// (seed 7, this shape library) and pinned with the +/-2-point tolerance.
constexpr double kGoldenTol = 0.02;
constexpr double kGoldenLearnerAcc = 0.9106382978723404;
constexpr double kGoldenSvmAcc = 0.8195035460992907;
constexpr double kGoldenHeurOptAcc = 0.7732269503546099;

bool g_calibrate = false;

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

struct Shared {
    RunConfig cfg = acceptance_config();
    std::string root;
    std::optional<BenchBundle> bundle;
    double bench_core_seconds = 0.0;  // collect+testset+pretrain+train+baselines+eval
    double stage_seconds = 0.0;

    const BenchBundle& get_bundle() {
        if (!bundle) {
            const auto t0 = std::chrono::steady_clock::now();
            BenchOptions opts;
            opts.with_scratch = false;  // trained below, outside the 10-minute budget
            opts.with_stage = false;
            bundle = run_bench_pipeline(cfg, root + "/bench", 1, opts);
            const auto t1 = std::chrono::steady_clock::now();
            bench_core_seconds = std::chrono::duration<double>(t1 - t0).count();
            bundle->scratch =
                pipeline_train(cfg, bundle->d0, pipeline_init_model(cfg, false, 1), 1);

            // stage 1 on top of the trained learner (timed separately; the
            // 10-minute budget covers the criterion-4 pipeline only)
            AggregatedDataset D0 = AggregatedDataset::from_dataset(bundle->d0);
            StageRunConfig sc = make_stage_run_config(cfg, mix64(cfg.seed + 0x1001));
            StageResult sr = run_stage(bundle->learner, 1, D0, sc, cfg.seen_shapes(),
                                       cfg.novel_shapes(), cfg.workspace, cfg.gripper,
                                       root + "/bench/collect", 1);
            const auto t2 = std::chrono::steady_clock::now();
            stage_seconds = std::chrono::duration<double>(t2 - t1).count();
            bundle->stages.push_back(std::move(sr));
        }
        return *bundle;
    }

    double accuracy_of(const ModelParams& m) {
        const ModelScorer sc(m);
        return accuracy(sc, get_bundle().test, "m", cfg.eval_threshold).accuracy;
    }
};

Shared g_shared;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness
// ---------------------------------------------------------------------------

bool criterion1(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const double h = 1e-4;
    double worst_rel = 0.0;
    bool masking_ok = true;
    std::size_t total_coords = 0, kink_coords = 0;
    Rng rng(0x6ead);
    const Architecture arch = Architecture::tiny(12);
    for (int probe = 0; probe < 100; ++probe) {
        ModelParams m = init_model(arch, 0xc1000 + probe);
        std::vector<double> patch(12 * 12);
        for (double& v : patch) v = rng.uniform();
        const int bin = rng.uniform_int(kAngleBins);
        const int label = rng.uniform_int(2);
        FwdCache cache;
        GradBuffer grad;
        grad.prepare(m);
        accumulate_gradients(m, patch.data(), bin, label, cache, grad);

        // exact-zero masking of the 17 non-trial heads
        const int T = m.arch.trunk_dim;
        for (int row = 0; row < 2 * kAngleBins; ++row) {
            if (row == 2 * bin || row == 2 * bin + 1) continue;
            double s = std::fabs(grad.head_b[row]);
            for (int t = 0; t < T; ++t)
                s += std::fabs(grad.head_w[static_cast<std::size_t>(row) * T + t]);
            if (s != 0.0) masking_ok = false;
        }

        // full finite-difference gradient; coordinates whose +/-h evaluations
        // land in different ReLU/pool activation states cross a kink where
        // the loss is not differentiable, so central differences do not
        // apply there and those coordinates are excluded
        auto pblocks = param_blocks(m);
        auto gblocks = grad_blocks(grad);
        for (std::size_t blk = 0; blk < pblocks.size(); ++blk) {
            auto [pptr, n] = pblocks[blk];
            auto [gptr, gn] = gblocks[blk];
            (void)gn;
            for (std::size_t i = 0; i < n; ++i) {
                const double saved = pptr[i];
                std::uint64_t sp = 0, sm = 0;
                pptr[i] = saved + h;
                const double lp = gf::testing::sample_loss_value(m, patch, bin, label, &sp);
                pptr[i] = saved - h;
                const double lm = gf::testing::sample_loss_value(m, patch, bin, label, &sm);
                pptr[i] = saved;
                ++total_coords;
                if (sp != sm) {
                    ++kink_coords;
                    continue;
                }
                const double fd = (lp - lm) / (2.0 * h);
                const double rel = std::fabs(fd - gptr[i]) /
                                   std::max({std::fabs(fd), std::fabs(gptr[i]), 1e-3});
                worst_rel = std::max(worst_rel, rel);
            }
        }
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double checked_fraction =
        1.0 - static_cast<double>(kink_coords) / std::max<std::size_t>(1, total_coords);
    detail = "max rel err " + fmt(worst_rel) + " over 100 probes (" +
             std::to_string(total_coords - kink_coords) + "/" + std::to_string(total_coords) +
             " smooth coords), masking " + (masking_ok ? "exact" : "VIOLATED") + ", " +
             fmt(sec) + "s";
    return worst_rel < 1e-4 && masking_ok && sec < 60.0 && checked_fraction > 0.95;
}

// ---------------------------------------------------------------------------
// criterion 2: bin-shift equivariance of rotation augmentation
// ---------------------------------------------------------------------------

bool criterion2(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    const Scene scene = generate_scene(0xb1b, 5, cfg.seen_shapes(), cfg.workspace);
    const RenderResult view = render(scene, cfg.background_shade);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    // a grasp on the first object so the crop holds real content
    const Placement& p0 = scene.placements.front();
    const GraspConfig g{p0.x_mm, p0.y_mm, 0.0};
    const Image src = extract_source_crop(view.image, g, cfg.gripper, cfg.workspace, pc);
    const int crop = context_crop_side(cfg.gripper, cfg.workspace, pc.context_scale);

    Rng rng(0xe9e1);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const double theta = rng.uniform(0.0, 180.0);
        const int k = rng.uniform_int(kAngleBins);
        const int label = rng.uniform_int(2);
        const TrainingSample s =
            make_augmented(src, theta, label, 10.0 * k, crop, pc.input_side, pc.fill);
        if (s.bin != (bin_angle(theta) + k) % kAngleBins) ++failures;
        if (s.label != label) ++failures;
    }
    detail = std::to_string(failures) + " failures in 1000 augmentations";
    return failures == 0;
}

// ---------------------------------------------------------------------------
// criterion 3: oracle soundness vs the dense ray-cast oracle + equivariance
// ---------------------------------------------------------------------------

bool criterion3(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    std::vector<ObjectShape> all = cfg.seen_shapes();
    for (const auto& s : cfg.novel_shapes()) all.push_back(s);
    for (const auto& s : cfg.test_shapes()) all.push_back(s);

    Rng rng(0x50a0);
    int agree = 0, total = 0;
    while (total < 500) {
        const Scene scene =
            generate_scene(mix64(0x0aac1e + total), 6, all, cfg.workspace);
        const RenderResult view = render(scene, cfg.background_shade);
        const auto components = occupancy_components(view.occupancy);
        for (int i = 0; i < 10 && total < 500; ++i) {
            GraspConfig g;
            if (i % 2 == 0) {
                const RegionOfInterest roi = sample_roi(components, rng);
                g = sample_grasp(roi, cfg.workspace, rng);
            } else {
                g = {rng.uniform(1.0, cfg.workspace.width_mm - 1.0),
                     rng.uniform(1.0, cfg.workspace.height_mm - 1.0),
                     rng.uniform(0.0, 180.0)};
            }
            const bool exact = grasp_oracle(scene, g, cfg.gripper).success;
            const bool brute = gf::testing::brute_force_oracle(scene, g, cfg.gripper).success;
            agree += exact == brute;
            ++total;
        }
    }

    // rotation + translation equivariance on transformed pairs
    int eq_ok = 0, eq_total = 0;
    Rng erng(0xe0e0);
    while (eq_total < 200) {
        const Scene scene = generate_scene(mix64(0xe0aa + eq_total), 4, all, cfg.workspace);
        const RenderResult view = render(scene, cfg.background_shade);
        const auto components = occupancy_components(view.occupancy);
        const RegionOfInterest roi = sample_roi(components, erng);
        const GraspConfig g = sample_grasp(roi, cfg.workspace, erng);

        const bool rotate = eq_total % 2 == 0;
        Scene txed = scene;
        GraspConfig tg = g;
        bool feasible = true;
        if (rotate) {
            const double phi = erng.uniform(0.0, 360.0);
            const Vec2 c{cfg.workspace.width_mm / 2, cfg.workspace.height_mm / 2};
            const double r = deg2rad(phi);
            for (Placement& pl : txed.placements) {
                const Vec2 rel{pl.x_mm - c.x, pl.y_mm - c.y};
                pl.x_mm = c.x + std::cos(r) * rel.x - std::sin(r) * rel.y;
                pl.y_mm = c.y + std::sin(r) * rel.x + std::cos(r) * rel.y;
                pl.rot_deg += phi;
                const Aabb bb = pl.world_polygon().aabb();
                if (bb.lo.x < 0 || bb.lo.y < 0 || bb.hi.x > cfg.workspace.width_mm ||
                    bb.hi.y > cfg.workspace.height_mm)
                    feasible = false;
            }
            const Vec2 rel{g.x_mm - c.x, g.y_mm - c.y};
            tg.x_mm = c.x + std::cos(r) * rel.x - std::sin(r) * rel.y;
            tg.y_mm = c.y + std::sin(r) * rel.x + std::cos(r) * rel.y;
            tg.theta_deg = reduce_angle_180(g.theta_deg + phi);
        } else {
            const double dx = erng.uniform(-60.0, 60.0), dy = erng.uniform(-60.0, 60.0);
            for (Placement& pl : txed.placements) {
                pl.x_mm += dx;
                pl.y_mm += dy;
                const Aabb bb = pl.world_polygon().aabb();
                if (bb.lo.x < 0 || bb.lo.y < 0 || bb.hi.x > cfg.workspace.width_mm ||
                    bb.hi.y > cfg.workspace.height_mm)
                    feasible = false;
            }
            tg.x_mm += dx;
            tg.y_mm += dy;
        }
        if (!feasible) continue;
        const bool a = grasp_oracle(scene, g, cfg.gripper).success;
        const bool b = grasp_oracle(txed, tg, cfg.gripper).success;
        eq_ok += a == b;
        ++eq_total;
    }

    detail = "brute-force agreement " + std::to_string(agree) + "/500, equivariance " +
             std::to_string(eq_ok) + "/200";
    return agree == 500 && eq_ok == 200;
}

// ---------------------------------------------------------------------------
// criterion 4: Table-II ordering analog on the frozen benchmark
// ---------------------------------------------------------------------------

double report_acc(const AccuracyReport& rep, const std::string& name) {
    for (const AccuracyEntry& e : rep.entries) {
        if (e.method == name) return e.accuracy;
    }
    return -1.0;
}

bool criterion4(std::string& detail) {
    const BenchBundle& b = g_shared.get_bundle();
    const double learner = report_acc(b.report, "learner");
    const double svm = report_acc(b.report, "svm");
    const double heur = report_acc(b.report, "heuristic_optimistic");
    const std::size_t test_n = b.test.records.size();

    bool ok = learner >= svm && svm >= heur;
    ok = ok && test_n >= 1000;
    ok = ok && g_shared.bench_core_seconds < 600.0;
    if (!g_calibrate) {
        ok = ok && std::fabs(learner - kGoldenLearnerAcc) <= kGoldenTol;
        ok = ok && std::fabs(svm - kGoldenSvmAcc) <= kGoldenTol;
        ok = ok && std::fabs(heur - kGoldenHeurOptAcc) <= kGoldenTol;
    }
    detail = "learner " + fmt(learner) + " >= svm " + fmt(svm) + " >= heuristic " + fmt(heur) +
             ", balanced n=" + std::to_string(test_n) + ", core runtime " +
             fmt(g_shared.bench_core_seconds) + "s";
    if (g_calibrate) {
        std::printf("  calibrate: kGoldenLearnerAcc = %.16f;\n", learner);
        std::printf("  calibrate: kGoldenSvmAcc = %.16f;\n", svm);
        std::printf("  calibrate: kGoldenHeurOptAcc = %.16f;\n", heur);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 5: staging improves accuracy and grasp rate
// ---------------------------------------------------------------------------

bool criterion5(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    const BenchBundle& b = g_shared.get_bundle();
    const double acc0 = g_shared.accuracy_of(b.learner);
    const double acc1 = g_shared.accuracy_of(b.stages.back().model_k);
    const double stage_rate = b.stages.back().report.grasp_rate;

    // random-protocol grasp rate on the same 50/50 seen/novel scene mix
    CollectConfig cc = cfg.make_collect_config();
    cc.n_trials = 600;
    cc.store_patches = false;
    const Dataset rs = collect(cc, cfg.seen_shapes(), cfg.workspace, cfg.gripper,
                               mix64(cfg.seed + 0x0a11), g_shared.root + "/rate_seen", 1);
    const Dataset rn = collect(cc, cfg.novel_shapes(), cfg.workspace, cfg.gripper,
                               mix64(cfg.seed + 0x0a12), g_shared.root + "/rate_novel", 1);
    const double random_rate =
        0.5 * (summarize(rs).grasp_rate.value_or(0.0) + summarize(rn).grasp_rate.value_or(0.0));

    const bool ok = acc1 >= acc0 && stage_rate >= 2.0 * random_rate &&
                    b.stages.back().report.trials >= 1000;
    detail = "stage1 acc " + fmt(acc1) + " >= stage0 acc " + fmt(acc0) + "; stage rate " +
             fmt(stage_rate) + " vs random " + fmt(random_rate) + " (x" +
             fmt(random_rate > 0 ? stage_rate / random_rate : 0.0) + ", stage runtime " +
             fmt(g_shared.stage_seconds) + "s)";
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 6: aggregation ablation (3-seed majority)
// ---------------------------------------------------------------------------

bool criterion6(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    const BenchBundle& b = g_shared.get_bundle();
    const Dataset& d1 = b.stages.back().d_k;
    const AggregatedDataset D1 = b.stages.back().D_k;

    int wins = 0;
    std::ostringstream acc_log;
    for (int s = 0; s < 3; ++s) {
        const std::uint64_t seed = mix64(cfg.seed + 0xa66 + s);
        const ModelParams with_agg = pipeline_finetune(cfg, b.learner, D1, seed, 1);
        const ModelParams no_agg =
            pipeline_finetune(cfg, b.learner, AggregatedDataset::from_dataset(d1), seed, 1);
        const double acc_with = g_shared.accuracy_of(with_agg);
        const double acc_without = g_shared.accuracy_of(no_agg);
        if (acc_without <= acc_with) ++wins;
        acc_log << " [seed" << s << " with " << fmt(acc_with) << " vs without "
                << fmt(acc_without) << "]";
    }
    detail = "aggregation wins " + std::to_string(wins) + "/3 seeds:" + acc_log.str();
    return wins >= 2;
}

// ---------------------------------------------------------------------------
// criterion 7: pretraining ablation (3-seed majority)
// ---------------------------------------------------------------------------

bool criterion7(std::string& detail) {
    const RunConfig& base = g_shared.cfg;
    const BenchBundle& b = g_shared.get_bundle();

    int wins = 0;
    std::ostringstream acc_log;
    // seed 0 reuses the benchmark learner (pretrained) and scratch models
    {
        const double pre = g_shared.accuracy_of(b.learner);
        const double scr = g_shared.accuracy_of(*b.scratch);
        if (pre >= scr) ++wins;
        acc_log << " [seed0 pre " << fmt(pre) << " vs scratch " << fmt(scr) << "]";
    }
    for (int s = 1; s < 3; ++s) {
        RunConfig cfg = base;
        cfg.seed = mix64(base.seed + 0x93e + s);
        const ModelParams pre_init = pipeline_init_model(cfg, true, 1);
        const ModelParams scr_init = pipeline_init_model(cfg, false, 1);
        const ModelParams pre = pipeline_train(cfg, b.d0, pre_init, 1);
        const ModelParams scr = pipeline_train(cfg, b.d0, scr_init, 1);
        const double acc_pre = g_shared.accuracy_of(pre);
        const double acc_scr = g_shared.accuracy_of(scr);
        if (acc_pre >= acc_scr) ++wins;
        acc_log << " [seed" << s << " pre " << fmt(acc_pre) << " vs scratch " << fmt(acc_scr)
                << "]";
    }

    // the auxiliary task itself must beat chance on held-out samples
    PatchConfig pc = base.patch;
    pc.fill = base.background_shade;
    const auto library = base.seen_shapes();
    const auto holdout = build_aux_dataset(library, 400, base.workspace, base.gripper, pc,
                                           base.background_shade, mix64(base.seed + 0xa2));
    const double aux_acc =
        aux_accuracy(b.learner, b.pretrain.aux_w, b.pretrain.aux_b, holdout);
    const double chance = 1.0 / static_cast<double>(library.size());
    const bool aux_ok = aux_acc > chance;

    detail = "pretraining wins " + std::to_string(wins) + "/3 seeds:" + acc_log.str() +
             "; aux held-out acc " + fmt(aux_acc) + " vs chance " + fmt(chance);
    return wins >= 2 && aux_ok;
}

// ---------------------------------------------------------------------------
// criterion 8: data-size curve non-decreasing within the 2-point band
// ---------------------------------------------------------------------------

bool criterion8(std::string& detail) {
    const RunConfig& base = g_shared.cfg;
    const std::vector<int> sizes = {500, 1000, 2000, 5000, 10000};
    std::vector<double> mean_acc(sizes.size(), 0.0);
    for (int s = 0; s < 3; ++s) {
        RunConfig cfg = base;
        cfg.seed = mix64(base.seed + 0xd5 + s);
        const std::string dir = g_shared.root + "/datasize_seed" + std::to_string(s);
        const Dataset full = pipeline_collect(cfg, dir, 1, sizes.back());
        const ModelParams init = pipeline_init_model(cfg, true, 1);
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            Dataset subset;
            subset.root_dir = full.root_dir;
            subset.seed = full.seed;
            subset.records.assign(full.records.begin(), full.records.begin() + sizes[i]);
            TrainConfig tc = cfg.train;
            tc.epochs = cfg.ablate_epochs;
            tc.seed = mix64(cfg.seed + sizes[i]);
            const ModelParams m =
                pipeline_train(cfg, subset, init, 1, nullptr, tc, cfg.ablate_aug_factor);
            mean_acc[i] += g_shared.accuracy_of(m) / 3.0;
        }
    }
    bool ok = true;
    std::ostringstream curve;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        curve << " " << sizes[i] << ":" << fmt(mean_acc[i]);
        if (i > 0 && mean_acc[i] < mean_acc[i - 1] - 0.02) ok = false;
    }
    detail = "mean accuracy by size:" + curve.str();
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 9: re-ranking utility under execution jitter
// ---------------------------------------------------------------------------

bool criterion9(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    const BenchBundle& b = g_shared.get_bundle();
    const ModelParams& model = b.stages.back().model_k;
    const ModelScorer scorer(model);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;

    GraspRateConfig rc;
    rc.n_tries = 500;
    rc.n_objects = cfg.scene_objects;
    rc.jitter_mm = 2.0;
    rc.streams = 4;
    rc.background_shade = cfg.background_shade;

    RerankConfig rr = cfg.rerank_cfg;  // topK 10, 10 neighbors, 5 mm
    const GraspPolicy rerank_policy =
        make_rerank_policy(scorer, cfg.workspace, cfg.gripper, pc, rr);
    const GraspPolicy argmax_policy =
        make_argmax_policy(scorer, cfg.workspace, cfg.gripper, pc, rr.n_candidates);

    const auto library = cfg.test_shapes();
    const double rate_rerank = grasp_rate_eval(rerank_policy, library, cfg.workspace,
                                               cfg.gripper, rc, mix64(cfg.seed + 0x33), 1);
    const double rate_argmax = grasp_rate_eval(argmax_policy, library, cfg.workspace,
                                               cfg.gripper, rc, mix64(cfg.seed + 0x33), 1);

    // exact reduction: topK=1, 0 neighbors equals an independent argmax scan
    bool reduction_ok = true;
    const Scene scene = generate_scene(0xedce, 6, library, cfg.workspace);
    const RenderResult view = render(scene, cfg.background_shade);
    const auto components = occupancy_components(view.occupancy);
    RerankConfig plain = rr;
    plain.top_k = 1;
    plain.n_neighbors = 0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        Rng r1(s);
        const GraspConfig a = rerank(scorer, view.image, view.occupancy, cfg.workspace,
                                     cfg.gripper, pc, plain, r1)
                                  .chosen;
        Rng r2(s);
        double best = -1.0;
        GraspConfig manual{};
        for (int i = 0; i < plain.n_candidates; ++i) {
            const RegionOfInterest roi = sample_roi(components, r2);
            const GraspConfig g = sample_grasp(roi, cfg.workspace, r2);
            const Patch p = extract_patch(view.image, g, cfg.gripper, cfg.workspace, pc);
            const auto scores = scorer.scores18(p.pixels);
            int bb = 0;
            for (int bi = 1; bi < kAngleBins; ++bi)
                if (scores[bi] > scores[bb]) bb = bi;
            if (scores[bb] > best) {
                best = scores[bb];
                manual = {g.x_mm, g.y_mm, bin_center_deg(bb)};
            }
        }
        if (a.x_mm != manual.x_mm || a.y_mm != manual.y_mm ||
            a.theta_deg != manual.theta_deg)
            reduction_ok = false;
    }

    detail = "with 2mm jitter: rerank " + fmt(rate_rerank) + " vs argmax " + fmt(rate_argmax) +
             "; topK=1 reduction " + (reduction_ok ? "exact" : "VIOLATED");
    return rate_rerank >= rate_argmax && reduction_ok;
}

// ---------------------------------------------------------------------------
// criterion 10: clutter removal beats the random policy
// ---------------------------------------------------------------------------

bool criterion10(std::string& detail) {
    const RunConfig& cfg = g_shared.cfg;
    const BenchBundle& b = g_shared.get_bundle();
    const ModelParams& model = b.stages.back().model_k;
    const ModelScorer scorer(model);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;

    std::vector<ObjectShape> library = cfg.seen_shapes();
    for (const auto& s : cfg.test_shapes()) library.push_back(s);

    ClutterConfig cc;
    cc.n_objects = 10;
    cc.n_runs = 5;
    cc.interaction_cap = 400;
    cc.background_shade = cfg.background_shade;

    const GraspPolicy policy =
        make_rerank_policy(scorer, cfg.workspace, cfg.gripper, pc, cfg.rerank_cfg);
    const ClutterResult trained =
        clutter_removal(policy, library, cfg.workspace, cfg.gripper, cc, mix64(cfg.seed + 0xc1));
    const ClutterResult random = clutter_removal(make_random_policy(cfg.workspace), library,
                                                 cfg.workspace, cfg.gripper, cc,
                                                 mix64(cfg.seed + 0xc1));

    int cleared = 0;
    for (const ClutterRunLog& log : trained.runs) cleared += log.cleared ? 1 : 0;
    detail = "trained mean " + fmt(trained.mean_interactions) + " (" +
             std::to_string(cleared) + "/5 cleared) vs random mean " +
             fmt(random.mean_interactions);
    return trained.mean_interactions < random.mean_interactions;
}

// ---------------------------------------------------------------------------
// criterion 11: end-to-end determinism across runs and worker counts
// ---------------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& first_diff) {
    std::vector<std::string> rel_a;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
    }
    std::sort(rel_a.begin(), rel_a.end());
    std::vector<std::string> rel_b;
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
    }
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) {
        first_diff = "file lists differ";
        return false;
    }
    for (const std::string& rel : rel_a) {
        if (file_bytes(a / rel) != file_bytes(b / rel)) {
            first_diff = rel;
            return false;
        }
    }
    return true;
}

bool criterion11(std::string& detail) {
    RunConfig mini = acceptance_config();
    mini.collect_trials = 240;
    mini.eval_test_trials = 400;
    mini.pretrain_enabled = false;
    mini.train.epochs = 2;
    mini.augment.factor = 1;
    mini.stage.trials_per_stage = 50;
    mini.stage_count = 1;

    const std::string base = g_shared.root + "/determinism";
    const std::vector<std::pair<std::string, int>> runs = {
        {"w1_a", 1}, {"w1_b", 1}, {"w4", 4}};
    for (const auto& [name, workers] : runs) {
        fs::remove_all(base + "/" + name);
        run_bench_pipeline(mini, base + "/" + name, workers);
    }
    std::string diff1, diff2;
    const bool rerun_ok = dirs_identical(base + "/w1_a", base + "/w1_b", diff1);
    const bool workers_ok = dirs_identical(base + "/w1_a", base + "/w4", diff2);
    detail = std::string("rerun ") + (rerun_ok ? "identical" : ("differs at " + diff1)) +
             "; workers 1 vs 4 " + (workers_ok ? "identical" : ("differs at " + diff2));
    return rerun_ok && workers_ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--calibrate") == 0) g_calibrate = true;
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }
    g_shared.root = fs::absolute("acceptance_artifacts").string();
    fs::remove_all(g_shared.root);
    fs::create_directories(g_shared.root);

    struct Entry {
        int id;
        const char* name;
        bool (*fn)(std::string&);
    };
    const std::vector<Entry> criteria = {
        {1, "gradient correctness (finite differences + head masking)", criterion1},
        {2, "bin-shift equivariance of rotation augmentation", criterion2},
        {3, "grasp-oracle soundness vs dense ray-cast + equivariance", criterion3},
        {4, "baseline ordering on the frozen benchmark", criterion4},
        {5, "staged learning improves accuracy and grasp rate", criterion5},
        {6, "data aggregation ablation (3-seed majority)", criterion6},
        {7, "pretraining ablation (3-seed majority)", criterion7},
        {8, "data-size curve non-decreasing", criterion8},
        {9, "re-ranking utility under execution jitter", criterion9},
        {10, "clutter removal beats the random policy", criterion10},
        {11, "byte-identical pipeline across runs and worker counts", criterion11},
    };

    int failures = 0;
    for (const Entry& e : criteria) {
        if (only != 0 && e.id != only) continue;
        std::string detail;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = e.fn(detail);
        } catch (const std::exception& ex) {
            detail = std::string("exception: ") + ex.what();
        }
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", ok ? "PASS" : "FAIL", e.id,
                    e.name, detail.c_str(), sec);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
    } else {
        std::printf("acceptance: %d criteria FAILED\n", failures);
    }
    return failures;
}
