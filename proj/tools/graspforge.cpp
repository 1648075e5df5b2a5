#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "graspforge/pipeline.hpp"
#include "graspforge/shapes.hpp"

namespace fs = std::filesystem;
using namespace gf;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out = true) {
    cmd->add_option("--config", args.config_path, "run configuration file (TOML-like)");
    if (needs_out) cmd->add_option("--out", args.out_dir, "output run directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--workers", args.workers, "worker thread count")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", args.force, "allow writing into a non-empty output directory");
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? parse_config_text(default_config_text())
                                             : load_config_file(args.config_path);
    apply_env_overrides(cfg);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

// every subcommand owns a fresh run directory; refuses non-empty ones
void prepare_out_dir(const CommonArgs& args, const RunConfig& cfg) {
    const fs::path dir(args.out_dir);
    if (fs::exists(dir) && !fs::is_empty(dir) && !args.force) {
        throw std::runtime_error("output directory '" + args.out_dir +
                                 "' is not empty (use --force to override)");
    }
    fs::create_directories(dir);
    std::ofstream snap(dir / "config.toml");
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path, std::ios::binary);
        snap << in.rdbuf();
    } else {
        snap << default_config_text();
    }
    // worker count deliberately not recorded: artifacts are worker-invariant
    std::ofstream eff(dir / "run.txt");
    eff << "seed " << cfg.seed << "\n";
}

int cmd_gen_scenes(const CommonArgs& args, int count) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const auto library = cfg.seen_shapes();
    for (int i = 0; i < count; ++i) {
        const Scene scene = generate_scene(mix64(cfg.seed) + i, cfg.scene_objects, library,
                                           cfg.workspace,
                                           {cfg.scene_max_attempts});
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04d", i);
        write_scene_file(args.out_dir + "/" + name + ".txt", scene);
        const RenderResult view = render(scene, cfg.background_shade);
        write_pgm(args.out_dir + "/" + name + ".pgm", view.image);
        write_pgm(args.out_dir + "/" + name + "_occ.pgm", view.occupancy);
    }
    std::printf("gen-scenes: wrote %d scenes to %s\n", count, args.out_dir.c_str());
    return 0;
}

int cmd_collect(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const Dataset ds = pipeline_collect(cfg, args.out_dir, args.workers);
    const DatasetStats st = summarize(ds);
    std::printf("collect: %zu trials, %zu positive (grasp rate %.2f%%) -> %s/dataset.csv\n",
                st.total, st.positives, 100.0 * st.grasp_rate.value_or(0.0),
                args.out_dir.c_str());
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& dataset_dir, bool scratch,
              bool emit_augmented) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const Dataset ds = read_dataset_csv(dataset_dir + "/dataset.csv", dataset_dir);
    const ModelParams init = pipeline_init_model(cfg, cfg.pretrain_enabled && !scratch,
                                                 args.workers);
    if (emit_augmented) {
        PatchConfig pc = cfg.patch;
        pc.fill = cfg.background_shade;
        const auto samples = build_training_set(ds, cfg.gripper, cfg.workspace, pc,
                                                cfg.augment, mix64(cfg.seed + 0x7a));
        fs::create_directories(args.out_dir + "/augmented");
        std::ofstream manifest(args.out_dir + "/augmented/manifest.csv");
        manifest << "patch_path,bin,label\n";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "aug_%06zu.pgm", i);
            write_pgm(args.out_dir + "/augmented/" + name,
                      dequantize_image(samples[i].pixels, samples[i].side, samples[i].side));
            manifest << "augmented/" << name << "," << samples[i].bin << ","
                     << samples[i].label << "\n";
        }
    }
    TrainResult curve;
    const ModelParams model = pipeline_train(cfg, ds, init, args.workers, &curve);
    save_checkpoint(args.out_dir + "/model.ckpt", model);
    std::ofstream loss_csv(args.out_dir + "/loss.csv");
    loss_csv << "epoch,loss\n";
    for (std::size_t e = 0; e < curve.epoch_mean_loss.size(); ++e)
        loss_csv << e << "," << curve.epoch_mean_loss[e] << "\n";
    std::printf("train: %zu epochs, final loss %.6f -> %s/model.ckpt\n",
                curve.epoch_mean_loss.size(),
                curve.epoch_mean_loss.empty() ? 0.0 : curve.epoch_mean_loss.back(),
                args.out_dir.c_str());
    return 0;
}

int cmd_pretrain(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    PretrainResult pr;
    const ModelParams model = pipeline_init_model(cfg, true, args.workers, &pr);
    save_checkpoint(args.out_dir + "/pretrained.ckpt", model);
    const auto library = cfg.seen_shapes();
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    const auto holdout = build_aux_dataset(library, 500, cfg.workspace, cfg.gripper, pc,
                                           cfg.background_shade, mix64(cfg.seed + 0xa2));
    const double acc = aux_accuracy(model, pr.aux_w, pr.aux_b, holdout);
    std::printf("pretrain: aux task held-out accuracy %.3f (chance %.3f) -> %s\n", acc,
                1.0 / static_cast<double>(library.size()), args.out_dir.c_str());
    return 0;
}

int cmd_stage(const CommonArgs& args, const std::string& dataset_dir,
              const std::string& model_path) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const Dataset d0 = read_dataset_csv(dataset_dir + "/dataset.csv", dataset_dir);
    ModelParams model = load_checkpoint(model_path);
    AggregatedDataset D_prev = AggregatedDataset::from_dataset(d0);
    for (int k = 1; k <= cfg.stage_count; ++k) {
        StageRunConfig sc = make_stage_run_config(cfg, mix64(cfg.seed + 0x1000 + k));
        // staged patches land next to the stage-0 data so aggregation shares one root
        StageResult sr = run_stage(model, k, D_prev, sc, cfg.seen_shapes(), cfg.novel_shapes(),
                                   cfg.workspace, cfg.gripper, dataset_dir, args.workers);
        write_dataset_csv(args.out_dir + "/stage" + std::to_string(k) + ".csv", sr.d_k);
        write_aggregated_csv(args.out_dir + "/aggregated" + std::to_string(k) + ".csv", sr.D_k);
        save_checkpoint(args.out_dir + "/stage" + std::to_string(k) + ".ckpt", sr.model_k);
        std::printf("stage %d: %zu trials, grasp rate %.2f%% (hard-negative prior %.3f)\n", k,
                    sr.report.trials, 100.0 * sr.report.grasp_rate,
                    sr.report.mean_prior_score_failed);
        D_prev = sr.D_k;
        model = sr.model_k;
    }
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& model_path) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const ModelParams model = load_checkpoint(model_path);
    const TestSet test = pipeline_test_set(cfg, args.out_dir + "/testset", args.workers);
    const ModelScorer scorer(model);
    const AccuracyEntry e = accuracy(scorer, test, "model", cfg.eval_threshold);
    std::ofstream out(args.out_dir + "/accuracy.csv");
    out << "method,accuracy,correct,total\nmodel," << e.accuracy << "," << e.correct << ","
        << e.total << "\n";
    std::printf("eval: accuracy %.4f (%zu/%zu) on %zu held-out records\n", e.accuracy,
                e.correct, e.total, test.records.size());
    return 0;
}

int cmd_bench(const CommonArgs& args, bool with_scratch) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    BenchOptions opts;
    opts.with_scratch = with_scratch;
    const BenchBundle bundle = run_bench_pipeline(cfg, args.out_dir, args.workers, opts);
    std::printf("%s", bundle.report.to_text().c_str());
    std::printf("bench: report -> %s/report.csv\n", args.out_dir.c_str());
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const int workers = args.workers;

    // shared test set
    const TestSet test = pipeline_test_set(cfg, args.out_dir + "/testset", workers);
    auto test_accuracy = [&](const ModelParams& m) {
        const ModelScorer sc(m);
        return accuracy(sc, test, "m", cfg.eval_threshold).accuracy;
    };

    // (a) data-size curve
    {
        std::ofstream out(args.out_dir + "/ablate_datasize.csv");
        out << "seed,size,accuracy\n";
        const int max_size = *std::max_element(cfg.ablate_sizes.begin(), cfg.ablate_sizes.end());
        for (int s = 0; s < cfg.ablate_seeds; ++s) {
            RunConfig c = cfg;
            c.seed = mix64(cfg.seed + 0xd5 + s);
            const std::string dir = args.out_dir + "/datasize_seed" + std::to_string(s);
            const Dataset full = pipeline_collect(c, dir, workers, max_size);
            for (int size : cfg.ablate_sizes) {
                Dataset subset;
                subset.root_dir = full.root_dir;
                subset.seed = full.seed;
                subset.records.assign(full.records.begin(), full.records.begin() + size);
                TrainConfig tc = c.train;
                tc.epochs = cfg.ablate_epochs;
                tc.seed = mix64(c.seed + size);
                const ModelParams init = pipeline_init_model(c, c.pretrain_enabled, workers);
                const ModelParams m = pipeline_train(c, subset, init, workers, nullptr, tc,
                                                     cfg.ablate_aug_factor);
                out << s << "," << size << "," << test_accuracy(m) << "\n";
            }
        }
    }

    // (b) pretraining vs scratch, (c) stages, (d) aggregation
    std::ofstream out(args.out_dir + "/ablate_summary.csv");
    out << "ablation,seed,variant,accuracy\n";
    for (int s = 0; s < cfg.ablate_seeds; ++s) {
        RunConfig c = cfg;
        c.seed = mix64(cfg.seed + 0xab + s);
        const std::string dir = args.out_dir + "/seed" + std::to_string(s);
        const Dataset d0 = pipeline_collect(c, dir, workers);
        const ModelParams scratch =
            pipeline_train(c, d0, pipeline_init_model(c, false, workers), workers);
        const ModelParams pre =
            pipeline_train(c, d0, pipeline_init_model(c, true, workers), workers);
        out << "pretrain," << s << ",scratch," << test_accuracy(scratch) << "\n";
        out << "pretrain," << s << ",pretrained," << test_accuracy(pre) << "\n";

        AggregatedDataset D_prev = AggregatedDataset::from_dataset(d0);
        const ModelParams* prev = &pre;
        out << "stages," << s << ",stage0," << test_accuracy(pre) << "\n";
        std::vector<StageResult> stage_results;
        stage_results.reserve(cfg.stage_count);
        for (int k = 1; k <= cfg.stage_count; ++k) {
            StageRunConfig sc = make_stage_run_config(c, mix64(c.seed + 0x1000 + k));
            stage_results.push_back(run_stage(*prev, k, D_prev, sc, c.seen_shapes(),
                                              c.novel_shapes(), c.workspace, c.gripper, dir,
                                              workers));
            const StageResult& sr = stage_results.back();
            out << "stages," << s << ",stage" << k << "," << test_accuracy(sr.model_k) << "\n";
            D_prev = sr.D_k;
            prev = &stage_results.back().model_k;
        }
        if (!stage_results.empty()) {
            const StageResult& s1 = stage_results.front();
            const ModelParams no_agg = pipeline_finetune(
                c, pre, AggregatedDataset::from_dataset(s1.d_k), mix64(c.seed + 0xaa), workers);
            out << "aggregation," << s << ",with," << test_accuracy(s1.model_k) << "\n";
            out << "aggregation," << s << ",without," << test_accuracy(no_agg) << "\n";
        }
    }
    std::printf("ablate: reports -> %s/ablate_datasize.csv, ablate_summary.csv\n",
                args.out_dir.c_str());
    return 0;
}

int cmd_rerank_demo(const CommonArgs& args, const std::string& model_path) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const ModelParams model = load_checkpoint(model_path);
    const ModelScorer scorer(model);
    const auto library = cfg.test_shapes();
    const Scene scene = generate_scene(mix64(cfg.seed + 0xde), cfg.scene_objects, library,
                                       cfg.workspace, {cfg.scene_max_attempts});
    const RenderResult view = render(scene, cfg.background_shade);
    write_scene_file(args.out_dir + "/scene.txt", scene);
    write_pgm(args.out_dir + "/scene.pgm", view.image);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    Rng rng = Rng::derive(cfg.seed, 0xdead0);
    const RerankResult rr = rerank(scorer, view.image, view.occupancy, cfg.workspace,
                                   cfg.gripper, pc, cfg.rerank_cfg, rng);
    std::ofstream out(args.out_dir + "/candidates.csv");
    out << "x_mm,y_mm,bin,score,reranked\n";
    for (const RerankCandidate& c : rr.candidates) {
        out << c.center_mm.x << "," << c.center_mm.y << "," << c.bin << "," << c.score << ","
            << c.reranked << "\n";
    }
    const GraspOutcome oc = grasp_oracle(scene, rr.chosen, cfg.gripper);
    std::printf("rerank-demo: chose (%.1f, %.1f, %.0f deg) -> %s\n", rr.chosen.x_mm,
                rr.chosen.y_mm, rr.chosen.theta_deg, oc.success ? "success" : "failure");
    return 0;
}

int cmd_clutter(const CommonArgs& args, const std::string& model_path) {
    const RunConfig cfg = resolve_config(args);
    prepare_out_dir(args, cfg);
    const ModelParams model = load_checkpoint(model_path);
    const ModelScorer scorer(model);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    // novel-and-seen mix as in the robot test
    std::vector<ObjectShape> library = cfg.seen_shapes();
    for (const ObjectShape& s : cfg.test_shapes()) library.push_back(s);
    ClutterConfig cc;
    cc.interaction_cap = cfg.clutter_cap;
    cc.n_runs = cfg.clutter_runs;
    cc.jitter_mm = cfg.eval_jitter_mm;
    cc.background_shade = cfg.background_shade;
    cc.scene_gen.max_attempts_per_object = cfg.scene_max_attempts;
    const GraspPolicy policy =
        make_rerank_policy(scorer, cfg.workspace, cfg.gripper, pc, cfg.rerank_cfg);
    const ClutterResult res =
        clutter_removal(policy, library, cfg.workspace, cfg.gripper, cc, cfg.seed);
    write_clutter_log(args.out_dir + "/clutter.jsonl", res);
    std::size_t cleared = 0;
    for (const ClutterRunLog& log : res.runs) cleared += log.cleared ? 1 : 0;
    std::printf("clutter: %zu/%zu runs cleared, mean interactions %.1f -> %s/clutter.jsonl\n",
                cleared, res.runs.size(), res.mean_interactions, args.out_dir.c_str());
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& run_dir) {
    (void)args;
    const Dataset ds = read_dataset_csv(run_dir + "/dataset.csv", run_dir);
    const DatasetStats st = summarize(ds);
    std::printf("dataset %s: %zu records, %zu positive, %zu negative, grasp rate %.2f%%\n",
                run_dir.c_str(), st.total, st.positives, st.negatives,
                100.0 * st.grasp_rate.value_or(0.0));
    std::printf("per-stage breakdown:\n");
    for (int stage = 0; stage <= 8; ++stage) {
        const DatasetStats s = summarize(ds, stage);
        if (s.total == 0) continue;
        std::printf("  stage %d: %zu records, grasp rate %.2f%%\n", stage, s.total,
                    100.0 * s.grasp_rate.value_or(0.0));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graspforge: self-supervised planar grasp learning testbed"};
    app.require_subcommand(1);

    CommonArgs args;
    int gen_count = 10;
    std::string dataset_dir = "run";
    std::string model_path = "run/model.ckpt";
    std::string report_dir = "run";
    bool scratch = false;
    bool emit_augmented = false;
    bool with_scratch = false;

    auto* gen = app.add_subcommand("gen-scenes", "generate and render cluttered scenes");
    add_common(gen, args);
    gen->add_option("--count", gen_count, "number of scenes");

    auto* collect = app.add_subcommand("collect", "run random grasp trials");
    add_common(collect, args);

    auto* train = app.add_subcommand("train", "train the grasp classifier on a dataset");
    add_common(train, args);
    train->add_option("--dataset", dataset_dir, "collected dataset directory");
    train->add_flag("--scratch", scratch, "skip pretraining even if enabled in config");
    train->add_flag("--emit-augmented", emit_augmented, "write augmented patches + manifest");

    auto* pretrain = app.add_subcommand("pretrain", "auxiliary-task pretraining only");
    add_common(pretrain, args);

    auto* stage = app.add_subcommand("stage", "staged curriculum collection + fine-tuning");
    add_common(stage, args);
    stage->add_option("--dataset", dataset_dir, "stage-0 dataset directory");
    stage->add_option("--model", model_path, "stage-0 model checkpoint");

    auto* eval_cmd = app.add_subcommand("eval", "held-out accuracy of a checkpoint");
    add_common(eval_cmd, args);
    eval_cmd->add_option("--model", model_path, "model checkpoint");

    auto* bench = app.add_subcommand("bench", "full pipeline + baseline comparison table");
    add_common(bench, args);
    bench->add_flag("--with-scratch", with_scratch, "also train a from-scratch learner");

    auto* ablate = app.add_subcommand("ablate", "data-size/pretrain/stage/aggregation studies");
    add_common(ablate, args);

    auto* rerank_cmd = app.add_subcommand("rerank-demo", "re-ranking walkthrough on one scene");
    add_common(rerank_cmd, args);
    rerank_cmd->add_option("--model", model_path, "model checkpoint");

    auto* clutter = app.add_subcommand("clutter", "clutter-removal runs with a checkpoint");
    add_common(clutter, args);
    clutter->add_option("--model", model_path, "model checkpoint");

    auto* report = app.add_subcommand("report", "summarize a run directory");
    add_common(report, args, false);
    report->add_option("--run", report_dir, "run directory to summarize");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_scenes(args, gen_count);
        if (collect->parsed()) return cmd_collect(args);
        if (train->parsed()) return cmd_train(args, dataset_dir, scratch, emit_augmented);
        if (pretrain->parsed()) return cmd_pretrain(args);
        if (stage->parsed()) return cmd_stage(args, dataset_dir, model_path);
        if (eval_cmd->parsed()) return cmd_eval(args, model_path);
        if (bench->parsed()) return cmd_bench(args, with_scratch);
        if (ablate->parsed()) return cmd_ablate(args);
        if (rerank_cmd->parsed()) return cmd_rerank_demo(args, model_path);
        if (clutter->parsed()) return cmd_clutter(args, model_path);
        if (report->parsed()) return cmd_report(args, report_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
