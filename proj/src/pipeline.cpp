#include "graspforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graspforge/shapes.hpp"

namespace fs = std::filesystem;

namespace gf {

Dataset pipeline_collect(const RunConfig& cfg, const std::string& out_dir, int workers,
                         std::optional<int> trials_override,
                         std::optional<std::uint64_t> seed_override) {
    CollectConfig cc = cfg.make_collect_config();
    if (trials_override) cc.n_trials = *trials_override;
    const std::uint64_t seed = seed_override.value_or(cfg.seed);
    fs::create_directories(out_dir);
    Dataset ds = collect(cc, cfg.seen_shapes(), cfg.workspace, cfg.gripper, seed, out_dir,
                         workers);
    write_dataset_csv(out_dir + "/dataset.csv", ds);
    const DatasetStats st = summarize(ds);
    std::ofstream stats(out_dir + "/stats.txt");
    stats << "positives " << st.positives << "\nnegatives " << st.negatives << "\ntotal "
          << st.total << "\ngrasp_rate "
          << (st.grasp_rate ? std::to_string(*st.grasp_rate) : std::string("undefined"))
          << "\n";
    return ds;
}

TestSet pipeline_test_set(const RunConfig& cfg, const std::string& scratch_dir, int workers,
                          std::optional<std::uint64_t> seed_override) {
    CollectConfig cc = cfg.make_collect_config();
    const std::uint64_t seed = mix64(seed_override.value_or(cfg.seed) + 0x7e57);
    return build_test_set(cfg.test_shapes(), cfg.training_shape_names(), cfg.eval_test_trials,
                          cfg.eval_balance, seed, cfg.workspace, cfg.gripper, cc, scratch_dir,
                          workers);
}

ModelParams pipeline_init_model(const RunConfig& cfg, bool pretrained, int workers,
                                PretrainResult* pretrain_out) {
    const Architecture arch = cfg.make_architecture();
    if (!pretrained) return init_model(arch, cfg.seed);
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    const auto library = cfg.seen_shapes();
    const auto aux = build_aux_dataset(library, cfg.pretrain_samples, cfg.workspace,
                                       cfg.gripper, pc, cfg.background_shade,
                                       mix64(cfg.seed + 0xa0));
    TrainConfig tc = cfg.pretrain;
    tc.batch_size = cfg.train.batch_size;
    tc.momentum = cfg.train.momentum;
    tc.seed = mix64(cfg.seed + 0xa1);
    PretrainResult pr = pretrain_features(arch, aux, static_cast<int>(library.size()), tc,
                                          cfg.seed, workers);
    ModelParams model = pr.model;
    if (pretrain_out) *pretrain_out = std::move(pr);
    return model;
}

ModelParams pipeline_train(const RunConfig& cfg, const Dataset& d0, const ModelParams& init,
                           int workers, TrainResult* curve,
                           std::optional<TrainConfig> schedule_override,
                           std::optional<int> aug_factor_override) {
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    AugmentConfig aug = cfg.augment;
    if (aug_factor_override) aug.factor = *aug_factor_override;
    const auto samples = build_training_set(d0, cfg.gripper, cfg.workspace, pc, aug,
                                            mix64(cfg.seed + 0x7a));
    TrainConfig tc = schedule_override.value_or(cfg.train);
    if (!schedule_override) {
        tc.seed = mix64(cfg.seed + 0x7b);
    }
    ModelParams model = init;
    TrainResult res = train(model, samples, {tc}, workers);
    if (curve) *curve = std::move(res);
    return model;
}

ModelParams pipeline_finetune(const RunConfig& cfg, const ModelParams& base,
                              const AggregatedDataset& data, std::uint64_t seed, int workers) {
    PatchConfig pc = cfg.patch;
    pc.fill = cfg.background_shade;
    const auto samples =
        build_training_set(data, cfg.gripper, cfg.workspace, pc, cfg.augment, mix64(seed));
    TrainConfig tc = cfg.stage_train;
    tc.batch_size = cfg.train.batch_size;
    tc.momentum = cfg.train.momentum;
    tc.seed = mix64(seed + 1);
    ModelParams model = base;
    train(model, samples, {tc}, workers);
    return model;
}

namespace {

std::vector<std::pair<Image, std::pair<int, int>>> baseline_training_patches(const Dataset& ds) {
    std::vector<std::pair<Image, std::pair<int, int>>> out;
    out.reserve(ds.records.size());
    for (const TrialRecord& r : ds.records) {
        out.push_back({load_patch(ds, r), {bin_angle(r.grasp.theta_deg), r.label ? 1 : 0}});
    }
    return out;
}

double heuristic_accuracy_on(const TestSet& test, const HeuristicParams& params,
                             double fg_threshold) {
    std::size_t correct = 0;
    for (const TestRecord& r : test.records) {
        const Image patch = dequantize_image(r.pixels, r.side, r.side);
        const HeuristicAnalysis a = heuristic_analyze(patch, fg_threshold);
        const int pred = heuristic_predict(a, bin_center_deg(r.bin), params) ? 1 : 0;
        if (pred == r.label) ++correct;
    }
    return test.records.empty() ? 0.0
                                : static_cast<double>(correct) / test.records.size();
}

}  // namespace

BaselineModels pipeline_baselines(const RunConfig& cfg, const Dataset& train,
                                  const TestSet& test) {
    BaselineModels out;
    const int crop_side = context_crop_side(cfg.gripper, cfg.workspace, cfg.patch.context_scale);
    out.patch_px_per_mm =
        cfg.workspace.px_per_mm * static_cast<double>(cfg.patch.input_side) / crop_side;

    out.heuristic_default.angle_error_threshold_deg = 15.0;
    out.heuristic_default.eigenvalue_limit = 0.0;
    out.heuristic_with_limit.angle_error_threshold_deg = 15.0;
    out.heuristic_with_limit.eigenvalue_limit = cfg.gripper.min_close_mm * out.patch_px_per_mm;

    // optimistic grid search straight on the test set
    double best_acc = -1.0;
    for (double ang = 2.5; ang <= 45.0; ang += 2.5) {
        for (double lim = 0.0; lim <= 2.0 * out.heuristic_with_limit.eigenvalue_limit;
             lim += out.heuristic_with_limit.eigenvalue_limit / 8.0) {
            HeuristicParams p;
            p.angle_error_threshold_deg = ang;
            p.eigenvalue_limit = lim;
            const double acc = heuristic_accuracy_on(test, p, 0.9);
            if (acc > best_acc) {
                best_acc = acc;
                out.heuristic_optimistic = p;
            }
        }
    }
    out.heuristic_optimistic_accuracy = best_acc;

    const auto patches = baseline_training_patches(train);

    // kNN with optimistic k selection on the test set
    out.knn = knn_build(patches, 5);
    double best_knn = -1.0;
    for (int k : {1, 3, 5, 9, 15, 25, 51}) {
        KnnModel probe = out.knn;
        probe.k = k;
        const KnnPredictor pred(probe);
        const AccuracyEntry e = accuracy(pred, test, "knn", cfg.eval_threshold);
        if (e.accuracy > best_knn) {
            best_knn = e.accuracy;
            out.knn_best_k = k;
        }
    }
    out.knn.k = out.knn_best_k;
    out.knn_optimistic_accuracy = best_knn;

    SvmTrainConfig svm_cfg;
    svm_cfg.seed = mix64(cfg.seed + 0x57);
    out.svm = svm_train(patches, {0.1, 1.0, 10.0}, 0.2, svm_cfg);
    return out;
}

StageRunConfig make_stage_run_config(const RunConfig& cfg, std::uint64_t seed) {
    StageRunConfig sc;
    sc.collect = cfg.make_collect_config();
    sc.stage = cfg.stage;
    sc.augment = cfg.augment;
    sc.finetune = cfg.stage_train;
    sc.finetune.batch_size = cfg.train.batch_size;
    sc.finetune.momentum = cfg.train.momentum;
    sc.finetune.seed = mix64(seed + 0x5f);
    sc.seed = seed;
    return sc;
}

BenchBundle run_bench_pipeline(const RunConfig& cfg, const std::string& run_dir, int workers,
                               const BenchOptions& opts) {
    BenchBundle bundle;
    fs::create_directories(run_dir);

    bundle.d0 = pipeline_collect(cfg, run_dir + "/collect", workers);
    bundle.test = pipeline_test_set(cfg, run_dir + "/testset", workers);

    const ModelParams init_pre =
        cfg.pretrain_enabled
            ? pipeline_init_model(cfg, true, workers, &bundle.pretrain)
            : pipeline_init_model(cfg, false, workers);
    TrainResult curve;
    bundle.learner = pipeline_train(cfg, bundle.d0, init_pre, workers, &curve);
    {
        std::ofstream loss_csv(run_dir + "/loss.csv");
        loss_csv << "epoch,loss\n";
        for (std::size_t e = 0; e < curve.epoch_mean_loss.size(); ++e) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", e, curve.epoch_mean_loss[e]);
            loss_csv << buf;
        }
    }
    save_checkpoint(run_dir + "/learner.ckpt", bundle.learner);

    if (opts.with_scratch) {
        const ModelParams init_scr = pipeline_init_model(cfg, false, workers);
        bundle.scratch = pipeline_train(cfg, bundle.d0, init_scr, workers);
        save_checkpoint(run_dir + "/scratch.ckpt", *bundle.scratch);
    }

    if (opts.with_stage && cfg.stage_count > 0) {
        AggregatedDataset D_prev = AggregatedDataset::from_dataset(bundle.d0);
        const ModelParams* prev = &bundle.learner;
        for (int k = 1; k <= cfg.stage_count; ++k) {
            StageRunConfig sc = make_stage_run_config(cfg, mix64(cfg.seed + 0x1000 + k));
            StageResult sr = run_stage(*prev, k, D_prev, sc, cfg.seen_shapes(),
                                       cfg.novel_shapes(), cfg.workspace, cfg.gripper,
                                       run_dir + "/collect", workers);
            write_dataset_csv(run_dir + "/collect/stage" + std::to_string(k) + ".csv", sr.d_k);
            write_aggregated_csv(run_dir + "/collect/aggregated" + std::to_string(k) + ".csv",
                                 sr.D_k);
            save_checkpoint(run_dir + "/stage" + std::to_string(k) + ".ckpt", sr.model_k);
            D_prev = sr.D_k;
            bundle.stages.push_back(std::move(sr));
            prev = &bundle.stages.back().model_k;
        }
        std::ofstream srep(run_dir + "/stage_report.csv");
        srep << "stage,trials,positives,grasp_rate,benchmark_accuracy\n";
        for (const StageResult& sr : bundle.stages) {
            const ModelScorer sc(sr.model_k);
            const AccuracyEntry e = accuracy(sc, bundle.test, "stage", cfg.eval_threshold);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%d,%zu,%zu,%.6f,%.6f\n", sr.report.stage,
                          sr.report.trials, sr.report.positives, sr.report.grasp_rate,
                          e.accuracy);
            srep << buf;
        }
    }

    std::vector<std::pair<std::string, const PatchScorer*>> methods;
    HeuristicPredictor h_min, h_lim, h_opt;
    std::optional<KnnPredictor> knn_pred;
    std::optional<SvmPredictor> svm_pred;
    if (opts.with_baselines) {
        bundle.baselines = pipeline_baselines(cfg, bundle.d0, bundle.test);
        h_min.params = bundle.baselines.heuristic_default;
        h_lim.params = bundle.baselines.heuristic_with_limit;
        h_opt.params = bundle.baselines.heuristic_optimistic;
        knn_pred.emplace(bundle.baselines.knn);
        svm_pred.emplace(bundle.baselines.svm);
        methods.push_back({"heuristic_min_eig", &h_min});
        methods.push_back({"heuristic_eig_limit", &h_lim});
        methods.push_back({"heuristic_optimistic", &h_opt});
        methods.push_back({"knn_optimistic", &*knn_pred});
        methods.push_back({"svm", &*svm_pred});
    }
    const ModelScorer learner_scorer(bundle.learner);
    methods.push_back({"learner", &learner_scorer});
    const ModelScorer staged_scorer(bundle.stages.empty() ? bundle.learner
                                                          : bundle.stages.back().model_k);
    if (!bundle.stages.empty()) methods.push_back({"learner_staged", &staged_scorer});

    bundle.report = compare_all(methods, bundle.test, cfg.eval_threshold);
    std::ofstream rep_csv(run_dir + "/report.csv");
    rep_csv << bundle.report.to_csv();
    std::ofstream rep_txt(run_dir + "/report.txt");
    rep_txt << bundle.report.to_text();

    DatasetStats test_stats;
    for (const TestRecord& r : bundle.test.records) {
        if (r.label) ++test_stats.positives;
        else ++test_stats.negatives;
    }
    test_stats.total = test_stats.positives + test_stats.negatives;
    if (test_stats.total > 0)
        test_stats.grasp_rate = static_cast<double>(test_stats.positives) / test_stats.total;
    std::ofstream stats_txt(run_dir + "/benchstats.txt");
    stats_txt << dataset_stats_text(bundle.d0, bundle.stages, test_stats);
    return bundle;
}

std::string dataset_stats_text(const Dataset& random_trials,
                               const std::vector<StageResult>& stages,
                               const DatasetStats& test_stats) {
    std::ostringstream out;
    auto row = [&out](const std::string& name, std::size_t pos, std::size_t neg) {
        const std::size_t total = pos + neg;
        char buf[160];
        const double rate = total > 0 ? 100.0 * static_cast<double>(pos) / total : 0.0;
        std::snprintf(buf, sizeof(buf), "%-16s %8zu %8zu %8zu  %6.2f%%\n", name.c_str(), pos,
                      neg, total, rate);
        out << buf;
    };
    out << "collection       positive negative    total  grasp rate\n";
    const DatasetStats r = summarize(random_trials);
    row("random_trials", r.positives, r.negatives);
    std::size_t spos = 0, sneg = 0;
    for (const StageResult& s : stages) {
        spos += s.report.positives;
        sneg += s.report.trials - s.report.positives;
    }
    if (!stages.empty()) row("multi_staged", spos, sneg);
    row("test_set", test_stats.positives, test_stats.negatives);
    row("total", r.positives + spos + test_stats.positives,
        r.negatives + sneg + test_stats.negatives);
    return out.str();
}

}  // namespace gf
