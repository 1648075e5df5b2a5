#include "graspforge/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graspforge/collector.hpp"

namespace gf {

std::vector<AuxSample> build_aux_dataset(const std::vector<ObjectShape>& library,
                                         int n_samples, const Workspace& ws,
                                         const GripperSpec& gripper, const PatchConfig& patch,
                                         double background_shade, std::uint64_t seed) {
    if (library.empty()) throw std::invalid_argument("build_aux_dataset: empty library");
    std::vector<AuxSample> out;
    out.reserve(n_samples);
    Rng rng = Rng::derive(seed, 0xa0c5a3e5ULL);
    constexpr int kPatchesPerScene = 4;
    int scene_counter = 0;
    while (static_cast<int>(out.size()) < n_samples) {
        const int cls = rng.uniform_int(static_cast<int>(library.size()));
        const std::uint64_t scene_seed = mix64(seed + 0x517) + scene_counter;
        ++scene_counter;
        Scene scene;
        try {
            scene = generate_scene(scene_seed, 1, {library[cls]}, ws);
        } catch (const std::runtime_error&) {
            continue;  // unplaceable draw; try another seed
        }
        const RenderResult view = render(scene, background_shade);
        const auto components = occupancy_components(view.occupancy);
        if (components.empty()) continue;
        for (int i = 0; i < kPatchesPerScene && static_cast<int>(out.size()) < n_samples; ++i) {
            const RegionOfInterest roi = sample_roi(components, rng);
            const GraspConfig g = sample_grasp(roi, ws, rng);
            const Patch p = extract_patch(view.image, g, gripper, ws, patch);
            AuxSample s;
            s.pixels = quantize_image(p.pixels);
            s.side = patch.input_side;
            s.cls = cls;
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

// softmax cross-entropy over n classes; returns loss, fills dlogits
double multiclass_ce(const std::vector<double>& logits, int cls, std::vector<double>& dlogits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    const double lse = m + std::log(sum);
    dlogits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        dlogits[i] = std::exp(logits[i] - lse) - (static_cast<int>(i) == cls ? 1.0 : 0.0);
    }
    return lse - logits[cls];
}

}  // namespace

PretrainResult pretrain_features(const Architecture& arch, const std::vector<AuxSample>& aux,
                                 int n_classes, const TrainConfig& cfg,
                                 std::uint64_t model_seed, int workers) {
    (void)workers;  // aux training is small; runs single-threaded
    if (aux.empty()) throw std::invalid_argument("pretrain_features: empty aux dataset");
    PretrainResult res;
    res.model = init_model(arch, model_seed);
    ModelParams& m = res.model;
    const int T = m.arch.trunk_dim;

    // aux head init from its own stream
    Rng aux_rng = Rng::derive(model_seed, 0xa0ccad17ULL);
    res.aux_w.resize(static_cast<std::size_t>(n_classes) * T);
    res.aux_b.assign(n_classes, 0.0);
    for (double& v : res.aux_w) v = 0.01 * aux_rng.gaussian();

    FwdCache cache;
    cache.prepare(m.arch);
    GradBuffer grad;
    grad.prepare(m);
    std::vector<double> aux_gw(res.aux_w.size());
    std::vector<double> aux_gb(res.aux_b.size());
    SgdMomentum opt;
    opt.learning_rate = cfg.learning_rate;
    opt.momentum = cfg.momentum;
    opt.prepare(m);
    GradBuffer aux_vel;  // velocity for the aux head, stored flat in head slots
    std::vector<double> vel_w(res.aux_w.size(), 0.0), vel_b(res.aux_b.size(), 0.0);
    (void)aux_vel;

    std::vector<std::size_t> order(aux.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> logits(n_classes), dlogits(n_classes);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::derive(cfg.seed, rng_tag::kShuffle, 0x5000 + epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.uniform_int(static_cast<int>(i));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            grad.zero();
            std::fill(aux_gw.begin(), aux_gw.end(), 0.0);
            std::fill(aux_gb.begin(), aux_gb.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const AuxSample& s = aux[order[i]];
                for (std::size_t j = 0; j < s.pixels.size(); ++j)
                    cache.acts[0][j] = s.pixels[j] / 255.0;
                run_trunk_forward(m, cache);
                const double* trunk = cache.acts.back().data();
                for (int c = 0; c < n_classes; ++c) {
                    const double* wrow = res.aux_w.data() + static_cast<std::size_t>(c) * T;
                    double acc = res.aux_b[c];
                    for (int t = 0; t < T; ++t) acc += wrow[t] * trunk[t];
                    logits[c] = acc;
                }
                epoch_loss += multiclass_ce(logits, s.cls, dlogits);
                double* gtr = cache.gacts.back().data();
                std::fill(gtr, gtr + T, 0.0);
                for (int c = 0; c < n_classes; ++c) {
                    const double g = dlogits[c];
                    const double* wrow = res.aux_w.data() + static_cast<std::size_t>(c) * T;
                    double* gwrow = aux_gw.data() + static_cast<std::size_t>(c) * T;
                    for (int t = 0; t < T; ++t) {
                        gwrow[t] += g * trunk[t];
                        gtr[t] += g * wrow[t];
                    }
                    aux_gb[c] += g;
                }
                run_trunk_backward(m, cache, grad);
            }
            const int batch_n = static_cast<int>(end - start);
            const double scale = 1.0 / batch_n;
            // trunk step via the shared optimizer (head slots in grad are zero)
            opt.step(m, grad, batch_n);
            for (std::size_t j = 0; j < res.aux_w.size(); ++j) {
                vel_w[j] = cfg.momentum * vel_w[j] - cfg.learning_rate * aux_gw[j] * scale;
                res.aux_w[j] += vel_w[j];
            }
            for (std::size_t j = 0; j < res.aux_b.size(); ++j) {
                vel_b[j] = cfg.momentum * vel_b[j] - cfg.learning_rate * aux_gb[j] * scale;
                res.aux_b[j] += vel_b[j];
            }
        }
        res.curve.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(aux.size()));
    }

    // grasp heads re-initialized from the model seed's head stream, so a
    // 0-epoch pretrain reproduces the scratch init exactly
    Rng head_rng = Rng::derive(model_seed, rng_tag::kHeadInit);
    for (double& v : m.head_w) v = 0.01 * head_rng.gaussian();
    std::fill(m.head_b.begin(), m.head_b.end(), 0.0);
    return res;
}

int aux_predict(const ModelParams& trunk_model, const std::vector<double>& aux_w,
                const std::vector<double>& aux_b, const AuxSample& s) {
    const int T = trunk_model.arch.trunk_dim;
    const int n_classes = static_cast<int>(aux_b.size());
    FwdCache cache;
    cache.prepare(trunk_model.arch);
    for (std::size_t j = 0; j < s.pixels.size(); ++j) cache.acts[0][j] = s.pixels[j] / 255.0;
    run_trunk_forward(trunk_model, cache);
    const double* trunk = cache.acts.back().data();
    int best = 0;
    double best_v = -1e300;
    for (int c = 0; c < n_classes; ++c) {
        const double* wrow = aux_w.data() + static_cast<std::size_t>(c) * T;
        double acc = aux_b[c];
        for (int t = 0; t < T; ++t) acc += wrow[t] * trunk[t];
        if (acc > best_v) {
            best_v = acc;
            best = c;
        }
    }
    return best;
}

double aux_accuracy(const ModelParams& trunk_model, const std::vector<double>& aux_w,
                    const std::vector<double>& aux_b, const std::vector<AuxSample>& samples) {
    if (samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const AuxSample& s : samples) {
        if (aux_predict(trunk_model, aux_w, aux_b, s) == s.cls) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace gf
