#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "graspforge/patch.hpp"
#include "graspforge/raster.hpp"

namespace gf {

enum class LayerKind { Conv, ReLU, Pool, Linear };

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    // conv: in_c,out_c,k,stride,pad; pool: k,stride; linear: in_dim,out_dim
    int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
    int in_dim = 0, out_dim = 0;
    // propagated shapes (flat size for linear/relu-after-linear)
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
    int input_size = 0, output_size = 0;

    std::size_t weight_count() const;
    std::size_t bias_count() const;
};

struct Architecture {
    std::string name = "custom";
    int input_side = 48;
    std::vector<LayerSpec> trunk;
    int trunk_dim = 0;   // set by finalize()
    int n_heads = kAngleBins;
    int head_logits = 2;

    // propagate shapes through the trunk; throws on inconsistent specs
    void finalize();

    std::string descriptor() const;
    static Architecture from_descriptor(const std::string& text);

    // 3 conv blocks (8/16/32 ch, 3x3, stride-2 max pool) + fc 256 + fc 64
    static Architecture desk(int input_side = 48);
    // AlexNet-like conv stack + fc 4096 + fc 1024, 227 px input
    static Architecture paper_scale();
    // small net for fast tests/probes
    static Architecture tiny(int input_side = 12);
};

// Trainable parameters. Trunk entries align with arch.trunk (empty vectors
// for ReLU/Pool); heads are one (n_heads*head_logits) x trunk_dim map, rows
// 2j and 2j+1 forming the j-th binary head.
struct ModelParams {
    Architecture arch;
    std::vector<std::vector<double>> w, b;
    std::vector<double> head_w, head_b;

    std::size_t param_count() const;
};

ModelParams init_model(const Architecture& arch, std::uint64_t seed);

struct ActivationMatrix {
    std::array<std::array<double, 2>, kAngleBins> logits{};
    std::array<double, kAngleBins> scores{};  // softmax positive component
};

// Per-sample forward scratch; reusable across calls, one per thread.
struct FwdCache {
    std::vector<std::vector<double>> acts;   // acts[0] = input, acts[i] = layer i output
    std::vector<std::vector<double>> gacts;  // matching gradient buffers
    void prepare(const Architecture& arch);
};

// Gradient accumulator mirroring ModelParams.
struct GradBuffer {
    std::vector<std::vector<double>> w, b;
    std::vector<double> head_w, head_b;
    void prepare(const ModelParams& m);
    void zero();
    void add(const GradBuffer& other);
};

double stable_logistic(double x);
// softmax cross-entropy of a 2-logit head at the given label
double binary_ce(double z0, double z1, int label);

// forward pass; input must be input_side^2 doubles in [0,1]
ActivationMatrix forward(const ModelParams& m, const double* patch, FwdCache& cache);
ActivationMatrix forward(const ModelParams& m, const Image& patch);
ActivationMatrix forward(const ModelParams& m, const std::vector<std::uint8_t>& patch_u8,
                         int side);

// Eq-style masked batch loss: each sample contributes the binary
// cross-entropy of its trial-angle head only; L_B is the batch SUM.
struct LossReport {
    double L_B = 0.0;
    std::vector<double> contributions;
};
LossReport batch_loss(const std::vector<ActivationMatrix>& activations,
                      const std::vector<std::pair<int, int>>& bin_and_label);

// forward + masked loss + backprop for one sample; accumulates parameter
// gradients (sum form) into grad and returns the sample loss
double accumulate_gradients(const ModelParams& m, const double* patch, int bin, int label,
                            FwdCache& cache, GradBuffer& grad);

// low-level trunk hooks (auxiliary training heads attach here):
// forward expects cache.acts[0] filled; backward expects cache.gacts.back()
// filled with d(loss)/d(trunk output)
void run_trunk_forward(const ModelParams& m, FwdCache& cache);
void run_trunk_backward(const ModelParams& m, FwdCache& cache, GradBuffer& grad);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 20;
    int batch_size = 64;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};
TrainConfig stage0_schedule(std::uint64_t seed = 0);   // lr 0.01, 20 epochs
TrainConfig stagek_schedule(std::uint64_t seed = 0);   // lr 0.001, 5 epochs

struct SgdMomentum {
    double learning_rate = 0.01;
    double momentum = 0.9;
    GradBuffer velocity;
    void prepare(const ModelParams& m);
    // applies one step from summed gradients over `batch_n` samples
    void step(ModelParams& m, const GradBuffer& grad_sum, int batch_n);
};

// one SGD-with-momentum step on a batch (separate optimizer state per call
// site); throws on non-finite gradients
void backward_and_step(ModelParams& m, SgdMomentum& opt,
                       const std::vector<const TrainingSample*>& batch, int workers = 1);

struct TrainResult {
    std::vector<double> epoch_mean_loss;
};

// full training loop over a schedule; deterministic for fixed seeds and any
// worker count (fixed-order gradient bucket reduction)
TrainResult train(ModelParams& m, const std::vector<TrainingSample>& samples,
                  const std::vector<TrainConfig>& schedule, int workers = 1);

// binary checkpoint: magic, architecture descriptor, params as LE float64
void save_checkpoint(const std::string& path, const ModelParams& m);
ModelParams load_checkpoint(const std::string& path);

// parameter blocks in declaration order (w0,b0,w1,b1,...,head_w,head_b);
// used by the checkpoint writer and finite-difference checks
std::vector<std::pair<double*, std::size_t>> param_blocks(ModelParams& m);
std::vector<std::pair<const double*, std::size_t>> param_blocks(const ModelParams& m);
std::vector<std::pair<double*, std::size_t>> grad_blocks(GradBuffer& g);

}  // namespace gf
