#pragma once

#include <cstdint>
#include <vector>

#include "graspforge/model.hpp"
#include "graspforge/scene.hpp"

namespace gf {

// Auxiliary shape-classification task used to warm-start the trunk before
// grasp training (stands in for generic visual pretraining).
struct AuxSample {
    std::vector<std::uint8_t> pixels;
    int side = 0;
    int cls = 0;
};

// Single-object scenes rendered and cropped like grasp patches; the class is
// the shape's index in `library`.
std::vector<AuxSample> build_aux_dataset(const std::vector<ObjectShape>& library,
                                         int n_samples, const Workspace& ws,
                                         const GripperSpec& gripper, const PatchConfig& patch,
                                         double background_shade, std::uint64_t seed);

struct PretrainResult {
    ModelParams model;              // trained trunk + freshly initialized heads
    std::vector<double> aux_w;      // aux classification head (kept for eval)
    std::vector<double> aux_b;
    TrainResult curve;
};

// Trains trunk+aux-head on the classification task, then returns a grasp
// model whose heads are re-initialized from the model seed's head stream.
// With 0 epochs the result is bit-identical to init_model(arch, model_seed).
PretrainResult pretrain_features(const Architecture& arch, const std::vector<AuxSample>& aux,
                                 int n_classes, const TrainConfig& cfg,
                                 std::uint64_t model_seed, int workers = 1);

// classify one sample with the trained trunk + aux head
int aux_predict(const ModelParams& trunk_model, const std::vector<double>& aux_w,
                const std::vector<double>& aux_b, const AuxSample& s);

double aux_accuracy(const ModelParams& trunk_model, const std::vector<double>& aux_w,
                    const std::vector<double>& aux_b, const std::vector<AuxSample>& samples);

}  // namespace gf
