#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspforge/geometry.hpp"
#include "graspforge/patch.hpp"
#include "graspforge/raster.hpp"
#include "graspforge/staged.hpp"

namespace gf {

// ---- "common-sense" eigenvalue heuristic ----

struct HeuristicParams {
    double angle_error_threshold_deg = 15.0;
    double eigenvalue_limit = 0.0;  // extent threshold in patch pixels
    bool raw_eigenvalue = false;    // compare lambda_max itself instead of 2*sqrt
};

struct HeuristicAnalysis {
    bool empty_foreground = true;
    double grasp_angle_deg = 0.0;  // direction of the smallest-eigenvalue eigenvector
    double extent_px = 0.0;        // 2*sqrt(lambda_max)
    double lambda_max = 0.0;
};

// covariance analysis of foreground pixels (pixel value < fg_threshold)
HeuristicAnalysis heuristic_analyze(const Image& patch, double fg_threshold = 0.9);

// success prediction for an executed angle
bool heuristic_predict(const HeuristicAnalysis& a, double theta_deg, const HeuristicParams& p);

// ---- HoG descriptor ----

struct HogConfig {
    int cell = 8;
    int orientation_bins = 9;  // unsigned, over [0,180)
    int block = 2;             // block = block x block cells, L2 normalized
};

std::vector<double> hog(const Image& patch, const HogConfig& cfg = {});
std::size_t hog_length(int patch_side, const HogConfig& cfg = {});

// ---- per-bin kNN ----

struct KnnModel {
    int k = 5;
    HogConfig hog_cfg;
    std::array<std::vector<std::pair<std::vector<double>, int>>, kAngleBins> store;
};

KnnModel knn_build(const std::vector<std::pair<Image, std::pair<int, int>>>& train,  // (patch,(bin,label))
                   int k, const HogConfig& cfg = {});
// majority vote among k nearest same-bin neighbors; ties and empty bins
// predict negative
int knn_predict(const KnnModel& model, const std::vector<double>& descriptor, int bin, int k);
int knn_predict(const KnnModel& model, const Image& patch, int bin);

// ---- per-bin linear SVM ----

struct SvmBin {
    std::vector<double> w;
    double b = 0.0;
    bool degenerate = false;
    int majority_label = 0;
};

struct SvmModel {
    std::array<SvmBin, kAngleBins> bins;
    double C = 1.0;
    HogConfig hog_cfg;
};

struct SvmTrainConfig {
    int epochs = 60;
    std::uint64_t seed = 0;
    // step-size warmup in units of dataset passes; larger = smoother
    double warmup_factor = 10.0;
};

// primal subgradient descent on hinge loss + L2; per-epoch objective values
// (averaged over the epoch) are returned via objective_curve when non-null
SvmBin svm_train_bin(const std::vector<std::pair<std::vector<double>, int>>& data, double C,
                     const SvmTrainConfig& cfg, std::vector<double>* objective_curve = nullptr);

double svm_margin(const SvmBin& bin, const std::vector<double>& descriptor);
int svm_predict(const SvmModel& model, const std::vector<double>& descriptor, int bin);

SvmModel svm_train(const std::vector<std::pair<Image, std::pair<int, int>>>& train,
                   const std::vector<double>& c_grid, double validation_fraction,
                   const SvmTrainConfig& cfg, const HogConfig& hog_cfg = {});

// hinge objective 0.5*||w||^2 + C * sum hinge_i
double svm_objective(const SvmBin& bin, double C,
                     const std::vector<std::pair<std::vector<double>, int>>& data);

// ---- predictor wrappers (scores in {0,1} for the hard baselines) ----

struct HeuristicPredictor final : PatchScorer {
    HeuristicParams params;
    double fg_threshold = 0.9;
    std::array<double, kAngleBins> scores18(const Image& patch) const override;
};

struct KnnPredictor final : PatchScorer {
    const KnnModel* model;
    explicit KnnPredictor(const KnnModel& m) : model(&m) {}
    std::array<double, kAngleBins> scores18(const Image& patch) const override;
};

struct SvmPredictor final : PatchScorer {
    const SvmModel* model;
    explicit SvmPredictor(const SvmModel& m) : model(&m) {}
    std::array<double, kAngleBins> scores18(const Image& patch) const override;
};

}  // namespace gf
