#pragma once

#include <cstdint>
#include <vector>

#include "graspforge/raster.hpp"
#include "graspforge/rng.hpp"
#include "graspforge/scene.hpp"

namespace gf {

inline constexpr int kAngleBins = 18;
inline constexpr double kBinWidthDeg = 10.0;

// bin j covers [10j, 10j+10); input reduced mod 180
int bin_angle(double theta_deg);

// executed angle for a bin: its center
inline double bin_center_deg(int bin) { return bin * kBinWidthDeg + kBinWidthDeg / 2.0; }

struct Patch {
    Image pixels;       // square, values in [0,1]
    Vec2 center_mm{};
    int source_scale_px = 0;  // crop side before resize
};

struct PatchConfig {
    int input_side = 48;          // network input side after resize
    double context_scale = 1.5;   // crop side = context_scale * max_open * ppm
    double fill = 0.95;           // padding shade outside the image
};

// side of the grasp-centered crop before resizing
int context_crop_side(const GripperSpec& gripper, const Workspace& ws,
                      double context_scale = 1.5);

// side of the sqrt(2)-oversized crop kept for later rotation augmentation
int rotation_crop_side(int crop_side);

Image crop_centered(const Image& img, int center_r, int center_c, int side, double fill);
Image resize_bilinear(const Image& img, int out_w, int out_h);
// rotate content CCW (in the x=col, y=row frame) about the image center
Image rotate_bilinear(const Image& img, double angle_deg, double fill);

// grasp-centered crop at context scale, resized to the network input side;
// throws if the grasp center is outside the image
Patch extract_patch(const Image& img, const GraspConfig& grasp, const GripperSpec& gripper,
                    const Workspace& ws, const PatchConfig& cfg = {});

// oversized square crop around the grasp, big enough that any rotation still
// covers the context crop; raw pixels, no resize
Image extract_source_crop(const Image& img, const GraspConfig& grasp,
                          const GripperSpec& gripper, const Workspace& ws,
                          const PatchConfig& cfg = {});

// One network training sample; pixels 8-bit as stored in patch files.
struct TrainingSample {
    std::vector<std::uint8_t> pixels;
    int side = 0;
    int bin = 0;
    int label = 0;
};

struct AugmentConfig {
    int factor = 4;           // rotated copies per source sample
    bool bin_aligned = true;  // theta_rand from multiples of 10 deg
};

// Rotation augmentation from a source crop: each copy rotates by theta_rand,
// re-crops the central crop_side window, resizes to input_side and re-bins
// the label angle to (theta + theta_rand) mod 180.
std::vector<TrainingSample> augment_sample(const Image& source_crop, double theta_deg,
                                           int label, int crop_side, int input_side,
                                           double fill, const AugmentConfig& cfg, Rng& rng);

// single augmented view (used by augment_sample and tests)
TrainingSample make_augmented(const Image& source_crop, double theta_deg, int label,
                              double theta_rand_deg, int crop_side, int input_side,
                              double fill);

}  // namespace gf
