#include "graspforge/patch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gf {

int bin_angle(double theta_deg) {
    const double r = reduce_angle_180(theta_deg);
    int b = static_cast<int>(std::floor(r / kBinWidthDeg));
    if (b < 0) b = 0;
    if (b >= kAngleBins) b = kAngleBins - 1;
    return b;
}

int context_crop_side(const GripperSpec& gripper, const Workspace& ws, double context_scale) {
    return static_cast<int>(std::lround(context_scale * gripper.max_open_mm * ws.px_per_mm));
}

int rotation_crop_side(int crop_side) {
    int side = static_cast<int>(std::ceil(crop_side * std::sqrt(2.0)));
    // odd side keeps the grasp pixel exactly on the rotation center
    if (side % 2 == 0) ++side;
    return side;
}

Image crop_centered(const Image& img, int center_r, int center_c, int side, double fill) {
    Image out(side, side, fill);
    const int r0 = center_r - side / 2;
    const int c0 = center_c - side / 2;
    for (int r = 0; r < side; ++r) {
        const int sr = r0 + r;
        if (sr < 0 || sr >= img.h) continue;
        for (int c = 0; c < side; ++c) {
            const int sc = c0 + c;
            if (sc < 0 || sc >= img.w) continue;
            out.at(r, c) = img.at(sr, sc);
        }
    }
    return out;
}

namespace {

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

double sample_clamped(const Image& img, double y, double x) {
    const double xc = std::clamp(x, 0.0, static_cast<double>(img.w - 1));
    const double yc = std::clamp(y, 0.0, static_cast<double>(img.h - 1));
    const int x0 = static_cast<int>(std::floor(xc));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x1 = std::min(x0 + 1, img.w - 1);
    const int y1 = std::min(y0 + 1, img.h - 1);
    const double fx = xc - x0, fy = yc - y0;
    const double top = lerp(img.at(y0, x0), img.at(y0, x1), fx);
    const double bot = lerp(img.at(y1, x0), img.at(y1, x1), fx);
    return lerp(top, bot, fy);
}

double sample_filled(const Image& img, double y, double x, double fill) {
    if (x < -0.5 || y < -0.5 || x > img.w - 0.5 || y > img.h - 0.5) return fill;
    return sample_clamped(img, y, x);
}

}  // namespace

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    Image out(out_w, out_h);
    const double sx = static_cast<double>(img.w) / out_w;
    const double sy = static_cast<double>(img.h) / out_h;
    for (int r = 0; r < out_h; ++r) {
        const double y = (r + 0.5) * sy - 0.5;
        for (int c = 0; c < out_w; ++c) {
            const double x = (c + 0.5) * sx - 0.5;
            out.at(r, c) = sample_clamped(img, y, x);
        }
    }
    return out;
}

Image rotate_bilinear(const Image& img, double angle_deg, double fill) {
    Image out(img.w, img.h);
    const double a = deg2rad(angle_deg);
    const double co = std::cos(a), si = std::sin(a);
    const double cx = (img.w - 1) / 2.0, cy = (img.h - 1) / 2.0;
    for (int r = 0; r < img.h; ++r) {
        const double yr = r - cy;
        for (int c = 0; c < img.w; ++c) {
            const double xr = c - cx;
            // content rotated by +angle: output(p) samples input at R(-angle) p
            const double xs = co * xr + si * yr + cx;
            const double ys = -si * xr + co * yr + cy;
            out.at(r, c) = sample_filled(img, ys, xs, fill);
        }
    }
    return out;
}

namespace {

// pixel holding an mm position (pixel (r,c) center is ((c+.5)/ppm,(r+.5)/ppm))
void grasp_pixel(const GraspConfig& g, const Workspace& ws, int& r, int& c) {
    r = static_cast<int>(std::floor(g.y_mm * ws.px_per_mm));
    c = static_cast<int>(std::floor(g.x_mm * ws.px_per_mm));
}

}  // namespace

Patch extract_patch(const Image& img, const GraspConfig& grasp, const GripperSpec& gripper,
                    const Workspace& ws, const PatchConfig& cfg) {
    int r = 0, c = 0;
    grasp_pixel(grasp, ws, r, c);
    if (r < 0 || r >= img.h || c < 0 || c >= img.w)
        throw std::invalid_argument("extract_patch: grasp center outside image");
    const int side = context_crop_side(gripper, ws, cfg.context_scale);
    Patch p;
    p.center_mm = {grasp.x_mm, grasp.y_mm};
    p.source_scale_px = side;
    p.pixels = resize_bilinear(crop_centered(img, r, c, side, cfg.fill),
                               cfg.input_side, cfg.input_side);
    return p;
}

Image extract_source_crop(const Image& img, const GraspConfig& grasp,
                          const GripperSpec& gripper, const Workspace& ws,
                          const PatchConfig& cfg) {
    int r = 0, c = 0;
    grasp_pixel(grasp, ws, r, c);
    if (r < 0 || r >= img.h || c < 0 || c >= img.w)
        throw std::invalid_argument("extract_source_crop: grasp center outside image");
    const int side = rotation_crop_side(context_crop_side(gripper, ws, cfg.context_scale));
    return crop_centered(img, r, c, side, cfg.fill);
}

TrainingSample make_augmented(const Image& source_crop, double theta_deg, int label,
                              double theta_rand_deg, int crop_side, int input_side,
                              double fill) {
    Image rotated = (theta_rand_deg == 0.0)
                        ? source_crop
                        : rotate_bilinear(source_crop, theta_rand_deg, fill);
    const int cr = rotated.h / 2, cc = rotated.w / 2;
    Image window = crop_centered(rotated, cr, cc, crop_side, fill);
    Image resized = resize_bilinear(window, input_side, input_side);
    TrainingSample s;
    s.pixels = quantize_image(resized);
    s.side = input_side;
    s.bin = bin_angle(theta_deg + theta_rand_deg);
    s.label = label;
    return s;
}

std::vector<TrainingSample> augment_sample(const Image& source_crop, double theta_deg,
                                           int label, int crop_side, int input_side,
                                           double fill, const AugmentConfig& cfg, Rng& rng) {
    std::vector<TrainingSample> out;
    out.reserve(cfg.factor);
    for (int i = 0; i < cfg.factor; ++i) {
        const double tr = cfg.bin_aligned ? kBinWidthDeg * rng.uniform_int(kAngleBins)
                                          : rng.uniform(0.0, 180.0);
        out.push_back(make_augmented(source_crop, theta_deg, label, tr, crop_side,
                                     input_side, fill));
    }
    return out;
}

}  // namespace gf
