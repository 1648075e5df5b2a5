#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gf {

// Row-major grayscale raster, values in [0,1].
struct Image {
    int w = 0, h = 0;
    std::vector<double> px;

    Image() = default;
    Image(int width, int height, double fill = 0.0)
        : w(width), h(height), px(static_cast<std::size_t>(width) * height, fill) {}

    double& at(int r, int c) { return px[static_cast<std::size_t>(r) * w + c]; }
    double at(int r, int c) const { return px[static_cast<std::size_t>(r) * w + c]; }
};

// Row-major boolean raster (occupancy).
struct Mask {
    int w = 0, h = 0;
    std::vector<std::uint8_t> m;

    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : w(width), h(height), m(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {}

    std::uint8_t& at(int r, int c) { return m[static_cast<std::size_t>(r) * w + c]; }
    std::uint8_t at(int r, int c) const { return m[static_cast<std::size_t>(r) * w + c]; }
    std::size_t count() const;
};

// 8-bit quantization used everywhere an image crosses the file boundary.
std::uint8_t quantize8(double v);
std::vector<std::uint8_t> quantize_image(const Image& img);
Image dequantize_image(const std::vector<std::uint8_t>& bytes, int w, int h);

// Binary PGM (P5), 8-bit.
void write_pgm(const std::string& path, const Image& img);
void write_pgm(const std::string& path, const Mask& mask);
Image read_pgm(const std::string& path);

}  // namespace gf
