#include "graspforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace gf {

std::size_t Mask::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : m) n += (b != 0);
    return n;
}

std::uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

std::vector<std::uint8_t> quantize_image(const Image& img) {
    std::vector<std::uint8_t> out(img.px.size());
    for (std::size_t i = 0; i < img.px.size(); ++i) out[i] = quantize8(img.px[i]);
    return out;
}

Image dequantize_image(const std::vector<std::uint8_t>& bytes, int w, int h) {
    Image img(w, h);
    if (bytes.size() != img.px.size())
        throw std::runtime_error("dequantize_image: size mismatch");
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.px[i] = static_cast<double>(bytes[i]) / 255.0;
    return img;
}

namespace {

void write_pgm_bytes(const std::string& path, int w, int h,
                     const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_pgm(const std::string& path, const Image& img) {
    write_pgm_bytes(path, img.w, img.h, quantize_image(img));
}

void write_pgm(const std::string& path, const Mask& mask) {
    std::vector<std::uint8_t> bytes(mask.m.size());
    for (std::size_t i = 0; i < mask.m.size(); ++i) bytes[i] = mask.m[i] ? 255 : 0;
    write_pgm_bytes(path, mask.w, mask.h, bytes);
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path);
    auto next_token = [&in, &path]() {
        std::string tok;
        // skip whitespace and '#' comment lines
        for (;;) {
            const int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        in >> tok;
        if (!in) throw std::runtime_error("truncated PGM header: " + path);
        return tok;
    };
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255) throw std::runtime_error("unsupported PGM maxval: " + path);
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("truncated PGM data: " + path);
    return dequantize_image(bytes, w, h);
}

}  // namespace gf
