#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "leafnet/common.hpp"

namespace leafnet {

// H x W x 3 unsigned 8-bit raster, RGB interleaved, row-major.  White
// (255,255,255) is the background convention throughout the pipeline.
struct ImageU8 {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    ImageU8() = default;
    ImageU8(int h, int w) : height(h), width(w), data(size_t(h) * size_t(w) * 3, 255) {}

    static ImageU8 filled(int h, int w, uint8_t r, uint8_t g, uint8_t b) {
        ImageU8 img(h, w);
        for (size_t i = 0; i < img.data.size(); i += 3) {
            img.data[i] = r;
            img.data[i + 1] = g;
            img.data[i + 2] = b;
        }
        return img;
    }

    uint8_t& at(int y, int x, int c) { return data[(size_t(y) * width + x) * 3 + c]; }
    uint8_t at(int y, int x, int c) const { return data[(size_t(y) * width + x) * 3 + c]; }

    bool operator==(const ImageU8& o) const { return height == o.height && width == o.width && data == o.data; }
};

namespace detail {

// round half away from zero, clamp to [0,255]
inline uint8_t quantize(double v) {
    const double r = std::round(v);
    return uint8_t(r < 0.0 ? 0.0 : (r > 255.0 ? 255.0 : r));
}

// snap trig values so lattice-preserving angles (multiples of 90 degrees)
// produce exact pixel permutations instead of epsilon interpolation
inline double snap_unit(double v) {
    if (std::fabs(v) < 1e-12) return 0.0;
    if (std::fabs(v - 1.0) < 1e-12) return 1.0;
    if (std::fabs(v + 1.0) < 1e-12) return -1.0;
    return v;
}

// bilinear sample at (sx, sy); out-of-canvas source pixels read as white
inline void sample_white_fill(const ImageU8& img, double sx, double sy, double out[3]) {
    const double fx0 = std::floor(sx), fy0 = std::floor(sy);
    const int x0 = int(fx0), y0 = int(fy0);
    const double ax = sx - fx0, ay = sy - fy0;
    const double w00 = (1.0 - ax) * (1.0 - ay), w10 = ax * (1.0 - ay);
    const double w01 = (1.0 - ax) * ay, w11 = ax * ay;
    auto px = [&](int x, int y, int c) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 255.0;
        return img.at(y, x, c);
    };
    for (int c = 0; c < 3; ++c)
        out[c] = w00 * px(x0, y0, c) + w10 * px(x0 + 1, y0, c) + w01 * px(x0, y0 + 1, c) + w11 * px(x0 + 1, y0 + 1, c);
}

}  // namespace detail

// Rotation about the canvas center; canvas size unchanged, bilinear
// interpolation, white fill outside the source canvas.
inline ImageU8 rotate(const ImageU8& img, double angle_deg) {
    const double rad = angle_deg * 3.14159265358979323846 / 180.0;
    const double c = detail::snap_unit(std::cos(rad));
    const double s = detail::snap_unit(std::sin(rad));
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            double v[3];
            detail::sample_white_fill(img, sx, sy, v);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = detail::quantize(v[ch]);
        }
    return out;
}

// Content scaled by `factor` about the canvas center; canvas size unchanged,
// white fill where shrinking exposes the background.
inline ImageU8 rescale(const ImageU8& img, double factor) {
    if (!(factor > 0.0)) throw ParameterError("rescale factor must be positive, got " + std::to_string(factor));
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double sx = cx + (x - cx) / factor;
            const double sy = cy + (y - cy) / factor;
            double v[3];
            detail::sample_white_fill(img, sx, sy, v);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = detail::quantize(v[ch]);
        }
    return out;
}

inline ImageU8 crop(const ImageU8& img, int x, int y, int size) {
    if (x < 0 || y < 0 || x + size > img.width || y + size > img.height)
        throw ParameterError("crop window " + std::to_string(size) + "x" + std::to_string(size) + " at (" +
                             std::to_string(x) + "," + std::to_string(y) + ") exceeds " + std::to_string(img.width) +
                             "x" + std::to_string(img.height) + " image");
    ImageU8 out(size, size);
    for (int yy = 0; yy < size; ++yy)
        for (int xx = 0; xx < size; ++xx)
            for (int c = 0; c < 3; ++c) out.at(yy, xx, c) = img.at(y + yy, x + xx, c);
    return out;
}

// v' = clamp(round(v * factor)); the white background changes too
inline ImageU8 adjust_contrast(const ImageU8& img, double factor) {
    ImageU8 out(img.height, img.width);
    for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = detail::quantize(img.data[i] * factor);
    return out;
}

// v' = clamp(round(v + delta))
inline ImageU8 adjust_brightness(const ImageU8& img, double delta) {
    ImageU8 out(img.height, img.width);
    for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = detail::quantize(img.data[i] + delta);
    return out;
}

inline ImageU8 flip_horizontal(const ImageU8& img) {
    ImageU8 out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

// Plain bilinear resize with edge clamping (content resampling, not the
// canvas-preserving rescale above).  Aspect ratio is whatever the caller
// asks for.
inline ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ParameterError("resize target must be positive");
    ImageU8 out(out_h, out_w);
    const double sy = double(img.height) / out_h, sx = double(img.width) / out_w;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const double src_y = (y + 0.5) * sy - 0.5;
            const double src_x = (x + 0.5) * sx - 0.5;
            const double fy0 = std::floor(src_y), fx0 = std::floor(src_x);
            const double ay = src_y - fy0, ax = src_x - fx0;
            auto cl = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
            const int y0 = cl(int(fy0), img.height - 1), y1 = cl(int(fy0) + 1, img.height - 1);
            const int x0 = cl(int(fx0), img.width - 1), x1 = cl(int(fx0) + 1, img.width - 1);
            for (int c = 0; c < 3; ++c) {
                const double v = (1 - ax) * (1 - ay) * img.at(y0, x0, c) + ax * (1 - ay) * img.at(y0, x1, c) +
                                 (1 - ax) * ay * img.at(y1, x0, c) + ax * ay * img.at(y1, x1, c);
                out.at(y, x, c) = detail::quantize(v);
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// PPM / PGM
// ---------------------------------------------------------------------------

inline void write_ppm(const std::filesystem::path& path, const ImageU8& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
    if (!f) throw IoError("short write to " + path.string());
}

inline ImageU8 read_ppm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P6") throw IoError(path.string() + " is not a binary PPM (P6) file");
    auto next_int = [&]() {
        // skip whitespace and '#' comment lines
        for (;;) {
            int ch = f.peek();
            if (ch == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(ch)) {
                f.get();
            } else {
                break;
            }
        }
        int v;
        f >> v;
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255) throw IoError(path.string() + ": only maxval 255 supported");
    f.get();  // single whitespace after header
    ImageU8 img(h, w);
    f.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
    if (f.gcount() != std::streamsize(img.data.size())) throw IoError(path.string() + " is truncated");
    return img;
}

// 8-bit grayscale, used for the confusion-matrix rendering
inline void write_pgm(const std::filesystem::path& path, int height, int width, const std::vector<uint8_t>& gray) {
    if (gray.size() != size_t(height) * size_t(width)) throw ParameterError("pgm buffer does not match dimensions");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "P5\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(gray.data()), std::streamsize(gray.size()));
    if (!f) throw IoError("short write to " + path.string());
}

}  // namespace leafnet
