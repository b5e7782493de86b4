#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "leafnet/common.hpp"
#include "leafnet/image.hpp"

// Label-preserving transformations.  A transform consumes a square canvas
// image (350x350 at full scale) and produces the network input crop (300x300
// at full scale); both sizes travel together as TransformGeometry so the
// desk-scale datasets can run the identical pipeline at 64/56.

namespace leafnet {

struct TransformGeometry {
    int canvas = 350;
    int crop = 300;

    int max_offset() const { return canvas - crop; }
    int centered_offset() const { return max_offset() / 2; }

    void validate() const {
        if (crop <= 0 || canvas < crop)
            throw ConfigError("transform geometry requires canvas >= crop > 0, got canvas " + std::to_string(canvas) +
                              " crop " + std::to_string(crop));
    }
};

struct TransformParams {
    double angle = 0.0;       // degrees in [0, 360)
    double scale = 1.0;       // 2^[-0.1, 0.1] under TR
    int crop_x = 0;           // window offset, [0, canvas - crop]
    int crop_y = 0;
    double contrast = 1.0;    // 2^[-1, 1] under TR
    double brightness = 0.0;  // [-20, 20] color units
    bool flip = false;
};

enum class PolicyKind { T0, TR, TF };

struct TransformPolicy {
    PolicyKind kind = PolicyKind::TR;
    int rotations = 64;  // TF only: count of fixed rotations

    static TransformPolicy t0() { return {PolicyKind::T0, 64}; }
    static TransformPolicy tr() { return {PolicyKind::TR, 64}; }
    static TransformPolicy tf(int count = 64) { return {PolicyKind::TF, count}; }
};

inline const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::T0: return "t0";
        case PolicyKind::TR: return "tr";
        default: return "tf";
    }
}

inline TransformParams identity_params(const TransformGeometry& geom) {
    TransformParams p;
    p.crop_x = p.crop_y = geom.centered_offset();
    return p;
}

inline void validate_params(const TransformParams& p, const TransformGeometry& geom) {
    const double lo_s = std::pow(2.0, -0.1), hi_s = std::pow(2.0, 0.1);
    if (p.angle < 0.0 || p.angle >= 360.0) throw ParameterError("angle out of [0,360): " + std::to_string(p.angle));
    if (p.scale < lo_s || p.scale > hi_s) throw ParameterError("scale out of 2^[-0.1,0.1]: " + std::to_string(p.scale));
    if (p.contrast < 0.5 || p.contrast > 2.0)
        throw ParameterError("contrast out of 2^[-1,1]: " + std::to_string(p.contrast));
    if (p.brightness < -20.0 || p.brightness > 20.0)
        throw ParameterError("brightness out of [-20,20]: " + std::to_string(p.brightness));
    if (p.crop_x < 0 || p.crop_y < 0 || p.crop_x > geom.max_offset() || p.crop_y > geom.max_offset())
        throw ParameterError("crop offset (" + std::to_string(p.crop_x) + "," + std::to_string(p.crop_y) +
                             ") outside [0," + std::to_string(geom.max_offset()) + "]");
}

// One uniformly random draw; field order is fixed so a seeded stream always
// yields the same parameter sequence.
inline TransformParams sample_tr(const TransformGeometry& geom, Rng& rng) {
    TransformParams p;
    p.angle = rng.uniform(0.0, 360.0);
    p.scale = std::pow(2.0, rng.uniform(-0.1, 0.1));
    p.crop_x = int(rng.uniform_int(0, geom.max_offset()));
    p.crop_y = int(rng.uniform_int(0, geom.max_offset()));
    p.contrast = std::pow(2.0, rng.uniform(-1.0, 1.0));
    p.brightness = rng.uniform(-20.0, 20.0);
    p.flip = rng.bernoulli(0.5);
    return p;
}

// Evenly spaced rotation series: identity except angle = i * (360 / count).
inline std::vector<TransformParams> fixed_rotations(int count, const TransformGeometry& geom) {
    if (count < 1) throw ParameterError("rotation count must be >= 1, got " + std::to_string(count));
    std::vector<TransformParams> out;
    out.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        TransformParams p = identity_params(geom);
        p.angle = double(i) * (360.0 / double(count));
        out.push_back(p);
    }
    return out;
}

inline std::vector<TransformParams> sample_params(const TransformPolicy& policy, const TransformGeometry& geom,
                                                  Rng& rng) {
    switch (policy.kind) {
        case PolicyKind::T0: return {identity_params(geom)};
        case PolicyKind::TR: return {sample_tr(geom, rng)};
        default: return fixed_rotations(policy.rotations, geom);
    }
}

// rotate -> rescale -> crop -> contrast -> brightness -> flip
inline ImageU8 apply_transform(const ImageU8& img, const TransformParams& p, const TransformGeometry& geom) {
    geom.validate();
    if (img.height != geom.canvas || img.width != geom.canvas)
        throw DimensionError("apply_transform expects a " + std::to_string(geom.canvas) + "x" +
                             std::to_string(geom.canvas) + " canvas, got " + std::to_string(img.height) + "x" +
                             std::to_string(img.width));
    ImageU8 work = (p.angle != 0.0) ? rotate(img, p.angle) : img;
    if (p.scale != 1.0) work = rescale(work, p.scale);
    work = crop(work, p.crop_x, p.crop_y, geom.crop);
    if (p.contrast != 1.0) work = adjust_contrast(work, p.contrast);
    if (p.brightness != 0.0) work = adjust_brightness(work, p.brightness);
    if (p.flip) work = flip_horizontal(work);
    return work;
}

}  // namespace leafnet
