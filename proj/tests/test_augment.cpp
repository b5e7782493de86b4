#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "leafnet/augment.hpp"
#include "leafnet/image.hpp"
#include "testutil.hpp"

using namespace leafnet;

namespace {

// smooth colored disk on white background; radius in pixels
ImageU8 disk_image(int size, int radius) {
    ImageU8 img(size, size);
    const double c = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d = std::hypot(x - c, y - c);
            if (d <= radius) {
                img.at(y, x, 0) = uint8_t(60 + 0.35 * x);
                img.at(y, x, 1) = uint8_t(90 + 0.30 * y);
                img.at(y, x, 2) = uint8_t(40 + 0.20 * (x + y));
            }
        }
    return img;
}

bool non_white(const ImageU8& img, int y, int x) {
    return img.at(y, x, 0) < 250 || img.at(y, x, 1) < 250 || img.at(y, x, 2) < 250;
}

// pixels at Chebyshev distance >= margin from any white pixel
std::vector<std::pair<int, int>> interior_pixels(const ImageU8& img, int margin) {
    std::vector<std::pair<int, int>> out;
    for (int y = margin; y < img.height - margin; ++y)
        for (int x = margin; x < img.width - margin; ++x) {
            bool ok = true;
            for (int dy = -margin; ok && dy <= margin; ++dy)
                for (int dx = -margin; ok && dx <= margin; ++dx)
                    if (!non_white(img, y + dy, x + dx)) ok = false;
            if (ok) out.emplace_back(y, x);
        }
    return out;
}

double mean_abs_error(const ImageU8& a, const ImageU8& b, const std::vector<std::pair<int, int>>& px) {
    double sum = 0.0;
    for (auto [y, x] : px)
        for (int c = 0; c < 3; ++c) sum += std::fabs(double(a.at(y, x, c)) - double(b.at(y, x, c)));
    return sum / (3.0 * double(px.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// rotate
// ---------------------------------------------------------------------------

TEST_CASE("rotate by 0 is bit-identical", "[augment][rotate]") {
    ImageU8 img = disk_image(64, 20);
    CHECK(rotate(img, 0.0) == img);
}

TEST_CASE("rotate by 180 is an exact index reversal", "[augment][rotate]") {
    ImageU8 img = disk_image(65, 22);
    img.at(3, 7, 0) = 13;  // off-center marker
    ImageU8 r = rotate(img, 180.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) CHECK(r.at(y, x, c) == img.at(img.height - 1 - y, img.width - 1 - x, c));
}

TEST_CASE("rotate round trip keeps interior pixels close", "[augment][rotate]") {
    ImageU8 img = disk_image(256, 80);
    ImageU8 back = rotate(rotate(img, 33.0), -33.0);
    auto interior = interior_pixels(img, 5);
    REQUIRE(interior.size() > 1000);
    CHECK(mean_abs_error(img, back, interior) <= 3.0);
}

TEST_CASE("rotate fills exposed corners with white", "[augment][rotate]") {
    ImageU8 img = ImageU8::filled(64, 64, 10, 10, 10);
    ImageU8 r = rotate(img, 45.0);
    CHECK(r.at(0, 0, 0) == 255);
    CHECK(r.at(0, 0, 1) == 255);
    CHECK(r.at(63, 63, 2) == 255);
}

// ---------------------------------------------------------------------------
// rescale
// ---------------------------------------------------------------------------

TEST_CASE("rescale by 1 is bit-identical", "[augment][rescale]") {
    ImageU8 img = disk_image(80, 30);
    CHECK(rescale(img, 1.0) == img);
}

TEST_CASE("rescale round trip keeps interior pixels close", "[augment][rescale]") {
    // disk small enough that doubling keeps it on canvas
    ImageU8 img = disk_image(256, 40);
    ImageU8 back = rescale(rescale(img, 2.0), 0.5);
    auto interior = interior_pixels(img, 5);
    REQUIRE(interior.size() > 500);
    CHECK(mean_abs_error(img, back, interior) <= 3.0);
}

TEST_CASE("rescale keeps uniform images uniform", "[augment][rescale]") {
    ImageU8 img = ImageU8::filled(48, 48, 77, 88, 99);
    ImageU8 out = rescale(img, 1.05);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            CHECK(out.at(y, x, 0) == 77);
            CHECK(out.at(y, x, 1) == 88);
            CHECK(out.at(y, x, 2) == 99);
        }
}

TEST_CASE("rescale rejects non-positive factors", "[augment][rescale][errors]") {
    ImageU8 img(8, 8);
    CHECK_THROWS_AS(rescale(img, 0.0), ParameterError);
    CHECK_THROWS_AS(rescale(img, -2.0), ParameterError);
}

// ---------------------------------------------------------------------------
// crop
// ---------------------------------------------------------------------------

TEST_CASE("crop extracts the centered window of a 350 canvas", "[augment][crop]") {
    ImageU8 img(350, 350);
    for (int y = 0; y < 350; ++y)
        for (int x = 0; x < 350; ++x) img.at(y, x, 0) = uint8_t((x + y) % 251);
    ImageU8 out = crop(img, 25, 25, 300);
    REQUIRE(out.height == 300);
    REQUIRE(out.width == 300);
    for (int y = 0; y < 300; ++y)
        for (int x = 0; x < 300; ++x) CHECK(out.at(y, x, 0) == img.at(y + 25, x + 25, 0));
}

TEST_CASE("crop of the full frame is the identity", "[augment][crop]") {
    ImageU8 img = disk_image(32, 10);
    CHECK(crop(img, 0, 0, 32) == img);
}

TEST_CASE("crop out of bounds is rejected", "[augment][crop][errors]") {
    ImageU8 img(64, 64);
    CHECK_THROWS_AS(crop(img, 40, 0, 32), ParameterError);
    CHECK_THROWS_AS(crop(img, -1, 0, 32), ParameterError);
}

// ---------------------------------------------------------------------------
// contrast / brightness
// ---------------------------------------------------------------------------

TEST_CASE("contrast and brightness arithmetic", "[augment][color]") {
    ImageU8 img = ImageU8::filled(2, 2, 200, 100, 250);
    CHECK(adjust_contrast(img, 1.0) == img);
    CHECK(adjust_brightness(img, 0.0) == img);

    ImageU8 doubled = adjust_contrast(img, 2.0);
    CHECK(doubled.at(0, 0, 0) == 255);  // 400 clamps
    CHECK(doubled.at(0, 0, 1) == 200);

    ImageU8 halved = adjust_contrast(img, 0.5);
    CHECK(halved.at(0, 0, 1) == 50);

    ImageU8 brighter = adjust_brightness(img, 20.0);
    CHECK(brighter.at(0, 0, 2) == 255);  // 270 clamps
    CHECK(brighter.at(0, 0, 1) == 120);

    ImageU8 darker = adjust_brightness(img, -20.0);
    CHECK(darker.at(0, 0, 1) == 80);
}

TEST_CASE("rounding is half away from zero", "[augment][color]") {
    ImageU8 img = ImageU8::filled(1, 1, 101, 3, 5);
    CHECK(adjust_contrast(img, 0.5).at(0, 0, 0) == 51);  // 50.5 rounds up
    CHECK(adjust_contrast(img, 0.5).at(0, 0, 1) == 2);   // 1.5 rounds up
    CHECK(adjust_brightness(img, 0.5).at(0, 0, 2) == 6); // 5.5 rounds up
}

TEST_CASE("color ops change the white background too", "[augment][color]") {
    ImageU8 img(4, 4);  // all white
    CHECK(adjust_contrast(img, 0.5).at(0, 0, 0) == 128);  // 127.5 away from zero
    CHECK(adjust_brightness(img, -20.0).at(0, 0, 0) == 235);
}

// ---------------------------------------------------------------------------
// flip
// ---------------------------------------------------------------------------

TEST_CASE("flip is an involution", "[augment][flip]") {
    ImageU8 img = disk_image(33, 12);
    img.at(5, 2, 1) = 9;
    CHECK(flip_horizontal(flip_horizontal(img)) == img);
}

TEST_CASE("flip reverses columns", "[augment][flip]") {
    ImageU8 img(1, 2);
    img.at(0, 0, 0) = 10;
    img.at(0, 1, 0) = 20;
    ImageU8 f = flip_horizontal(img);
    CHECK(f.at(0, 0, 0) == 20);
    CHECK(f.at(0, 1, 0) == 10);
}

TEST_CASE("column-symmetric images are flip-invariant", "[augment][flip]") {
    ImageU8 img(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.at(y, x, 0) = uint8_t(10 * std::min(x, 7 - x));
    CHECK(flip_horizontal(img) == img);
}

// ---------------------------------------------------------------------------
// parameter sampling
// ---------------------------------------------------------------------------

TEST_CASE("T0 yields identity parameters with a centered crop", "[augment][policy]") {
    TransformGeometry geom;  // 350 / 300
    Rng rng(1);
    auto ps = sample_params(TransformPolicy::t0(), geom, rng);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].angle == 0.0);
    CHECK(ps[0].scale == 1.0);
    CHECK(ps[0].contrast == 1.0);
    CHECK(ps[0].brightness == 0.0);
    CHECK_FALSE(ps[0].flip);
    CHECK(ps[0].crop_x == 25);
    CHECK(ps[0].crop_y == 25);
}

TEST_CASE("TF spaces rotations evenly", "[augment][policy]") {
    TransformGeometry geom;
    Rng rng(1);
    auto ps = sample_params(TransformPolicy::tf(4), geom, rng);
    REQUIRE(ps.size() == 4);
    CHECK(ps[0].angle == 0.0);
    CHECK(ps[1].angle == 90.0);
    CHECK(ps[2].angle == 180.0);
    CHECK(ps[3].angle == 270.0);
    for (auto& p : ps) {
        CHECK(p.scale == 1.0);
        CHECK(p.crop_x == 25);
        CHECK_FALSE(p.flip);
    }

    auto d64 = sample_params(TransformPolicy::tf(64), geom, rng);
    REQUIRE(d64.size() == 64);
    CHECK(d64[1].angle == Catch::Approx(5.625));
}

TEST_CASE("TR draws stay in range and look uniform", "[augment][policy][statistical]") {
    TransformGeometry geom;
    Rng rng = Rng::stream(123, "transform", 0);
    const size_t n = 100000;
    std::vector<double> angle01(n), scale01(n), contrast01(n), bright01(n);
    std::vector<int64_t> crop_counts(size_t(geom.max_offset()) + 1, 0);
    int64_t flips = 0;
    for (size_t i = 0; i < n; ++i) {
        TransformParams p = sample_tr(geom, rng);
        validate_params(p, geom);  // throws if any field leaves its range
        angle01[i] = p.angle / 360.0;
        scale01[i] = (std::log2(p.scale) + 0.1) / 0.2;
        contrast01[i] = (std::log2(p.contrast) + 1.0) / 2.0;
        bright01[i] = (p.brightness + 20.0) / 40.0;
        crop_counts[size_t(p.crop_x)]++;
        if (p.flip) ++flips;
    }
    const double thresh = testutil::ks_threshold_001(n);
    CHECK(testutil::ks_statistic_uniform01(angle01) < thresh);
    CHECK(testutil::ks_statistic_uniform01(scale01) < thresh);
    CHECK(testutil::ks_statistic_uniform01(contrast01) < thresh);
    CHECK(testutil::ks_statistic_uniform01(bright01) < thresh);

    // discrete fields: chi-square for crop offsets, binomial-ish bound for flip
    std::vector<double> expected(crop_counts.size(), double(n) / double(crop_counts.size()));
    CHECK(testutil::chi_square(crop_counts, expected) < testutil::chi2_crit_999(int(crop_counts.size()) - 1));
    std::vector<int64_t> flip_counts{flips, int64_t(n) - flips};
    CHECK(testutil::chi_square(flip_counts, {n / 2.0, n / 2.0}) < testutil::chi2_crit_999(1));
}

TEST_CASE("parameter sampling is deterministic per seed", "[augment][policy][determinism]") {
    TransformGeometry geom;
    Rng a = Rng::stream(9, "transform", 3), b = Rng::stream(9, "transform", 3);
    for (int i = 0; i < 100; ++i) {
        TransformParams p = sample_tr(geom, a), q = sample_tr(geom, b);
        CHECK(p.angle == q.angle);
        CHECK(p.scale == q.scale);
        CHECK(p.crop_x == q.crop_x);
        CHECK(p.crop_y == q.crop_y);
        CHECK(p.contrast == q.contrast);
        CHECK(p.brightness == q.brightness);
        CHECK(p.flip == q.flip);
    }
}

// ---------------------------------------------------------------------------
// apply_transform
// ---------------------------------------------------------------------------

TEST_CASE("identity transform equals the centered crop bit-exactly", "[augment][compose]") {
    TransformGeometry geom;
    ImageU8 img = disk_image(350, 120);
    ImageU8 out = apply_transform(img, identity_params(geom), geom);
    CHECK(out == crop(img, 25, 25, 300));
}

TEST_CASE("flip-only parameter pairs produce mirror images", "[augment][compose]") {
    TransformGeometry geom{64, 56};
    ImageU8 img = disk_image(64, 20);
    Rng rng(4);
    TransformParams p = sample_tr(geom, rng);
    TransformParams q = p;
    p.flip = false;
    q.flip = true;
    CHECK(flip_horizontal(apply_transform(img, p, geom)) == apply_transform(img, q, geom));
}

TEST_CASE("transform output is always crop-sized", "[augment][compose][property]") {
    TransformGeometry small{64, 56};
    ImageU8 img = disk_image(64, 22);
    Rng rng = Rng::stream(7, "transform", 0);
    for (int i = 0; i < 10000; ++i) {
        TransformParams p = sample_tr(small, rng);
        if (i % 100 == 0) {  // full image pass on a subsample, params-only otherwise
            ImageU8 out = apply_transform(img, p, small);
            REQUIRE(out.height == 56);
            REQUIRE(out.width == 56);
            REQUIRE(out.data.size() == size_t(56) * 56 * 3);
        }
        validate_params(p, small);
    }
    // spot checks at full scale
    TransformGeometry geom;
    ImageU8 big = disk_image(350, 120);
    for (int i = 0; i < 25; ++i) {
        ImageU8 out = apply_transform(big, sample_tr(geom, rng), geom);
        REQUIRE(out.height == 300);
        REQUIRE(out.width == 300);
    }
}

TEST_CASE("transforms keep pixel values in range without wraparound", "[augment][compose][property]") {
    TransformGeometry geom{64, 56};
    ImageU8 img = disk_image(64, 25);
    Rng rng = Rng::stream(11, "transform", 0);
    for (int i = 0; i < 50; ++i) {
        ImageU8 out = apply_transform(img, sample_tr(geom, rng), geom);
        // uint8 storage cannot leave [0,255]; guard against wraparound by
        // construction: extreme contrast must saturate, not wrap
        ImageU8 hot = adjust_contrast(out, 2.0);
        ImageU8 cold = adjust_brightness(out, -20.0);
        for (size_t j = 0; j < hot.data.size(); ++j) {
            if (out.data[j] >= 128) CHECK(hot.data[j] == 255);
            if (out.data[j] < 20) CHECK(cold.data[j] == 0);
        }
    }
}

TEST_CASE("apply_transform is deterministic per seed", "[augment][compose][determinism]") {
    TransformGeometry geom{64, 56};
    ImageU8 img = disk_image(64, 21);
    Rng a = Rng::stream(5, "transform", 0), b = Rng::stream(5, "transform", 0);
    for (int i = 0; i < 10; ++i) {
        ImageU8 x = apply_transform(img, sample_tr(geom, a), geom);
        ImageU8 y = apply_transform(img, sample_tr(geom, b), geom);
        CHECK(x == y);
    }
}

TEST_CASE("apply_transform rejects a wrong-sized canvas", "[augment][compose][errors]") {
    TransformGeometry geom;
    ImageU8 img(340, 340);
    CHECK_THROWS_AS(apply_transform(img, identity_params(geom), geom), DimensionError);
}

// ---------------------------------------------------------------------------
// ppm io
// ---------------------------------------------------------------------------

TEST_CASE("ppm round trip is bit-exact", "[image][io]") {
    namespace fs = std::filesystem;
    ImageU8 img = disk_image(40, 15);
    fs::path p = fs::temp_directory_path() / "leafnet_test_roundtrip.ppm";
    write_ppm(p, img);
    ImageU8 back = read_ppm(p);
    CHECK(back == img);
    fs::remove(p);
}
