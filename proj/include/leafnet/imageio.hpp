#pragma once

#include <algorithm>
#include <filesystem>
#include <string>

#include "leafnet/common.hpp"
#include "leafnet/image.hpp"

#ifdef LEAFNET_WITH_OPENCV
#include <opencv2/imgcodecs.hpp>
#endif

namespace leafnet {

inline std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return e;
}

inline bool is_supported_image(const std::filesystem::path& p) {
    static const char* exts[] = {".ppm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
    const std::string e = lower_ext(p);
    for (const char* x : exts)
        if (e == x) return true;
    return false;
}

// PPM is decoded natively; everything else goes through OpenCV imgcodecs
// when the build enables it.
inline ImageU8 load_image_any(const std::filesystem::path& path) {
    if (lower_ext(path) == ".ppm") return read_ppm(path);
#ifdef LEAFNET_WITH_OPENCV
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot decode image " + path.string());
    ImageU8 img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(y, x, 0) = row[x][2];
            img.at(y, x, 1) = row[x][1];
            img.at(y, x, 2) = row[x][0];
        }
    }
    return img;
#else
    throw IoError("cannot decode " + path.string() + ": this build reads only PPM (rebuild with LEAFNET_WITH_OPENCV)");
#endif
}

}  // namespace leafnet
