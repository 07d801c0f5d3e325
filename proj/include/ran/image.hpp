#pragma once

// Face images: row-major pixel grids with values in [0,1], 1 or 3 channels
// (interleaved). I/O covers binary PGM (P5) and PPM (P6) at 8 bits per
// sample, normalized by 1/255 on load.

#include <cstddef>
#include <string>
#include <vector>

namespace ran {

struct FaceImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;  // height * width * channels, interleaved

    FaceImage() = default;
    FaceImage(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }
};

FaceImage load_image(const std::string& path);
void save_image(const FaceImage& img, const std::string& path);

// Bilinear resampling with pixel-center alignment: source coordinate of
// destination pixel i is (i + 0.5) * src/dst - 0.5, clamped to the valid
// range. Identity when sizes match; output values stay in [0,1].
FaceImage resize_bilinear(const FaceImage& src, std::size_t out_h,
                          std::size_t out_w);

// Exact box-filter downsampling: each output pixel is the area-weighted mean
// of the source cells it covers. A constant linear map of the input, so it
// needs no backward of its own.
FaceImage downsample_area(const FaceImage& src, std::size_t out_h,
                          std::size_t out_w);

}  // namespace ran
