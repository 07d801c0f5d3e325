#include "ran/regions.hpp"

#include <algorithm>
#include <cmath>

#include "ran/errors.hpp"
#include "ran/rng.hpp"

namespace ran {

std::string to_string(CropScheme s) {
    switch (s) {
        case CropScheme::Fixed: return "fixed";
        case CropScheme::Random: return "random";
        case CropScheme::Landmark: return "landmark";
    }
    return "fixed";
}

CropScheme crop_scheme_from_string(const std::string& s) {
    if (s == "fixed") return CropScheme::Fixed;
    if (s == "random") return CropScheme::Random;
    if (s == "landmark") return CropScheme::Landmark;
    throw ParseError("unknown crop scheme '" + s + "'");
}

std::string to_string(LandmarkName n) {
    switch (n) {
        case LandmarkName::LeftEye: return "left_eye";
        case LandmarkName::RightEye: return "right_eye";
        case LandmarkName::Nose: return "nose";
        case LandmarkName::LeftMouth: return "left_mouth";
        case LandmarkName::RightMouth: return "right_mouth";
    }
    return "nose";
}

LandmarkName landmark_name_from_string(const std::string& s) {
    if (s == "left_eye") return LandmarkName::LeftEye;
    if (s == "right_eye") return LandmarkName::RightEye;
    if (s == "nose") return LandmarkName::Nose;
    if (s == "left_mouth") return LandmarkName::LeftMouth;
    if (s == "right_mouth") return LandmarkName::RightMouth;
    throw ParseError("unknown landmark name '" + s + "'");
}

std::vector<RegionSpec> fixed_crops(const FaceImage& image,
                                    double scale_ratio) {
    const std::size_t W = image.width;
    const std::size_t H = image.height;
    auto extent = [&](double scale, std::size_t dim) {
        const auto e = static_cast<std::size_t>(
            std::floor(scale * scale_ratio * static_cast<double>(dim)));
        return std::min(std::max<std::size_t>(e, 1), dim);
    };

    std::vector<RegionSpec> specs(5);
    // 1: top-left 0.75
    std::size_t w = extent(0.75, W), h = extent(0.75, H);
    specs[0] = {0, 0, w, h, CropScheme::Fixed, 1};
    // 2: top-right 0.75
    specs[1] = {W - w, 0, w, h, CropScheme::Fixed, 2};
    // 3: center-down 0.75 (horizontally centered, bottom-aligned)
    specs[2] = {(W - w) / 2, H - h, w, h, CropScheme::Fixed, 3};
    // 4: center 0.9
    w = extent(0.9, W), h = extent(0.9, H);
    specs[3] = {(W - w) / 2, (H - h) / 2, w, h, CropScheme::Fixed, 4};
    // 5: center 0.85
    w = extent(0.85, W), h = extent(0.85, H);
    specs[4] = {(W - w) / 2, (H - h) / 2, w, h, CropScheme::Fixed, 5};
    return specs;
}

std::vector<RegionSpec> random_crops(const FaceImage& image, std::size_t n,
                                     std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    std::vector<RegionSpec> specs;
    specs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sx = rng.uniform(0.7, 0.95);
        const double sy = rng.uniform(0.7, 0.95);
        const std::size_t w = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(sx * image.width)));
        const std::size_t h = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(sy * image.height)));
        const std::size_t x = rng.uniform_index(image.width - w + 1);
        const std::size_t y = rng.uniform_index(image.height - h + 1);
        specs.push_back({x, y, w, h, CropScheme::Random, i + 1});
    }
    return specs;
}

std::vector<RegionSpec> landmark_crops(const FaceImage& image,
                                       const std::vector<Landmark>& landmarks,
                                       double radius_ratio) {
    if (landmarks.empty() || landmarks.size() > 5)
        throw DimensionError("landmark_crops: need 1 to 5 landmarks");
    if (!(radius_ratio > 0.0 && radius_ratio <= 0.5))
        throw DimensionError("landmark_crops: radius_ratio must be in (0, 0.5]");
    const auto min_side = std::min(image.width, image.height);
    const auto half = static_cast<std::int64_t>(
        std::floor(radius_ratio * static_cast<double>(min_side)));
    std::vector<RegionSpec> specs;
    std::size_t index = 1;
    for (const Landmark& lm : landmarks) {
        const auto cx = static_cast<std::int64_t>(std::llround(lm.x));
        const auto cy = static_cast<std::int64_t>(std::llround(lm.y));
        // drop (never clamp) regions reaching outside the image
        if (cx - half < 0 || cy - half < 0 ||
            cx + half > static_cast<std::int64_t>(image.width) - 1 ||
            cy + half > static_cast<std::int64_t>(image.height) - 1) {
            ++index;
            continue;
        }
        specs.push_back({static_cast<std::size_t>(cx - half),
                         static_cast<std::size_t>(cy - half),
                         static_cast<std::size_t>(2 * half + 1),
                         static_cast<std::size_t>(2 * half + 1),
                         CropScheme::Landmark, index});
        ++index;
    }
    return specs;
}

FaceImage extract_and_resize(const FaceImage& image, const RegionSpec& spec,
                             std::size_t target_h, std::size_t target_w) {
    if (spec.w == 0 || spec.h == 0 || spec.x + spec.w > image.width ||
        spec.y + spec.h > image.height)
        throw DimensionError("extract_and_resize: spec out of bounds");
    FaceImage crop(spec.h, spec.w, image.channels);
    for (std::size_t y = 0; y < spec.h; ++y)
        for (std::size_t x = 0; x < spec.w; ++x)
            for (std::size_t c = 0; c < image.channels; ++c)
                crop.at(y, x, c) = image.at(spec.y + y, spec.x + x, c);
    if (spec.h == target_h && spec.w == target_w) return crop;
    return resize_bilinear(crop, target_h, target_w);
}

CropSet make_crop_set(const FaceImage& image,
                      const std::vector<RegionSpec>& specs,
                      std::size_t input_size) {
    CropSet set;
    set.original = (image.height == input_size && image.width == input_size)
                       ? image
                       : resize_bilinear(image, input_size, input_size);
    set.specs = specs;
    set.crops.reserve(specs.size());
    for (const RegionSpec& s : specs)
        set.crops.push_back(extract_and_resize(image, s, input_size, input_size));
    return set;
}

}  // namespace ran
