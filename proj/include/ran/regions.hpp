#pragma once

// Region crop generation. Three schemes produce RegionSpecs; every crop is
// then resized to the backbone input size. All geometry uses flooring, so
// goldens are stable across platforms.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ran/image.hpp"

namespace ran {

enum class CropScheme { Fixed, Random, Landmark };

std::string to_string(CropScheme s);
CropScheme crop_scheme_from_string(const std::string& s);

struct RegionSpec {
    std::size_t x = 0;  // top-left offset
    std::size_t y = 0;
    std::size_t w = 0;
    std::size_t h = 0;
    CropScheme scheme = CropScheme::Fixed;
    std::size_t index = 0;  // ordinal within the crop set (1-based; 0 is the
                            // uncropped duplicate)
};

enum class LandmarkName : std::uint8_t {
    LeftEye,
    RightEye,
    Nose,
    LeftMouth,
    RightMouth
};

std::string to_string(LandmarkName n);
LandmarkName landmark_name_from_string(const std::string& s);

struct Landmark {
    LandmarkName name = LandmarkName::Nose;
    double x = 0.0;  // sub-pixel coordinates
    double y = 0.0;
};

// The duplicate whole face plus k crops, all resized to the backbone input
// size. crops[i] corresponds to specs[i] and region index i+1.
struct CropSet {
    FaceImage original;
    std::vector<FaceImage> crops;
    std::vector<RegionSpec> specs;
};

// Five fixed-position regions, in order:
//   1 top-left     0.75 scale, at (0, 0)
//   2 top-right    0.75 scale, right-aligned
//   3 center-down  0.75 scale, horizontally centered, bottom-aligned
//   4 center       0.90 scale, centered
//   5 center       0.85 scale, centered
// Sizes floor(scale * dim); centered offsets floor((dim - extent) / 2).
// scale_ratio multiplies every base scale before flooring (region-size
// sweeps); extents are clamped to the image.
std::vector<RegionSpec> fixed_crops(const FaceImage& image,
                                    double scale_ratio = 1.0);

// n regions with per-axis scale drawn uniformly from [0.7, 0.95] and offsets
// uniform over the valid placement range. Reproducible from the seed.
std::vector<RegionSpec> random_crops(const FaceImage& image, std::size_t n,
                                     std::uint64_t rng_seed);

// One square region per landmark, side 2*floor(radius_ratio*min(W,H)) + 1,
// centered on the rounded landmark. Regions whose bounds leave the image are
// removed, never clamped; the result may be empty (callers fall back to
// fixed_crops).
std::vector<RegionSpec> landmark_crops(const FaceImage& image,
                                       const std::vector<Landmark>& landmarks,
                                       double radius_ratio = 0.4);

// Crops spec from image and bilinearly resizes to target_h x target_w.
// Throws DimensionError if the spec leaves the image bounds.
FaceImage extract_and_resize(const FaceImage& image, const RegionSpec& spec,
                             std::size_t target_h, std::size_t target_w);

// Builds the duplicate + crops at the backbone input size. Landmark scheme
// falls back to fixed crops when no landmark region survives.
CropSet make_crop_set(const FaceImage& image,
                      const std::vector<RegionSpec>& specs,
                      std::size_t input_size);

}  // namespace ran
