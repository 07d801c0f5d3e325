#pragma once

// Manifest ingestion, occlusion/pose test-subset construction with
// Table-style statistics, and the synthetic dataset generator used for
// desk-scale experiments.
//
// Manifest CSV schema (header required):
//   sample_id,image_path,label,pitch,yaw,roll,occlusions,landmarks
// pitch/yaw/roll are signed degrees, either all present or all empty.
// occlusions is a '|'-joined subset of {upper,bottom,left_right,glasses_mask}.
// landmarks is empty or a '|'-joined list of five name:x:y entries.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ran/image.hpp"
#include "ran/regions.hpp"

namespace ran {

enum class Occlusion : std::uint8_t { Upper, Bottom, LeftRight, GlassesMask };

std::string to_string(Occlusion o);
Occlusion occlusion_from_string(const std::string& s);

struct ManifestRecord {
    std::string sample_id;
    std::string image_path;
    int label = 0;
    std::optional<double> pitch, yaw, roll;
    std::vector<Occlusion> occlusions;
    std::vector<Landmark> landmarks;  // empty or exactly 5

    bool has_angles() const { return pitch.has_value(); }
    bool has_occlusion(Occlusion o) const;
};

std::vector<ManifestRecord> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestRecord>& records,
                   const std::string& path);

// Keeps records with |pitch| > threshold or |yaw| > threshold. Roll is
// in-plane and ignored. Throws ParseError listing ids that lack angles.
std::vector<ManifestRecord> build_pose_subset(
    const std::vector<ManifestRecord>& records, double threshold_degrees);

// Keeps records with at least one occlusion type.
std::vector<ManifestRecord> build_occlusion_subset(
    const std::vector<ManifestRecord>& records);

struct SubsetStats {
    std::size_t total = 0;
    // A record with several occlusion types increments each matching count.
    std::size_t upper = 0, bottom = 0, left_right = 0, glasses_mask = 0;
    std::size_t occluded_any = 0;
    std::size_t pose_over_30 = 0, pose_over_45 = 0;

    double occluded_fraction() const {
        return total ? static_cast<double>(occluded_any) / total : 0.0;
    }
    double pose30_fraction() const {
        return total ? static_cast<double>(pose_over_30) / total : 0.0;
    }
    double pose45_fraction() const {
        return total ? static_cast<double>(pose_over_45) / total : 0.0;
    }
};

SubsetStats subset_stats(const std::vector<ManifestRecord>& records);

// Aligned text table in the occlusion/pose column layout.
std::string format_stats_table(const SubsetStats& s, const std::string& name);
std::string stats_to_json(const SubsetStats& s);

// ------------------------------------------------------------- synthetic ---

struct Box {
    std::size_t x = 0, y = 0, w = 0, h = 0;
};

struct LabeledSample {
    std::string id;
    FaceImage image;
    int label = 0;
    std::vector<Landmark> landmarks;
    // ground-truth diagnostics
    Box glyph_box;
    std::optional<Box> occluder_box;
};

// Each sample: uniform background noise, one of C binary glyph patterns
// stamped at a seeded-random position fully inside the chosen fixed-crop
// region, and (with occluder_prob) one constant-value rectangle placed
// uniformly over all in-bounds positions that do not overlap that region.
struct SyntheticSpec {
    std::size_t image_size = 64;
    std::size_t classes = 3;         // 2..5 distinct glyphs available
    std::size_t signal_region = 1;   // fixed-crop index, 1..5
    double occluder_prob = 0.7;
    std::size_t occluder_min = 12;   // rectangle sides, inclusive range
    std::size_t occluder_max = 16;
    double noise_level = 0.7;
    std::size_t train_count = 2000;
    std::size_t test_count = 500;
    std::uint64_t seed = 0;
};

struct SyntheticDataset {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> test;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes images as PGM plus train.csv/test.csv manifests and a meta.csv with
// the ground-truth glyph/occluder boxes.
void write_synthetic(const SyntheticDataset& ds, const std::string& dir);

// Loads the samples a manifest points at (paths relative to the manifest's
// directory unless absolute).
std::vector<LabeledSample> load_samples(
    const std::vector<ManifestRecord>& records, const std::string& manifest_path);

}  // namespace ran
