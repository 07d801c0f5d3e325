#include "ran/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ran/errors.hpp"
#include "ran/rng.hpp"

namespace ran {

namespace fs = std::filesystem;

std::string to_string(Occlusion o) {
    switch (o) {
        case Occlusion::Upper: return "upper";
        case Occlusion::Bottom: return "bottom";
        case Occlusion::LeftRight: return "left_right";
        case Occlusion::GlassesMask: return "glasses_mask";
    }
    return "upper";
}

Occlusion occlusion_from_string(const std::string& s) {
    if (s == "upper") return Occlusion::Upper;
    if (s == "bottom") return Occlusion::Bottom;
    if (s == "left_right") return Occlusion::LeftRight;
    if (s == "glasses_mask") return Occlusion::GlassesMask;
    throw ParseError("unknown occlusion token '" + s + "'");
}

bool ManifestRecord::has_occlusion(Occlusion o) const {
    return std::find(occlusions.begin(), occlusions.end(), o) != occlusions.end();
}

namespace {

constexpr const char* kManifestHeader =
    "sample_id,image_path,label,pitch,yaw,roll,occlusions,landmarks";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line_no,
                    const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError("manifest: line " + std::to_string(line_no) + ": bad " +
                         what + " '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("manifest: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line))
        throw ParseError("manifest: '" + path + "' is empty (header expected)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader)
        throw ParseError("manifest: line 1: expected header '" +
                         std::string(kManifestHeader) + "'");

    std::vector<ManifestRecord> records;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 8)
            throw ParseError("manifest: line " + std::to_string(line_no) +
                             ": expected 8 fields, got " +
                             std::to_string(cells.size()));
        ManifestRecord r;
        r.sample_id = cells[0];
        r.image_path = cells[1];
        if (r.sample_id.empty())
            throw ParseError("manifest: line " + std::to_string(line_no) +
                             ": empty sample_id");
        const long label = std::strtol(cells[2].c_str(), nullptr, 10);
        if (cells[2].empty() || label < 0)
            throw ParseError("manifest: line " + std::to_string(line_no) +
                             ": bad label '" + cells[2] + "'");
        r.label = static_cast<int>(label);

        const bool any_angle =
            !cells[3].empty() || !cells[4].empty() || !cells[5].empty();
        const bool all_angles =
            !cells[3].empty() && !cells[4].empty() && !cells[5].empty();
        if (any_angle && !all_angles)
            throw ParseError("manifest: line " + std::to_string(line_no) +
                             ": pitch/yaw/roll must be all present or all absent");
        if (all_angles) {
            r.pitch = parse_double(cells[3], line_no, "pitch");
            r.yaw = parse_double(cells[4], line_no, "yaw");
            r.roll = parse_double(cells[5], line_no, "roll");
        }

        if (!cells[6].empty()) {
            for (const auto& tok : split(cells[6], '|')) {
                try {
                    r.occlusions.push_back(occlusion_from_string(tok));
                } catch (const ParseError&) {
                    throw ParseError("manifest: line " + std::to_string(line_no) +
                                     ": unknown occlusion token '" + tok + "'");
                }
            }
        }

        if (!cells[7].empty()) {
            const auto entries = split(cells[7], '|');
            if (entries.size() != 5)
                throw ParseError("manifest: line " + std::to_string(line_no) +
                                 ": landmarks need exactly 5 entries");
            for (const auto& e : entries) {
                const auto parts = split(e, ':');
                if (parts.size() != 3)
                    throw ParseError("manifest: line " + std::to_string(line_no) +
                                     ": landmark entry '" + e +
                                     "' is not name:x:y");
                Landmark lm;
                try {
                    lm.name = landmark_name_from_string(parts[0]);
                } catch (const ParseError&) {
                    throw ParseError("manifest: line " + std::to_string(line_no) +
                                     ": unknown landmark name '" + parts[0] + "'");
                }
                lm.x = parse_double(parts[1], line_no, "landmark x");
                lm.y = parse_double(parts[2], line_no, "landmark y");
                r.landmarks.push_back(lm);
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const std::vector<ManifestRecord>& records,
                   const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("manifest: cannot open '" + path + "' for writing");
    f << kManifestHeader << "\n";
    for (const auto& r : records) {
        f << r.sample_id << "," << r.image_path << "," << r.label << ",";
        if (r.has_angles())
            f << format_double(*r.pitch) << "," << format_double(*r.yaw) << ","
              << format_double(*r.roll);
        else
            f << ",,";
        f << ",";
        for (std::size_t i = 0; i < r.occlusions.size(); ++i)
            f << (i ? "|" : "") << to_string(r.occlusions[i]);
        f << ",";
        for (std::size_t i = 0; i < r.landmarks.size(); ++i)
            f << (i ? "|" : "") << to_string(r.landmarks[i].name) << ":"
              << format_double(r.landmarks[i].x) << ":"
              << format_double(r.landmarks[i].y);
        f << "\n";
    }
    if (!f) throw IoError("manifest: write failed for '" + path + "'");
}

std::vector<ManifestRecord> build_pose_subset(
    const std::vector<ManifestRecord>& records, double threshold_degrees) {
    std::string missing;
    for (const auto& r : records)
        if (!r.has_angles()) missing += (missing.empty() ? "" : ", ") + r.sample_id;
    if (!missing.empty())
        throw ParseError("pose subset: records missing angles: " + missing);
    std::vector<ManifestRecord> out;
    for (const auto& r : records)
        if (std::fabs(*r.pitch) > threshold_degrees ||
            std::fabs(*r.yaw) > threshold_degrees)
            out.push_back(r);
    return out;
}

std::vector<ManifestRecord> build_occlusion_subset(
    const std::vector<ManifestRecord>& records) {
    std::vector<ManifestRecord> out;
    for (const auto& r : records)
        if (!r.occlusions.empty()) out.push_back(r);
    return out;
}

SubsetStats subset_stats(const std::vector<ManifestRecord>& records) {
    SubsetStats s;
    s.total = records.size();
    for (const auto& r : records) {
        if (!r.occlusions.empty()) ++s.occluded_any;
        if (r.has_occlusion(Occlusion::Upper)) ++s.upper;
        if (r.has_occlusion(Occlusion::Bottom)) ++s.bottom;
        if (r.has_occlusion(Occlusion::LeftRight)) ++s.left_right;
        if (r.has_occlusion(Occlusion::GlassesMask)) ++s.glasses_mask;
        if (r.has_angles()) {
            const double p = std::fabs(*r.pitch), y = std::fabs(*r.yaw);
            if (p > 30.0 || y > 30.0) ++s.pose_over_30;
            if (p > 45.0 || y > 45.0) ++s.pose_over_45;
        }
    }
    return s;
}

std::string format_stats_table(const SubsetStats& s, const std::string& name) {
    char buf[256];
    std::ostringstream out;
    out << "                 Occlusion                                Pose(pitch/yaw)\n";
    out << "           upper   bottom   left/right   glasses/mask    >30      >45\n";
    std::snprintf(buf, sizeof buf, "%-10s %-7zu %-8zu %-12zu %-15zu %-8zu %zu\n",
                  name.c_str(), s.upper, s.bottom, s.left_right, s.glasses_mask,
                  s.pose_over_30, s.pose_over_45);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "total %zu, occluded %zu (%.2f%%), pose>30 %.2f%%, pose>45 %.2f%%\n",
                  s.total, s.occluded_any, 100.0 * s.occluded_fraction(),
                  100.0 * s.pose30_fraction(), 100.0 * s.pose45_fraction());
    out << buf;
    return out.str();
}

std::string stats_to_json(const SubsetStats& s) {
    nlohmann::json j;
    j["total"] = s.total;
    j["occlusion"] = {{"upper", s.upper},
                      {"bottom", s.bottom},
                      {"left_right", s.left_right},
                      {"glasses_mask", s.glasses_mask},
                      {"any", s.occluded_any},
                      {"fraction", s.occluded_fraction()}};
    j["pose"] = {{"over_30", s.pose_over_30},
                 {"over_45", s.pose_over_45},
                 {"fraction_over_30", s.pose30_fraction()},
                 {"fraction_over_45", s.pose45_fraction()}};
    return j.dump(2);
}

// ------------------------------------------------------------- synthetic ---

namespace {

// Stripe thickness is kept fine (side/8) so orientation survives only in
// zoomed crop views: resizing a crop back to the input size magnifies the
// pattern past the backbone's downsample grid, while in the whole-face view
// the stripes alias to a flat blob.
bool glyph_on(std::size_t cls, std::size_t gx, std::size_t gy,
              std::size_t side) {
    const std::size_t stripe = std::max<std::size_t>(1, side / 8);
    switch (cls) {
        case 0: return true;                           // solid block
        case 1: return (gy / stripe) % 2 == 0;         // horizontal stripes
        case 2: return (gx / stripe) % 2 == 0;         // vertical stripes
        case 3: return ((gx / stripe) + (gy / stripe)) % 2 == 0;  // checker
        case 4:                                        // hollow frame
            return gx < stripe || gy < stripe || gx >= side - stripe ||
                   gy >= side - stripe;
    }
    return false;
}

// Number of x positions in [0, W-w] for row y that keep the box outside the
// region; writes the allowed count and the forbidden interval.
struct RowPlacement {
    std::size_t allowed;
    std::size_t forb_lo, forb_hi;  // inclusive; valid when forbidden
    bool has_forbidden;
};

RowPlacement row_placement(std::size_t y, std::size_t w, std::size_t h,
                           std::size_t W, const RegionSpec& r) {
    const std::size_t max_x = W - w;
    RowPlacement rp{max_x + 1, 0, 0, false};
    if (y < r.y + r.h && y + h > r.y) {
        const std::size_t lo = r.x >= w ? r.x - w + 1 : 0;
        const std::size_t hi = std::min(max_x, r.x + r.w - 1);
        if (lo <= hi) {
            rp.has_forbidden = true;
            rp.forb_lo = lo;
            rp.forb_hi = hi;
            rp.allowed -= hi - lo + 1;
        }
    }
    return rp;
}

std::size_t count_placements(std::size_t w, std::size_t h, std::size_t W,
                             std::size_t H, const RegionSpec& r) {
    if (w > W || h > H) return 0;
    std::size_t total = 0;
    for (std::size_t y = 0; y + h <= H; ++y)
        total += row_placement(y, w, h, W, r).allowed;
    return total;
}

Box place_occluder(Rng& rng, std::size_t w, std::size_t h, std::size_t W,
                   std::size_t H, const RegionSpec& region) {
    const std::size_t total = count_placements(w, h, W, H, region);
    std::size_t idx = rng.uniform_index(total);
    for (std::size_t y = 0; y + h <= H; ++y) {
        const RowPlacement rp = row_placement(y, w, h, W, region);
        if (idx >= rp.allowed) {
            idx -= rp.allowed;
            continue;
        }
        std::size_t x = idx;
        if (rp.has_forbidden && x >= rp.forb_lo) x += rp.forb_hi - rp.forb_lo + 1;
        return {x, y, w, h};
    }
    throw NumericError("synthetic: occluder placement index out of range");
}

LabeledSample make_sample(const SyntheticSpec& spec, const RegionSpec& region,
                          std::size_t index, const char* split, int label,
                          std::uint64_t sample_seed) {
    Rng rng(sample_seed);
    const std::size_t N = spec.image_size;
    LabeledSample s;
    s.id = std::string(split) + "_" + std::to_string(index);
    s.label = label;
    s.image = FaceImage(N, N, 1);
    for (double& p : s.image.pixels) p = rng.uniform(0.0, spec.noise_level);

    // glyph: half of the region side, random position inside the region
    const std::size_t side = std::max<std::size_t>(4, region.w / 2);
    const std::size_t gx =
        region.x + rng.uniform_index(region.w - side + 1);
    const std::size_t gy =
        region.y + rng.uniform_index(region.h - side + 1);
    s.glyph_box = {gx, gy, side, side};
    constexpr double kGlyphValue = 0.85;
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x)
            if (glyph_on(static_cast<std::size_t>(label), x, y, side))
                s.image.at(gy + y, gx + x) = kGlyphValue;

    if (rng.uniform() < spec.occluder_prob) {
        const auto w = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(spec.occluder_min),
                            static_cast<std::int64_t>(spec.occluder_max)));
        const auto h = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(spec.occluder_min),
                            static_cast<std::int64_t>(spec.occluder_max)));
        // occluder brightness sits in the glyph's range
        const double value = rng.uniform(0.75, 0.95);
        const Box b = place_occluder(rng, w, h, N, N, region);
        for (std::size_t y = b.y; y < b.y + b.h; ++y)
            for (std::size_t x = b.x; x < b.x + b.w; ++x)
                s.image.at(y, x) = value;
        s.occluder_box = b;
    }

    const double W = static_cast<double>(N), H = static_cast<double>(N);
    s.landmarks = {{LandmarkName::LeftEye, 0.30 * W, 0.35 * H},
                   {LandmarkName::RightEye, 0.70 * W, 0.35 * H},
                   {LandmarkName::Nose, 0.50 * W, 0.55 * H},
                   {LandmarkName::LeftMouth, 0.35 * W, 0.75 * H},
                   {LandmarkName::RightMouth, 0.65 * W, 0.75 * H}};
    return s;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.image_size < 16)
        throw DimensionError("synthetic: image_size must be >= 16");
    if (spec.classes < 2 || spec.classes > 5)
        throw DimensionError("synthetic: classes must be in [2, 5]");
    if (spec.signal_region < 1 || spec.signal_region > 5)
        throw DimensionError("synthetic: signal_region must be in [1, 5]");
    if (!(spec.occluder_prob >= 0.0 && spec.occluder_prob <= 1.0))
        throw DimensionError("synthetic: occluder_prob must be in [0, 1]");
    if (!(spec.noise_level >= 0.0 && spec.noise_level < 1.0))
        throw DimensionError("synthetic: noise_level must be in [0, 1)");
    if (spec.occluder_min < 1 || spec.occluder_min > spec.occluder_max)
        throw DimensionError("synthetic: bad occluder size range");

    const FaceImage probe(spec.image_size, spec.image_size, 1);
    const RegionSpec region = fixed_crops(probe)[spec.signal_region - 1];
    if (region.w / 2 < 4 || region.h < region.w / 2)
        throw DimensionError("synthetic: signal region too small for a glyph");
    if (spec.occluder_prob > 0.0 &&
        count_placements(spec.occluder_max, spec.occluder_max, spec.image_size,
                         spec.image_size, region) == 0)
        throw DimensionError(
            "synthetic: largest occluder cannot fit outside the signal region");

    SyntheticDataset ds;
    ds.train.reserve(spec.train_count);
    ds.test.reserve(spec.test_count);
    for (std::size_t i = 0; i < spec.train_count; ++i)
        ds.train.push_back(make_sample(
            spec, region, i, "train", static_cast<int>(i % spec.classes),
            derive_seed(spec.seed, i)));
    for (std::size_t i = 0; i < spec.test_count; ++i)
        ds.test.push_back(make_sample(
            spec, region, i, "test", static_cast<int>(i % spec.classes),
            derive_seed(spec.seed, 0x8000000000000000ull + i)));
    return ds;
}

namespace {

void write_split(const std::vector<LabeledSample>& samples,
                 const std::string& dir, const std::string& split,
                 std::ofstream& meta) {
    std::vector<ManifestRecord> records;
    records.reserve(samples.size());
    for (const auto& s : samples) {
        const std::string rel = "images/" + s.id + ".pgm";
        save_image(s.image, dir + "/" + rel);
        ManifestRecord r;
        r.sample_id = s.id;
        r.image_path = rel;
        r.label = s.label;
        r.landmarks = s.landmarks;
        records.push_back(std::move(r));

        meta << s.id << "," << s.label << "," << s.glyph_box.x << ","
             << s.glyph_box.y << "," << s.glyph_box.w << "," << s.glyph_box.h;
        if (s.occluder_box)
            meta << "," << s.occluder_box->x << "," << s.occluder_box->y << ","
                 << s.occluder_box->w << "," << s.occluder_box->h;
        else
            meta << ",,,,";
        meta << "\n";
    }
    save_manifest(records, dir + "/" + split + ".csv");
}

}  // namespace

void write_synthetic(const SyntheticDataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream meta(dir + "/meta.csv");
    if (!meta) throw IoError("synthetic: cannot write meta.csv in '" + dir + "'");
    meta << "sample_id,label,glyph_x,glyph_y,glyph_w,glyph_h,occ_x,occ_y,occ_w,occ_h\n";
    write_split(ds.train, dir, "train", meta);
    write_split(ds.test, dir, "test", meta);
}

std::vector<LabeledSample> load_samples(
    const std::vector<ManifestRecord>& records,
    const std::string& manifest_path) {
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<LabeledSample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        LabeledSample s;
        s.id = r.sample_id;
        s.label = r.label;
        s.landmarks = r.landmarks;
        const fs::path p = fs::path(r.image_path).is_absolute()
                               ? fs::path(r.image_path)
                               : base / r.image_path;
        s.image = load_image(p.string());
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace ran
