#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ran/datasets.hpp"
#include "ran/errors.hpp"
#include "ran/rng.hpp"

using namespace ran;

namespace {

constexpr const char* kHeader =
    "sample_id,image_path,label,pitch,yaw,roll,occlusions,landmarks";

// toy manifest with randomized angles and occlusion flags
std::vector<ManifestRecord> toy_manifest(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ManifestRecord> records;
    const Occlusion all[] = {Occlusion::Upper, Occlusion::Bottom,
                             Occlusion::LeftRight, Occlusion::GlassesMask};
    for (std::size_t i = 0; i < n; ++i) {
        ManifestRecord r;
        r.sample_id = "toy_" + std::to_string(i);
        r.image_path = "img.pgm";
        r.label = static_cast<int>(rng.uniform_index(3));
        r.pitch = rng.uniform(-60, 60);
        r.yaw = rng.uniform(-60, 60);
        r.roll = rng.uniform(-60, 60);
        for (Occlusion o : all)
            if (rng.uniform() < 0.3) r.occlusions.push_back(o);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace

TEST_CASE("manifest: empty file and round trip") {
    {
        std::ofstream f("man_empty.csv");
        f << kHeader << "\n";
    }
    CHECK(load_manifest("man_empty.csv").empty());
    std::remove("man_empty.csv");

    auto records = toy_manifest(10, 3);
    records[2].landmarks = {{LandmarkName::LeftEye, 10.5, 20.25},
                            {LandmarkName::RightEye, 30, 20},
                            {LandmarkName::Nose, 20, 30},
                            {LandmarkName::LeftMouth, 12, 40},
                            {LandmarkName::RightMouth, 28, 40}};
    records[4].pitch.reset();
    records[4].yaw.reset();
    records[4].roll.reset();
    save_manifest(records, "man_rt.csv");
    const auto back = load_manifest("man_rt.csv");
    REQUIRE(back.size() == 10);
    CHECK(back[2].landmarks.size() == 5);
    CHECK(back[2].landmarks[0].x == 10.5);
    CHECK_FALSE(back[4].has_angles());
    CHECK(back[7].has_angles());
    CHECK(*back[7].pitch == *records[7].pitch);
    CHECK(back[7].occlusions == records[7].occlusions);
    std::remove("man_rt.csv");
}

TEST_CASE("manifest: parse errors carry line numbers") {
    {
        std::ofstream f("man_bad.csv");
        f << kHeader << "\n"
          << "a,img.pgm,0,1,2,3,,\n"
          << "b,img.pgm,0,xx,2,3,,\n";
    }
    CHECK_THROWS_WITH_AS(load_manifest("man_bad.csv"),
                         doctest::Contains("line 3"), ParseError);
    {
        std::ofstream f("man_bad.csv");
        f << kHeader << "\n"
          << "a,img.pgm,0,1,,3,,\n";  // partial angles
    }
    CHECK_THROWS_AS(load_manifest("man_bad.csv"), ParseError);
    {
        std::ofstream f("man_bad.csv");
        f << kHeader << "\n"
          << "a,img.pgm,0,,,,hat,\n";  // unknown occlusion token
    }
    CHECK_THROWS_WITH_AS(load_manifest("man_bad.csv"),
                         doctest::Contains("hat"), ParseError);
    {
        std::ofstream f("man_bad.csv");
        f << "wrong,header\n";
    }
    CHECK_THROWS_AS(load_manifest("man_bad.csv"), ParseError);
    std::remove("man_bad.csv");
}

TEST_CASE("pose subset: rule examples") {
    ManifestRecord r;
    r.sample_id = "a";
    r.pitch = 10;
    r.yaw = 35;
    r.roll = 80;  // roll ignored
    const auto kept = build_pose_subset({r}, 30.0);
    CHECK(kept.size() == 1);

    r.pitch = -31;
    r.yaw = 0;
    CHECK(build_pose_subset({r}, 30.0).size() == 1);

    r.pitch = 30;  // not strictly larger
    r.yaw = -30;
    CHECK(build_pose_subset({r}, 30.0).empty());

    ManifestRecord no_angles;
    no_angles.sample_id = "missing_one";
    CHECK_THROWS_WITH_AS(build_pose_subset({no_angles}, 30.0),
                         doctest::Contains("missing_one"), ParseError);
}

TEST_CASE("subsets and stats match a brute-force oracle on 200 records") {
    const auto records = toy_manifest(200, 17);

    const auto pose30 = build_pose_subset(records, 30.0);
    const auto pose45 = build_pose_subset(records, 45.0);
    const auto occ = build_occlusion_subset(records);

    std::vector<ManifestRecord> bf30, bf45, bfocc;
    for (const auto& r : records) {
        if (std::fabs(*r.pitch) > 30.0 || std::fabs(*r.yaw) > 30.0)
            bf30.push_back(r);
        if (std::fabs(*r.pitch) > 45.0 || std::fabs(*r.yaw) > 45.0)
            bf45.push_back(r);
        if (!r.occlusions.empty()) bfocc.push_back(r);
    }
    auto ids = [](const std::vector<ManifestRecord>& v) {
        std::vector<std::string> out;
        for (const auto& r : v) out.push_back(r.sample_id);
        return out;
    };
    CHECK(ids(pose30) == ids(bf30));
    CHECK(ids(pose45) == ids(bf45));
    CHECK(ids(occ) == ids(bfocc));

    // containment: every >45 record is a >30 record
    const auto in30 = ids(pose30);
    for (const auto& id : ids(pose45))
        CHECK(std::find(in30.begin(), in30.end(), id) != in30.end());

    const SubsetStats s = subset_stats(records);
    std::size_t upper = 0, bottom = 0, lr = 0, gm = 0, p30 = 0, p45 = 0;
    for (const auto& r : records) {
        upper += r.has_occlusion(Occlusion::Upper);
        bottom += r.has_occlusion(Occlusion::Bottom);
        lr += r.has_occlusion(Occlusion::LeftRight);
        gm += r.has_occlusion(Occlusion::GlassesMask);
        p30 += std::fabs(*r.pitch) > 30 || std::fabs(*r.yaw) > 30;
        p45 += std::fabs(*r.pitch) > 45 || std::fabs(*r.yaw) > 45;
    }
    CHECK(s.total == 200);
    CHECK(s.upper == upper);
    CHECK(s.bottom == bottom);
    CHECK(s.left_right == lr);
    CHECK(s.glasses_mask == gm);
    CHECK(s.pose_over_30 == p30);
    CHECK(s.pose_over_45 == p45);
    CHECK(s.occluded_any == bfocc.size());
    CHECK(s.pose_over_45 <= s.pose_over_30);
    CHECK(s.occluded_fraction() == doctest::Approx(bfocc.size() / 200.0));
}

TEST_CASE("stats: empty input and multi-type counting") {
    const SubsetStats zero = subset_stats({});
    CHECK(zero.total == 0);
    CHECK(zero.pose_over_30 == 0);
    CHECK(zero.occluded_fraction() == 0.0);

    ManifestRecord r;
    r.sample_id = "multi";
    r.occlusions = {Occlusion::Upper, Occlusion::GlassesMask};
    const SubsetStats s = subset_stats({r});
    CHECK(s.upper == 1);
    CHECK(s.glasses_mask == 1);
    CHECK(s.occluded_any == 1);

    const std::string json = stats_to_json(s);
    CHECK(json.find("\"upper\": 1") != std::string::npos);
    CHECK(format_stats_table(s, "toy").find("toy") != std::string::npos);
}

TEST_CASE("synthetic: determinism and label balance") {
    SyntheticSpec spec;
    spec.train_count = 30;
    spec.test_count = 9;
    spec.seed = 5;
    const SyntheticDataset a = generate_synthetic(spec);
    const SyntheticDataset b = generate_synthetic(spec);
    REQUIRE(a.train.size() == 30);
    REQUIRE(a.test.size() == 9);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(a.train[i].image.pixels == b.train[i].image.pixels);
        CHECK(a.train[i].label == b.train[i].label);
    }
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& s : a.train) ++counts[s.label];
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 10);
    CHECK(counts[2] == 10);

    spec.seed = 6;
    const SyntheticDataset c = generate_synthetic(spec);
    CHECK(a.train[0].image.pixels != c.train[0].image.pixels);
}

TEST_CASE("synthetic: clean construction stamps the exact glyph") {
    SyntheticSpec spec;
    spec.occluder_prob = 0.0;
    spec.noise_level = 0.0;
    spec.train_count = 9;
    spec.test_count = 0;
    const SyntheticDataset ds = generate_synthetic(spec);
    const FaceImage probe(spec.image_size, spec.image_size, 1);
    const RegionSpec region = fixed_crops(probe)[0];

    for (const auto& s : ds.train) {
        const Box g = s.glyph_box;
        // glyph fully inside the signal region
        CHECK(g.x >= region.x);
        CHECK(g.y >= region.y);
        CHECK(g.x + g.w <= region.x + region.w);
        CHECK(g.y + g.h <= region.y + region.h);
        CHECK_FALSE(s.occluder_box.has_value());
        // with zero noise, every nonzero pixel lies inside the glyph box
        for (std::size_t y = 0; y < s.image.height; ++y)
            for (std::size_t x = 0; x < s.image.width; ++x) {
                const bool inside = x >= g.x && x < g.x + g.w && y >= g.y &&
                                    y < g.y + g.h;
                if (!inside) CHECK(s.image.at(y, x) == 0.0);
            }
        // the solid glyph fills its box completely
        if (s.label == 0)
            for (std::size_t y = g.y; y < g.y + g.h; ++y)
                for (std::size_t x = g.x; x < g.x + g.w; ++x)
                    CHECK(s.image.at(y, x) > 0.5);
    }
    // distinct classes produce distinct patterns at equal boxes
    CHECK(ds.train[0].image.pixels != ds.train[1].image.pixels);
}

TEST_CASE("synthetic: occluders never overlap the signal region") {
    SyntheticSpec spec;
    spec.occluder_prob = 1.0;
    spec.train_count = 300;
    spec.test_count = 0;
    spec.seed = 11;
    const SyntheticDataset ds = generate_synthetic(spec);
    const FaceImage probe(spec.image_size, spec.image_size, 1);
    const RegionSpec region = fixed_crops(probe)[0];
    for (const auto& s : ds.train) {
        REQUIRE(s.occluder_box.has_value());
        const Box b = *s.occluder_box;
        CHECK(b.x + b.w <= spec.image_size);
        CHECK(b.y + b.h <= spec.image_size);
        const bool overlaps = b.x < region.x + region.w && b.x + b.w > region.x &&
                              b.y < region.y + region.h && b.y + b.h > region.y;
        CHECK_FALSE(overlaps);
        CHECK(b.w >= spec.occluder_min);
        CHECK(b.w <= spec.occluder_max);
    }
}

TEST_CASE("synthetic: occluded pixel fraction matches the size distribution") {
    SyntheticSpec spec;
    spec.occluder_prob = 1.0;
    spec.train_count = 10000;
    spec.test_count = 0;
    spec.seed = 23;
    const SyntheticDataset ds = generate_synthetic(spec);

    // analytic mean and variance of w*h over the discrete uniform supports
    double mean_area = 0.0, mean_sq = 0.0;
    std::size_t support = 0;
    for (std::size_t w = spec.occluder_min; w <= spec.occluder_max; ++w)
        for (std::size_t h = spec.occluder_min; h <= spec.occluder_max; ++h) {
            const double area = static_cast<double>(w * h);
            mean_area += area;
            mean_sq += area * area;
            ++support;
        }
    mean_area /= static_cast<double>(support);
    mean_sq /= static_cast<double>(support);
    const double sd = std::sqrt(mean_sq - mean_area * mean_area);

    double observed = 0.0;
    for (const auto& s : ds.train)
        observed += static_cast<double>(s.occluder_box->w * s.occluder_box->h);
    observed /= static_cast<double>(ds.train.size());

    const double total = 64.0 * 64.0;
    const double band = 3.0 * sd / std::sqrt(10000.0);
    CHECK(std::fabs(observed - mean_area) / total <= band / total);
    CHECK(observed / total == doctest::Approx(mean_area / total).epsilon(0.05));
}

TEST_CASE("synthetic: spec validation") {
    SyntheticSpec spec;
    spec.classes = 7;
    CHECK_THROWS_AS(generate_synthetic(spec), DimensionError);
    spec = {};
    spec.signal_region = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), DimensionError);
    spec = {};
    spec.occluder_prob = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec), DimensionError);
    spec = {};
    spec.signal_region = 4;  // thin frame around the 0.9 center crop
    CHECK_THROWS_WITH_AS(generate_synthetic(spec),
                         doctest::Contains("occluder"), DimensionError);
    spec = {};
    spec.occluder_min = 20;
    spec.occluder_max = 10;
    CHECK_THROWS_AS(generate_synthetic(spec), DimensionError);
}

TEST_CASE("synthetic: write and reload through manifests") {
    namespace fs = std::filesystem;
    SyntheticSpec spec;
    spec.train_count = 4;
    spec.test_count = 2;
    const SyntheticDataset ds = generate_synthetic(spec);
    const std::string dir = "synth_io_test";
    write_synthetic(ds, dir);

    const auto records = load_manifest(dir + "/train.csv");
    REQUIRE(records.size() == 4);
    CHECK(records[0].landmarks.size() == 5);
    const auto samples = load_samples(records, dir + "/train.csv");
    REQUIRE(samples.size() == 4);
    CHECK(samples[0].image.height == 64);
    // 8-bit quantization on disk
    for (std::size_t i = 0; i < samples[0].image.pixels.size(); ++i)
        CHECK(std::fabs(samples[0].image.pixels[i] -
                        ds.train[0].image.pixels[i]) <= 0.5 / 255.0 + 1e-12);
    fs::remove_all(dir);
}
