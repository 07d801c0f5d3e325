#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "ran/errors.hpp"
#include "ran/image.hpp"
#include "ran/rng.hpp"

using namespace ran;

namespace {

// Independent bilinear resampler with pixel-center alignment; pure
// double-loop reference, kept free of any shared helpers.
FaceImage reference_bilinear(const FaceImage& src, std::size_t oh,
                             std::size_t ow) {
    FaceImage dst(oh, ow, src.channels);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double sy = (y + 0.5) * static_cast<double>(src.height) / oh - 0.5;
            double sx = (x + 0.5) * static_cast<double>(src.width) / ow - 0.5;
            sy = std::min(std::max(sy, 0.0), src.height - 1.0);
            sx = std::min(std::max(sx, 0.0), src.width - 1.0);
            const auto y0 = static_cast<std::size_t>(std::floor(sy));
            const auto x0 = static_cast<std::size_t>(std::floor(sx));
            const std::size_t y1 = std::min(y0 + 1, src.height - 1);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double fy = sy - y0, fx = sx - x0;
            for (std::size_t c = 0; c < src.channels; ++c) {
                dst.at(y, x, c) =
                    (1 - fy) * ((1 - fx) * src.at(y0, x0, c) +
                                fx * src.at(y0, x1, c)) +
                    fy * ((1 - fx) * src.at(y1, x0, c) + fx * src.at(y1, x1, c));
            }
        }
    }
    return dst;
}

}  // namespace

TEST_CASE("image: pgm round trip") {
    FaceImage img(9, 7, 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<double>((i * 13) % 256) / 255.0;
    save_image(img, "img_test.pgm");
    const FaceImage back = load_image("img_test.pgm");
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 7);
    REQUIRE(back.channels == 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));
    std::remove("img_test.pgm");
}

TEST_CASE("image: ppm round trip and header comments") {
    FaceImage img(3, 2, 3);
    Rng rng(1);
    for (double& p : img.pixels)
        p = static_cast<double>(rng.uniform_index(256)) / 255.0;
    save_image(img, "img_test.ppm");
    const FaceImage back = load_image("img_test.ppm");
    CHECK(back.channels == 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));
    std::remove("img_test.ppm");

    {
        std::ofstream f("img_comment.pgm", std::ios::binary);
        f << "P5\n# a comment\n2 2\n255\n";
        f.write("\x01\x02\x03\x04", 4);
    }
    const FaceImage c = load_image("img_comment.pgm");
    CHECK(c.width == 2);
    CHECK(c.at(1, 1) == doctest::Approx(4.0 / 255.0));
    std::remove("img_comment.pgm");
}

TEST_CASE("image: load errors") {
    CHECK_THROWS_AS(load_image("missing.pgm"), IoError);
    {
        std::ofstream f("img_bad.pgm", std::ios::binary);
        f << "P5\n4 4\n255\n";
        f.write("\x01\x02", 2);  // truncated raster
    }
    CHECK_THROWS_AS(load_image("img_bad.pgm"), ParseError);
    std::remove("img_bad.pgm");
    {
        std::ofstream f("img_16bit.pgm", std::ios::binary);
        f << "P5\n1 1\n65535\n";
        f.write("\x01\x02", 2);
    }
    CHECK_THROWS_AS(load_image("img_16bit.pgm"), ParseError);
    std::remove("img_16bit.pgm");
}

TEST_CASE("resize: identity and constant") {
    Rng rng(2);
    FaceImage img(6, 5, 1);
    for (double& p : img.pixels) p = rng.uniform();
    const FaceImage same = resize_bilinear(img, 6, 5);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(same.pixels[i] == img.pixels[i]);

    FaceImage flat(4, 4, 1, 0.625);
    const FaceImage up = resize_bilinear(flat, 11, 3);
    for (double p : up.pixels) CHECK(p == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("resize: checkerboard upscale matches the reference resampler") {
    FaceImage board(4, 4, 1);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            board.at(y, x) = ((x + y) % 2 == 0) ? 1.0 : 0.0;
    const FaceImage up = resize_bilinear(board, 8, 8);
    const FaceImage ref = reference_bilinear(board, 8, 8);
    for (std::size_t i = 0; i < up.pixels.size(); ++i)
        CHECK(std::fabs(up.pixels[i] - ref.pixels[i]) < 1e-9);
}

TEST_CASE("resize: stays within [0,1] on random images and sizes") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t h = 2 + rng.uniform_index(30);
        const std::size_t w = 2 + rng.uniform_index(30);
        FaceImage img(h, w, 1);
        for (double& p : img.pixels) p = rng.uniform();
        const std::size_t oh = 1 + rng.uniform_index(40);
        const std::size_t ow = 1 + rng.uniform_index(40);
        const FaceImage out = resize_bilinear(img, oh, ow);
        for (double p : out.pixels) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("downsample: integer-ratio block means and constants") {
    FaceImage img(4, 4, 1);
    for (std::size_t i = 0; i < 16; ++i)
        img.pixels[i] = static_cast<double>(i) / 16.0;
    const FaceImage half = downsample_area(img, 2, 2);
    // top-left block mean: (0+1+4+5)/4 / 16
    CHECK(half.at(0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 4.0 / 16.0));
    CHECK(half.at(1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 4.0 / 16.0));

    FaceImage flat(10, 6, 1, 0.3);
    const FaceImage small = downsample_area(flat, 3, 4);
    for (double p : small.pixels) CHECK(p == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("downsample: fractional ratio matches brute-force integration") {
    Rng rng(4);
    FaceImage img(5, 7, 1);
    for (double& p : img.pixels) p = rng.uniform();
    const FaceImage out = downsample_area(img, 2, 3);
    // brute force: integrate the piecewise-constant image over each cell
    const double ch = 5.0 / 2.0, cw = 7.0 / 3.0;
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 3; ++x) {
            double acc = 0.0;
            for (std::size_t sy = 0; sy < 5; ++sy) {
                for (std::size_t sx = 0; sx < 7; ++sx) {
                    const double oy = std::max(0.0, std::min((y + 1) * ch, sy + 1.0) -
                                                        std::max(y * ch, double(sy)));
                    const double ox = std::max(0.0, std::min((x + 1) * cw, sx + 1.0) -
                                                        std::max(x * cw, double(sx)));
                    acc += oy * ox * img.at(sy, sx);
                }
            }
            CHECK(out.at(y, x) == doctest::Approx(acc / (ch * cw)).epsilon(1e-12));
        }
    }
}
