#include "ran/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ran/errors.hpp"

namespace ran {

namespace {

// Reads one whitespace/comment-delimited token from a PNM header.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw ParseError("pnm: unexpected end of header");
    return tok;
}

}  // namespace

FaceImage load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("image: cannot open '" + path + "'");
    std::string magic = next_token(f);
    std::size_t channels;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw ParseError("image: '" + path + "' is not binary PGM/PPM");

    const std::size_t w = std::stoul(next_token(f));
    const std::size_t h = std::stoul(next_token(f));
    const std::size_t maxval = std::stoul(next_token(f));
    if (maxval != 255)
        throw ParseError("image: only 8-bit PGM/PPM supported, maxval=" +
                         std::to_string(maxval));
    // magic/dimensions read; exactly one whitespace byte precedes the raster
    FaceImage img(h, w, channels);
    std::vector<unsigned char> raw(h * w * channels);
    f.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(f.gcount()) != raw.size())
        throw ParseError("image: truncated raster in '" + path + "'");
    for (std::size_t i = 0; i < raw.size(); ++i)
        img.pixels[i] = raw[i] / 255.0;
    return img;
}

void save_image(const FaceImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("image: cannot open '" + path + "' for writing");
    f << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = std::clamp(img.pixels[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    f.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (!f) throw IoError("image: write failed for '" + path + "'");
}

FaceImage resize_bilinear(const FaceImage& src, std::size_t out_h,
                          std::size_t out_w) {
    if (out_h == 0 || out_w == 0)
        throw DimensionError("resize: zero output size");
    FaceImage dst(out_h, out_w, src.channels);
    const double sy_scale = static_cast<double>(src.height) / out_h;
    const double sx_scale = static_cast<double>(src.width) / out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * sy_scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(src.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, src.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * sx_scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(src.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < src.channels; ++c) {
                const double top =
                    (1.0 - fx) * src.at(y0, x0, c) + fx * src.at(y0, x1, c);
                const double bot =
                    (1.0 - fx) * src.at(y1, x0, c) + fx * src.at(y1, x1, c);
                dst.at(y, x, c) = (1.0 - fy) * top + fy * bot;
            }
        }
    }
    return dst;
}

FaceImage downsample_area(const FaceImage& src, std::size_t out_h,
                          std::size_t out_w) {
    if (out_h == 0 || out_w == 0)
        throw DimensionError("downsample: zero output size");
    if (out_h > src.height || out_w > src.width)
        throw DimensionError("downsample: output larger than input");
    FaceImage dst(out_h, out_w, src.channels);
    const double cell_h = static_cast<double>(src.height) / out_h;
    const double cell_w = static_cast<double>(src.width) / out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
        const double y_lo = y * cell_h;
        const double y_hi = (y + 1) * cell_h;
        const std::size_t ry0 = static_cast<std::size_t>(y_lo);
        const std::size_t ry1 =
            std::min(src.height, static_cast<std::size_t>(std::ceil(y_hi)));
        for (std::size_t x = 0; x < out_w; ++x) {
            const double x_lo = x * cell_w;
            const double x_hi = (x + 1) * cell_w;
            const std::size_t rx0 = static_cast<std::size_t>(x_lo);
            const std::size_t rx1 =
                std::min(src.width, static_cast<std::size_t>(std::ceil(x_hi)));
            for (std::size_t c = 0; c < src.channels; ++c) {
                double acc = 0.0;
                for (std::size_t sy = ry0; sy < ry1; ++sy) {
                    const double wy = std::min(y_hi, static_cast<double>(sy + 1)) -
                                      std::max(y_lo, static_cast<double>(sy));
                    for (std::size_t sx = rx0; sx < rx1; ++sx) {
                        const double wx =
                            std::min(x_hi, static_cast<double>(sx + 1)) -
                            std::max(x_lo, static_cast<double>(sx));
                        acc += wy * wx * src.at(sy, sx, c);
                    }
                }
                dst.at(y, x, c) = acc / (cell_h * cell_w);
            }
        }
    }
    return dst;
}

}  // namespace ran
