#include "ran/features.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ran/errors.hpp"
#include "ran/kernels.hpp"
#include "ran/ops.hpp"

namespace ran {

// ---------------------------------------------------------------- store ---

void FeatureStore::put(const std::string& sample_id, std::size_t region_index,
                       Vec v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_)
        throw DimensionError("feature store: vector of dim " +
                             std::to_string(v.size()) + " in store of dim " +
                             std::to_string(dim_));
    auto key = std::make_pair(sample_id, region_index);
    if (table_.count(key))
        throw ParseError("feature store: duplicate key (" + sample_id + ", " +
                         std::to_string(region_index) + ")");
    table_.emplace(std::move(key), std::move(v));
}

const Vec& FeatureStore::get(const std::string& sample_id,
                             std::size_t region_index) const {
    auto it = table_.find({sample_id, region_index});
    if (it == table_.end())
        throw MissingFeatureError("feature store: no entry for (" + sample_id +
                                  ", " + std::to_string(region_index) + ")");
    return it->second;
}

bool FeatureStore::contains(const std::string& sample_id,
                            std::size_t region_index) const {
    return table_.count({sample_id, region_index}) != 0;
}

std::vector<std::size_t> FeatureStore::regions_of(
    const std::string& sample_id) const {
    std::vector<std::size_t> out;
    for (auto it = table_.lower_bound({sample_id, 0});
         it != table_.end() && it->first.first == sample_id; ++it)
        out.push_back(it->first.second);
    return out;
}

FeatureStore load_feature_store(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("feature store: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line))
        throw ParseError("feature store: empty file '" + path + "'");
    if (line.rfind("dim=", 0) != 0)
        throw ParseError("feature store: line 1: expected 'dim=<d>' header");
    std::size_t dim = 0;
    try {
        dim = std::stoul(line.substr(4));
    } catch (const std::exception&) {
        throw ParseError("feature store: line 1: bad dim value");
    }
    FeatureStore store(dim);
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, region_str, cell;
        if (!std::getline(ss, id, ',') || !std::getline(ss, region_str, ','))
            throw ParseError("feature store: line " + std::to_string(line_no) +
                             ": expected sample_id,region_index,values...");
        std::size_t region = 0;
        try {
            region = std::stoul(region_str);
        } catch (const std::exception&) {
            throw ParseError("feature store: line " + std::to_string(line_no) +
                             ": bad region index '" + region_str + "'");
        }
        Vec v;
        v.reserve(dim);
        while (std::getline(ss, cell, ',')) {
            double d = 0.0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
            if (ec != std::errc() || p != cell.data() + cell.size())
                throw ParseError("feature store: line " + std::to_string(line_no) +
                                 ": bad value '" + cell + "'");
            v.push_back(d);
        }
        if (v.size() != dim)
            throw DimensionError("feature store: line " + std::to_string(line_no) +
                                 ": row has dim " + std::to_string(v.size()) +
                                 ", header says " + std::to_string(dim));
        store.put(id, region, std::move(v));
    }
    return store;
}

void save_feature_store(const FeatureStore& store, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("feature store: cannot open '" + path + "' for writing");
    f << "dim=" << store.dim() << "\n";
    char buf[32];
    for (const auto& [key, vec] : store.table()) {
        f << key.first << "," << key.second;
        for (double v : vec) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            f << "," << buf;
        }
        f << "\n";
    }
    if (!f) throw IoError("feature store: write failed for '" + path + "'");
}

// ------------------------------------------------------------- backbone ---

ProjectionBackbone::ProjectionBackbone(std::size_t input_size,
                                       std::size_t channels,
                                       std::size_t downsample_size,
                                       std::size_t hidden_dim,
                                       std::size_t feature_dim)
    : input_size_(input_size), channels_(channels),
      downsample_size_(downsample_size) {
    const std::size_t flat = flat_dim();
    W1 = Parameter("backbone.W1", hidden_dim, flat);
    b1 = Parameter("backbone.b1", hidden_dim);
    W2 = Parameter("backbone.W2", feature_dim, hidden_dim);
    b2 = Parameter("backbone.b2", feature_dim);
}

void ProjectionBackbone::init_params(Rng& rng) {
    auto uniform_init = [&](Parameter& p) {
        const double a =
            std::sqrt(6.0 / static_cast<double>(p.rows + p.cols));
        for (double& v : p.value) v = rng.uniform(-a, a);
    };
    uniform_init(W1);
    uniform_init(W2);
    std::fill(b1.value.begin(), b1.value.end(), 0.0);
    std::fill(b2.value.begin(), b2.value.end(), 0.0);
}

Vec ProjectionBackbone::preprocess(const FaceImage& crop) const {
    if (crop.height != input_size_ || crop.width != input_size_ ||
        crop.channels != channels_)
        throw DimensionError("backbone: crop is not at the backbone input size");
    const FaceImage small =
        downsample_area(crop, downsample_size_, downsample_size_);
    return small.pixels;
}

FeatureVector ProjectionBackbone::extract(const FaceImage& crop,
                                          std::size_t region_index) const {
    return {project(preprocess(crop)), region_index};
}

Vec ProjectionBackbone::project(const Vec& x) const {
    Vec hidden_pre;
    return project_cached(x, hidden_pre);
}

Vec ProjectionBackbone::project_cached(const Vec& x, Vec& hidden_pre) const {
    require_dim(x.size() == W1.cols, "backbone: input dim mismatch");
    hidden_pre.assign(W1.rows, 0.0);
    kernels::matvec(W1.value.data(), x.data(), hidden_pre.data(), W1.rows,
                    W1.cols);
    for (std::size_t i = 0; i < W1.rows; ++i) hidden_pre[i] += b1.value[i];
    Vec h = hidden_pre;
    relu_inplace(h);
    Vec f(W2.rows, 0.0);
    kernels::matvec(W2.value.data(), h.data(), f.data(), W2.rows, W2.cols);
    for (std::size_t i = 0; i < W2.rows; ++i) f[i] += b2.value[i];
    return f;
}

void ProjectionBackbone::project_backward(const Vec& x, const Vec& hidden_pre,
                                          const Vec& dF) {
    require_dim(dF.size() == W2.rows && hidden_pre.size() == W1.rows &&
                    x.size() == W1.cols,
                "backbone: backward shape mismatch");
    Vec h = hidden_pre;
    relu_inplace(h);
    kernels::ger_acc(dF.data(), h.data(), W2.grad.data(), W2.rows, W2.cols);
    for (std::size_t i = 0; i < W2.rows; ++i) b2.grad[i] += dF[i];
    Vec dh(W1.rows, 0.0);
    kernels::matvec_t_acc(W2.value.data(), dF.data(), dh.data(), W2.rows,
                          W2.cols);
    relu_backward_inplace(hidden_pre, dh);
    kernels::ger_acc(dh.data(), x.data(), W1.grad.data(), W1.rows, W1.cols);
    for (std::size_t i = 0; i < W1.rows; ++i) b1.grad[i] += dh[i];
}

std::vector<Parameter*> ProjectionBackbone::params() {
    return {&W1, &b1, &W2, &b2};
}

}  // namespace ran
