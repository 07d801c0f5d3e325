#pragma once

// The backbone abstraction: maps a resized crop to a d-dimensional feature
// vector. Two realizations share the contract: a trainable two-layer
// projection (area-downsample, flatten, affine, relu, affine) and a frozen
// feature store for precomputed features.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ran/image.hpp"
#include "ran/rng.hpp"
#include "ran/tensor.hpp"

namespace ran {

struct FeatureVector {
    Vec values;
    std::size_t source_region = 0;
};

// -------------------------------------------------------------------------
// Frozen path: (sample id, region index) -> feature vector.
//
// File format: header line "dim=<d>", then one row per feature:
//   sample_id,region_index,v0,...,v{d-1}
// Values are decimal text written with 17 significant digits, so round trips
// reproduce doubles exactly.
// -------------------------------------------------------------------------
class FeatureStore {
  public:
    explicit FeatureStore(std::size_t dim = 0) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return table_.size(); }

    // Throws DimensionError on dim mismatch, ParseError on duplicate key.
    void put(const std::string& sample_id, std::size_t region_index, Vec v);

    // Throws MissingFeatureError naming the key when absent.
    const Vec& get(const std::string& sample_id, std::size_t region_index) const;
    bool contains(const std::string& sample_id, std::size_t region_index) const;

    // Region indices present for a sample, ascending.
    std::vector<std::size_t> regions_of(const std::string& sample_id) const;

    const std::map<std::pair<std::string, std::size_t>, Vec>& table() const {
        return table_;
    }

  private:
    std::size_t dim_;
    std::map<std::pair<std::string, std::size_t>, Vec> table_;
};

FeatureStore load_feature_store(const std::string& path);
void save_feature_store(const FeatureStore& store, const std::string& path);

// -------------------------------------------------------------------------
// Trainable path. One parameter set theta = {W1, b1, W2, b2} shared across
// all regions of all samples; gradients from every region accumulate into
// the same Parameters.
// -------------------------------------------------------------------------
class ProjectionBackbone {
  public:
    ProjectionBackbone() = default;
    ProjectionBackbone(std::size_t input_size, std::size_t channels,
                       std::size_t downsample_size, std::size_t hidden_dim,
                       std::size_t feature_dim);

    // Uniform init scaled by sqrt(6 / (fan_in + fan_out)); biases zero.
    // Draw order: W1 then W2.
    void init_params(Rng& rng);

    std::size_t input_size() const { return input_size_; }
    std::size_t channels() const { return channels_; }
    std::size_t downsample_size() const { return downsample_size_; }
    std::size_t hidden_dim() const { return W1.rows; }
    std::size_t feature_dim() const { return W2.rows; }
    std::size_t flat_dim() const {
        return downsample_size_ * downsample_size_ * channels_;
    }

    // Parameter-free preprocessing: area-downsample and flatten.
    Vec preprocess(const FaceImage& crop) const;

    // Full path: preprocess then project. Crop must be at input size.
    FeatureVector extract(const FaceImage& crop, std::size_t region_index) const;

    // The differentiable part, from a preprocessed input vector.
    Vec project(const Vec& x) const;
    // Same, keeping the hidden pre-activation for backward.
    Vec project_cached(const Vec& x, Vec& hidden_pre) const;
    // Accumulates parameter gradients for one region's contribution.
    void project_backward(const Vec& x, const Vec& hidden_pre, const Vec& dF);

    std::vector<Parameter*> params();

    // W1: hidden x flat, W2: d x hidden; biases are vectors.
    Parameter W1, b1, W2, b2;

  private:
    std::size_t input_size_ = 0;
    std::size_t channels_ = 1;
    std::size_t downsample_size_ = 16;
};

}  // namespace ran
