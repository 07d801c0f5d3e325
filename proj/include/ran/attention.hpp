#pragma once

// Two-stage attention aggregation over region features, the region biased
// hinge loss, and the fusion baselines the pipeline compares against.
//
// Stage 1 (self-attention): mu_i = sigmoid(F_i . q0) scores each region from
// its own feature; F_m is the mu-weighted normalized mean of the features.
// Stage 2 (relation-attention): each feature is concatenated with F_m,
// nu_i = sigmoid([F_i : F_m] . q1), and the final representation P is the
// (mu * nu)-weighted normalized mean of the concatenations. Index 0 is
// always the uncropped duplicate face.

#include <cstddef>
#include <span>
#include <vector>

#include "ran/tensor.hpp"

namespace ran {

// Guard on both aggregation denominators. Unreachable for sigmoid weights
// except under underflow.
inline constexpr double kAggEps = 1e-12;

struct AttentionState {
    std::vector<double> mu;  // k+1 coarse weights, strictly in (0,1)
    std::vector<double> nu;  // k+1 refined weights, strictly in (0,1)
    Vec Fm;                  // d
    Vec Pran;                // 2d
};

// sum_i w_i v_i / max(sum_i w_i, kAggEps). Invariant under scaling of w by
// any positive constant.
Vec weighted_mean(std::span<const Vec> vectors, std::span<const double> weights);

// Fills mu and Fm. Features must share one dim and be nonempty.
void self_attention(std::span<const Vec> features, const Vec& q0,
                    std::vector<double>& mu, Vec& Fm);

// Fills nu and Pran from the stage-1 outputs. Concatenation order is
// [region feature, then Fm]; q1 has dim 2d.
void relation_attention(std::span<const Vec> features, const Vec& Fm,
                        const std::vector<double>& mu, const Vec& q1,
                        std::vector<double>& nu, Vec& Pran);

// Convenience composition of both stages.
AttentionState attention_forward(std::span<const Vec> features, const Vec& q0,
                                 const Vec& q1);

// max(0, alpha - (mu_max - mu_0)) where mu_max ranges over the crops
// (indices 1..k) only. Requires mu.size() >= 2 and alpha >= 0.
double rb_loss(const std::vector<double>& mu, double alpha);

// Accumulates lambda * d rb / d mu into dmu and returns the loss. The
// subgradient at the hinge kink is 0; ties for mu_max break toward the
// lowest index.
double rb_loss_backward(const std::vector<double>& mu, double alpha,
                        double lambda, std::vector<double>& dmu);

// softmax_cross_entropy(logits, label) + lambda_rb * rb_loss(mu, alpha).
double total_loss(const Vec& logits, std::size_t label,
                  const std::vector<double>& mu, double alpha,
                  double lambda_rb);

// ------------------------------------------------------ fusion baselines ---

// Unweighted arithmetic mean of the features. Errors on an empty list.
Vec average_pool(std::span<const Vec> features);

// Order-preserving concatenation; all features must share one dim.
Vec concat_features(std::span<const Vec> features);

// Mean of the softmax probability vectors of per-region logits. Errors on
// ragged class counts or an empty list.
Vec score_fusion(std::span<const Vec> per_region_logits);

}  // namespace ran
