#pragma once

// Assembles backbone and attention head into trainable models. Four kinds
// share the backbone contract: the two-stage attention model and the three
// fusion baselines used for comparisons.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ran/attention.hpp"
#include "ran/checkpoint.hpp"
#include "ran/features.hpp"
#include "ran/rng.hpp"
#include "ran/tensor.hpp"

namespace ran {

enum class ModelKind { Ran, AveragePool, Concat, ScoreFusion };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
    ModelKind kind = ModelKind::Ran;
    std::size_t classes = 3;
    std::size_t feature_dim = 32;   // d
    std::size_t hidden_dim = 16;    // backbone hidden layer
    std::size_t input_size = 64;    // crop side fed to the backbone
    std::size_t channels = 1;
    std::size_t downsample = 16;    // backbone downsample side
    std::size_t regions = 5;        // k crops (excluding the duplicate)
    bool with_backbone = true;      // false: inputs are features already

    // Classifier input width for this kind.
    std::size_t classifier_input() const;
};

// Per-sample forward scratch + outputs. Reused across samples to avoid
// churn; all buffers are sized on first use.
struct SampleForward {
    std::vector<Vec> features;       // k+1 region features
    std::vector<Vec> hidden_pre;     // backbone hidden pre-activations
    AttentionState att;              // Ran kind only
    std::vector<Vec> region_logits;  // ScoreFusion kind only
    Vec pooled;                      // classifier input (non-Ran kinds)
    Vec logits;                      // C (Ran/AveragePool/Concat)
    Vec probs;                       // prediction probabilities
    double ce = 0.0;
    double rb = 0.0;
    int pred = 0;

    // backward scratch
    std::vector<Vec> dF;
    std::vector<double> dmu, dnu;
    Vec dFm, dP, dlogits, scratch;
};

class Model {
  public:
    ModelConfig cfg;
    ProjectionBackbone backbone;
    Parameter q0, q1;   // attention FC parameters (Ran kind)
    Parameter Wc, bc;   // classifier

    static Model make(const ModelConfig& cfg, Rng& init_rng);

    std::vector<Parameter*> trainable_params();

    // Computes features, attention state, logits, probabilities, prediction
    // and ce (when label >= 0). xs holds either backbone inputs
    // (with_backbone) or region features directly.
    void forward(std::span<const Vec> xs, int label, SampleForward& fwd) const;

    // forward + hand-derived backward; accumulates parameter gradients and
    // returns ce + lambda_rb * rb.
    double loss_and_backward(std::span<const Vec> xs, int label, double alpha,
                             double lambda_rb, SampleForward& fwd);

    Checkpoint to_checkpoint() const;
    static Model from_checkpoint(const Checkpoint& ck);
};

// Forward-only total loss: ce + lambda_rb * rb. The scalar function the
// finite-difference oracle differentiates.
double forward_total_loss(const Model& model, std::span<const Vec> xs,
                          int label, double alpha, double lambda_rb);

}  // namespace ran
