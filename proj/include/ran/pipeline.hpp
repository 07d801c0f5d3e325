#pragma once

// Training with the step learning-rate schedule, evaluation metrics,
// attention-weight reports, and the margin / region-size / fusion sweeps.

#include <cstdint>
#include <string>
#include <vector>

#include "ran/datasets.hpp"
#include "ran/model.hpp"
#include "ran/regions.hpp"

namespace ran {

struct TrainConfig {
    double lr = 0.01;
    std::vector<std::size_t> lr_decay_epochs{15, 30};  // divide lr by 10 after
    std::size_t total_epochs = 40;
    double alpha = 0.02;      // RB-loss margin
    double lambda_rb = 1.0;   // loss weight ratio vs cross-entropy
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    CropScheme scheme = CropScheme::Fixed;
    std::size_t random_regions_train = 3;  // crops per image per iteration
    std::size_t random_regions_test = 6;
    double region_scale_ratio = 1.0;
    double radius_ratio = 0.4;  // landmark scheme
};

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mean_ce = 0.0;
    double mean_rb = 0.0;
    double train_acc = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    // mean (mu_max - mu_0) over the training set, before and after training
    // (Ran kind only; zero otherwise).
    double initial_mu_gap = 0.0;
    double final_mu_gap = 0.0;
};

struct Metrics {
    double overall_accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::vector<std::size_t>> confusion;  // rows true, cols pred
    std::size_t total = 0;
};

struct AttentionRow {
    std::string sample_id;
    std::size_t region_index = 0;
    double mu = 0.0;
    double nu = 0.0;
    double display = 0.0;  // softmax over the sample's mu*nu values
    bool is_max = false;
    bool is_min = false;
};

// Effective learning rate at a 1-based epoch: lr / 10^(decay epochs passed).
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

// Creates a model whose init draws depend only on (cfg, seed), so separate
// runs with equal configs coincide bit-exactly.
Model make_seeded_model(const ModelConfig& cfg, std::uint64_t seed);

// Whole-dataset preprocessing: region inputs for every sample under the
// configured scheme (fixed / landmark / random at a fixed per-sample seed).
// Landmark scheme falls back to fixed crops for samples with no surviving
// landmark region.
std::vector<std::vector<Vec>> prepare_region_inputs(
    const Model& model, const std::vector<LabeledSample>& samples,
    const TrainConfig& cfg, bool training_variant);

// Seeded mini-batch SGD per the schedule. Aborts on a non-finite loss by
// restoring the last epoch-end parameters and rethrowing NumericError.
TrainResult train(Model& model, const std::vector<LabeledSample>& train_set,
                  const TrainConfig& cfg);

Metrics evaluate(const Model& model, const std::vector<LabeledSample>& data,
                 const TrainConfig& cfg);

// Frozen-backbone path: per-sample region features straight from a feature
// store (model.cfg.with_backbone == false). Inputs and records align.
TrainResult train_on_features(Model& model,
                              const std::vector<std::vector<Vec>>& inputs,
                              const std::vector<ManifestRecord>& records,
                              const TrainConfig& cfg);

Metrics evaluate_on_features(const Model& model,
                             const std::vector<std::vector<Vec>>& inputs,
                             const std::vector<ManifestRecord>& records);

// Raw mu/nu plus display-normalized combined weights per region. The softmax
// here is presentation only; it never enters training. Ran kind only.
std::vector<AttentionRow> attention_report(
    const Model& model, const std::vector<LabeledSample>& data,
    const TrainConfig& cfg);

// Mean display weight per region index over a dataset (k+1 entries).
std::vector<double> mean_display_weights(const std::vector<AttentionRow>& rows,
                                         std::size_t region_count);

std::string metrics_to_json(const Metrics& m);
std::string epoch_log_csv(const std::vector<EpochLog>& log);
std::string attention_report_csv(const std::vector<AttentionRow>& rows);
std::string confusion_csv(const Metrics& m);

// -------------------------------------------------------------- sweeps ---

struct SweepRow {
    double x = 0.0;                        // alpha or size ratio
    double accuracy = 0.0;                 // test accuracy
    std::vector<std::uint8_t> checkpoint;  // serialized trained model
};

// One full train/eval per alpha, identical seeds. threads > 1 trains
// configurations concurrently; each configuration is single-threaded, so
// results do not depend on the thread count.
std::vector<SweepRow> margin_sweep(const ModelConfig& mcfg,
                                   const std::vector<LabeledSample>& train_set,
                                   const std::vector<LabeledSample>& test_set,
                                   const TrainConfig& cfg,
                                   const std::vector<double>& alphas,
                                   std::size_t threads = 1);

// Same over fixed-crop scale ratios in [0.3, 1.1]. Ratios that produce
// sub-8-pixel crops raise DimensionError.
std::vector<SweepRow> region_size_sweep(
    const ModelConfig& mcfg, const std::vector<LabeledSample>& train_set,
    const std::vector<LabeledSample>& test_set, const TrainConfig& cfg,
    const std::vector<double>& ratios, std::size_t threads = 1);

struct FusionRow {
    ModelKind kind;
    Metrics metrics;
    std::vector<std::uint8_t> checkpoint;
};

// Trains and evaluates all four aggregation schemes under identical seeds.
std::vector<FusionRow> fusion_compare(const ModelConfig& mcfg,
                                      const std::vector<LabeledSample>& train_set,
                                      const std::vector<LabeledSample>& test_set,
                                      const TrainConfig& cfg,
                                      std::size_t threads = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& x_name);

// ----------------------------------------------------------- gradcheck ---

struct GradCheckTrial {
    std::size_t trial = 0;
    std::size_t feature_dim = 0;
    std::size_t crops = 0;
    bool hinge_active = false;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    bool ok = false;
};

// Seeded end-to-end gradient checks of the full loss (cross-entropy plus
// region biased term) against central finite differences, covering every
// trainable parameter. Trials cycle feature dim over {4,16,64} and crop
// count over {1,3,5}; each trial runs one hinge-active and one
// hinge-inactive configuration.
std::vector<GradCheckTrial> run_gradcheck(std::size_t trials,
                                          std::uint64_t seed,
                                          double epsilon = 1e-5,
                                          double rel_tol = 1e-4,
                                          double abs_tol = 1e-7);

}  // namespace ran
