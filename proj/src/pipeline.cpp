#include "ran/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "ran/errors.hpp"
#include "ran/kernels.hpp"
#include "ran/ops.hpp"
#include "ran/optim.hpp"

namespace ran {

namespace {

// Stream tags deriving independent RNG streams from one config seed.
constexpr std::uint64_t kInitStream = 0x01;
constexpr std::uint64_t kShuffleStream = 0x02;
constexpr std::uint64_t kEvalCropStream = 0x03;
// per-epoch training crops (random scheme): tag = kTrainCropStream + epoch
constexpr std::uint64_t kTrainCropStream = 0x100;

std::vector<RegionSpec> specs_for_sample(const LabeledSample& s,
                                         const TrainConfig& cfg,
                                         std::uint64_t crop_seed,
                                         std::size_t n_random) {
    switch (cfg.scheme) {
        case CropScheme::Fixed:
            return fixed_crops(s.image, cfg.region_scale_ratio);
        case CropScheme::Random:
            return random_crops(s.image, n_random, crop_seed);
        case CropScheme::Landmark: {
            if (s.landmarks.empty())
                throw ParseError("landmark scheme: sample '" + s.id +
                                 "' carries no landmarks");
            auto specs = landmark_crops(s.image, s.landmarks, cfg.radius_ratio);
            if (specs.empty())  // all regions fell outside: fixed fallback
                return fixed_crops(s.image, cfg.region_scale_ratio);
            return specs;
        }
    }
    return {};
}

std::vector<Vec> inputs_for_sample(const Model& model, const LabeledSample& s,
                                   const std::vector<RegionSpec>& specs) {
    const CropSet set = make_crop_set(s.image, specs, model.cfg.input_size);
    std::vector<Vec> inputs;
    inputs.reserve(set.crops.size() + 1);
    inputs.push_back(model.backbone.preprocess(set.original));
    for (const FaceImage& crop : set.crops)
        inputs.push_back(model.backbone.preprocess(crop));
    return inputs;
}

double mean_mu_gap(const Model& model,
                   const std::vector<std::vector<Vec>>& inputs) {
    SampleForward fwd;
    double gap = 0.0;
    for (const auto& xs : inputs) {
        model.forward(xs, -1, fwd);
        const auto& mu = fwd.att.mu;
        double mu_max = mu[1];
        for (std::size_t i = 2; i < mu.size(); ++i)
            mu_max = std::max(mu_max, mu[i]);
        gap += mu_max - mu[0];
    }
    return gap / static_cast<double>(inputs.size());
}

void check_region_scale(const TrainConfig& cfg,
                        const std::vector<LabeledSample>& samples) {
    if (cfg.scheme != CropScheme::Fixed || samples.empty()) return;
    const auto specs = fixed_crops(samples[0].image, cfg.region_scale_ratio);
    for (const auto& s : specs)
        if (s.w < 8 || s.h < 8)
            throw DimensionError(
                "region scale ratio " + std::to_string(cfg.region_scale_ratio) +
                " produces a crop smaller than 8 pixels");
}

}  // namespace

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
    double lr = cfg.lr;
    for (std::size_t decay : cfg.lr_decay_epochs)
        if (epoch > decay) lr /= 10.0;
    return lr;
}

Model make_seeded_model(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, kInitStream));
    return Model::make(cfg, rng);
}

std::vector<std::vector<Vec>> prepare_region_inputs(
    const Model& model, const std::vector<LabeledSample>& samples,
    const TrainConfig& cfg, bool training_variant) {
    check_region_scale(cfg, samples);
    const std::size_t n_random =
        training_variant ? cfg.random_regions_train : cfg.random_regions_test;
    std::vector<std::vector<Vec>> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto specs = specs_for_sample(
            samples[i], cfg, derive_seed(cfg.seed, kEvalCropStream + i * 2),
            n_random);
        out.push_back(inputs_for_sample(model, samples[i], specs));
    }
    return out;
}

namespace {

struct ParamSnapshot {
    std::vector<Vec> values;
    void save(const std::vector<Parameter*>& params) {
        values.clear();
        for (const Parameter* p : params) values.push_back(p->value);
    }
    void restore(const std::vector<Parameter*>& params) const {
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i]->value = values[i];
    }
};

TrainResult train_core(
    Model& model, const std::vector<int>& labels,
    const std::function<const std::vector<std::vector<Vec>>&(std::size_t)>&
        inputs_for_epoch,
    const std::vector<std::vector<Vec>>& gap_inputs, const TrainConfig& cfg) {
    const std::size_t n = labels.size();
    if (n == 0) throw DimensionError("train: empty dataset");
    for (int lab : labels)
        require_dim(lab >= 0 && static_cast<std::size_t>(lab) < model.cfg.classes,
                    "train: label out of range");

    TrainResult res;
    if (model.cfg.kind == ModelKind::Ran)
        res.initial_mu_gap = mean_mu_gap(model, gap_inputs);

    auto params = model.trainable_params();
    SgdMomentum opt(params, cfg.lr, cfg.momentum);
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    ParamSnapshot last_good;
    last_good.save(params);

    SampleForward fwd;
    for (std::size_t epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
        opt.set_lr(lr_at_epoch(cfg, epoch));
        const auto& inputs = inputs_for_epoch(epoch);
        shuffle_rng.shuffle(order);

        double sum_ce = 0.0, sum_rb = 0.0;
        std::size_t correct = 0;
        try {
            for (std::size_t start = 0; start < n; start += cfg.batch_size) {
                const std::size_t end = std::min(n, start + cfg.batch_size);
                opt.zero_grad();
                for (std::size_t b = start; b < end; ++b) {
                    const std::size_t idx = order[b];
                    const double loss = model.loss_and_backward(
                        inputs[idx], labels[idx], cfg.alpha, cfg.lambda_rb, fwd);
                    if (!std::isfinite(loss))
                        throw NumericError("train: non-finite loss at epoch " +
                                           std::to_string(epoch));
                    sum_ce += fwd.ce;
                    sum_rb += fwd.rb;
                    if (fwd.pred == labels[idx]) ++correct;
                }
                const double inv_batch = 1.0 / static_cast<double>(end - start);
                for (Parameter* p : params)
                    kernels::scale(inv_batch, p->grad.data(), p->grad.size());
                opt.step();
            }
        } catch (const NumericError&) {
            last_good.restore(params);
            throw;
        }
        res.log.push_back({epoch, opt.lr(),
                           sum_ce / static_cast<double>(n),
                           sum_rb / static_cast<double>(n),
                           static_cast<double>(correct) / static_cast<double>(n)});
        last_good.save(params);
    }

    if (model.cfg.kind == ModelKind::Ran)
        res.final_mu_gap = mean_mu_gap(model, gap_inputs);
    return res;
}

}  // namespace

TrainResult train(Model& model, const std::vector<LabeledSample>& train_set,
                  const TrainConfig& cfg) {
    std::vector<int> labels(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i)
        labels[i] = train_set[i].label;

    if (cfg.scheme == CropScheme::Random) {
        // fresh crops each epoch; the gap measurement uses the eval crops
        const auto gap_inputs =
            prepare_region_inputs(model, train_set, cfg, false);
        std::vector<std::vector<Vec>> epoch_inputs;
        std::size_t cached_epoch = 0;
        auto provider =
            [&](std::size_t epoch) -> const std::vector<std::vector<Vec>>& {
            if (epoch != cached_epoch) {
                epoch_inputs.clear();
                epoch_inputs.reserve(train_set.size());
                for (std::size_t i = 0; i < train_set.size(); ++i) {
                    const auto specs = specs_for_sample(
                        train_set[i], cfg,
                        derive_seed(cfg.seed,
                                    kTrainCropStream + epoch * 0x10000 + i),
                        cfg.random_regions_train);
                    epoch_inputs.push_back(
                        inputs_for_sample(model, train_set[i], specs));
                }
                cached_epoch = epoch;
            }
            return epoch_inputs;
        };
        return train_core(model, labels, provider, gap_inputs, cfg);
    }

    const auto cache = prepare_region_inputs(model, train_set, cfg, true);
    auto provider =
        [&](std::size_t) -> const std::vector<std::vector<Vec>>& {
        return cache;
    };
    return train_core(model, labels, provider, cache, cfg);
}

namespace {

Metrics evaluate_on_inputs(const Model& model,
                           const std::vector<std::vector<Vec>>& inputs,
                           const std::vector<int>& labels) {
    const std::size_t C = model.cfg.classes;
    Metrics m;
    m.total = inputs.size();
    m.confusion.assign(C, std::vector<std::size_t>(C, 0));
    SampleForward fwd;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        require_dim(labels[i] >= 0 &&
                        static_cast<std::size_t>(labels[i]) < C,
                    "evaluate: label out of range");
        model.forward(inputs[i], labels[i], fwd);
        ++m.confusion[static_cast<std::size_t>(labels[i])]
                     [static_cast<std::size_t>(fwd.pred)];
        if (fwd.pred == labels[i]) ++correct;
    }
    m.overall_accuracy =
        m.total ? static_cast<double>(correct) / static_cast<double>(m.total)
                : 0.0;
    m.per_class_accuracy.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        const std::size_t support = std::accumulate(
            m.confusion[c].begin(), m.confusion[c].end(), std::size_t{0});
        if (support)
            m.per_class_accuracy[c] =
                static_cast<double>(m.confusion[c][c]) / support;
    }
    return m;
}

}  // namespace

Metrics evaluate(const Model& model, const std::vector<LabeledSample>& data,
                 const TrainConfig& cfg) {
    const auto inputs = prepare_region_inputs(model, data, cfg, false);
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
    return evaluate_on_inputs(model, inputs, labels);
}

TrainResult train_on_features(Model& model,
                              const std::vector<std::vector<Vec>>& inputs,
                              const std::vector<ManifestRecord>& records,
                              const TrainConfig& cfg) {
    require_dim(!model.cfg.with_backbone,
                "train_on_features: model expects raw inputs, not features");
    require_dim(inputs.size() == records.size(),
                "train_on_features: inputs/records size mismatch");
    std::vector<int> labels(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        labels[i] = records[i].label;
    auto provider =
        [&](std::size_t) -> const std::vector<std::vector<Vec>>& {
        return inputs;
    };
    return train_core(model, labels, provider, inputs, cfg);
}

Metrics evaluate_on_features(const Model& model,
                             const std::vector<std::vector<Vec>>& inputs,
                             const std::vector<ManifestRecord>& records) {
    require_dim(inputs.size() == records.size(),
                "evaluate_on_features: inputs/records size mismatch");
    std::vector<int> labels(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        labels[i] = records[i].label;
    return evaluate_on_inputs(model, inputs, labels);
}

std::vector<AttentionRow> attention_report(
    const Model& model, const std::vector<LabeledSample>& data,
    const TrainConfig& cfg) {
    require_dim(model.cfg.kind == ModelKind::Ran,
                "attention report: only the attention model has weights");
    const auto inputs = prepare_region_inputs(model, data, cfg, false);
    std::vector<AttentionRow> rows;
    SampleForward fwd;
    for (std::size_t i = 0; i < data.size(); ++i) {
        model.forward(inputs[i], -1, fwd);
        const auto& mu = fwd.att.mu;
        const auto& nu = fwd.att.nu;
        const std::size_t k1 = mu.size();
        // display normalization: softmax over the combined weights
        Vec combined(k1);
        for (std::size_t r = 0; r < k1; ++r) combined[r] = mu[r] * nu[r];
        const Vec display = softmax(combined);
        std::size_t arg_hi = 0, arg_lo = 0;
        for (std::size_t r = 1; r < k1; ++r) {
            if (display[r] > display[arg_hi]) arg_hi = r;
            if (display[r] < display[arg_lo]) arg_lo = r;
        }
        for (std::size_t r = 0; r < k1; ++r)
            rows.push_back({data[i].id, r, mu[r], nu[r], display[r],
                            r == arg_hi, r == arg_lo});
    }
    return rows;
}

std::vector<double> mean_display_weights(const std::vector<AttentionRow>& rows,
                                         std::size_t region_count) {
    std::vector<double> mean(region_count, 0.0);
    std::vector<std::size_t> counts(region_count, 0);
    for (const auto& r : rows) {
        require_dim(r.region_index < region_count,
                    "mean_display_weights: region index out of range");
        mean[r.region_index] += r.display;
        ++counts[r.region_index];
    }
    for (std::size_t i = 0; i < region_count; ++i)
        if (counts[i]) mean[i] /= static_cast<double>(counts[i]);
    return mean;
}

std::string metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["overall_accuracy"] = m.overall_accuracy;
    j["per_class_accuracy"] = m.per_class_accuracy;
    j["confusion"] = m.confusion;
    j["total"] = m.total;
    return j.dump(2);
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    out << "epoch,lr,mean_ce,mean_rb,train_acc\n";
    char buf[160];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n",
                      row.epoch, row.lr, row.mean_ce, row.mean_rb,
                      row.train_acc);
        out << buf;
    }
    return out.str();
}

std::string attention_report_csv(const std::vector<AttentionRow>& rows) {
    std::ostringstream out;
    out << "sample_id,region_index,mu,nu,display,flag\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g", r.region_index,
                      r.mu, r.nu, r.display);
        out << r.sample_id << "," << buf << ","
            << (r.is_max ? "max" : (r.is_min ? "min" : "")) << "\n";
    }
    return out.str();
}

std::string confusion_csv(const Metrics& m) {
    std::ostringstream out;
    for (const auto& row : m.confusion) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << row[c];
        out << "\n";
    }
    return out.str();
}

// ------------------------------------------------------------------ sweeps

namespace {

// Runs jobs with bounded concurrency; results land in caller-provided slots.
void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t threads) {
    if (threads <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    for (std::size_t start = 0; start < jobs.size(); start += threads) {
        const std::size_t end = std::min(jobs.size(), start + threads);
        std::vector<std::future<void>> running;
        for (std::size_t i = start; i < end; ++i)
            running.push_back(std::async(std::launch::async, jobs[i]));
        for (auto& f : running) f.get();
    }
}

}  // namespace

std::vector<SweepRow> margin_sweep(const ModelConfig& mcfg,
                                   const std::vector<LabeledSample>& train_set,
                                   const std::vector<LabeledSample>& test_set,
                                   const TrainConfig& cfg,
                                   const std::vector<double>& alphas,
                                   std::size_t threads) {
    for (double a : alphas)
        require_dim(a >= 0.0, "margin sweep: alpha must be >= 0");
    std::vector<SweepRow> rows(alphas.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        jobs.push_back([&, i]() {
            TrainConfig c = cfg;
            c.alpha = alphas[i];
            Model model = make_seeded_model(mcfg, c.seed);
            train(model, train_set, c);
            const Metrics m = evaluate(model, test_set, c);
            rows[i] = {alphas[i], m.overall_accuracy,
                       model.to_checkpoint().serialize()};
        });
    }
    run_jobs(jobs, threads);
    return rows;
}

std::vector<SweepRow> region_size_sweep(
    const ModelConfig& mcfg, const std::vector<LabeledSample>& train_set,
    const std::vector<LabeledSample>& test_set, const TrainConfig& cfg,
    const std::vector<double>& ratios, std::size_t threads) {
    for (double r : ratios)
        require_dim(r >= 0.3 && r <= 1.1,
                    "region size sweep: ratio must be in [0.3, 1.1]");
    std::vector<SweepRow> rows(ratios.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        jobs.push_back([&, i]() {
            TrainConfig c = cfg;
            c.region_scale_ratio = ratios[i];
            Model model = make_seeded_model(mcfg, c.seed);
            train(model, train_set, c);
            const Metrics m = evaluate(model, test_set, c);
            rows[i] = {ratios[i], m.overall_accuracy,
                       model.to_checkpoint().serialize()};
        });
    }
    run_jobs(jobs, threads);
    return rows;
}

std::vector<FusionRow> fusion_compare(const ModelConfig& mcfg,
                                      const std::vector<LabeledSample>& train_set,
                                      const std::vector<LabeledSample>& test_set,
                                      const TrainConfig& cfg,
                                      std::size_t threads) {
    const ModelKind kinds[] = {ModelKind::Ran, ModelKind::ScoreFusion,
                               ModelKind::Concat, ModelKind::AveragePool};
    std::vector<FusionRow> rows(4);
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < 4; ++i) {
        jobs.push_back([&, i]() {
            ModelConfig mc = mcfg;
            mc.kind = kinds[i];
            Model model = make_seeded_model(mc, cfg.seed);
            train(model, train_set, cfg);
            const Metrics m = evaluate(model, test_set, cfg);
            rows[i] = {kinds[i], m, model.to_checkpoint().serialize()};
        });
    }
    run_jobs(jobs, threads);
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& x_name) {
    std::ostringstream out;
    out << x_name << ",accuracy\n";
    char buf[80];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.x, r.accuracy);
        out << buf;
    }
    return out.str();
}

// ---------------------------------------------------------------- gradcheck

namespace {

double mu_gap_probe(const Model& model, const std::vector<Vec>& xs) {
    SampleForward fwd;
    model.forward(xs, -1, fwd);
    double mu_max = fwd.att.mu[1];
    for (std::size_t i = 2; i < fwd.att.mu.size(); ++i)
        mu_max = std::max(mu_max, fwd.att.mu[i]);
    return mu_max - fwd.att.mu[0];
}

}  // namespace

std::vector<GradCheckTrial> run_gradcheck(std::size_t trials,
                                          std::uint64_t seed, double epsilon,
                                          double rel_tol, double abs_tol) {
    constexpr std::size_t kDims[] = {4, 16, 64};
    constexpr std::size_t kCrops[] = {1, 3, 5};
    constexpr std::size_t kClasses[] = {2, 3, 5};

    std::vector<GradCheckTrial> results;
    results.reserve(2 * trials);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, 0x6C00 + t));

        ModelConfig mc;
        mc.kind = ModelKind::Ran;
        mc.classes = kClasses[t % 3];
        mc.feature_dim = kDims[t % 3];
        mc.hidden_dim = 8;
        mc.input_size = 16;
        mc.downsample = 8;
        mc.regions = kCrops[(t / 3) % 3];

        Model model = Model::make(mc, rng);
        const int label = static_cast<int>(rng.uniform_index(mc.classes));
        std::vector<Vec> xs(mc.regions + 1);
        for (auto& x : xs) {
            x.resize(model.backbone.flat_dim());
            for (double& v : x) v = rng.uniform();
        }

        // Random attention parameters; redrawn until the crop weights lead
        // mu_0 by enough that the hinge-inactive case is far from the kink.
        double gap = 0.0;
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (double& v : model.q0.value) v = rng.uniform(-0.6, 0.6);
            for (double& v : model.q1.value) v = rng.uniform(-0.6, 0.6);
            gap = mu_gap_probe(model, xs);
            if (gap > 0.01) break;
        }
        if (gap <= 0.01)
            throw NumericError("gradcheck: could not reach a hinge-inactive "
                               "configuration");

        const auto params = model.trainable_params();
        for (int active = 1; active >= 0; --active) {
            // active: margin strictly unmet; inactive: alpha 0 with positive
            // gap. Both sit >= 0.01 away from the hinge kink so the central
            // differences stay valid.
            const double alpha = active ? gap + 0.05 : 0.0;
            const double lambda_rb = 1.0;
            auto loss_fn = [&]() {
                return forward_total_loss(model, xs, label, alpha, lambda_rb);
            };
            SampleForward fwd;
            auto backward_fn = [&]() {
                model.loss_and_backward(xs, label, alpha, lambda_rb, fwd);
            };
            const GradCheckResult r =
                grad_check(loss_fn, backward_fn, params, epsilon, rel_tol,
                           abs_tol);
            results.push_back({t, mc.feature_dim, mc.regions, active == 1,
                               r.max_rel_err, r.max_abs_err, r.ok});
        }
    }
    return results;
}

}  // namespace ran
