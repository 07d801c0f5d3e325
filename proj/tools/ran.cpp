// Command-line entry point: train, eval, crop, synth, subset, stats,
// gradcheck, sweep.
//
// Every subcommand accepts --config FILE with key=value lines ('#' starts a
// comment); explicit flags win over config values, and the resolved
// configuration is written to <out>/resolved_config.txt. Unknown config keys
// are rejected.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ran/checkpoint.hpp"
#include "ran/datasets.hpp"
#include "ran/errors.hpp"
#include "ran/features.hpp"
#include "ran/kernels.hpp"
#include "ran/model.hpp"
#include "ran/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------- config merging ---

std::map<std::string, std::string> load_kv_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                                 line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        const auto eq = line.find('=', start);
        if (eq == std::string::npos)
            throw UsageError("config '" + path + "' line " +
                             std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
            key.pop_back();
        std::string value = line.substr(eq + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        if (key.empty())
            throw UsageError("config '" + path + "' line " +
                             std::to_string(line_no) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

// Binds flag variables to config keys, applies file values where the flag
// was not given, and records the final value of every key.
class ConfigMerge {
  public:
    explicit ConfigMerge(CLI::App* cmd) : cmd_(cmd) {}

    template <typename T>
    void bind(const std::string& key, CLI::Option* opt, T& var) {
        appliers_.push_back([key, opt, &var](const std::string& raw) {
            if (opt->count() > 0) return;  // explicit flag wins
            std::istringstream ss(raw);
            ss >> var;
            if (ss.fail() || !ss.eof())
                throw UsageError("config key '" + key + "': bad value '" + raw +
                                 "'");
        });
        keys_.push_back(key);
        printers_.push_back([&var]() {
            std::ostringstream ss;
            ss << var;
            return ss.str();
        });
    }

    void bind_string(const std::string& key, CLI::Option* opt,
                     std::string& var) {
        appliers_.push_back([opt, &var](const std::string& raw) {
            if (opt->count() > 0) return;
            var = raw;
        });
        keys_.push_back(key);
        printers_.push_back([&var]() { return var; });
    }

    // Applies the config file named by --config (if any) and returns the
    // resolved key=value text.
    std::string resolve(const std::string& config_path) {
        std::map<std::string, std::string> kv;
        if (!config_path.empty()) kv = load_kv_config(config_path);
        std::set<std::string> known(keys_.begin(), keys_.end());
        for (const auto& [k, v] : kv) {
            if (!known.count(k))
                throw UsageError("config key '" + k + "' is not recognized by '" +
                                 cmd_->get_name() + "'");
        }
        for (std::size_t i = 0; i < keys_.size(); ++i) {
            auto it = kv.find(keys_[i]);
            if (it != kv.end()) appliers_[i](it->second);
        }
        std::ostringstream out;
        out << "command=" << cmd_->get_name() << "\n";
        for (std::size_t i = 0; i < keys_.size(); ++i)
            out << keys_[i] << "=" << printers_[i]() << "\n";
        return out.str();
    }

  private:
    CLI::App* cmd_;
    std::vector<std::string> keys_;
    std::vector<std::function<void(const std::string&)>> appliers_;
    std::vector<std::function<std::string()>> printers_;
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ran::IoError("cannot write '" + path + "'");
    f << content;
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw UsageError(what + " path is required");
    if (!fs::exists(path)) throw UsageError(what + " '" + path + "' not found");
}

std::vector<double> parse_double_list(const std::string& s,
                                      const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw UsageError("bad " + what + " entry '" + cell + "'");
        }
    }
    if (out.empty()) throw UsageError(what + " list is empty");
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s,
                                         const std::string& what) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(s, what))
        out.push_back(static_cast<std::size_t>(v));
    return out;
}

// ------------------------------------------------------- shared settings ---

struct CommonOpts {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void add(CLI::App* cmd, ConfigMerge& merge) {
        auto* c = cmd->add_option("--config", config,
                                  "key=value config file; flags win");
        (void)c;
        auto* o = cmd->add_option("--out", out, "output directory");
        auto* s = cmd->add_option("--seed", seed, "RNG seed");
        auto* t = cmd->add_option("--threads", threads,
                                  "sweep concurrency; 1 = bit-exact mode");
        merge.bind_string("out", o, out);
        merge.bind("seed", s, seed);
        merge.bind("threads", t, threads);
    }
};

struct TrainOpts {
    std::string train_manifest, test_manifest, features_file;
    std::string model_kind = "ran";
    std::string scheme = "fixed";
    double lr = 0.01, alpha = 0.02, lambda_rb = 1.0, momentum = 0.9;
    std::string decay_epochs = "15,30";
    std::size_t epochs = 40, batch_size = 32;
    std::size_t random_train_regions = 3, random_test_regions = 6;
    double scale_ratio = 1.0, radius_ratio = 0.4;
    std::size_t feature_dim = 32, hidden_dim = 16, input_size = 64,
                downsample = 16;

    void add(CLI::App* cmd, ConfigMerge& merge, bool with_train_path) {
        if (with_train_path) {
            auto* o = cmd->add_option("--train", train_manifest,
                                      "training manifest CSV");
            merge.bind_string("train_manifest", o, train_manifest);
            auto* t = cmd->add_option("--test", test_manifest,
                                      "test manifest CSV");
            merge.bind_string("test_manifest", t, test_manifest);
        }
        auto* f = cmd->add_option("--features", features_file,
                                  "feature store file (frozen backbone)");
        merge.bind_string("features_file", f, features_file);
        auto* m = cmd->add_option("--model", model_kind,
                                  "ran|avgpool|concat|score_fusion");
        merge.bind_string("model", m, model_kind);
        auto* s = cmd->add_option("--scheme", scheme, "fixed|random|landmark");
        merge.bind_string("scheme", s, scheme);
        auto* lr_o = cmd->add_option("--lr", lr, "initial learning rate");
        merge.bind("lr", lr_o, lr);
        auto* a = cmd->add_option("--alpha", alpha, "RB-loss margin");
        merge.bind("alpha", a, alpha);
        auto* l = cmd->add_option("--lambda", lambda_rb, "RB-loss weight");
        merge.bind("lambda_rb", l, lambda_rb);
        auto* mo = cmd->add_option("--momentum", momentum, "SGD momentum");
        merge.bind("momentum", mo, momentum);
        auto* d = cmd->add_option("--decay-epochs", decay_epochs,
                                  "comma list; lr /= 10 after each");
        merge.bind_string("lr_decay_epochs", d, decay_epochs);
        auto* e = cmd->add_option("--epochs", epochs, "total epochs");
        merge.bind("total_epochs", e, epochs);
        auto* b = cmd->add_option("--batch", batch_size, "batch size");
        merge.bind("batch_size", b, batch_size);
        auto* rtr = cmd->add_option("--random-train-regions",
                                    random_train_regions,
                                    "crops per image per iteration");
        merge.bind("random_train_regions", rtr, random_train_regions);
        auto* rte = cmd->add_option("--random-test-regions",
                                    random_test_regions, "crops at test time");
        merge.bind("random_test_regions", rte, random_test_regions);
        auto* sr = cmd->add_option("--scale-ratio", scale_ratio,
                                   "fixed-crop size multiplier");
        merge.bind("region_scale_ratio", sr, scale_ratio);
        auto* rr = cmd->add_option("--radius-ratio", radius_ratio,
                                   "landmark crop radius ratio");
        merge.bind("radius_ratio", rr, radius_ratio);
        auto* fd = cmd->add_option("--feature-dim", feature_dim, "d");
        merge.bind("feature_dim", fd, feature_dim);
        auto* hd = cmd->add_option("--hidden-dim", hidden_dim,
                                   "backbone hidden width");
        merge.bind("hidden_dim", hd, hidden_dim);
        auto* is = cmd->add_option("--input-size", input_size,
                                   "backbone input side");
        merge.bind("input_size", is, input_size);
        auto* ds = cmd->add_option("--downsample", downsample,
                                   "backbone downsample side");
        merge.bind("downsample", ds, downsample);
    }

    ran::TrainConfig train_config(std::uint64_t seed) const {
        ran::TrainConfig cfg;
        cfg.lr = lr;
        cfg.lr_decay_epochs = parse_size_list(decay_epochs, "decay epoch");
        cfg.total_epochs = epochs;
        cfg.alpha = alpha;
        cfg.lambda_rb = lambda_rb;
        cfg.momentum = momentum;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        cfg.scheme = ran::crop_scheme_from_string(scheme);
        cfg.random_regions_train = random_train_regions;
        cfg.random_regions_test = random_test_regions;
        cfg.region_scale_ratio = scale_ratio;
        cfg.radius_ratio = radius_ratio;
        return cfg;
    }
};

int class_count_from(const std::vector<ran::ManifestRecord>& records) {
    int max_label = -1;
    for (const auto& r : records) max_label = std::max(max_label, r.label);
    if (max_label < 1) throw UsageError("manifest needs at least 2 classes");
    return max_label + 1;
}

// Feature-store path: region inputs are the stored vectors themselves.
std::vector<std::vector<ran::Vec>> store_inputs(
    const ran::FeatureStore& store,
    const std::vector<ran::ManifestRecord>& records) {
    std::vector<std::vector<ran::Vec>> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto regions = store.regions_of(r.sample_id);
        if (regions.empty() || regions[0] != 0)
            throw ran::MissingFeatureError(
                "feature store: sample '" + r.sample_id +
                "' lacks region 0 (the duplicate face)");
        std::vector<ran::Vec> xs;
        xs.reserve(regions.size());
        for (std::size_t reg : regions)
            xs.push_back(store.get(r.sample_id, reg));
        out.push_back(std::move(xs));
    }
    return out;
}

// --------------------------------------------------------------- commands ---

int cmd_train(const CommonOpts& common, const TrainOpts& opts) {
    require_file(opts.train_manifest, "training manifest");
    const auto records = ran::load_manifest(opts.train_manifest);
    if (records.empty()) throw UsageError("training manifest is empty");

    ran::TrainConfig cfg = opts.train_config(common.seed);
    ran::ModelConfig mc;
    mc.kind = ran::model_kind_from_string(opts.model_kind);
    mc.classes = static_cast<std::size_t>(class_count_from(records));
    mc.feature_dim = opts.feature_dim;
    mc.hidden_dim = opts.hidden_dim;
    mc.input_size = opts.input_size;
    mc.downsample = opts.downsample;

    ran::TrainResult result;
    ran::Model model = [&] {
        if (!opts.features_file.empty()) {
            require_file(opts.features_file, "feature store");
            const auto store = ran::load_feature_store(opts.features_file);
            mc.with_backbone = false;
            mc.feature_dim = store.dim();
            const auto inputs = store_inputs(store, records);
            mc.regions = inputs.empty() ? 0 : inputs[0].size() - 1;
            ran::Model m = ran::make_seeded_model(mc, cfg.seed);
            result = ran::train_on_features(m, inputs, records, cfg);
            return m;
        }
        auto samples = ran::load_samples(records, opts.train_manifest);
        mc.channels = samples[0].image.channels;
        if (cfg.scheme == ran::CropScheme::Random)
            mc.regions = cfg.random_regions_train;
        ran::Model m = ran::make_seeded_model(mc, cfg.seed);
        result = ran::train(m, samples, cfg);
        return m;
    }();

    fs::create_directories(common.out);
    model.to_checkpoint().save(common.out + "/checkpoint.bin");
    write_text(common.out + "/epoch_log.csv", ran::epoch_log_csv(result.log));

    if (!opts.test_manifest.empty()) {
        require_file(opts.test_manifest, "test manifest");
        const auto test_records = ran::load_manifest(opts.test_manifest);
        ran::Metrics m;
        if (!opts.features_file.empty()) {
            const auto store = ran::load_feature_store(opts.features_file);
            m = ran::evaluate_on_features(model, store_inputs(store, test_records),
                                          test_records);
        } else {
            const auto test = ran::load_samples(test_records, opts.test_manifest);
            m = ran::evaluate(model, test, cfg);
        }
        write_text(common.out + "/test_metrics.json", ran::metrics_to_json(m));
        std::printf("test accuracy %.4f\n", m.overall_accuracy);
    }
    std::printf("trained %zu epochs; checkpoint at %s/checkpoint.bin\n",
                cfg.total_epochs, common.out.c_str());
    return 0;
}

int cmd_eval(const CommonOpts& common, const TrainOpts& opts,
             const std::string& checkpoint_path, const std::string& data_path,
             const std::string& subset) {
    require_file(checkpoint_path, "checkpoint");
    require_file(data_path, "data manifest");
    const ran::Model model =
        ran::Model::from_checkpoint(ran::Checkpoint::load(checkpoint_path));

    auto records = ran::load_manifest(data_path);
    if (subset == "pose30")
        records = ran::build_pose_subset(records, 30.0);
    else if (subset == "pose45")
        records = ran::build_pose_subset(records, 45.0);
    else if (subset == "occlusion")
        records = ran::build_occlusion_subset(records);
    else if (subset != "none")
        throw UsageError("unknown subset '" + subset + "'");
    if (records.empty()) throw UsageError("no records to evaluate");

    const ran::TrainConfig cfg = opts.train_config(common.seed);
    fs::create_directories(common.out);

    ran::Metrics metrics;
    if (!opts.features_file.empty()) {
        require_file(opts.features_file, "feature store");
        const auto store = ran::load_feature_store(opts.features_file);
        metrics = ran::evaluate_on_features(model, store_inputs(store, records),
                                            records);
    } else {
        const auto samples = ran::load_samples(records, data_path);
        metrics = ran::evaluate(model, samples, cfg);
        if (model.cfg.kind == ran::ModelKind::Ran) {
            const auto report = ran::attention_report(model, samples, cfg);
            write_text(common.out + "/attention.csv",
                       ran::attention_report_csv(report));
        }
    }
    write_text(common.out + "/metrics.json", ran::metrics_to_json(metrics));
    write_text(common.out + "/confusion.csv", ran::confusion_csv(metrics));
    std::printf("accuracy %.6f over %zu samples\n", metrics.overall_accuracy,
                metrics.total);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Region attention network training and evaluation"};
    app.require_subcommand(1);

    // ----- train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    ConfigMerge train_merge(train_cmd);
    CommonOpts train_common;
    train_common.add(train_cmd, train_merge);
    TrainOpts train_opts;
    train_opts.add(train_cmd, train_merge, true);

    // ----- eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    ConfigMerge eval_merge(eval_cmd);
    CommonOpts eval_common;
    eval_common.add(eval_cmd, eval_merge);
    TrainOpts eval_opts;
    eval_opts.add(eval_cmd, eval_merge, false);
    std::string eval_checkpoint, eval_data, eval_subset = "none";
    {
        auto* c = eval_cmd->add_option("--checkpoint", eval_checkpoint,
                                       "trained checkpoint");
        eval_merge.bind_string("checkpoint", c, eval_checkpoint);
        auto* d = eval_cmd->add_option("--data", eval_data, "manifest to score");
        eval_merge.bind_string("data_manifest", d, eval_data);
        auto* s = eval_cmd->add_option("--subset", eval_subset,
                                       "none|pose30|pose45|occlusion");
        eval_merge.bind_string("subset", s, eval_subset);
    }

    // ----- crop
    auto* crop_cmd = app.add_subcommand("crop", "emit region specs as CSV");
    ConfigMerge crop_merge(crop_cmd);
    CommonOpts crop_common;
    crop_common.add(crop_cmd, crop_merge);
    std::string crop_image, crop_scheme = "fixed", crop_landmarks;
    std::size_t crop_n = 5;
    double crop_scale = 1.0, crop_radius = 0.4;
    {
        auto* i = crop_cmd->add_option("--image", crop_image, "PGM/PPM image");
        crop_merge.bind_string("image", i, crop_image);
        auto* s = crop_cmd->add_option("--scheme", crop_scheme,
                                       "fixed|random|landmark");
        crop_merge.bind_string("scheme", s, crop_scheme);
        auto* n = crop_cmd->add_option("--n", crop_n, "random crop count");
        crop_merge.bind("n", n, crop_n);
        auto* sc = crop_cmd->add_option("--scale-ratio", crop_scale,
                                        "fixed-crop size multiplier");
        crop_merge.bind("region_scale_ratio", sc, crop_scale);
        auto* r = crop_cmd->add_option("--radius-ratio", crop_radius,
                                       "landmark radius ratio");
        crop_merge.bind("radius_ratio", r, crop_radius);
        auto* lm = crop_cmd->add_option(
            "--landmarks", crop_landmarks,
            "name:x:y|... five entries for the landmark scheme");
        crop_merge.bind_string("landmarks", lm, crop_landmarks);
    }

    // ----- synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    ConfigMerge synth_merge(synth_cmd);
    CommonOpts synth_common;
    synth_common.add(synth_cmd, synth_merge);
    ran::SyntheticSpec synth_spec;
    {
        auto* a = synth_cmd->add_option("--image-size", synth_spec.image_size, "");
        synth_merge.bind("image_size", a, synth_spec.image_size);
        auto* b = synth_cmd->add_option("--classes", synth_spec.classes, "");
        synth_merge.bind("classes", b, synth_spec.classes);
        auto* c = synth_cmd->add_option("--signal-region",
                                        synth_spec.signal_region,
                                        "fixed-crop index 1..5");
        synth_merge.bind("signal_region", c, synth_spec.signal_region);
        auto* d = synth_cmd->add_option("--occluder-prob",
                                        synth_spec.occluder_prob, "");
        synth_merge.bind("occluder_prob", d, synth_spec.occluder_prob);
        auto* e = synth_cmd->add_option("--occluder-min", synth_spec.occluder_min, "");
        synth_merge.bind("occluder_min", e, synth_spec.occluder_min);
        auto* f = synth_cmd->add_option("--occluder-max", synth_spec.occluder_max, "");
        synth_merge.bind("occluder_max", f, synth_spec.occluder_max);
        auto* g = synth_cmd->add_option("--noise", synth_spec.noise_level, "");
        synth_merge.bind("noise_level", g, synth_spec.noise_level);
        auto* h = synth_cmd->add_option("--train-count", synth_spec.train_count, "");
        synth_merge.bind("train_count", h, synth_spec.train_count);
        auto* i = synth_cmd->add_option("--test-count", synth_spec.test_count, "");
        synth_merge.bind("test_count", i, synth_spec.test_count);
    }

    // ----- subset
    auto* subset_cmd = app.add_subcommand("subset", "build pose/occlusion subsets");
    ConfigMerge subset_merge(subset_cmd);
    CommonOpts subset_common;
    subset_common.add(subset_cmd, subset_merge);
    std::string subset_manifest, subset_kind = "occlusion";
    double subset_threshold = 30.0;
    {
        auto* m = subset_cmd->add_option("--manifest", subset_manifest, "");
        subset_merge.bind_string("manifest", m, subset_manifest);
        auto* k = subset_cmd->add_option("--kind", subset_kind, "pose|occlusion");
        subset_merge.bind_string("kind", k, subset_kind);
        auto* t = subset_cmd->add_option("--threshold", subset_threshold,
                                         "pose angle threshold in degrees");
        subset_merge.bind("threshold", t, subset_threshold);
    }

    // ----- stats
    auto* stats_cmd = app.add_subcommand("stats", "manifest statistics table");
    ConfigMerge stats_merge(stats_cmd);
    CommonOpts stats_common;
    stats_common.add(stats_cmd, stats_merge);
    std::string stats_manifest;
    {
        auto* m = stats_cmd->add_option("--manifest", stats_manifest, "");
        stats_merge.bind_string("manifest", m, stats_manifest);
    }

    // ----- gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "finite-difference gradient oracle");
    ConfigMerge grad_merge(grad_cmd);
    CommonOpts grad_common;
    grad_common.add(grad_cmd, grad_merge);
    std::size_t grad_trials = 20;
    double grad_eps = 1e-5, grad_tol = 1e-4;
    {
        auto* t = grad_cmd->add_option("--trials", grad_trials, "");
        grad_merge.bind("trials", t, grad_trials);
        auto* e = grad_cmd->add_option("--epsilon", grad_eps, "");
        grad_merge.bind("epsilon", e, grad_eps);
        auto* o = grad_cmd->add_option("--tolerance", grad_tol,
                                       "max relative error");
        grad_merge.bind("tolerance", o, grad_tol);
    }

    // ----- sweep
    auto* sweep_cmd = app.add_subcommand("sweep",
                                         "margin / region-size / fusion sweeps");
    ConfigMerge sweep_merge(sweep_cmd);
    CommonOpts sweep_common;
    sweep_common.add(sweep_cmd, sweep_merge);
    TrainOpts sweep_opts;
    sweep_opts.add(sweep_cmd, sweep_merge, true);
    std::string sweep_kind = "margin";
    std::string sweep_alphas = "0,0.01,0.02,0.04,0.06";
    std::string sweep_ratios = "0.4,0.7,1.0,1.1";
    {
        auto* k = sweep_cmd->add_option("--kind", sweep_kind,
                                        "margin|region-size|fusion");
        sweep_merge.bind_string("kind", k, sweep_kind);
        auto* a = sweep_cmd->add_option("--alphas", sweep_alphas, "comma list");
        sweep_merge.bind_string("alphas", a, sweep_alphas);
        auto* r = sweep_cmd->add_option("--ratios", sweep_ratios, "comma list");
        sweep_merge.bind_string("ratios", r, sweep_ratios);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            const auto resolved = train_merge.resolve(train_common.config);
            fs::create_directories(train_common.out);
            write_text(train_common.out + "/resolved_config.txt", resolved);
            return cmd_train(train_common, train_opts);
        }
        if (eval_cmd->parsed()) {
            const auto resolved = eval_merge.resolve(eval_common.config);
            fs::create_directories(eval_common.out);
            write_text(eval_common.out + "/resolved_config.txt", resolved);
            return cmd_eval(eval_common, eval_opts, eval_checkpoint, eval_data,
                            eval_subset);
        }
        if (crop_cmd->parsed()) {
            const auto resolved = crop_merge.resolve(crop_common.config);
            require_file(crop_image, "image");
            const ran::FaceImage img = ran::load_image(crop_image);
            std::vector<ran::RegionSpec> specs;
            const auto scheme = ran::crop_scheme_from_string(crop_scheme);
            if (scheme == ran::CropScheme::Fixed) {
                specs = ran::fixed_crops(img, crop_scale);
            } else if (scheme == ran::CropScheme::Random) {
                specs = ran::random_crops(img, crop_n, crop_common.seed);
            } else {
                std::vector<ran::Landmark> lms;
                std::stringstream ss(crop_landmarks);
                std::string entry;
                while (std::getline(ss, entry, '|')) {
                    std::stringstream es(entry);
                    std::string name, xs, ys;
                    if (!std::getline(es, name, ':') ||
                        !std::getline(es, xs, ':') || !std::getline(es, ys))
                        throw UsageError("bad landmark entry '" + entry + "'");
                    lms.push_back({ran::landmark_name_from_string(name),
                                   std::stod(xs), std::stod(ys)});
                }
                if (lms.empty())
                    throw UsageError("landmark scheme needs --landmarks");
                specs = ran::landmark_crops(img, lms, crop_radius);
            }
            std::ostringstream csv;
            csv << "index,scheme,x,y,w,h\n";
            for (const auto& s : specs)
                csv << s.index << "," << ran::to_string(s.scheme) << "," << s.x
                    << "," << s.y << "," << s.w << "," << s.h << "\n";
            fs::create_directories(crop_common.out);
            write_text(crop_common.out + "/resolved_config.txt", resolved);
            write_text(crop_common.out + "/crops.csv", csv.str());
            std::cout << csv.str();
            return 0;
        }
        if (synth_cmd->parsed()) {
            const auto resolved = synth_merge.resolve(synth_common.config);
            synth_spec.seed = synth_common.seed;
            const auto ds = ran::generate_synthetic(synth_spec);
            fs::create_directories(synth_common.out);
            write_text(synth_common.out + "/resolved_config.txt", resolved);
            ran::write_synthetic(ds, synth_common.out);
            std::printf("wrote %zu train / %zu test samples to %s\n",
                        ds.train.size(), ds.test.size(),
                        synth_common.out.c_str());
            return 0;
        }
        if (subset_cmd->parsed()) {
            const auto resolved = subset_merge.resolve(subset_common.config);
            require_file(subset_manifest, "manifest");
            const auto records = ran::load_manifest(subset_manifest);
            std::vector<ran::ManifestRecord> subset;
            if (subset_kind == "pose")
                subset = ran::build_pose_subset(records, subset_threshold);
            else if (subset_kind == "occlusion")
                subset = ran::build_occlusion_subset(records);
            else
                throw UsageError("unknown subset kind '" + subset_kind + "'");
            fs::create_directories(subset_common.out);
            write_text(subset_common.out + "/resolved_config.txt", resolved);
            ran::save_manifest(subset, subset_common.out + "/subset.csv");
            std::printf("kept %zu of %zu records\n", subset.size(),
                        records.size());
            return 0;
        }
        if (stats_cmd->parsed()) {
            const auto resolved = stats_merge.resolve(stats_common.config);
            require_file(stats_manifest, "manifest");
            const auto records = ran::load_manifest(stats_manifest);
            const auto stats = ran::subset_stats(records);
            const auto table = ran::format_stats_table(
                stats, fs::path(stats_manifest).stem().string());
            fs::create_directories(stats_common.out);
            write_text(stats_common.out + "/resolved_config.txt", resolved);
            write_text(stats_common.out + "/stats.txt", table);
            write_text(stats_common.out + "/stats.json",
                       ran::stats_to_json(stats));
            std::cout << table;
            return 0;
        }
        if (grad_cmd->parsed()) {
            const auto resolved = grad_merge.resolve(grad_common.config);
            fs::create_directories(grad_common.out);
            write_text(grad_common.out + "/resolved_config.txt", resolved);
            const auto results = ran::run_gradcheck(grad_trials,
                                                    grad_common.seed, grad_eps,
                                                    grad_tol);
            bool all_ok = true;
            double worst = 0.0;
            for (const auto& r : results) {
                all_ok = all_ok && r.ok;
                worst = std::max(worst, r.max_rel_err);
                std::printf("trial %zu d=%zu k=%zu hinge=%s rel_err=%.3g %s\n",
                            r.trial, r.feature_dim, r.crops,
                            r.hinge_active ? "active" : "inactive",
                            r.max_rel_err, r.ok ? "ok" : "FAIL");
            }
            std::printf("gradcheck %s (max rel err %.3g over %zu checks)\n",
                        all_ok ? "passed" : "FAILED", worst, results.size());
            return all_ok ? 0 : 1;
        }
        if (sweep_cmd->parsed()) {
            const auto resolved = sweep_merge.resolve(sweep_common.config);
            require_file(sweep_opts.train_manifest, "training manifest");
            require_file(sweep_opts.test_manifest, "test manifest");
            const auto train_records =
                ran::load_manifest(sweep_opts.train_manifest);
            const auto test_records =
                ran::load_manifest(sweep_opts.test_manifest);
            const auto train_set =
                ran::load_samples(train_records, sweep_opts.train_manifest);
            const auto test_set =
                ran::load_samples(test_records, sweep_opts.test_manifest);

            ran::TrainConfig cfg = sweep_opts.train_config(sweep_common.seed);
            ran::ModelConfig mc;
            mc.kind = ran::model_kind_from_string(sweep_opts.model_kind);
            mc.classes = static_cast<std::size_t>(class_count_from(train_records));
            mc.feature_dim = sweep_opts.feature_dim;
            mc.hidden_dim = sweep_opts.hidden_dim;
            mc.input_size = sweep_opts.input_size;
            mc.downsample = sweep_opts.downsample;
            mc.channels = train_set[0].image.channels;

            fs::create_directories(sweep_common.out);
            write_text(sweep_common.out + "/resolved_config.txt", resolved);

            if (sweep_kind == "margin") {
                const auto rows = ran::margin_sweep(
                    mc, train_set, test_set, cfg,
                    parse_double_list(sweep_alphas, "alpha"),
                    sweep_common.threads);
                write_text(sweep_common.out + "/sweep.csv",
                           ran::sweep_csv(rows, "alpha"));
                std::cout << ran::sweep_csv(rows, "alpha");
            } else if (sweep_kind == "region-size") {
                const auto rows = ran::region_size_sweep(
                    mc, train_set, test_set, cfg,
                    parse_double_list(sweep_ratios, "ratio"),
                    sweep_common.threads);
                write_text(sweep_common.out + "/sweep.csv",
                           ran::sweep_csv(rows, "ratio"));
                std::cout << ran::sweep_csv(rows, "ratio");
            } else if (sweep_kind == "fusion") {
                const auto rows = ran::fusion_compare(mc, train_set, test_set,
                                                      cfg, sweep_common.threads);
                std::ostringstream csv;
                csv << "model,accuracy\n";
                for (const auto& r : rows) {
                    csv << ran::to_string(r.kind) << ","
                        << r.metrics.overall_accuracy << "\n";
                    write_text(sweep_common.out + "/metrics_" +
                                   ran::to_string(r.kind) + ".json",
                               ran::metrics_to_json(r.metrics));
                }
                write_text(sweep_common.out + "/fusion.csv", csv.str());
                std::cout << csv.str();
            } else {
                throw UsageError("unknown sweep kind '" + sweep_kind + "'");
            }
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
