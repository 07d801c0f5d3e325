#include "ran/model.hpp"

#include <algorithm>
#include <cmath>

#include "ran/errors.hpp"
#include "ran/kernels.hpp"
#include "ran/ops.hpp"

namespace ran {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Ran: return "ran";
        case ModelKind::AveragePool: return "avgpool";
        case ModelKind::Concat: return "concat";
        case ModelKind::ScoreFusion: return "score_fusion";
    }
    return "ran";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ran") return ModelKind::Ran;
    if (s == "avgpool") return ModelKind::AveragePool;
    if (s == "concat") return ModelKind::Concat;
    if (s == "score_fusion") return ModelKind::ScoreFusion;
    throw ParseError("unknown model kind '" + s + "'");
}

std::size_t ModelConfig::classifier_input() const {
    switch (kind) {
        case ModelKind::Ran: return 2 * feature_dim;
        case ModelKind::AveragePool: return feature_dim;
        case ModelKind::Concat: return (regions + 1) * feature_dim;
        case ModelKind::ScoreFusion: return feature_dim;
    }
    return feature_dim;
}

Model Model::make(const ModelConfig& cfg, Rng& init_rng) {
    Model m;
    m.cfg = cfg;
    if (cfg.with_backbone) {
        m.backbone = ProjectionBackbone(cfg.input_size, cfg.channels,
                                        cfg.downsample, cfg.hidden_dim,
                                        cfg.feature_dim);
        m.backbone.init_params(init_rng);
    }
    // q0 = q1 = 0 makes the untrained attention model coincide with average
    // pooling, and leaves the RB hinge active from the first step.
    m.q0 = Parameter("q0", cfg.feature_dim);
    m.q1 = Parameter("q1", 2 * cfg.feature_dim);
    m.Wc = Parameter("classifier.W", cfg.classes, cfg.classifier_input());
    m.bc = Parameter("classifier.b", cfg.classes);
    const double a = std::sqrt(6.0 / static_cast<double>(m.Wc.rows + m.Wc.cols));
    for (double& v : m.Wc.value) v = init_rng.uniform(-a, a);
    return m;
}

std::vector<Parameter*> Model::trainable_params() {
    std::vector<Parameter*> out;
    if (cfg.with_backbone)
        for (Parameter* p : backbone.params()) out.push_back(p);
    if (cfg.kind == ModelKind::Ran) {
        out.push_back(&q0);
        out.push_back(&q1);
    }
    out.push_back(&Wc);
    out.push_back(&bc);
    return out;
}

namespace {

Vec classifier_logits(const Parameter& Wc, const Parameter& bc, const Vec& in) {
    require_dim(in.size() == Wc.cols, "classifier: input dim mismatch");
    Vec logits(Wc.rows);
    kernels::matvec(Wc.value.data(), in.data(), logits.data(), Wc.rows, Wc.cols);
    for (std::size_t r = 0; r < Wc.rows; ++r) logits[r] += bc.value[r];
    return logits;
}

int argmax(const Vec& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void Model::forward(std::span<const Vec> xs, int label,
                    SampleForward& fwd) const {
    require_dim(!xs.empty(), "model: no regions");
    const std::size_t n = xs.size();

    // region features
    fwd.features.resize(n);
    if (cfg.with_backbone) {
        fwd.hidden_pre.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            fwd.features[i] = backbone.project_cached(xs[i], fwd.hidden_pre[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            require_dim(xs[i].size() == cfg.feature_dim,
                        "model: feature dim mismatch");
            fwd.features[i] = xs[i];
        }
    }

    switch (cfg.kind) {
        case ModelKind::Ran: {
            self_attention(fwd.features, q0.value, fwd.att.mu, fwd.att.Fm);
            relation_attention(fwd.features, fwd.att.Fm, fwd.att.mu, q1.value,
                               fwd.att.nu, fwd.att.Pran);
            fwd.logits = classifier_logits(Wc, bc, fwd.att.Pran);
            fwd.probs = softmax(fwd.logits);
            break;
        }
        case ModelKind::AveragePool: {
            fwd.pooled = average_pool(fwd.features);
            fwd.logits = classifier_logits(Wc, bc, fwd.pooled);
            fwd.probs = softmax(fwd.logits);
            break;
        }
        case ModelKind::Concat: {
            require_dim(n == cfg.regions + 1,
                        "concat: region count differs from model layout");
            fwd.pooled = concat_features(fwd.features);
            fwd.logits = classifier_logits(Wc, bc, fwd.pooled);
            fwd.probs = softmax(fwd.logits);
            break;
        }
        case ModelKind::ScoreFusion: {
            fwd.region_logits.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                fwd.region_logits[i] = classifier_logits(Wc, bc, fwd.features[i]);
            fwd.probs = score_fusion(fwd.region_logits);
            break;
        }
    }

    fwd.pred = argmax(fwd.probs);
    fwd.ce = 0.0;
    fwd.rb = 0.0;
    if (label >= 0) {
        const auto lab = static_cast<std::size_t>(label);
        if (cfg.kind == ModelKind::ScoreFusion) {
            double ce = 0.0;
            for (const Vec& l : fwd.region_logits)
                ce += softmax_cross_entropy(l, lab);
            fwd.ce = ce / static_cast<double>(n);
        } else {
            fwd.ce = softmax_cross_entropy(fwd.logits, lab);
        }
    }
}

double Model::loss_and_backward(std::span<const Vec> xs, int label,
                                double alpha, double lambda_rb,
                                SampleForward& fwd) {
    forward(xs, label, fwd);
    const auto lab = static_cast<std::size_t>(label);
    const std::size_t n = xs.size();
    const std::size_t d = cfg.feature_dim;

    // dF accumulates the loss gradient w.r.t. each region feature.
    fwd.dF.resize(n);
    for (auto& g : fwd.dF) g.assign(d, 0.0);

    switch (cfg.kind) {
        case ModelKind::Ran: {
            fwd.rb = rb_loss(fwd.att.mu, alpha);

            fwd.dlogits = softmax_cross_entropy_grad(fwd.logits, lab);
            fwd.dP.assign(2 * d, 0.0);
            kernels::ger_acc(fwd.dlogits.data(), fwd.att.Pran.data(),
                             Wc.grad.data(), Wc.rows, Wc.cols);
            for (std::size_t r = 0; r < Wc.rows; ++r)
                bc.grad[r] += fwd.dlogits[r];
            kernels::matvec_t_acc(Wc.value.data(), fwd.dlogits.data(),
                                  fwd.dP.data(), Wc.rows, Wc.cols);

            const double* dPf = fwd.dP.data();      // first half
            const double* dPs = fwd.dP.data() + d;  // second half -> dFm
            const std::vector<double>& mu = fwd.att.mu;
            const std::vector<double>& nu = fwd.att.nu;
            const Vec& Fm = fwd.att.Fm;
            const double* Pf = fwd.att.Pran.data();

            double S = 0.0, T = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                S += mu[i];
                T += mu[i] * nu[i];
            }
            S = std::max(S, kAggEps);
            T = std::max(T, kAggEps);

            fwd.dmu.assign(n, 0.0);
            fwd.dnu.assign(n, 0.0);
            fwd.dFm.assign(d, 0.0);
            kernels::axpy(1.0, dPs, fwd.dFm.data(), d);

            const double* q1h = q1.value.data();
            const double* q1t = q1.value.data() + d;

            // stage 2: P first half = sum_i mu_i nu_i F_i / T;
            // second half = Fm (independent of the stage-2 weights).
            for (std::size_t i = 0; i < n; ++i) {
                const Vec& Fi = fwd.features[i];
                const double a_i = mu[i] * nu[i];
                double da = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    da += (Fi[j] - Pf[j]) * dPf[j];
                da /= T;
                kernels::axpy(a_i / T, dPf, fwd.dF[i].data(), d);
                fwd.dmu[i] += nu[i] * da;
                fwd.dnu[i] += mu[i] * da;

                const double dy = nu[i] * (1.0 - nu[i]) * fwd.dnu[i];
                kernels::axpy(dy, Fi.data(), q1.grad.data(), d);
                kernels::axpy(dy, Fm.data(), q1.grad.data() + d, d);
                kernels::axpy(dy, q1h, fwd.dF[i].data(), d);
                kernels::axpy(dy, q1t, fwd.dFm.data(), d);
            }

            // stage 1: Fm = sum_i mu_i F_i / S
            for (std::size_t i = 0; i < n; ++i) {
                const Vec& Fi = fwd.features[i];
                kernels::axpy(mu[i] / S, fwd.dFm.data(), fwd.dF[i].data(), d);
                double dmu_agg = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    dmu_agg += (Fi[j] - Fm[j]) * fwd.dFm[j];
                fwd.dmu[i] += dmu_agg / S;
            }

            rb_loss_backward(fwd.att.mu, alpha, lambda_rb, fwd.dmu);

            for (std::size_t i = 0; i < n; ++i) {
                const double dz = mu[i] * (1.0 - mu[i]) * fwd.dmu[i];
                kernels::axpy(dz, fwd.features[i].data(), q0.grad.data(), d);
                kernels::axpy(dz, q0.value.data(), fwd.dF[i].data(), d);
            }
            break;
        }
        case ModelKind::AveragePool: {
            fwd.dlogits = softmax_cross_entropy_grad(fwd.logits, lab);
            kernels::ger_acc(fwd.dlogits.data(), fwd.pooled.data(),
                             Wc.grad.data(), Wc.rows, Wc.cols);
            for (std::size_t r = 0; r < Wc.rows; ++r)
                bc.grad[r] += fwd.dlogits[r];
            fwd.scratch.assign(d, 0.0);
            kernels::matvec_t_acc(Wc.value.data(), fwd.dlogits.data(),
                                  fwd.scratch.data(), Wc.rows, Wc.cols);
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                kernels::axpy(inv_n, fwd.scratch.data(), fwd.dF[i].data(), d);
            break;
        }
        case ModelKind::Concat: {
            fwd.dlogits = softmax_cross_entropy_grad(fwd.logits, lab);
            kernels::ger_acc(fwd.dlogits.data(), fwd.pooled.data(),
                             Wc.grad.data(), Wc.rows, Wc.cols);
            for (std::size_t r = 0; r < Wc.rows; ++r)
                bc.grad[r] += fwd.dlogits[r];
            fwd.scratch.assign(Wc.cols, 0.0);
            kernels::matvec_t_acc(Wc.value.data(), fwd.dlogits.data(),
                                  fwd.scratch.data(), Wc.rows, Wc.cols);
            for (std::size_t i = 0; i < n; ++i)
                kernels::axpy(1.0, fwd.scratch.data() + i * d,
                              fwd.dF[i].data(), d);
            break;
        }
        case ModelKind::ScoreFusion: {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                Vec dl = softmax_cross_entropy_grad(fwd.region_logits[i], lab);
                kernels::scale(inv_n, dl.data(), dl.size());
                kernels::ger_acc(dl.data(), fwd.features[i].data(),
                                 Wc.grad.data(), Wc.rows, Wc.cols);
                for (std::size_t r = 0; r < Wc.rows; ++r)
                    bc.grad[r] += dl[r];
                kernels::matvec_t_acc(Wc.value.data(), dl.data(),
                                      fwd.dF[i].data(), Wc.rows, Wc.cols);
            }
            break;
        }
    }

    if (cfg.with_backbone)
        for (std::size_t i = 0; i < n; ++i)
            backbone.project_backward(xs[i], fwd.hidden_pre[i], fwd.dF[i]);

    return fwd.ce + lambda_rb * fwd.rb;
}

double forward_total_loss(const Model& model, std::span<const Vec> xs,
                          int label, double alpha, double lambda_rb) {
    SampleForward fwd;
    model.forward(xs, label, fwd);
    double rb = 0.0;
    if (model.cfg.kind == ModelKind::Ran && lambda_rb != 0.0)
        rb = rb_loss(fwd.att.mu, alpha);
    return fwd.ce + lambda_rb * rb;
}

Checkpoint Model::to_checkpoint() const {
    Checkpoint ck;
    Vec meta{static_cast<double>(static_cast<int>(cfg.kind)),
             static_cast<double>(cfg.classes),
             static_cast<double>(cfg.feature_dim),
             static_cast<double>(cfg.hidden_dim),
             static_cast<double>(cfg.input_size),
             static_cast<double>(cfg.channels),
             static_cast<double>(cfg.downsample),
             static_cast<double>(cfg.regions),
             cfg.with_backbone ? 1.0 : 0.0};
    ck.put("meta", meta.size(), 1, meta);
    if (cfg.kind == ModelKind::Ran) {
        ck.put(q0);
        ck.put(q1);
    }
    ck.put(Wc);
    ck.put(bc);
    if (cfg.with_backbone) {
        ck.put(backbone.W1);
        ck.put(backbone.b1);
        ck.put(backbone.W2);
        ck.put(backbone.b2);
    }
    return ck;
}

Model Model::from_checkpoint(const Checkpoint& ck) {
    const Vec& meta = ck.get("meta").data;
    if (meta.size() != 9) throw ParseError("model checkpoint: bad meta entry");
    ModelConfig cfg;
    cfg.kind = static_cast<ModelKind>(static_cast<int>(meta[0]));
    cfg.classes = static_cast<std::size_t>(meta[1]);
    cfg.feature_dim = static_cast<std::size_t>(meta[2]);
    cfg.hidden_dim = static_cast<std::size_t>(meta[3]);
    cfg.input_size = static_cast<std::size_t>(meta[4]);
    cfg.channels = static_cast<std::size_t>(meta[5]);
    cfg.downsample = static_cast<std::size_t>(meta[6]);
    cfg.regions = static_cast<std::size_t>(meta[7]);
    cfg.with_backbone = meta[8] != 0.0;

    Rng dummy(0);
    Model m = Model::make(cfg, dummy);
    if (cfg.kind == ModelKind::Ran) {
        ck.load_into(m.q0);
        ck.load_into(m.q1);
    }
    ck.load_into(m.Wc);
    ck.load_into(m.bc);
    if (cfg.with_backbone) {
        ck.load_into(m.backbone.W1);
        ck.load_into(m.backbone.b1);
        ck.load_into(m.backbone.W2);
        ck.load_into(m.backbone.b2);
    }
    return m;
}

}  // namespace ran
