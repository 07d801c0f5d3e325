#include "ran/attention.hpp"

#include <algorithm>
#include <cstring>

#include "ran/kernels.hpp"
#include "ran/ops.hpp"

namespace ran {

Vec weighted_mean(std::span<const Vec> vectors,
                  std::span<const double> weights) {
    require_dim(!vectors.empty(), "weighted_mean: empty input");
    require_dim(vectors.size() == weights.size(),
                "weighted_mean: weight count mismatch");
    const std::size_t d = vectors[0].size();
    Vec out(d, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        require_dim(vectors[i].size() == d, "weighted_mean: ragged dims");
        kernels::axpy(weights[i], vectors[i].data(), out.data(), d);
        total += weights[i];
    }
    kernels::scale(1.0 / std::max(total, kAggEps), out.data(), d);
    return out;
}

void self_attention(std::span<const Vec> features, const Vec& q0,
                    std::vector<double>& mu, Vec& Fm) {
    require_dim(!features.empty(), "self_attention: empty feature list");
    const std::size_t d = q0.size();
    mu.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        require_dim(features[i].size() == d, "self_attention: feature dim != q0 dim");
        mu[i] = sigmoid(kernels::dot(features[i].data(), q0.data(), d));
    }
    Fm = weighted_mean(features, mu);
}

void relation_attention(std::span<const Vec> features, const Vec& Fm,
                        const std::vector<double>& mu, const Vec& q1,
                        std::vector<double>& nu, Vec& Pran) {
    require_dim(!features.empty(), "relation_attention: empty feature list");
    require_dim(mu.size() == features.size(),
                "relation_attention: mu count mismatch");
    const std::size_t d = Fm.size();
    require_dim(q1.size() == 2 * d, "relation_attention: q1 dim != 2d");

    const double* q1_head = q1.data();       // pairs with the region feature
    const double* q1_tail = q1.data() + d;   // pairs with Fm
    const double tail_dot = kernels::dot(Fm.data(), q1_tail, d);

    nu.resize(features.size());
    Pran.assign(2 * d, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        require_dim(features[i].size() == d, "relation_attention: ragged dims");
        const double y =
            kernels::dot(features[i].data(), q1_head, d) + tail_dot;
        nu[i] = sigmoid(y);
        const double w = mu[i] * nu[i];
        kernels::axpy(w, features[i].data(), Pran.data(), d);
        total += w;
    }
    const double inv = 1.0 / std::max(total, kAggEps);
    kernels::scale(inv, Pran.data(), d);
    // second half: sum_i w_i Fm / sum_i w_i = Fm (up to the guard)
    for (std::size_t j = 0; j < d; ++j) Pran[d + j] = Fm[j] * (total * inv);
}

AttentionState attention_forward(std::span<const Vec> features, const Vec& q0,
                                 const Vec& q1) {
    AttentionState st;
    self_attention(features, q0, st.mu, st.Fm);
    relation_attention(features, st.Fm, st.mu, q1, st.nu, st.Pran);
    return st;
}

double rb_loss(const std::vector<double>& mu, double alpha) {
    require_dim(mu.size() >= 2, "rb_loss: need the duplicate plus >= 1 crop");
    require_dim(alpha >= 0.0, "rb_loss: alpha must be >= 0");
    double mu_max = mu[1];
    for (std::size_t i = 2; i < mu.size(); ++i) mu_max = std::max(mu_max, mu[i]);
    return std::max(0.0, alpha - (mu_max - mu[0]));
}

double rb_loss_backward(const std::vector<double>& mu, double alpha,
                        double lambda, std::vector<double>& dmu) {
    require_dim(mu.size() >= 2, "rb_loss: need the duplicate plus >= 1 crop");
    require_dim(dmu.size() == mu.size(), "rb_loss: dmu size mismatch");
    std::size_t argmax = 1;
    for (std::size_t i = 2; i < mu.size(); ++i)
        if (mu[i] > mu[argmax]) argmax = i;
    const double margin = alpha - (mu[argmax] - mu[0]);
    if (margin <= 0.0) return 0.0;
    dmu[0] += lambda;
    dmu[argmax] -= lambda;
    return margin;
}

double total_loss(const Vec& logits, std::size_t label,
                  const std::vector<double>& mu, double alpha,
                  double lambda_rb) {
    double loss = softmax_cross_entropy(logits, label);
    if (lambda_rb != 0.0) loss += lambda_rb * rb_loss(mu, alpha);
    return loss;
}

Vec average_pool(std::span<const Vec> features) {
    require_dim(!features.empty(), "average_pool: empty feature list");
    const std::size_t d = features[0].size();
    Vec out(d, 0.0);
    for (const Vec& f : features) {
        require_dim(f.size() == d, "average_pool: ragged dims");
        kernels::axpy(1.0, f.data(), out.data(), d);
    }
    kernels::scale(1.0 / static_cast<double>(features.size()), out.data(), d);
    return out;
}

Vec concat_features(std::span<const Vec> features) {
    require_dim(!features.empty(), "concat_features: empty feature list");
    const std::size_t d = features[0].size();
    Vec out;
    out.reserve(features.size() * d);
    for (const Vec& f : features) {
        require_dim(f.size() == d, "concat_features: ragged dims");
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

Vec score_fusion(std::span<const Vec> per_region_logits) {
    require_dim(!per_region_logits.empty(), "score_fusion: empty logit list");
    const std::size_t C = per_region_logits[0].size();
    Vec mean(C, 0.0);
    for (const Vec& logits : per_region_logits) {
        require_dim(logits.size() == C, "score_fusion: ragged class counts");
        Vec p = softmax(logits);
        kernels::axpy(1.0, p.data(), mean.data(), C);
    }
    kernels::scale(1.0 / static_cast<double>(per_region_logits.size()),
                   mean.data(), C);
    return mean;
}

}  // namespace ran
