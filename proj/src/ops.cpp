#include "ran/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ran/kernels.hpp"

namespace ran {

Vec affine(const Mat& W, const Vec& x, const Vec& b) {
    require_dim(W.cols == x.size(), "affine: W.cols != x.size");
    require_dim(W.rows == b.size(), "affine: W.rows != b.size");
    Vec y(W.rows);
    kernels::matvec(W.data.data(), x.data(), y.data(), W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r) y[r] += b[r];
    return y;
}

Vec affine_backward(const Mat& W, const Vec& x, const Vec& dy, Mat& dW,
                    Vec& db) {
    require_dim(W.cols == x.size() && W.rows == dy.size(),
                "affine_backward: shape mismatch");
    require_dim(dW.rows == W.rows && dW.cols == W.cols && db.size() == W.rows,
                "affine_backward: gradient shape mismatch");
    kernels::ger_acc(dy.data(), x.data(), dW.data.data(), W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r) db[r] += dy[r];
    Vec dx(W.cols, 0.0);
    kernels::matvec_t_acc(W.data.data(), dy.data(), dx.data(), W.rows, W.cols);
    return dx;
}

double sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    // keep the output strictly inside (0,1) even where exp saturates
    if (s >= 1.0) return std::nextafter(1.0, 0.0);
    if (s <= 0.0) return std::numeric_limits<double>::min();
    return s;
}

void relu_inplace(Vec& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward_inplace(const Vec& u, Vec& grad) {
    require_dim(u.size() == grad.size(), "relu_backward: shape mismatch");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] <= 0.0) grad[i] = 0.0;
}

Vec softmax(const Vec& logits) {
    double m = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        s += p[i];
    }
    kernels::scale(1.0 / s, p.data(), p.size());
    return p;
}

double softmax_cross_entropy(const Vec& logits, std::size_t label) {
    require_dim(logits.size() >= 2, "softmax_cross_entropy: need >= 2 classes");
    require_dim(label < logits.size(), "softmax_cross_entropy: label out of range");
    double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double l : logits) s += std::exp(l - m);
    return m + std::log(s) - logits[label];
}

Vec softmax_cross_entropy_grad(const Vec& logits, std::size_t label) {
    require_dim(logits.size() >= 2, "softmax_cross_entropy: need >= 2 classes");
    require_dim(label < logits.size(), "softmax_cross_entropy: label out of range");
    Vec g = softmax(logits);
    g[label] -= 1.0;
    return g;
}

}  // namespace ran
