#pragma once

// Differentiable primitives: affine map, sigmoid, relu, softmax
// cross-entropy. Each forward has a hand-derived backward; the contract is
// agreement with central finite differences (see optim.hpp).

#include <cstddef>
#include <span>

#include "ran/tensor.hpp"

namespace ran {

// y = W x + b. Shapes: W rows x cols, x cols, b rows.
Vec affine(const Mat& W, const Vec& x, const Vec& b);

// Accumulates dW += dy x^T, db += dy and returns dx = W^T dy.
Vec affine_backward(const Mat& W, const Vec& x, const Vec& dy, Mat& dW,
                    Vec& db);

// Numerically stable logistic: never evaluates exp of a positive argument,
// output strictly inside (0,1) for all finite z with |z| <= 700.
double sigmoid(double z);

// d sigma/dz expressed through the forward value s = sigmoid(z).
inline double sigmoid_grad_from_value(double s) { return s * (1.0 - s); }

void relu_inplace(Vec& v);
// du = dh where u > 0, else 0 (subgradient 0 at the kink).
void relu_backward_inplace(const Vec& u, Vec& grad);

// Softmax probabilities with max-subtraction stabilization.
Vec softmax(const Vec& logits);

// -log softmax(logits)[label]. Throws DimensionError for label out of range
// or fewer than two classes.
double softmax_cross_entropy(const Vec& logits, std::size_t label);

// Gradient of softmax_cross_entropy w.r.t. logits: softmax - onehot.
Vec softmax_cross_entropy_grad(const Vec& logits, std::size_t label);

}  // namespace ran
