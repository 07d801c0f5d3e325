#pragma once

// Dense double-precision containers. Vectors are plain std::vector<double>;
// Mat is a row-major matrix; Parameter couples a value buffer with an
// accumulated gradient of the same shape.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ran/errors.hpp"

namespace ran {

using Vec = std::vector<double>;

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        return data[r * cols + c];
    }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

inline bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}
inline bool all_finite(const Vec& v) { return all_finite(v.data(), v.size()); }

// A named trainable tensor. Shape is rows x cols; vectors use cols == 1.
// Gradients accumulate across backward calls; callers zero them between
// optimizer steps so multi-term losses compose.
struct Parameter {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 1;
    Vec value;
    Vec grad;

    Parameter() = default;
    Parameter(std::string n, std::size_t r, std::size_t c = 1)
        : name(std::move(n)), rows(r), cols(c), value(r * c, 0.0),
          grad(r * c, 0.0) {}

    std::size_t size() const { return rows * cols; }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

inline void require_dim(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

}  // namespace ran
