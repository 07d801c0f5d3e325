#pragma once

// Dense double-precision kernels behind every inner loop in the library.
//
// Two implementations exist for each kernel: a scalar reference and an AVX2+FMA
// variant. The active backend is picked once at startup: AVX2 when the CPU
// supports it, scalar otherwise. The RAN_KERNELS environment variable
// ("scalar" or "avx2") or select() overrides the choice; equivalence between
// backends is covered by tests/test_kernels.cpp.
//
// SIMD reductions reassociate, so dot/sum results may differ from the scalar
// backend by a few ulps. Within one process the backend is fixed, which keeps
// repeated runs bit-identical.

#include <cstddef>
#include <string_view>

namespace ran::kernels {

struct Backend {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
};

const Backend& active();

// Force a backend by name: "scalar", "avx2" or "auto". Throws
// std::invalid_argument for unknown names or unavailable instruction sets.
void select(std::string_view name);

bool avx2_available();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
    active().scale(alpha, x, n);
}
inline double sum(const double* a, std::size_t n) {
    return active().sum(a, n);
}

// y = W x  with W row-major rows x cols.
inline void matvec(const double* W, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot(W + r * cols, x, cols);
}

// dx += W^T dy
inline void matvec_t_acc(const double* W, const double* dy, double* dx,
                         std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy(dy[r], W + r * cols, dx, cols);
}

// dW += dy x^T  (outer product accumulate)
inline void ger_acc(const double* dy, const double* x, double* dW,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) axpy(dy[r], x, dW + r * cols, cols);
}

}  // namespace ran::kernels
