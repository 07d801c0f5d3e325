#include "ran/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#if defined(__x86_64__) || defined(__i386__)
#define RAN_KERNELS_X86 1
#include <immintrin.h>
#else
#define RAN_KERNELS_X86 0
#endif

namespace ran::kernels {

namespace {

// ---------------------------------------------------------------- scalar ---

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

constexpr Backend kScalar{"scalar", dot_scalar, axpy_scalar, scale_scalar,
                          sum_scalar};

// ------------------------------------------------------------------ avx2 ---

#if RAN_KERNELS_X86

__attribute__((target("avx2,fma"))) double dot_avx2(const double* a,
                                                    const double* b,
                                                    std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                               acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                               _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                               acc0);
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double alpha,
                                                   const double* x, double* y,
                                                   std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma"))) void scale_avx2(double alpha, double* x,
                                                    std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

__attribute__((target("avx2,fma"))) double sum_avx2(const double* a,
                                                    std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += a[i];
    return acc;
}

constexpr Backend kAvx2{"avx2", dot_avx2, axpy_avx2, scale_avx2, sum_avx2};

#endif  // RAN_KERNELS_X86

const Backend* pick_auto() {
#if RAN_KERNELS_X86
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &kAvx2;
#endif
    return &kScalar;
}

const Backend* initial_backend() {
    if (const char* env = std::getenv("RAN_KERNELS")) {
        std::string_view v(env);
        if (v == "scalar") return &kScalar;
#if RAN_KERNELS_X86
        if (v == "avx2" && avx2_available()) return &kAvx2;
#endif
        // Unknown or unavailable values fall through to auto detection.
    }
    return pick_auto();
}

const Backend*& backend_slot() {
    static const Backend* slot = initial_backend();
    return slot;
}

}  // namespace

bool avx2_available() {
#if RAN_KERNELS_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Backend& active() { return *backend_slot(); }

void select(std::string_view name) {
    if (name == "auto") {
        backend_slot() = pick_auto();
        return;
    }
    if (name == "scalar") {
        backend_slot() = &kScalar;
        return;
    }
    if (name == "avx2") {
#if RAN_KERNELS_X86
        if (avx2_available()) {
            backend_slot() = &kAvx2;
            return;
        }
#endif
        throw std::invalid_argument("kernels: avx2 backend not available");
    }
    throw std::invalid_argument("kernels: unknown backend '" +
                                std::string(name) + "'");
}

}  // namespace ran::kernels
