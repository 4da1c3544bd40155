#include "kernels_internal.hpp"

#if ISOCURVE_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <cstddef>

#include "isocurve/kernels.hpp"

namespace isocurve::kernels {
namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, xv, yv));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double dot_block(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum256(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_block(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum256(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sq_block(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum256(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

template <typename BlockFn, typename... Ptrs>
double blocked_reduce(BlockFn block_fn, std::size_t n, Ptrs... ptrs) {
    double partials[64] = {0.0};
    std::size_t n_partials = 0;
    double total = 0.0;
    std::size_t offset = 0;
    bool have_chunks = false;
    while (offset < n) {
        const std::size_t len = (n - offset < kSumBlock) ? (n - offset) : kSumBlock;
        partials[n_partials++] = block_fn((ptrs + offset)..., len);
        if (n_partials == 64) {
            const double chunk = compensated_total(partials, n_partials);
            total = have_chunks ? total + chunk : chunk;
            have_chunks = true;
            n_partials = 0;
        }
        offset += len;
    }
    const double chunk = compensated_total(partials, n_partials);
    return have_chunks ? total + chunk : chunk;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    return blocked_reduce(dot_block, n, a, b);
}

double sum_avx2(const double* x, std::size_t n) {
    return blocked_reduce(sum_block, n, x);
}

double sq_norm_avx2(const double* x, std::size_t n) {
    return blocked_reduce(sq_block, n, x);
}

void plane_rot_avx2(double* x, double* y, std::size_t n, double c, double s) {
    const __m256d cv = _mm256_set1_pd(c);
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d xr = _mm256_fmadd_pd(cv, xv, _mm256_mul_pd(sv, yv));
        __m256d yr = _mm256_fmsub_pd(cv, yv, _mm256_mul_pd(sv, xv));
        _mm256_storeu_pd(x + i, xr);
        _mm256_storeu_pd(y + i, yr);
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi + s * yi;
        y[i] = -s * xi + c * yi;
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {axpy_avx2, scale_avx2, mul_avx2,    dot_avx2,
                            sum_avx2,  sq_norm_avx2, plane_rot_avx2};
    return ops;
}

}  // namespace isocurve::kernels

#endif  // ISOCURVE_HAVE_AVX2_BUILD
