#include "kernels_internal.hpp"

#if ISOCURVE_HAVE_NEON_BUILD

#include <arm_neon.h>

#include <cstddef>

#include "isocurve/kernels.hpp"

namespace isocurve::kernels {
namespace {

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t xv = vld1q_f64(x + i);
        float64x2_t yv = vld1q_f64(y + i);
        vst1q_f64(y + i, vfmaq_f64(yv, a, xv));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(a, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double dot_block(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_block(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sq_block(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(x + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double s = vaddvq_f64(acc);
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

double dot_neon(const double* a, const double* b, std::size_t n) {
    return blocked_reduce(dot_block, n, a, b);
}

double sum_neon(const double* x, std::size_t n) {
    return blocked_reduce(sum_block, n, x);
}

double sq_norm_neon(const double* x, std::size_t n) {
    return blocked_reduce(sq_block, n, x);
}

void plane_rot_neon(double* x, double* y, std::size_t n, double c, double s) {
    const float64x2_t cv = vdupq_n_f64(c);
    const float64x2_t sv = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t xv = vld1q_f64(x + i);
        float64x2_t yv = vld1q_f64(y + i);
        float64x2_t xr = vfmaq_f64(vmulq_f64(sv, yv), cv, xv);
        float64x2_t yr = vfmsq_f64(vmulq_f64(cv, yv), sv, xv);
        vst1q_f64(x + i, xr);
        vst1q_f64(y + i, yr);
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi + s * yi;
        y[i] = -s * xi + c * yi;
    }
}

}  // namespace

const Ops& neon_ops() {
    static const Ops ops = {axpy_neon, scale_neon, mul_neon,    dot_neon,
                            sum_neon,  sq_norm_neon, plane_rot_neon};
    return ops;
}

}  // namespace isocurve::kernels

#endif  // ISOCURVE_HAVE_NEON_BUILD
