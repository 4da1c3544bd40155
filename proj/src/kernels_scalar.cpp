#include <cmath>
#include <cstddef>

#include "isocurve/kernels.hpp"
#include "kernels_internal.hpp"

namespace isocurve::kernels {

double compensated_total(const double* block_sums, std::size_t n_blocks) {
    double total = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < n_blocks; ++i) {
        const double t = total + block_sums[i];
        if (std::fabs(total) >= std::fabs(block_sums[i])) {
            comp += (total - t) + block_sums[i];
        } else {
            comp += (block_sums[i] - t) + total;
        }
        total = t;
    }
    return total + comp;
}

namespace {

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double dot_block(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_block(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double sq_block(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
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

double dot_scalar(const double* a, const double* b, std::size_t n) {
    return blocked_reduce(dot_block, n, a, b);
}

double sum_scalar(const double* x, std::size_t n) {
    return blocked_reduce(sum_block, n, x);
}

double sq_norm_scalar(const double* x, std::size_t n) {
    return blocked_reduce(sq_block, n, x);
}

void plane_rot_scalar(double* x, double* y, std::size_t n, double c, double s) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi + s * yi;
        y[i] = -s * xi + c * yi;
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {axpy_scalar, scale_scalar, mul_scalar,  dot_scalar,
                            sum_scalar,  sq_norm_scalar, plane_rot_scalar};
    return ops;
}

}  // namespace isocurve::kernels
