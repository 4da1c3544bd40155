#pragma once

#include <cstddef>

namespace isocurve::kernels {

struct Ops {
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    void (*mul)(const double*, const double*, double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sq_norm)(const double*, std::size_t);
    void (*plane_rot)(double*, double*, std::size_t, double, double);
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
#define ISOCURVE_HAVE_AVX2_BUILD 1
const Ops& avx2_ops();
#else
#define ISOCURVE_HAVE_AVX2_BUILD 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define ISOCURVE_HAVE_NEON_BUILD 1
const Ops& neon_ops();
#else
#define ISOCURVE_HAVE_NEON_BUILD 0
#endif

// Neumaier-compensated combination of block partial sums; shared by all
// backends so cross-backend differences stay confined to in-block order.
double compensated_total(const double* block_sums, std::size_t n_blocks);

}  // namespace isocurve::kernels
