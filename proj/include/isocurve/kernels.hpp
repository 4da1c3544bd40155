#pragma once

#include <cstddef>
#include <string>

// Data-parallel double-precision kernels used by the dense linear algebra
// and Monte Carlo accumulation layers. Every kernel has a scalar reference
// implementation; AVX2 (x86-64) and NEON (aarch64) variants are selected at
// runtime and are equivalence-tested against the reference.
//
// Reductions are blocked: both scalar and SIMD variants sum fixed blocks of
// kSumBlock elements and combine block results with Neumaier compensation,
// so results for a given backend are independent of caller chunking.

namespace isocurve::kernels {

enum class Backend { Scalar, Avx2, Neon };

inline constexpr std::size_t kSumBlock = 1024;

Backend active_backend();
bool backend_available(Backend b);
void force_backend(Backend b);  // testing hook; throws ContractError if unavailable
void reset_backend();           // back to auto-detection
std::string backend_name(Backend b);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x[i] *= alpha
void scale(double alpha, double* x, std::size_t n);
// out[i] = a[i] * b[i]
void mul(const double* a, const double* b, double* out, std::size_t n);
// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);
// sum_i x[i]
double sum(const double* x, std::size_t n);
// sum_i x[i]^2
double sq_norm(const double* x, std::size_t n);
// Givens-style plane rotation applied in place to two vectors:
// x'[i] = c*x[i] + s*y[i];  y'[i] = -s*x[i] + c*y[i]
void plane_rot(double* x, double* y, std::size_t n, double c, double s);

}  // namespace isocurve::kernels
