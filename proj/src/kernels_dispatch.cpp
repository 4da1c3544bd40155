#include <atomic>
#include <string>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"
#include "kernels_internal.hpp"

namespace isocurve::kernels {
namespace {

Backend detect_backend() {
#if ISOCURVE_HAVE_AVX2_BUILD
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Backend::Avx2;
    }
#endif
#if ISOCURVE_HAVE_NEON_BUILD
    return Backend::Neon;
#endif
    return Backend::Scalar;
}

const Ops& ops_for(Backend b) {
    switch (b) {
#if ISOCURVE_HAVE_AVX2_BUILD
        case Backend::Avx2:
            return avx2_ops();
#endif
#if ISOCURVE_HAVE_NEON_BUILD
        case Backend::Neon:
            return neon_ops();
#endif
        default:
            return scalar_ops();
    }
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{detect_backend()};
    return backend;
}

}  // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool backend_available(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#if ISOCURVE_HAVE_AVX2_BUILD
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon:
            return ISOCURVE_HAVE_NEON_BUILD != 0;
    }
    return false;
}

void force_backend(Backend b) {
    if (!backend_available(b)) {
        throw ContractError("kernel backend not available on this machine: " + backend_name(b));
    }
    current().store(b, std::memory_order_relaxed);
}

void reset_backend() { current().store(detect_backend(), std::memory_order_relaxed); }

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    ops_for(active_backend()).axpy(alpha, x, y, n);
}

void scale(double alpha, double* x, std::size_t n) {
    ops_for(active_backend()).scale(alpha, x, n);
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    ops_for(active_backend()).mul(a, b, out, n);
}

double dot(const double* a, const double* b, std::size_t n) {
    return ops_for(active_backend()).dot(a, b, n);
}

double sum(const double* x, std::size_t n) { return ops_for(active_backend()).sum(x, n); }

double sq_norm(const double* x, std::size_t n) {
    return ops_for(active_backend()).sq_norm(x, n);
}

void plane_rot(double* x, double* y, std::size_t n, double c, double s) {
    ops_for(active_backend()).plane_rot(x, y, n, c, s);
}

}  // namespace isocurve::kernels
