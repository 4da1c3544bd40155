#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isocurve/kernels.hpp"
#include "isocurve/rng.hpp"

using namespace isocurve;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_gaussian();
    return v;
}

struct BackendGuard {
    ~BackendGuard() { kernels::reset_backend(); }
};

const std::vector<std::size_t> kSizes = {1, 3, 7, 64, 1000, 1025, 100000};

}  // namespace

TEST_CASE("scalar reference kernels match naive loops") {
    BackendGuard guard;
    kernels::force_backend(kernels::Backend::Scalar);
    const auto a = random_vec(513, 1);
    const auto b = random_vec(513, 2);

    double dot_naive = 0.0, sum_naive = 0.0, sq_naive = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot_naive += a[i] * b[i];
        sum_naive += a[i];
        sq_naive += a[i] * a[i];
    }
    CHECK(std::fabs(kernels::dot(a.data(), b.data(), a.size()) - dot_naive) <=
          1e-12 * std::fabs(dot_naive) + 1e-12);
    CHECK(std::fabs(kernels::sum(a.data(), a.size()) - sum_naive) <= 1e-10);
    CHECK(std::fabs(kernels::sq_norm(a.data(), a.size()) - sq_naive) <= 1e-12 * sq_naive);
}

TEST_CASE("simd backends agree with the scalar reference") {
    BackendGuard guard;
    for (kernels::Backend backend : {kernels::Backend::Avx2, kernels::Backend::Neon}) {
        if (!kernels::backend_available(backend)) continue;
        CAPTURE(kernels::backend_name(backend));
        for (std::size_t n : kSizes) {
            const auto a = random_vec(n, 10 + n);
            const auto b = random_vec(n, 20 + n);

            kernels::force_backend(kernels::Backend::Scalar);
            const double dot_ref = kernels::dot(a.data(), b.data(), n);
            const double sum_ref = kernels::sum(a.data(), n);
            const double sq_ref = kernels::sq_norm(a.data(), n);
            std::vector<double> axpy_ref = b;
            kernels::axpy(0.37, a.data(), axpy_ref.data(), n);
            std::vector<double> mul_ref(n);
            kernels::mul(a.data(), b.data(), mul_ref.data(), n);
            std::vector<double> rot_x_ref = a, rot_y_ref = b;
            kernels::plane_rot(rot_x_ref.data(), rot_y_ref.data(), n, 0.8, 0.6);

            kernels::force_backend(backend);
            CHECK(std::fabs(kernels::dot(a.data(), b.data(), n) - dot_ref) <=
                  1e-11 * (1.0 + std::fabs(dot_ref)));
            CHECK(std::fabs(kernels::sum(a.data(), n) - sum_ref) <=
                  1e-11 * (1.0 + std::fabs(sum_ref)));
            CHECK(std::fabs(kernels::sq_norm(a.data(), n) - sq_ref) <= 1e-11 * (1.0 + sq_ref));

            std::vector<double> axpy_simd = b;
            kernels::axpy(0.37, a.data(), axpy_simd.data(), n);
            std::vector<double> mul_simd(n);
            kernels::mul(a.data(), b.data(), mul_simd.data(), n);
            std::vector<double> rot_x = a, rot_y = b;
            kernels::plane_rot(rot_x.data(), rot_y.data(), n, 0.8, 0.6);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::fabs(axpy_simd[i] - axpy_ref[i]) <= 1e-13 * (1.0 + std::fabs(axpy_ref[i])));
                CHECK(mul_simd[i] == mul_ref[i]);
                CHECK(std::fabs(rot_x[i] - rot_x_ref[i]) <= 1e-13 * (1.0 + std::fabs(rot_x_ref[i])));
                CHECK(std::fabs(rot_y[i] - rot_y_ref[i]) <= 1e-13 * (1.0 + std::fabs(rot_y_ref[i])));
            }
        }
    }
}

TEST_CASE("reductions are deterministic within a backend") {
    const auto a = random_vec(100000, 3);
    const double s1 = kernels::sum(a.data(), a.size());
    const double s2 = kernels::sum(a.data(), a.size());
    CHECK(s1 == s2);
    const double d1 = kernels::dot(a.data(), a.data(), a.size());
    const double d2 = kernels::dot(a.data(), a.data(), a.size());
    CHECK(d1 == d2);
}

TEST_CASE("compensated block sums stay accurate on adversarial data") {
    // Alternating large/small magnitudes lose several digits under naive
    // summation; the blocked compensated reduction keeps them.
    std::vector<double> v;
    for (int i = 0; i < 20000; ++i) {
        v.push_back(1e12);
        v.push_back(1.0);
        v.push_back(-1e12);
    }
    const double total = kernels::sum(v.data(), v.size());
    CHECK(std::fabs(total - 20000.0) <= 1e-6);
}

TEST_CASE("plane rotation preserves squared norms") {
    auto x = random_vec(301, 5);
    auto y = random_vec(301, 6);
    const double before = kernels::sq_norm(x.data(), x.size()) + kernels::sq_norm(y.data(), y.size());
    const double c = std::cos(0.7), s = std::sin(0.7);
    kernels::plane_rot(x.data(), y.data(), x.size(), c, s);
    const double after = kernels::sq_norm(x.data(), x.size()) + kernels::sq_norm(y.data(), y.size());
    CHECK(std::fabs(before - after) <= 1e-10 * before);
}

TEST_CASE("forcing an unavailable backend throws") {
#if !defined(__aarch64__)
    CHECK_THROWS(kernels::force_backend(kernels::Backend::Neon));
#else
    CHECK_THROWS(kernels::force_backend(kernels::Backend::Avx2));
#endif
}
