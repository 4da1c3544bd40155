#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isocurve/errors.hpp"
#include "isocurve/linalg.hpp"
#include "test_util.hpp"

using namespace isocurve;
using test_util::matrix_with_spectrum;
using test_util::random_matrix;
using test_util::random_orthogonal;

TEST_CASE("svd of a descending diagonal is the identity factorization") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{3.0, 1.0});
    const SvdFactors f = svd_compact(a);
    CHECK(f.sigma[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.sigma[1] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(f.u(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
            CHECK(f.v(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("svd of an ascending diagonal reorders singular values") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{1.0, 3.0});
    const SvdFactors f = svd_compact(a);
    CHECK(f.sigma[0] == doctest::Approx(3.0));
    CHECK(f.sigma[1] == doctest::Approx(1.0));
    // Permuted singular vectors: first column of U picks out coordinate 2.
    CHECK(std::fabs(f.u(1, 0)) == doctest::Approx(1.0));
    CHECK(std::fabs(f.u(0, 1)) == doctest::Approx(1.0));
    CHECK((svd_reconstruct(f) - a).frobenius_norm() <= 1e-12);
}

TEST_CASE("svd reconstructs random rectangular matrices") {
    CounterRng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t m = 1 + rng.next_u64() % 8;
        const std::size_t n = 1 + rng.next_u64() % 8;
        DenseMatrix a = random_matrix(rng, m, n);
        const SvdFactors f = svd_compact(a);
        CHECK((svd_reconstruct(f) - a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        for (std::size_t i = 1; i < f.sigma.size(); ++i) {
            CHECK(f.sigma[i - 1] >= f.sigma[i]);
            CHECK(f.sigma[i] >= 0.0);
        }
        // column-orthonormal factors
        DenseMatrix gu = matmul_tn(f.u, f.u);
        DenseMatrix gv = matmul_tn(f.v, f.v);
        for (std::size_t i = 0; i < f.sigma.size(); ++i) {
            gu(i, i) -= 1.0;
            gv(i, i) -= 1.0;
        }
        CHECK(gu.max_abs() <= 1e-10);
        CHECK(gv.max_abs() <= 1e-10);
    }
}

TEST_CASE("svd 5x3 reconstruction example") {
    CounterRng rng(42);
    DenseMatrix a = random_matrix(rng, 5, 3);
    const SvdFactors f = svd_compact(a);
    CHECK((svd_reconstruct(f) - a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
}

TEST_CASE("svd is deterministic and sign-canonical") {
    CounterRng rng(11);
    DenseMatrix a = random_matrix(rng, 6, 4);
    const SvdFactors f1 = svd_compact(a);
    const SvdFactors f2 = svd_compact(a);
    for (std::size_t i = 0; i < f1.u.size(); ++i) CHECK(f1.u.data()[i] == f2.u.data()[i]);
    for (std::size_t i = 0; i < f1.v.size(); ++i) CHECK(f1.v.data()[i] == f2.v.data()[i]);
    // first nonzero entry of each U column is nonnegative
    for (std::size_t j = 0; j < f1.sigma.size(); ++j) {
        for (std::size_t i = 0; i < f1.u.rows(); ++i) {
            if (std::fabs(f1.u(i, j)) > 1e-12) {
                CHECK(f1.u(i, j) > 0.0);
                break;
            }
        }
    }
}

TEST_CASE("svd handles rank-deficient and zero matrices") {
    DenseMatrix zero(4, 3);
    const SvdFactors fz = svd_compact(zero);
    for (double s : fz.sigma) CHECK(s == 0.0);
    DenseMatrix gu = matmul_tn(fz.u, fz.u);
    for (std::size_t i = 0; i < fz.sigma.size(); ++i) gu(i, i) -= 1.0;
    CHECK(gu.max_abs() <= 1e-12);

    // rank-1 outer product
    CounterRng rng(13);
    DenseMatrix u = random_matrix(rng, 5, 1);
    DenseMatrix v = random_matrix(rng, 4, 1);
    DenseMatrix a = matmul_nt(u, v);
    const SvdFactors f = svd_compact(a);
    CHECK(f.sigma[0] > 0.0);
    for (std::size_t i = 1; i < f.sigma.size(); ++i) CHECK(f.sigma[i] <= 1e-12 * f.sigma[0]);
    CHECK((svd_reconstruct(f) - a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
}

TEST_CASE("msgn of a positive diagonal is the identity") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{3.0, 0.5});
    const DenseMatrix p = msgn_exact(a);
    CHECK((p - DenseMatrix::identity(2)).frobenius_norm() <= 1e-12);
}

TEST_CASE("msgn is invariant to positive scaling of an orthogonal matrix") {
    CounterRng rng(17);
    DenseMatrix o = random_orthogonal(rng, 4);
    const DenseMatrix p = msgn_exact(2.7 * o);
    CHECK((p - o).frobenius_norm() <= 1e-10);
}

TEST_CASE("msgn of a full-rank 4x2 has orthonormal columns") {
    CounterRng rng(19);
    DenseMatrix a = matrix_with_spectrum(rng, 4, 2, {2.0, 0.7});
    const DenseMatrix p = msgn_exact(a);
    DenseMatrix gram = matmul_tn(p, p);
    gram(0, 0) -= 1.0;
    gram(1, 1) -= 1.0;
    CHECK(gram.max_abs() <= 1e-10);
}

TEST_CASE("msgn rejects rank-deficient input") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(msgn_exact(a), RankDeficiencyError);
}

TEST_CASE("msgn is idempotent") {
    CounterRng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        DenseMatrix a = matrix_with_spectrum(rng, 4, 4, {2.0, 1.3, 0.8, 0.4});
        const DenseMatrix p = msgn_exact(a);
        CHECK((msgn_exact(p) - p).frobenius_norm() <= 1e-10);
    }
}

TEST_CASE("trace inner product") {
    CHECK(trace_inner(DenseMatrix::identity(2), DenseMatrix::identity(2)) == 2.0);
    CounterRng rng(29);
    DenseMatrix a = random_matrix(rng, 3, 3);
    CHECK(trace_inner(a, DenseMatrix(3, 3)) == 0.0);
    DenseMatrix b = random_matrix(rng, 3, 3);
    double want = 0.0;
    for (std::size_t i = 0; i < 9; ++i) want += a.data()[i] * b.data()[i];
    CHECK(trace_inner(a, b) == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(trace_inner(a, DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("von Neumann bound is tight for aligned matrices") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{2.0, 1.0});
    const VonNeumannBound vb = von_neumann_bound(a, a);
    CHECK(vb.lhs == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(vb.rhs == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("von Neumann bound on an anti-diagonal pair") {
    DenseMatrix a = DenseMatrix::diagonal(std::vector<double>{2.0, 1.0});
    DenseMatrix b(2, 2);
    b(0, 1) = 1.0;
    b(1, 0) = 1.0;
    const VonNeumannBound vb = von_neumann_bound(a, b);
    CHECK(vb.lhs == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(vb.rhs == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("von Neumann inequality holds on random pairs") {
    CounterRng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        DenseMatrix a = random_matrix(rng, 4, 4);
        DenseMatrix b = random_matrix(rng, 4, 4);
        const VonNeumannBound vb = von_neumann_bound(a, b);
        CHECK(vb.lhs <= vb.rhs + 1e-10 * vb.rhs);
    }
}

TEST_CASE("singular values are invariant under orthogonal rotations") {
    CounterRng rng(37);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 6;
        DenseMatrix a = random_matrix(rng, n, n);
        DenseMatrix rotated =
            matmul(matmul(random_orthogonal(rng, n), a), random_orthogonal(rng, n));
        const std::vector<double> s1 = singular_values(a);
        const std::vector<double> s2 = singular_values(rotated);
        for (std::size_t i = 0; i < s1.size(); ++i) {
            CHECK(std::fabs(s1[i] - s2[i]) <= 1e-10 * std::max(1.0, s1[0]));
        }
    }
}

TEST_CASE("spectral norm upper bound brackets sigma_max") {
    CounterRng rng(41);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t m = 2 + rng.next_u64() % 6;
        const std::size_t n = 2 + rng.next_u64() % 6;
        DenseMatrix a = random_matrix(rng, m, n);
        const double sigma_max = singular_values(a).front();
        const double bound = spectral_norm_upper_bound(a);
        const double k = static_cast<double>(std::min(m, n));
        CHECK(bound >= sigma_max * (1.0 - 1e-10));
        CHECK(bound <= sigma_max * std::pow(k, 1.0 / 16.0) * (1.0 + 1e-10));
    }
}
