#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isocurve/certificates.hpp"
#include "isocurve/errors.hpp"
#include "isocurve/solver.hpp"
#include "test_util.hpp"

using namespace isocurve;
using test_util::matrix_with_spectrum;
using test_util::random_matrix;

TEST_CASE("alignment gap vanishes for a scaled copy") {
    CounterRng rng(1);
    DenseMatrix g = random_matrix(rng, 3, 3);
    CHECK(std::fabs(alignment_gap(g, 2.0 * g)) <= 1e-10 * g.frobenius_norm());
}

TEST_CASE("alignment gap of a misaligned pair") {
    DenseMatrix g = DenseMatrix::diagonal(std::vector<double>{2.0, 1.0});
    DenseMatrix q(2, 2);
    q(0, 1) = 1.0;
    q(1, 0) = 1.0;
    CHECK(alignment_gap(g, q) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(alignment_gap(g, DenseMatrix(3, 2)), ShapeError);
}

TEST_CASE("solver updates are aligned with the gradient") {
    CounterRng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 6;
        DenseMatrix g = random_matrix(rng, n, n);
        SphereSampler sampler{n, 1, 0};
        CurvatureSpec spec =
            rep % 2 == 0 ? CurvatureSpec::quartic(1.0) : CurvatureSpec::quadratic(1.0);
        const SpectrumSolution sol = solve({g, spec, sampler});
        CHECK(alignment_gap(g, sol.q_star) <= 1e-8);
        CHECK(alignment_gap(g, sol.q_star) >= -1e-10);
    }
}

TEST_CASE("kink certificate: constant spectrum with eta in range") {
    const std::size_t n = 3;
    const double value = 0.8;
    std::vector<double> sigma(n, value);
    // constant eta = n * value realizes E[eta zeta_i^2] = value exactly
    const KinkCurvature kink{0.0, 2.0 * n * value, 1.0};
    SphereSampler sampler{n, 100000, 5};
    const KinkCertificate cert = kink_certificate(sigma, kink, sampler, 1.0);
    CHECK(cert.feasible);
    CHECK(cert.moment_residual <= 0.05);
    for (double e : cert.eta) {
        CHECK(e >= kink.a - 1e-15);
        CHECK(e <= kink.b + 1e-15);
    }
}

TEST_CASE("kink certificate: a pinched interval cannot match a spread spectrum") {
    const std::size_t n = 2;
    std::vector<double> sigma{2.0, 1.0};
    // A ~= B forces constant eta, which is the uniform-spectrum case only.
    const KinkCurvature pinched{3.0 - 1e-9, 3.0 + 1e-9, 1.0};
    SphereSampler sampler{n, 100000, 7};
    const KinkCertificate cert = kink_certificate(sigma, pinched, sampler, 1.0);
    CHECK_FALSE(cert.feasible);
    CHECK(cert.moment_residual > 0.3);
}

TEST_CASE("kink certificate: documented 3-2-1 instance") {
    const std::size_t n = 3;
    std::vector<double> sigma{3.0, 2.0, 1.0};
    const KinkCurvature kink{0.0, 50.0, 1.0};
    SphereSampler sampler{n, 200000, 9};
    const KinkCertificate cert = kink_certificate(sigma, kink, sampler, 1.0);
    CHECK(cert.feasible);
    CHECK(cert.moment_residual <= 0.02);
}

TEST_CASE("kink certificate feasibility is monotone in the interval") {
    const std::size_t n = 3;
    std::vector<double> sigma{3.0, 2.0, 1.0};
    SphereSampler sampler{n, 60000, 11};
    bool prev_feasible = false;
    for (double width : {12.0, 30.0, 80.0}) {
        const KinkCurvature kink{0.0, width, 1.0};
        const KinkCertificate cert = kink_certificate(sigma, kink, sampler, 1.0);
        if (prev_feasible) CHECK(cert.feasible);
        // the fit always lands well under its own feasibility cutoff here
        CHECK(cert.moment_residual <= 0.1 * cert.threshold);
        prev_feasible = cert.feasible;
    }
}

TEST_CASE("kink certificate validates its inputs") {
    std::vector<double> sigma{1.0, 0.5};
    SphereSampler sampler{3, 1000, 0};
    CHECK_THROWS_AS(kink_certificate(sigma, KinkCurvature{0.0, 10.0, 1.0}, sampler, 1.0),
                    ContractError);
    std::vector<double> bad{1.0, 0.0, 0.5};
    SphereSampler square{3, 1000, 0};
    CHECK_THROWS_AS(kink_certificate(bad, KinkCurvature{0.0, 10.0, 1.0}, square, 1.0),
                    ContractError);
}

TEST_CASE("converse gap: orthogonal gradient closes at the matching radius") {
    CounterRng rng(13);
    const double s = 1.4;
    DenseMatrix g = s * test_util::random_orthogonal(rng, 3);
    // H'(c) = 4 c^3 must equal n * s  ->  c = (n s / 4)^(1/3)
    const double c_star = std::cbrt(3.0 * s / 4.0);
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i) grid.push_back(0.2 + 0.05 * i);
    grid.push_back(c_star);
    CHECK(converse_gap(g, CurvatureSpec::quartic(1.0), grid) <= 1e-8);
}

TEST_CASE("converse gap: spread spectrum stays bounded away from zero") {
    DenseMatrix g = DenseMatrix::diagonal(std::vector<double>{2.0, 1.0});
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 99.0));
    const double gap = converse_gap(g, CurvatureSpec::quartic(1.0), grid);
    CHECK(gap >= 0.25 - 1e-9);
}

TEST_CASE("converse gap honours its preconditions") {
    DenseMatrix g = DenseMatrix::diagonal(std::vector<double>{2.0, 1.0});
    std::vector<double> grid{0.5, 1.0};
    CHECK_THROWS_AS(converse_gap(g, CurvatureSpec::kink(0.0, 1.0, 1.0), grid),
                    ContractError);
    DenseMatrix rank_deficient = DenseMatrix::diagonal(std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(converse_gap(rank_deficient, CurvatureSpec::quartic(1.0), grid),
                    RankDeficiencyError);
}

TEST_CASE("converse gap is scale invariant with a matched grid") {
    CounterRng rng(17);
    DenseMatrix g = matrix_with_spectrum(rng, 3, 3, {2.0, 1.3, 0.7});
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 99.0));
    const double base = converse_gap(g, CurvatureSpec::quartic(1.0), grid);
    const double t = 2.6;
    std::vector<double> scaled = grid;
    for (double& c : scaled) c *= std::cbrt(t);
    CHECK(converse_gap(t * g, CurvatureSpec::quartic(1.0), scaled) ==
          doctest::Approx(base).epsilon(1e-9));
}
