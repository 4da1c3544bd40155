#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "isocurve/curvature.hpp"
#include "isocurve/matrix.hpp"

namespace isocurve {

// Polynomial orthogonalization of a gradient matrix and a one-step harness
// comparing update rules on losses with an exactly known expectation term.

enum class PreNormalization {
    Frobenius,         // X0 = G / ||G||_F
    SpectralEstimate,  // X0 = G / upper bound on sigma_max (rotation invariant)
};

struct NsConfig {
    std::size_t iterations = 8;
    // Quintic iterate X <- aX + b (X X^T) X + c (X X^T)^2 X. The default
    // triple satisfies a + b + c = 1 with zero derivative at the unit fixed
    // point, so singular values contract onto 1 instead of cycling.
    double a = 2.5;
    double b = -2.5;
    double c = 1.0;
    PreNormalization pre_norm = PreNormalization::SpectralEstimate;
};

DenseMatrix msgn_newton_schulz(const DenseMatrix& g, const NsConfig& cfg = {});

// Diagonal of U^T X V in the singular basis of g: the spectrum of an
// iterate that shares g's singular vectors, kept in g's order.
std::vector<double> aligned_spectrum(const DenseMatrix& g, const DenseMatrix& x);

// Pairs (i < j) with sigma_i(g) > sigma_j(g) whose aligned values come out
// reversed. Polynomial iterates are not monotone across the spectrum at low
// iteration counts; this is measured, not asserted away.
std::size_t order_inversions(std::span<const double> sigma_in,
                             std::span<const double> sigma_out);

struct StepGrid {
    std::vector<double> gammas;
    static StepGrid defaults();  // 25 log-spaced points in [1e-4, 10]
};

struct RuleOutcome {
    std::string rule;  // raw | msgn-exact | msgn-ns | model-optimal
    DenseMatrix direction;
    double best_gamma = 0.0;
    double realized_decrease = 0.0;
    double predicted_decrease = 0.0;
    std::vector<double> grid_decrease;  // realized decrease at each grid gamma
};

struct ComparisonResult {
    std::vector<RuleOutcome> rules;
    StepGrid grid;
    std::size_t ns_order_inversions = 0;
};

// One-step comparison on the synthetic loss whose decrease under step
// gamma * R is exactly gamma * Tr(R G^T) - E H(gamma ||R zeta||), with the
// expectation in closed form (curvature must be quadratic or quartic).
// Each rule is scanned over the shared grid plus its own analytically
// optimal gamma, so ordering reflects direction quality, not grid phase.
ComparisonResult compare_one_step(const DenseMatrix& g, const CurvatureSpec& spec,
                                  const StepGrid& grid = StepGrid::defaults(),
                                  const NsConfig& ns_cfg = {});

}  // namespace isocurve
