#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "isocurve/curvature.hpp"
#include "isocurve/matrix.hpp"
#include "isocurve/sphere.hpp"

namespace isocurve {

// Executable certificates for the structural claims behind the spectral
// reduction: singular-space alignment, first-order optimality of the
// uniform spectrum under kink curvature, and its failure for smooth
// curvature on non-uniform spectra.

// sum_i sigma_i(Q) sigma_i(G) - Tr(Q G^T). Nonnegative up to roundoff;
// near zero certifies that Q's singular spaces align with G's.
double alignment_gap(const DenseMatrix& g, const DenseMatrix& q);

// Feasibility witness for E[eta(zeta) zeta zeta^T] = diag(sigma)/scale with
// eta confined to [A, B]: a box-constrained least-squares fit of per-sample
// weights to the empirical moment constraints (diagonals to target,
// off-diagonals to zero).
struct KinkCertificate {
    std::vector<double> eta;        // per-sample weights in [A, B]
    double moment_residual = 0.0;   // inf-norm of remaining constraint violation
    double threshold = 0.0;         // feasibility cutoff used
    bool feasible = false;
    std::size_t iterations = 0;
};

// threshold_override < 0 selects the default noise-scaled cutoff
// 3 * sqrt(n / S) * B.
KinkCertificate kink_certificate(std::span<const double> sigma, const KinkCurvature& kink,
                                 const SphereSampler& sampler, double scale,
                                 double threshold_override = -1.0);

// min over the grid of || diag(sigma) - (H'(c)/n) I ||_inf / sigma_max.
// Strictly positive when the singular values of G are not all equal and H
// is differentiable, certifying that no uniform-spectrum candidate is
// stationary. Requires smooth H and full-rank G.
double converse_gap(const DenseMatrix& g, const CurvatureSpec& spec,
                    std::span<const double> c_grid);

}  // namespace isocurve
