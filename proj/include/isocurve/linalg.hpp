#pragma once

#include <cstddef>
#include <vector>

#include "isocurve/matrix.hpp"

namespace isocurve {

/// Compact SVD A = U diag(sigma) V^T with k = min(rows, cols).
/// U is rows x k and V is cols x k, both column-orthonormal; sigma is
/// nonnegative and descending. Columns are sign-canonicalized so the first
/// nonzero entry of each U column is nonnegative, making factorizations
/// stable under rerun.
struct SvdFactors {
    DenseMatrix u;
    std::vector<double> sigma;
    DenseMatrix v;

    std::size_t rank_dim() const { return sigma.size(); }
};

// One-sided Jacobi on the smaller side; deterministic sweep order, relative
// off-diagonal threshold 1e-12, cap 100 sweeps (ConvergenceError beyond).
SvdFactors svd_compact(const DenseMatrix& a);

// U diag(sigma) V^T.
DenseMatrix svd_reconstruct(const SvdFactors& f);

std::vector<double> singular_values(const DenseMatrix& a);

// Unitary polar factor U V^T. Requires numerical full rank:
// sigma_min > 1e-12 * sigma_max (RankDeficiencyError otherwise).
DenseMatrix msgn_exact(const DenseMatrix& a);

// Frobenius inner product sum_ij A_ij B_ij.
double trace_inner(const DenseMatrix& a, const DenseMatrix& b);

// lhs = |Tr(A B^T)|, rhs = sum_i sigma_i(A) sigma_i(B), both spectra
// descending; lhs <= rhs holds up to roundoff.
struct VonNeumannBound {
    double lhs;
    double rhs;
};
VonNeumannBound von_neumann_bound(const DenseMatrix& a, const DenseMatrix& b);

// Upper bound on sigma_max that is exact up to a factor k^(1/16) and
// invariant under orthogonal rotations of a: Tr((A^T A)^8)^(1/16).
double spectral_norm_upper_bound(const DenseMatrix& a);

}  // namespace isocurve
