#include "isocurve/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"

namespace isocurve {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagTol = 1e-12;

// Column-major working copy so Jacobi rotations act on contiguous memory.
struct ColumnMajor {
    std::size_t rows = 0;
    std::vector<std::vector<double>> cols;

    explicit ColumnMajor(const DenseMatrix& a) : rows(a.rows()) {
        cols.assign(a.cols(), std::vector<double>(rows));
        for (std::size_t j = 0; j < a.cols(); ++j) {
            for (std::size_t i = 0; i < rows; ++i) cols[j][i] = a(i, j);
        }
    }
};

// Orthogonalizes the columns of `work` (rows >= cols expected by caller for
// efficiency, but not required for correctness). Accumulates the right
// rotations into `v` (cols x cols, starts as identity).
void jacobi_orthogonalize(ColumnMajor& work, std::vector<std::vector<double>>& v) {
    const std::size_t n = work.cols.size();
    const std::size_t m = work.rows;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* cp = work.cols[p].data();
                double* cq = work.cols[q].data();
                const double app = kernels::sq_norm(cp, m);
                const double aqq = kernels::sq_norm(cq, m);
                const double apq = kernels::dot(cp, cq, m);
                const double denom = std::sqrt(app * aqq);
                if (denom == 0.0) continue;
                const double rel = std::fabs(apq) / denom;
                worst = std::max(worst, rel);
                if (rel <= kOffDiagTol) continue;

                // plane_rot applies [c s; -s c]; with that convention the
                // annihilating tangent solves t^2 + 2 zeta t - 1 = 0 for
                // zeta = (app - aqq) / (2 apq).
                const double zeta = (app - aqq) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                kernels::plane_rot(cp, cq, m, c, s);
                kernels::plane_rot(v[p].data(), v[q].data(), n, c, s);
            }
        }
        if (worst <= kOffDiagTol) return;
    }
    throw ConvergenceError("svd_compact: Jacobi sweeps did not converge within 100 sweeps");
}

// Fills zero-norm columns of u with an orthonormal completion built from
// canonical basis vectors (deterministic).
void complete_orthonormal(std::vector<std::vector<double>>& u_cols, std::size_t m,
                          const std::vector<bool>& is_zero) {
    for (std::size_t j = 0; j < u_cols.size(); ++j) {
        if (!is_zero[j]) continue;
        for (std::size_t basis = 0; basis < m; ++basis) {
            std::vector<double> cand(m, 0.0);
            cand[basis] = 1.0;
            for (std::size_t l = 0; l < u_cols.size(); ++l) {
                if (l != j && (!is_zero[l] || l < j)) {
                    const double proj = kernels::dot(cand.data(), u_cols[l].data(), m);
                    kernels::axpy(-proj, u_cols[l].data(), cand.data(), m);
                }
            }
            const double norm = std::sqrt(kernels::sq_norm(cand.data(), m));
            if (norm > 0.5) {
                kernels::scale(1.0 / norm, cand.data(), m);
                u_cols[j] = std::move(cand);
                break;
            }
        }
    }
}

SvdFactors svd_tall(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    ColumnMajor work(a);
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    jacobi_orthogonalize(work, v);

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        sigma[j] = std::sqrt(kernels::sq_norm(work.cols[j].data(), m));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    // Columns whose norm sits at roundoff level relative to sigma_max carry
    // no reliable direction; they are reported as exact zeros and replaced
    // by a deterministic orthonormal completion.
    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    const double zero_cut = sigma_max * 1e-14;

    std::vector<std::vector<double>> u_cols(n, std::vector<double>(m, 0.0));
    std::vector<bool> is_zero(n, false);
    std::vector<double> sorted_sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        sorted_sigma[j] = sigma[src];
        if (sigma[src] > zero_cut && sigma[src] > 0.0) {
            u_cols[j] = work.cols[src];
            kernels::scale(1.0 / sigma[src], u_cols[j].data(), m);
        } else {
            sorted_sigma[j] = 0.0;
            is_zero[j] = true;
        }
    }
    complete_orthonormal(u_cols, m, is_zero);

    SvdFactors f;
    f.u = DenseMatrix(m, n);
    f.v = DenseMatrix(n, n);
    f.sigma = std::move(sorted_sigma);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) f.u(i, j) = u_cols[j][i];
        for (std::size_t i = 0; i < n; ++i) f.v(i, j) = v[order[j]][i];
    }
    return f;
}

void canonicalize_signs(SvdFactors& f) {
    const std::size_t m = f.u.rows();
    const std::size_t n = f.v.rows();
    for (std::size_t j = 0; j < f.sigma.size(); ++j) {
        double col_max = 0.0;
        for (std::size_t i = 0; i < m; ++i) col_max = std::max(col_max, std::fabs(f.u(i, j)));
        const double cut = col_max * 1e-12;
        double lead = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (std::fabs(f.u(i, j)) > cut) {
                lead = f.u(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < m; ++i) f.u(i, j) = -f.u(i, j);
            for (std::size_t i = 0; i < n; ++i) f.v(i, j) = -f.v(i, j);
        }
    }
}

}  // namespace

SvdFactors svd_compact(const DenseMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) {
        throw ContractError("svd_compact: empty matrix");
    }
    if (!a.all_finite()) {
        throw ContractError("svd_compact: entries must be finite");
    }
    SvdFactors f;
    if (a.rows() >= a.cols()) {
        f = svd_tall(a);
    } else {
        SvdFactors ft = svd_tall(a.transposed());
        f.u = std::move(ft.v);
        f.v = std::move(ft.u);
        f.sigma = std::move(ft.sigma);
    }
    canonicalize_signs(f);
    return f;
}

DenseMatrix svd_reconstruct(const SvdFactors& f) {
    DenseMatrix v_scaled = f.v;
    for (std::size_t j = 0; j < f.sigma.size(); ++j) {
        for (std::size_t i = 0; i < v_scaled.rows(); ++i) v_scaled(i, j) *= f.sigma[j];
    }
    return matmul_nt(f.u, v_scaled);
}

std::vector<double> singular_values(const DenseMatrix& a) { return svd_compact(a).sigma; }

DenseMatrix msgn_exact(const DenseMatrix& a) {
    const SvdFactors f = svd_compact(a);
    const double sigma_max = f.sigma.front();
    const double sigma_min = f.sigma.back();
    if (sigma_max == 0.0 || sigma_min <= 1e-12 * sigma_max) {
        throw RankDeficiencyError("msgn_exact: input is numerically rank deficient");
    }
    return matmul_nt(f.u, f.v);
}

double trace_inner(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "trace_inner");
    return kernels::dot(a.data(), b.data(), a.size());
}

VonNeumannBound von_neumann_bound(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "von_neumann_bound");
    const std::vector<double> sa = singular_values(a);
    const std::vector<double> sb = singular_values(b);
    VonNeumannBound out;
    out.lhs = std::fabs(trace_inner(a, b));
    out.rhs = kernels::dot(sa.data(), sb.data(), sa.size());
    return out;
}

double spectral_norm_upper_bound(const DenseMatrix& a) {
    DenseMatrix gram =
        (a.rows() >= a.cols()) ? matmul_tn(a, a) : matmul_nt(a, a);
    // gram^8 by squaring three times; Tr(B^8)^(1/16) overestimates sigma_max
    // by at most k^(1/16) and is invariant under rotations of a.
    for (int i = 0; i < 3; ++i) gram = matmul(gram, gram);
    double trace = 0.0;
    for (std::size_t i = 0; i < gram.rows(); ++i) trace += gram(i, i);
    return std::pow(std::max(trace, 0.0), 1.0 / 16.0);
}

}  // namespace isocurve
