#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "isocurve/curvature.hpp"
#include "isocurve/linalg.hpp"
#include "isocurve/matrix.hpp"
#include "isocurve/sphere.hpp"

namespace isocurve {

// Solves min_Q -Tr(Q G^T) + E_zeta H(||Q zeta||) by reducing to the
// singular values of G (the optimum shares G's singular vectors) and
// minimizing -sum_i sigma_i s_i + E H over s >= 0 on the path matched to
// the curvature variant.

enum class SolvePath {
    QuadraticClosedForm,
    QuarticFixedPoint,
    GenericProjectedGradient,
    KinkParametric,
};
std::string solve_path_name(SolvePath p);

struct ModelProblem {
    DenseMatrix gradient;
    CurvatureSpec curvature;
    SphereSampler sampler;  // ambient_dim must equal gradient.cols()
};

struct SpectrumSolution {
    std::vector<double> sigma;       // input spectrum (descending)
    std::vector<double> sigma_star;  // optimal spectrum, componentwise >= 0
    DenseMatrix q_star;              // shares singular vectors with G
    double objective = 0.0;
    double stationarity_residual = 0.0;  // inf-norm of projected first-order violation
    std::size_t iterations = 0;
    SolvePath path = SolvePath::GenericProjectedGradient;

    // Monte Carlo paths only; zeros on deterministic paths.
    std::vector<double> sigma_star_std_err;
    // Post-hoc check that the output spectrum preserves the input ordering
    // (within noise slack on Monte Carlo paths).
    bool ordering_preserved = true;

    // Populated by the kink path.
    bool kink_certificate_feasible = false;
    double kink_certificate_residual = 0.0;
};

struct QuarticFixedPointResult {
    std::vector<double> sigma_star;
    double d_value = 0.0;  // 0.5 * sum sigma_star^2 at the solution
    std::size_t iterations = 0;
    double residual = 0.0;  // inf-norm of s^3 + D s - n(n+2) sigma/(8c)
};

// Damped fixed-point solve of the coupled cubic system
//   s_j^3 + D s_j = n(n+2) sigma_j / (8c),  D = 0.5 * sum_i s_i^2.
// Each cubic has a unique nonnegative root (strictly increasing left side);
// damping 0.5 on the D update keeps spread-out spectra from oscillating.
QuarticFixedPointResult solve_quartic_fixed_point(std::span<const double> sigma,
                                                  std::size_t n, double c);

enum class ExpectationMode { Auto, ClosedForm, MonteCarlo };

struct GenericOptions {
    ExpectationMode mode = ExpectationMode::Auto;
    double tol = 1e-6;
    std::size_t max_iterations = 20000;
    // The super-quadratic growth check is advisory for the kink fallback,
    // which runs subgradient descent on a convex objective regardless.
    bool skip_growth_check = false;
    // Piecewise-linear curvature makes the reduced objective nonsmooth at
    // the origin and on the uniform ray; there a stalled Armijo search is
    // the stationarity signal (the smooth derivative selection cannot reach
    // the tolerance), so the stalled point is accepted as the solution.
    bool accept_subgradient_stall = false;
};

// Projected (sub)gradient descent on the reduced spectral program with
// Armijo backtracking; Monte Carlo mode reuses one fixed sample set across
// all evaluations (common random numbers). Terminates when the projected
// gradient inf-norm drops below max(tol, 3 * gradient std error).
SpectrumSolution solve_generic(std::span<const double> sigma, const CurvatureSpec& spec,
                               const SphereSampler& sampler, const GenericOptions& opts = {});

// Kink curvature: proposes the uniform spectrum r_tilde * (1, ..., 1) and
// accepts it when the bounded-weight moment certificate is feasible;
// otherwise falls back to subgradient descent. Requires a square-or-tall
// context (sampler.ambient_dim == sigma.size()) and sigma > 0.
SpectrumSolution solve_kink(std::span<const double> sigma, const KinkCurvature& kink,
                            const SphereSampler& sampler, const GenericOptions& opts = {});

// Full pipeline: SVD of G, variant dispatch, Q* = U diag(sigma_star) V^T.
// `opts` feeds the iterative paths; closed-form paths ignore it.
SpectrumSolution solve(const ModelProblem& problem, const GenericOptions& opts = {});

struct HomogenizationPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double ratio_in = 1.0;
    double ratio_out = 1.0;
    bool pass = true;
    double margin = 0.0;  // ratio_out - ratio_in where both finite
};

struct HomogenizationReport {
    std::vector<HomogenizationPair> pairs;
    bool all_pass = true;
    double worst_margin = 0.0;
};

// Pairwise ratio contraction check with the conventions 0/0 = 1,
// x/0 = infinity, infinity <= infinity. `std_err` (optional, per component
// of sigma_star) widens the comparison multiplicatively by 3 standard
// errors for Monte Carlo spectra.
HomogenizationReport homogenization_report(std::span<const double> sigma,
                                           std::span<const double> sigma_star,
                                           double tol = 1e-9,
                                           std::span<const double> std_err = {});

}  // namespace isocurve
