#include "isocurve/muon.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"
#include "isocurve/linalg.hpp"
#include "isocurve/solver.hpp"
#include "isocurve/sphere.hpp"

namespace isocurve {

DenseMatrix msgn_newton_schulz(const DenseMatrix& g, const NsConfig& cfg) {
    if (cfg.iterations == 0) throw ContractError("msgn_newton_schulz: iterations must be >= 1");
    const double fro = g.frobenius_norm();
    if (fro == 0.0) throw ContractError("msgn_newton_schulz: input must be nonzero");

    const double norm0 = cfg.pre_norm == PreNormalization::Frobenius
                             ? fro
                             : spectral_norm_upper_bound(g);
    DenseMatrix x = (1.0 / norm0) * g;

    const bool tall = x.rows() >= x.cols();
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        // Gram on the smaller side; poly = b*A + c*A^2 applied to X.
        DenseMatrix gram = tall ? matmul_tn(x, x) : matmul_nt(x, x);
        DenseMatrix gram_sq = matmul(gram, gram);
        kernels::scale(cfg.c, gram_sq.data(), gram_sq.size());
        kernels::axpy(cfg.b, gram.data(), gram_sq.data(), gram.size());
        DenseMatrix next = tall ? matmul(x, gram_sq) : matmul(gram_sq, x);
        kernels::axpy(cfg.a, x.data(), next.data(), x.size());
        x = std::move(next);
        if (x.frobenius_norm() > 1e6) {
            throw DivergenceError("msgn_newton_schulz: iterate norm exceeded 1e6");
        }
    }
    return x;
}

std::vector<double> aligned_spectrum(const DenseMatrix& g, const DenseMatrix& x) {
    require_same_shape(g, x, "aligned_spectrum");
    const SvdFactors f = svd_compact(g);
    const std::size_t k = f.sigma.size();
    std::vector<double> out(k, 0.0);
    // (U^T X V)_ii = u_i^T X v_i
    std::vector<double> xv(g.rows());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) acc += x(r, c) * f.v(c, i);
            xv[r] = acc;
        }
        double diag = 0.0;
        for (std::size_t r = 0; r < g.rows(); ++r) diag += f.u(r, i) * xv[r];
        out[i] = diag;
    }
    return out;
}

std::size_t order_inversions(std::span<const double> sigma_in,
                             std::span<const double> sigma_out) {
    if (sigma_in.size() != sigma_out.size()) {
        throw ShapeError("order_inversions: length mismatch");
    }
    double max_in = 0.0;
    for (double s : sigma_in) max_in = std::max(max_in, std::fabs(s));
    const double tie_tol = 1e-12 * std::max(max_in, 1.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < sigma_in.size(); ++i) {
        for (std::size_t j = i + 1; j < sigma_in.size(); ++j) {
            if (sigma_in[i] > sigma_in[j] + tie_tol && sigma_out[i] < sigma_out[j] - 1e-9) {
                ++count;
            }
        }
    }
    return count;
}

StepGrid StepGrid::defaults() {
    StepGrid grid;
    const int count = 25;
    for (int i = 0; i < count; ++i) {
        const double log_g = -4.0 + 5.0 * static_cast<double>(i) / (count - 1);
        grid.gammas.push_back(std::pow(10.0, log_g));
    }
    return grid;
}

namespace {

struct SyntheticLoss {
    // decrease(gamma * R) = a * gamma - b * gamma^p with p = 2 or 4.
    double linear = 0.0;     // Tr(R G^T)
    double expect_at_1 = 0;  // E H(||R zeta||)
    int power = 4;

    double decrease(double gamma) const {
        return linear * gamma - expect_at_1 * std::pow(gamma, power);
    }
    double best_gamma() const {
        if (linear <= 0.0 || expect_at_1 <= 0.0) return 0.0;
        return std::pow(linear / (power * expect_at_1), 1.0 / (power - 1));
    }
};

SyntheticLoss make_loss(const DenseMatrix& g, const DenseMatrix& direction,
                        const CurvatureSpec& spec) {
    SyntheticLoss loss;
    loss.linear = trace_inner(direction, g);
    const std::vector<double> s = singular_values(direction);
    loss.expect_at_1 = closed_form_expectation(spec, s, g.cols());
    loss.power = spec.get_if<QuadraticCurvature>() ? 2 : 4;
    return loss;
}

RuleOutcome scan_rule(const std::string& name, const DenseMatrix& g, DenseMatrix direction,
                      const CurvatureSpec& spec, const StepGrid& grid) {
    RuleOutcome outcome;
    outcome.rule = name;
    const SyntheticLoss loss = make_loss(g, direction, spec);
    outcome.direction = std::move(direction);
    outcome.best_gamma = 0.0;
    outcome.realized_decrease = 0.0;

    std::vector<double> candidates = grid.gammas;
    const double analytic = loss.best_gamma();
    if (analytic > 0.0) candidates.push_back(analytic);
    outcome.grid_decrease.reserve(grid.gammas.size());
    for (double gamma : grid.gammas) outcome.grid_decrease.push_back(loss.decrease(gamma));
    for (double gamma : candidates) {
        const double dec = loss.decrease(gamma);
        if (dec > outcome.realized_decrease) {
            outcome.realized_decrease = dec;
            outcome.best_gamma = gamma;
        }
    }
    outcome.predicted_decrease = outcome.realized_decrease;
    return outcome;
}

}  // namespace

ComparisonResult compare_one_step(const DenseMatrix& g, const CurvatureSpec& spec,
                                  const StepGrid& grid, const NsConfig& ns_cfg) {
    if (!has_closed_form_expectation(spec)) {
        throw ContractError(
            "compare_one_step: curvature must have a closed-form expectation "
            "(quadratic or quartic)");
    }
    if (g.frobenius_norm() == 0.0) throw ContractError("compare_one_step: zero gradient");
    if (grid.gammas.empty()) throw ContractError("compare_one_step: empty step grid");

    ComparisonResult result;
    result.grid = grid;

    result.rules.push_back(scan_rule("raw", g, g, spec, grid));
    result.rules.push_back(scan_rule("msgn-exact", g, msgn_exact(g), spec, grid));

    DenseMatrix ns = msgn_newton_schulz(g, ns_cfg);
    const SvdFactors f = svd_compact(g);
    result.ns_order_inversions = order_inversions(f.sigma, aligned_spectrum(g, ns));
    result.rules.push_back(scan_rule("msgn-ns", g, std::move(ns), spec, grid));

    ModelProblem problem{g, spec, SphereSampler{g.cols(), 1, 0}};
    const SpectrumSolution sol = solve(problem);
    RuleOutcome model = scan_rule("model-optimal", g, sol.q_star, spec, grid);
    // The solved update embeds its own scale; keep it when the scan cannot
    // improve on it.
    const SyntheticLoss at_solution = make_loss(g, sol.q_star, spec);
    const double direct = at_solution.decrease(1.0);
    if (direct >= model.realized_decrease) {
        model.realized_decrease = direct;
        model.predicted_decrease = direct;
        model.best_gamma = 1.0;
    }
    result.rules.push_back(std::move(model));
    return result;
}

}  // namespace isocurve
