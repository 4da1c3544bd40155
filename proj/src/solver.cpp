#include "isocurve/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "isocurve/certificates.hpp"
#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"

namespace isocurve {
namespace {

constexpr double kDivergenceCap = 1e8;
constexpr double kArmijo = 1e-4;

void require_nonnegative(std::span<const double> sigma, const char* who) {
    for (double s : sigma) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ContractError(std::string(who) + ": spectrum must be finite and >= 0");
        }
    }
}

// Unique nonnegative root of t^3 + d t = b (b >= 0): Newton from
// t0 = max(b, 1)^(1/3), which starts above the root so iterates decrease
// monotonically.
double cubic_root(double d, double b) {
    if (b <= 0.0) return 0.0;
    double t = std::cbrt(std::max(b, 1.0));
    for (int it = 0; it < 64; ++it) {
        const double g = t * t * t + d * t - b;
        const double gp = 3.0 * t * t + d;
        const double step = g / gp;
        t -= step;
        if (std::fabs(step) <= 1e-16 * (1.0 + t)) break;
    }
    return std::max(t, 0.0);
}

// Expectation term of the reduced program, either closed form or Monte
// Carlo over a fixed sample set.
class ExpectationTerm {
public:
    virtual ~ExpectationTerm() = default;
    virtual double value(std::span<const double> x) const = 0;
    struct Grad {
        std::vector<double> grad;
        std::vector<double> std_err;
        std::vector<double> hess_diag;
    };
    virtual Grad grad(std::span<const double> x) const = 0;
    virtual bool stochastic() const = 0;
};

class ClosedFormTerm final : public ExpectationTerm {
public:
    ClosedFormTerm(const CurvatureSpec& spec, std::size_t n) : spec_(spec), n_(n) {}

    double value(std::span<const double> x) const override {
        return closed_form_expectation(spec_, x, n_);
    }
    Grad grad(std::span<const double> x) const override {
        Grad g;
        g.grad = closed_form_gradient(spec_, x, n_);
        g.std_err.assign(x.size(), 0.0);
        g.hess_diag.assign(x.size(), 1.0);
        return g;
    }
    bool stochastic() const override { return false; }

private:
    CurvatureSpec spec_;
    std::size_t n_;
};

class MonteCarloTerm final : public ExpectationTerm {
public:
    MonteCarloTerm(const CurvatureSpec& spec, const SphereSampler& sampler, std::size_t k)
        : spec_(spec), engine_(sampler, k) {}

    double value(std::span<const double> x) const override {
        return engine_.expectation(x, spec_).mean;
    }
    Grad grad(std::span<const double> x) const override {
        auto wg = engine_.weighted_grad(x, spec_);
        return {std::move(wg.grad), std::move(wg.std_err), std::move(wg.hess_diag)};
    }
    bool stochastic() const override { return true; }

private:
    CurvatureSpec spec_;
    SphereExpectation engine_;
};

struct PgdResult {
    std::vector<double> x;
    double objective = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<double> grad_std_err;
    std::vector<double> sigma_std_err;
};

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

PgdResult projected_gradient_minimize(std::span<const double> sigma,
                                      const ExpectationTerm& term,
                                      const GenericOptions& opts) {
    const std::size_t k = sigma.size();
    std::vector<double> x(k, 0.0);
    std::vector<double> trial(k, 0.0);

    auto objective = [&](std::span<const double> p) {
        return -kernels::dot(sigma.data(), p.data(), k) + term.value(p);
    };

    double f = objective(x);
    double gamma = 1.0;
    ExpectationTerm::Grad eg;
    PgdResult out;

    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        eg = term.grad(x);
        std::vector<double> g(k);
        for (std::size_t i = 0; i < k; ++i) g[i] = -sigma[i] + eg.grad[i];

        double pg_norm = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double moved = std::max(0.0, x[i] - g[i]);
            pg_norm = std::max(pg_norm, std::fabs(x[i] - moved));
        }
        const double tol = std::max(opts.tol, 3.0 * inf_norm(eg.std_err));
        if (pg_norm <= tol) {
            out.x = x;
            out.objective = f;
            out.residual = pg_norm;
            out.iterations = it;
            out.grad_std_err = eg.std_err;
            out.sigma_std_err.assign(k, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                out.sigma_std_err[i] = eg.std_err[i] / std::max(eg.hess_diag[i], 1e-12);
            }
            return out;
        }

        gamma = std::min(gamma * 2.0, 1e8);
        bool accepted = false;
        for (int half = 0; half < 80; ++half) {
            double directional = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                trial[i] = std::max(0.0, x[i] - gamma * g[i]);
                directional += g[i] * (trial[i] - x[i]);
            }
            const double f_trial = objective(trial);
            if (f_trial <= f + kArmijo * directional) {
                x = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            gamma *= 0.5;
        }
        if (!accepted) {
            // No descent step representable; numerically stationary.
            out.x = x;
            out.objective = f;
            out.residual = pg_norm;
            out.iterations = it;
            out.grad_std_err = eg.std_err;
            out.sigma_std_err.assign(k, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                out.sigma_std_err[i] = eg.std_err[i] / std::max(eg.hess_diag[i], 1e-12);
            }
            if (pg_norm > 10.0 * tol && !opts.accept_subgradient_stall) {
                throw ConvergenceError(
                    "solve_generic: line search stalled above tolerance");
            }
            return out;
        }
        if (inf_norm(x) > kDivergenceCap) {
            throw DivergenceError(
                "solve_generic: spectrum iterate exceeded 1e8; curvature does not "
                "dominate the linear term for this gradient");
        }
    }
    throw ConvergenceError("solve_generic: projected gradient hit the iteration cap");
}

bool check_ordering(std::span<const double> sigma, std::span<const double> sigma_star,
                    std::span<const double> std_err) {
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        for (std::size_t j = 0; j < sigma.size(); ++j) {
            if (sigma[i] >= sigma[j]) {
                double slack = 1e-9;
                if (!std_err.empty()) slack += 3.0 * (std_err[i] + std_err[j]);
                if (sigma_star[i] < sigma_star[j] - slack) return false;
            }
        }
    }
    return true;
}

DenseMatrix diag_rect(std::span<const double> values, std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < std::min({values.size(), rows, cols}); ++i) {
        m(i, i) = values[i];
    }
    return m;
}

}  // namespace

std::string solve_path_name(SolvePath p) {
    switch (p) {
        case SolvePath::QuadraticClosedForm:
            return "quadratic-closed-form";
        case SolvePath::QuarticFixedPoint:
            return "quartic-fixed-point";
        case SolvePath::GenericProjectedGradient:
            return "generic-projected-gradient";
        case SolvePath::KinkParametric:
            return "kink-parametric";
    }
    return "unknown";
}

QuarticFixedPointResult solve_quartic_fixed_point(std::span<const double> sigma,
                                                  std::size_t n, double c) {
    if (c <= 0.0) throw ContractError("solve_quartic_fixed_point: c must be > 0");
    if (sigma.size() > n) {
        throw ContractError("solve_quartic_fixed_point: spectrum longer than ambient dim");
    }
    require_nonnegative(sigma, "solve_quartic_fixed_point");

    const std::size_t k = sigma.size();
    const double dn = static_cast<double>(n);
    std::vector<double> b(k);
    for (std::size_t i = 0; i < k; ++i) b[i] = dn * (dn + 2.0) * sigma[i] / (8.0 * c);

    QuarticFixedPointResult out;
    out.sigma_star.assign(k, 0.0);

    constexpr std::size_t kCap = 10000;
    constexpr double kLambda = 0.5;
    double d = 0.0;
    std::size_t it = 0;
    for (; it < kCap; ++it) {
        double half_sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            out.sigma_star[i] = cubic_root(d, b[i]);
            half_sum += 0.5 * out.sigma_star[i] * out.sigma_star[i];
        }
        const double d_next = (1.0 - kLambda) * d + kLambda * half_sum;
        const bool settled = std::fabs(d_next - d) <= 5e-16 * (1.0 + d);
        d = d_next;
        if (settled) break;
    }

    // Final pass with the settled D, then report the residual against the
    // self-consistent D = 0.5 * sum s^2.
    double half_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out.sigma_star[i] = cubic_root(d, b[i]);
        half_sum += 0.5 * out.sigma_star[i] * out.sigma_star[i];
    }
    out.d_value = half_sum;
    out.iterations = it + 1;
    double residual = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double s = out.sigma_star[i];
        residual = std::max(residual, std::fabs(s * s * s + out.d_value * s - b[i]));
    }
    out.residual = residual;
    if (it + 1 >= kCap && residual > 1e-10) {
        throw ConvergenceError("solve_quartic_fixed_point: did not reach residual 1e-10");
    }
    return out;
}

SpectrumSolution solve_generic(std::span<const double> sigma, const CurvatureSpec& spec,
                               const SphereSampler& sampler, const GenericOptions& opts) {
    require_nonnegative(sigma, "solve_generic");
    const std::size_t k = sigma.size();
    if (k == 0 || k > sampler.ambient_dim) {
        throw ContractError("solve_generic: spectrum length must be in [1, ambient_dim]");
    }
    if (!opts.skip_growth_check && !spec.get_if<KinkCurvature>()) {
        if (!assumption_superquadratic_holds(spec, default_growth_grid())) {
            throw ContractError(
                "solve_generic: curvature fails the super-quadratic growth check; "
                "pass skip_growth_check to override");
        }
    }

    const bool closed_form =
        opts.mode == ExpectationMode::ClosedForm ||
        (opts.mode == ExpectationMode::Auto && has_closed_form_expectation(spec));
    if (closed_form && !has_closed_form_expectation(spec)) {
        throw ContractError("solve_generic: closed-form mode unavailable for this variant");
    }

    std::unique_ptr<ExpectationTerm> term;
    if (closed_form) {
        term = std::make_unique<ClosedFormTerm>(spec, sampler.ambient_dim);
    } else {
        term = std::make_unique<MonteCarloTerm>(spec, sampler, k);
    }

    PgdResult pgd = projected_gradient_minimize(sigma, *term, opts);

    SpectrumSolution sol;
    sol.sigma.assign(sigma.begin(), sigma.end());
    sol.sigma_star = std::move(pgd.x);
    sol.q_star = diag_rect(sol.sigma_star, k, sampler.ambient_dim);
    sol.objective = pgd.objective;
    sol.stationarity_residual = pgd.residual;
    sol.iterations = pgd.iterations;
    sol.path = SolvePath::GenericProjectedGradient;
    sol.sigma_star_std_err = std::move(pgd.sigma_std_err);
    sol.ordering_preserved = check_ordering(sol.sigma, sol.sigma_star, sol.sigma_star_std_err);
    return sol;
}

SpectrumSolution solve_kink(std::span<const double> sigma, const KinkCurvature& kink,
                            const SphereSampler& sampler, const GenericOptions& opts) {
    require_nonnegative(sigma, "solve_kink");
    const std::size_t k = sigma.size();
    if (k == 0 || k != sampler.ambient_dim) {
        throw ContractError(
            "solve_kink: requires a square-or-tall gradient (spectrum length equal to "
            "the ambient dimension)");
    }
    for (double s : sigma) {
        if (s <= 0.0) throw ContractError("solve_kink: spectrum must be strictly positive");
    }

    const KinkCertificate cert = kink_certificate(sigma, kink, sampler, /*scale=*/1.0);
    if (cert.feasible) {
        SpectrumSolution sol;
        sol.sigma.assign(sigma.begin(), sigma.end());
        sol.sigma_star.assign(k, kink.r_tilde);
        sol.q_star = diag_rect(sol.sigma_star, k, sampler.ambient_dim);
        // With k == ambient_dim, ||Q zeta|| == r_tilde for every unit zeta,
        // so the expectation term is exact.
        CurvatureSpec spec = CurvatureSpec::kink(kink.a, kink.b, kink.r_tilde);
        sol.objective =
            -kink.r_tilde * kernels::sum(sigma.data(), k) + h_value(spec, kink.r_tilde);
        sol.stationarity_residual = cert.moment_residual;
        sol.iterations = cert.iterations;
        sol.path = SolvePath::KinkParametric;
        sol.sigma_star_std_err.assign(k, 0.0);
        sol.ordering_preserved = true;
        sol.kink_certificate_feasible = true;
        sol.kink_certificate_residual = cert.moment_residual;
        return sol;
    }

    GenericOptions fallback = opts;
    fallback.skip_growth_check = true;
    fallback.mode = ExpectationMode::MonteCarlo;
    fallback.accept_subgradient_stall = true;
    CurvatureSpec spec = CurvatureSpec::kink(kink.a, kink.b, kink.r_tilde);
    SpectrumSolution sol = solve_generic(sigma, spec, sampler, fallback);
    sol.kink_certificate_feasible = false;
    sol.kink_certificate_residual = cert.moment_residual;
    return sol;
}

SpectrumSolution solve(const ModelProblem& problem, const GenericOptions& opts) {
    const DenseMatrix& g = problem.gradient;
    if (!g.all_finite()) throw ContractError("solve: gradient must be finite");
    if (problem.sampler.ambient_dim != g.cols()) {
        throw ContractError("solve: sampler ambient_dim must equal gradient columns");
    }

    const std::size_t k = std::min(g.rows(), g.cols());
    const std::size_t n = g.cols();

    if (g.max_abs() == 0.0) {
        SpectrumSolution sol;
        sol.sigma.assign(k, 0.0);
        sol.sigma_star.assign(k, 0.0);
        sol.q_star = DenseMatrix(g.rows(), g.cols());
        sol.objective = 0.0;
        sol.path = has_closed_form_expectation(problem.curvature)
                       ? (problem.curvature.get_if<QuadraticCurvature>()
                              ? SolvePath::QuadraticClosedForm
                              : SolvePath::QuarticFixedPoint)
                       : SolvePath::GenericProjectedGradient;
        sol.sigma_star_std_err.assign(k, 0.0);
        return sol;
    }

    const SvdFactors f = svd_compact(g);
    SpectrumSolution sol;

    if (const auto* quad = problem.curvature.get_if<QuadraticCurvature>()) {
        const double dn = static_cast<double>(n);
        sol.sigma = f.sigma;
        sol.sigma_star.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            sol.sigma_star[i] = dn * f.sigma[i] / (2.0 * quad->c);
        }
        sol.objective = -kernels::dot(f.sigma.data(), sol.sigma_star.data(), k) +
                        closed_form_expectation(problem.curvature, sol.sigma_star, n);
        sol.stationarity_residual = 0.0;
        sol.iterations = 0;
        sol.path = SolvePath::QuadraticClosedForm;
        sol.sigma_star_std_err.assign(k, 0.0);
    } else if (const auto* quartic = problem.curvature.get_if<QuarticCurvature>()) {
        QuarticFixedPointResult fp = solve_quartic_fixed_point(f.sigma, n, quartic->c);
        sol.sigma = f.sigma;
        sol.sigma_star = std::move(fp.sigma_star);
        sol.objective = -kernels::dot(f.sigma.data(), sol.sigma_star.data(), k) +
                        quartic_expectation(sol.sigma_star, n, quartic->c);
        // First-order residual of the full objective implied by the cubic
        // system residual.
        const double dn = static_cast<double>(n);
        sol.stationarity_residual = fp.residual * 8.0 * quartic->c / (dn * (dn + 2.0));
        sol.iterations = fp.iterations;
        sol.path = SolvePath::QuarticFixedPoint;
        sol.sigma_star_std_err.assign(k, 0.0);
    } else if (const auto* kink = problem.curvature.get_if<KinkCurvature>()) {
        if (g.rows() < g.cols()) {
            throw ContractError("solve: kink curvature requires rows >= cols");
        }
        sol = solve_kink(f.sigma, *kink, problem.sampler, opts);
    } else {
        GenericOptions generic = opts;
        // Probe-derived tabulated curves may grade sub-quadratic without
        // being unsolvable; coercivity is checked at runtime by the
        // divergence guard instead of a priori.
        generic.skip_growth_check =
            generic.skip_growth_check ||
            problem.curvature.get_if<TabulatedCurvature>() != nullptr;
        sol = solve_generic(f.sigma, problem.curvature, problem.sampler, generic);
    }

    sol.sigma = f.sigma;
    sol.ordering_preserved = check_ordering(sol.sigma, sol.sigma_star, sol.sigma_star_std_err);
    SvdFactors star = f;
    star.sigma = sol.sigma_star;
    sol.q_star = svd_reconstruct(star);
    return sol;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_ratio(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    if (hi == 0.0) return 1.0;  // 0/0 convention
    if (lo == 0.0) return kInf;
    return hi / lo;
}

}  // namespace

HomogenizationReport homogenization_report(std::span<const double> sigma,
                                           std::span<const double> sigma_star, double tol,
                                           std::span<const double> std_err) {
    if (sigma.size() != sigma_star.size()) {
        throw ShapeError("homogenization_report: length mismatch");
    }
    if (!std_err.empty() && std_err.size() != sigma.size()) {
        throw ShapeError("homogenization_report: std_err length mismatch");
    }
    HomogenizationReport report;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        for (std::size_t j = i + 1; j < sigma.size(); ++j) {
            HomogenizationPair p;
            p.i = i;
            p.j = j;
            p.ratio_in = pair_ratio(sigma[i], sigma[j]);
            p.ratio_out = pair_ratio(sigma_star[i], sigma_star[j]);
            double slack_mult = 0.0;
            if (!std_err.empty()) {
                const double si = std::max(sigma_star[i], 1e-12);
                const double sj = std::max(sigma_star[j], 1e-12);
                slack_mult = std::min(1.0, 3.0 * (std_err[i] / si + std_err[j] / sj));
            }
            if (p.ratio_in == kInf) {
                p.pass = true;  // anything <= infinity
                p.margin = 0.0;
            } else if (p.ratio_out == kInf) {
                p.pass = false;
                p.margin = kInf;
            } else {
                const double bound = p.ratio_in * (1.0 + slack_mult) + tol;
                p.pass = p.ratio_out <= bound;
                p.margin = p.ratio_out - p.ratio_in;
            }
            report.all_pass = report.all_pass && p.pass;
            report.worst_margin = std::max(report.worst_margin, p.margin);
            report.pairs.push_back(p);
        }
    }
    return report;
}

}  // namespace isocurve
