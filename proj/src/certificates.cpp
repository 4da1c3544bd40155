#include "isocurve/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"
#include "isocurve/linalg.hpp"
#include "isocurve/rng.hpp"
#include "isocurve/threads.hpp"

namespace isocurve {

double alignment_gap(const DenseMatrix& g, const DenseMatrix& q) {
    require_same_shape(g, q, "alignment_gap");
    const std::vector<double> sg = singular_values(g);
    const std::vector<double> sq = singular_values(q);
    return kernels::dot(sg.data(), sq.data(), sg.size()) - trace_inner(q, g);
}

namespace {

// Moment products of one sphere sample, ordered diagonals first then the
// strict upper triangle row by row.
std::size_t product_count(std::size_t n) { return n * (n + 1) / 2; }

void fill_products(const double* zeta, std::size_t n, std::vector<double*>& cols,
                   std::size_t row) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) cols[c++][row] = zeta[i] * zeta[i];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) cols[c++][row] = zeta[i] * zeta[j];
    }
}

}  // namespace

KinkCertificate kink_certificate(std::span<const double> sigma, const KinkCurvature& kink,
                                 const SphereSampler& sampler, double scale,
                                 double threshold_override) {
    const std::size_t n = sigma.size();
    if (n == 0 || n != sampler.ambient_dim) {
        throw ContractError("kink_certificate: sigma length must equal sampler ambient_dim");
    }
    if (scale <= 0.0) throw ContractError("kink_certificate: scale must be > 0");
    for (double s : sigma) {
        if (!(s > 0.0)) throw ContractError("kink_certificate: sigma must be positive");
    }
    const std::size_t s_count = sampler.sample_count;
    const std::size_t d = product_count(n);
    if (s_count * d > (1ull << 28)) {
        throw ContractError("kink_certificate: problem too large to materialize moments");
    }

    // Column-major product matrix P (d columns of length S).
    std::vector<std::vector<double>> p(d, std::vector<double>(s_count));
    {
        std::vector<double*> col_ptrs(d);
        for (std::size_t c = 0; c < d; ++c) col_ptrs[c] = p[c].data();
        parallel_blocks(sampler.block_count(), [&](std::size_t block) {
            std::vector<double> raw(sampler.block_size(block) * n);
            sampler.generate_block(block, raw.data());
            const std::size_t start = block * SphereSampler::kBlockSamples;
            std::vector<double*> local = col_ptrs;
            for (std::size_t s = 0; s < sampler.block_size(block); ++s) {
                fill_products(raw.data() + s * n, n, local, start + s);
            }
        });
    }

    std::vector<double> target(d, 0.0);
    double mean_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        target[i] = sigma[i] / scale;
        mean_diag += target[i];
    }
    mean_diag /= static_cast<double>(n);

    const double inv_s = 1.0 / static_cast<double>(s_count);

    // Largest eigenvalue of (1/S^2) P^T P via power iteration; the step
    // safeguard below tolerates the estimate being a little loose.
    double lipschitz = 0.0;
    {
        CounterRng rng(0xC0FFEEull);
        std::vector<double> v(d);
        for (std::size_t c = 0; c < d; ++c) v[c] = rng.next_gaussian();
        std::vector<double> u(s_count), w(d);
        for (int it = 0; it < 60; ++it) {
            std::fill(u.begin(), u.end(), 0.0);
            for (std::size_t c = 0; c < d; ++c) {
                kernels::axpy(v[c] * inv_s, p[c].data(), u.data(), s_count);
            }
            for (std::size_t c = 0; c < d; ++c) {
                w[c] = inv_s * kernels::dot(p[c].data(), u.data(), s_count);
            }
            const double norm = std::sqrt(kernels::sq_norm(w.data(), d));
            if (norm == 0.0) break;
            lipschitz = norm;
            for (std::size_t c = 0; c < d; ++c) v[c] = w[c] / norm;
        }
        lipschitz = std::max(lipschitz * 1.1, 1e-30);
    }

    KinkCertificate out;
    const double start_eta =
        std::clamp(static_cast<double>(n) * mean_diag, kink.a, kink.b);
    out.eta.assign(s_count, start_eta);
    out.threshold = threshold_override >= 0.0
                        ? threshold_override
                        : 3.0 * std::sqrt(static_cast<double>(n) / static_cast<double>(s_count)) *
                              kink.b;

    std::vector<double> residual(d), grad(s_count), trial(s_count), trial_residual(d);
    auto compute_residual = [&](const std::vector<double>& eta, std::vector<double>& r) {
        for (std::size_t c = 0; c < d; ++c) {
            r[c] = inv_s * kernels::dot(p[c].data(), eta.data(), s_count) - target[c];
        }
    };
    auto objective_of = [&](const std::vector<double>& r) {
        return 0.5 * kernels::sq_norm(r.data(), d);
    };

    compute_residual(out.eta, residual);
    double objective = objective_of(residual);
    double step = 1.0 / lipschitz;
    const double stop_floor = std::max(1e-6, 1e-3 * out.threshold);
    constexpr std::size_t kCap = 5000;

    std::size_t it = 0;
    std::size_t stall = 0;
    for (; it < kCap; ++it) {
        double inf = 0.0;
        for (std::size_t c = 0; c < d; ++c) inf = std::max(inf, std::fabs(residual[c]));
        if (inf <= stop_floor) break;

        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            kernels::axpy(residual[c] * inv_s, p[c].data(), grad.data(), s_count);
        }

        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t s = 0; s < s_count; ++s) {
                trial[s] = std::clamp(out.eta[s] - step * grad[s], kink.a, kink.b);
            }
            compute_residual(trial, trial_residual);
            const double trial_obj = objective_of(trial_residual);
            if (trial_obj <= objective) {
                const double gain = objective - trial_obj;
                out.eta.swap(trial);
                residual.swap(trial_residual);
                objective = trial_obj;
                improved = true;
                stall = (gain <= 1e-16 * std::max(objective, 1e-30)) ? stall + 1 : 0;
                break;
            }
            step *= 0.5;
        }
        if (!improved || stall >= 3) break;
        step = std::min(step * 1.25, 4.0 / lipschitz);
    }

    double inf = 0.0;
    for (std::size_t c = 0; c < d; ++c) inf = std::max(inf, std::fabs(residual[c]));
    out.moment_residual = inf;
    out.iterations = it;
    out.feasible = inf <= out.threshold;
    return out;
}

double converse_gap(const DenseMatrix& g, const CurvatureSpec& spec,
                    std::span<const double> c_grid) {
    if (spec.get_if<KinkCurvature>() || spec.get_if<TabulatedCurvature>()) {
        throw ContractError("converse_gap: curvature must be differentiable everywhere");
    }
    if (c_grid.empty()) throw ContractError("converse_gap: empty grid");

    const std::vector<double> sigma = singular_values(g);
    const double sigma_max = sigma.front();
    const double sigma_min = sigma.back();
    if (sigma_max == 0.0 || sigma_min <= 1e-12 * sigma_max) {
        throw RankDeficiencyError("converse_gap: gradient must be full rank");
    }
    const double dn = static_cast<double>(g.cols());

    double best = std::numeric_limits<double>::infinity();
    for (double c : c_grid) {
        if (!(c > 0.0)) throw ContractError("converse_gap: grid radii must be > 0");
        const Subdifferential s = h_subdiff(spec, c);
        const double v = s.lo / dn;  // lo == hi for smooth variants
        double worst = 0.0;
        for (double sv : sigma) worst = std::max(worst, std::fabs(sv - v));
        best = std::min(best, worst / sigma_max);
    }
    return best;
}

}  // namespace isocurve
