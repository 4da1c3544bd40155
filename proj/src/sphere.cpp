#include "isocurve/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"
#include "isocurve/rng.hpp"
#include "isocurve/threads.hpp"

namespace isocurve {
namespace {

constexpr std::size_t kCacheLimitDoubles = 32u << 20;  // 256 MB of cached columns

struct BlockAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
};

// Combines per-block partials in block order with Neumaier compensation.
double combine(const std::vector<double>& parts) {
    double total = 0.0;
    double comp = 0.0;
    for (double p : parts) {
        const double t = total + p;
        if (std::fabs(total) >= std::fabs(p)) {
            comp += (total - t) + p;
        } else {
            comp += (p - t) + total;
        }
        total = t;
    }
    return total + comp;
}

}  // namespace

std::size_t SphereSampler::block_size(std::size_t block) const {
    const std::size_t start = block * kBlockSamples;
    return std::min(kBlockSamples, sample_count - start);
}

void SphereSampler::generate_block(std::size_t block, double* out) const {
    if (ambient_dim == 0) throw ContractError("SphereSampler: ambient_dim must be >= 1");
    const std::size_t count = block_size(block);
    CounterRng rng(seed, block);
    for (std::size_t s = 0; s < count; ++s) {
        double* zeta = out + s * ambient_dim;
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (std::size_t i = 0; i < ambient_dim; ++i) {
                zeta[i] = rng.next_gaussian();
                norm_sq += zeta[i] * zeta[i];
            }
        } while (norm_sq < 1e-280);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < ambient_dim; ++i) zeta[i] *= inv;
    }
}

SquaredCoordWeights squared_coords_of(std::span<const double> zeta) {
    SquaredCoordWeights w;
    w.weights.resize(zeta.size());
    for (std::size_t i = 0; i < zeta.size(); ++i) w.weights[i] = zeta[i] * zeta[i];
    return w;
}

SphereExpectation::SphereExpectation(const SphereSampler& sampler, std::size_t k)
    : sampler_(sampler), k_(k) {
    if (k_ == 0 || k_ > sampler_.ambient_dim) {
        throw ContractError("SphereExpectation: weight count must be in [1, ambient_dim]");
    }
    if (sampler_.sample_count == 0) {
        throw ContractError("SphereExpectation: sampler needs at least one sample");
    }
    cached_ = k_ * sampler_.sample_count <= kCacheLimitDoubles;
    if (!cached_) return;

    sq_cols_.assign(k_, std::vector<double>(sampler_.sample_count));
    const std::size_t n = sampler_.ambient_dim;
    parallel_blocks(sampler_.block_count(), [&](std::size_t block) {
        std::vector<double> raw(sampler_.block_size(block) * n);
        sampler_.generate_block(block, raw.data());
        const std::size_t start = block * SphereSampler::kBlockSamples;
        for (std::size_t s = 0; s < sampler_.block_size(block); ++s) {
            const double* zeta = raw.data() + s * n;
            for (std::size_t i = 0; i < k_; ++i) {
                sq_cols_[i][start + s] = zeta[i] * zeta[i];
            }
        }
    });
}

void SphereExpectation::fill_y(std::span<const double> weights, std::vector<double>& y) const {
    y.assign(sampler_.sample_count, 0.0);
    for (std::size_t i = 0; i < k_; ++i) {
        kernels::axpy(weights[i], sq_cols_[i].data(), y.data(), y.size());
    }
}

McEstimate SphereExpectation::expectation(std::span<const double> sigma_tilde,
                                          const CurvatureSpec& spec) const {
    if (sigma_tilde.size() != k_) {
        throw ShapeError("SphereExpectation: sigma_tilde length mismatch");
    }
    std::vector<double> weights(k_);
    for (std::size_t i = 0; i < k_; ++i) weights[i] = sigma_tilde[i] * sigma_tilde[i];

    const std::size_t n_blocks = sampler_.block_count();
    std::vector<double> block_sum(n_blocks, 0.0), block_sum_sq(n_blocks, 0.0);

    if (cached_) {
        std::vector<double> y;
        fill_y(weights, y);
        parallel_blocks(n_blocks, [&](std::size_t block) {
            const std::size_t start = block * SphereSampler::kBlockSamples;
            const std::size_t count = sampler_.block_size(block);
            std::vector<double> h(count);
            for (std::size_t s = 0; s < count; ++s) h[s] = q_value(spec, y[start + s]);
            block_sum[block] = kernels::sum(h.data(), count);
            block_sum_sq[block] = kernels::sq_norm(h.data(), count);
        });
    } else {
        const std::size_t n = sampler_.ambient_dim;
        parallel_blocks(n_blocks, [&](std::size_t block) {
            const std::size_t count = sampler_.block_size(block);
            std::vector<double> raw(count * n);
            sampler_.generate_block(block, raw.data());
            std::vector<double> h(count);
            for (std::size_t s = 0; s < count; ++s) {
                const double* zeta = raw.data() + s * n;
                double y = 0.0;
                for (std::size_t i = 0; i < k_; ++i) y += weights[i] * zeta[i] * zeta[i];
                h[s] = q_value(spec, y);
            }
            block_sum[block] = kernels::sum(h.data(), count);
            block_sum_sq[block] = kernels::sq_norm(h.data(), count);
        });
    }

    const double s_count = static_cast<double>(sampler_.sample_count);
    McEstimate out;
    out.mean = combine(block_sum) / s_count;
    const double total_sq = combine(block_sum_sq);
    const double var = std::max(0.0, (total_sq - s_count * out.mean * out.mean) /
                                         std::max(1.0, s_count - 1.0));
    out.std_err = std::sqrt(var / s_count);
    return out;
}

SphereExpectation::WeightedGrad SphereExpectation::weighted_grad(
    std::span<const double> sigma_tilde, const CurvatureSpec& spec) const {
    if (sigma_tilde.size() != k_) {
        throw ShapeError("SphereExpectation: sigma_tilde length mismatch");
    }
    std::vector<double> weights(k_);
    for (std::size_t i = 0; i < k_; ++i) weights[i] = sigma_tilde[i] * sigma_tilde[i];

    const std::size_t n_blocks = sampler_.block_count();
    const double s_count = static_cast<double>(sampler_.sample_count);

    // Per block and component: sums of q' z_i, (q' z_i)^2, q'' z_i^2.
    std::vector<std::vector<double>> bs(k_, std::vector<double>(n_blocks, 0.0));
    std::vector<std::vector<double>> bs2(k_, std::vector<double>(n_blocks, 0.0));
    std::vector<std::vector<double>> bh(k_, std::vector<double>(n_blocks, 0.0));

    if (cached_) {
        std::vector<double> y;
        fill_y(weights, y);
        parallel_blocks(n_blocks, [&](std::size_t block) {
            const std::size_t start = block * SphereSampler::kBlockSamples;
            const std::size_t count = sampler_.block_size(block);
            std::vector<double> w(count), w2(count), tmp(count);
            for (std::size_t s = 0; s < count; ++s) {
                w[s] = q_deriv(spec, y[start + s]);
                w2[s] = q_second_deriv(spec, y[start + s]);
            }
            for (std::size_t i = 0; i < k_; ++i) {
                const double* col = sq_cols_[i].data() + start;
                bs[i][block] = kernels::dot(w.data(), col, count);
                kernels::mul(w.data(), col, tmp.data(), count);
                bs2[i][block] = kernels::sq_norm(tmp.data(), count);
                kernels::mul(col, col, tmp.data(), count);
                bh[i][block] = kernels::dot(w2.data(), tmp.data(), count);
            }
        });
    } else {
        const std::size_t n = sampler_.ambient_dim;
        parallel_blocks(n_blocks, [&](std::size_t block) {
            const std::size_t count = sampler_.block_size(block);
            std::vector<double> raw(count * n);
            sampler_.generate_block(block, raw.data());
            std::vector<double> acc(k_, 0.0), acc2(k_, 0.0), acch(k_, 0.0);
            for (std::size_t s = 0; s < count; ++s) {
                const double* zeta = raw.data() + s * n;
                double y = 0.0;
                for (std::size_t i = 0; i < k_; ++i) y += weights[i] * zeta[i] * zeta[i];
                const double w = q_deriv(spec, y);
                const double w2 = q_second_deriv(spec, y);
                for (std::size_t i = 0; i < k_; ++i) {
                    const double z = zeta[i] * zeta[i];
                    acc[i] += w * z;
                    acc2[i] += w * z * w * z;
                    acch[i] += w2 * z * z;
                }
            }
            for (std::size_t i = 0; i < k_; ++i) {
                bs[i][block] = acc[i];
                bs2[i][block] = acc2[i];
                bh[i][block] = acch[i];
            }
        });
    }

    WeightedGrad out;
    out.grad.resize(k_);
    out.std_err.resize(k_);
    out.hess_diag.resize(k_);
    for (std::size_t i = 0; i < k_; ++i) {
        const double mean = combine(bs[i]) / s_count;
        const double mean_sq = combine(bs2[i]) / s_count;
        const double var = std::max(0.0, (mean_sq - mean * mean) * s_count /
                                             std::max(1.0, s_count - 1.0) / s_count);
        out.grad[i] = 2.0 * mean * sigma_tilde[i];
        out.std_err[i] = 2.0 * std::fabs(sigma_tilde[i]) * std::sqrt(var);
        out.hess_diag[i] = 2.0 * mean + 4.0 * weights[i] * (combine(bh[i]) / s_count);
    }
    return out;
}

double second_moment(std::size_t n) {
    if (n == 0) throw ContractError("second_moment: dimension must be >= 1");
    return 1.0 / static_cast<double>(n);
}

double quartic_expectation(std::span<const double> sigma_tilde, std::size_t n, double c) {
    if (sigma_tilde.size() > n) {
        throw ContractError("quartic_expectation: weight count exceeds ambient dimension");
    }
    if (c <= 0.0) throw ContractError("quartic_expectation: c must be > 0");
    double sum_sq = 0.0;
    double sum_quart = 0.0;
    for (double s : sigma_tilde) {
        sum_sq += s * s;
        sum_quart += s * s * s * s;
    }
    const double dn = static_cast<double>(n);
    return c / (dn * (dn + 2.0)) * (sum_sq * sum_sq + 2.0 * sum_quart);
}

std::vector<double> quartic_expectation_grad(std::span<const double> sigma_tilde,
                                             std::size_t n, double c) {
    if (sigma_tilde.size() > n) {
        throw ContractError("quartic_expectation_grad: weight count exceeds ambient dimension");
    }
    double sum_sq = 0.0;
    for (double s : sigma_tilde) sum_sq += s * s;
    const double dn = static_cast<double>(n);
    const double coef = 4.0 * c / (dn * (dn + 2.0));
    std::vector<double> grad(sigma_tilde.size());
    for (std::size_t i = 0; i < sigma_tilde.size(); ++i) {
        const double s = sigma_tilde[i];
        grad[i] = coef * (s * sum_sq + 2.0 * s * s * s);
    }
    return grad;
}

double closed_form_expectation(const CurvatureSpec& spec,
                               std::span<const double> sigma_tilde, std::size_t n) {
    if (const auto* q = spec.get_if<QuadraticCurvature>()) {
        double sum_sq = 0.0;
        for (double s : sigma_tilde) sum_sq += s * s;
        return q->c * sum_sq / static_cast<double>(n);
    }
    if (const auto* q = spec.get_if<QuarticCurvature>()) {
        return quartic_expectation(sigma_tilde, n, q->c);
    }
    throw ContractError("closed_form_expectation: variant has no closed form");
}

std::vector<double> closed_form_gradient(const CurvatureSpec& spec,
                                         std::span<const double> sigma_tilde, std::size_t n) {
    if (const auto* q = spec.get_if<QuadraticCurvature>()) {
        std::vector<double> grad(sigma_tilde.size());
        for (std::size_t i = 0; i < sigma_tilde.size(); ++i) {
            grad[i] = 2.0 * q->c * sigma_tilde[i] / static_cast<double>(n);
        }
        return grad;
    }
    if (const auto* q = spec.get_if<QuarticCurvature>()) {
        return quartic_expectation_grad(sigma_tilde, n, q->c);
    }
    throw ContractError("closed_form_gradient: variant has no closed form");
}

McEstimate mc_expectation(std::span<const double> sigma_tilde, const CurvatureSpec& spec,
                          const SphereSampler& sampler) {
    SphereExpectation engine(sampler, sigma_tilde.size());
    return engine.expectation(sigma_tilde, spec);
}

std::vector<double> mc_weighted_grad(std::span<const double> sigma_tilde,
                                     const CurvatureSpec& spec,
                                     const SphereSampler& sampler) {
    SphereExpectation engine(sampler, sigma_tilde.size());
    return engine.weighted_grad(sigma_tilde, spec).grad;
}

}  // namespace isocurve
