#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isocurve/curvature.hpp"

namespace isocurve {

/// Uniform sampler on the unit sphere of R^ambient_dim. Samples are produced
/// in fixed blocks; block b of stream (seed, b) is a pure function of its
/// inputs, so the stream is bit-identical for a fixed seed and independent
/// of how many threads consume it.
struct SphereSampler {
    std::size_t ambient_dim = 0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    static constexpr std::size_t kBlockSamples = 4096;

    std::size_t block_count() const {
        return (sample_count + kBlockSamples - 1) / kBlockSamples;
    }
    std::size_t block_size(std::size_t block) const;

    // Writes block_size(block) unit vectors, sample-major, into out
    // (block_size * ambient_dim doubles).
    void generate_block(std::size_t block, double* out) const;
};

/// Squared coordinates of one sphere sample: nonnegative, summing to 1.
struct SquaredCoordWeights {
    std::vector<double> weights;
};
SquaredCoordWeights squared_coords_of(std::span<const double> zeta);

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Monte Carlo engine for expectations of functions of
/// y = sum_i sigma_tilde_i^2 * zeta_i^2 over the first k coordinates of an
/// ambient_dim-dimensional sphere sample. Squared coordinates are cached
/// column-major when k * sample_count is small enough; repeated calls then
/// reuse the identical samples (common random numbers).
class SphereExpectation {
public:
    SphereExpectation(const SphereSampler& sampler, std::size_t k);

    const SphereSampler& sampler() const { return sampler_; }
    std::size_t weight_count() const { return k_; }

    McEstimate expectation(std::span<const double> sigma_tilde,
                           const CurvatureSpec& spec) const;

    struct WeightedGrad {
        std::vector<double> grad;       // 2 E[q'(y) zeta_i^2] sigma_i
        std::vector<double> std_err;    // Monte Carlo std error per component
        std::vector<double> hess_diag;  // 2 E[q' z_i] + 4 sigma_i^2 E[q'' z_i^2]
    };
    WeightedGrad weighted_grad(std::span<const double> sigma_tilde,
                               const CurvatureSpec& spec) const;

private:
    SphereSampler sampler_;
    std::size_t k_ = 0;
    bool cached_ = false;
    std::vector<std::vector<double>> sq_cols_;  // k columns of squared coords

    void fill_y(std::span<const double> weights, std::vector<double>& y) const;
};

// E[zeta_i^2] = 1/n for the unit sphere in R^n.
double second_moment(std::size_t n);

// Exact E[c * ||Q zeta||^4] = c/(n(n+2)) * [ (sum s_i^2)^2 + 2 sum s_i^4 ]
// for Q with singular values s (length k <= n) against an n-sphere.
double quartic_expectation(std::span<const double> sigma_tilde, std::size_t n, double c);
std::vector<double> quartic_expectation_grad(std::span<const double> sigma_tilde,
                                             std::size_t n, double c);

// Closed-form E H(||Q zeta||) and gradient for variants that have one
// (quadratic, quartic); ContractError otherwise.
double closed_form_expectation(const CurvatureSpec& spec,
                               std::span<const double> sigma_tilde, std::size_t n);
std::vector<double> closed_form_gradient(const CurvatureSpec& spec,
                                         std::span<const double> sigma_tilde, std::size_t n);

McEstimate mc_expectation(std::span<const double> sigma_tilde, const CurvatureSpec& spec,
                          const SphereSampler& sampler);
std::vector<double> mc_weighted_grad(std::span<const double> sigma_tilde,
                                     const CurvatureSpec& spec, const SphereSampler& sampler);

}  // namespace isocurve
