#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isocurve/matrix.hpp"

namespace isocurve {

// Desk-scale curvature probing: perturb one layer's output along random
// directions rescaled to a fixed radius, collect the Taylor remainder
// L(z + d) - L(z) - <grad L(z), d>, and fit the growth exponent of the
// remainder mean against the radius on a log-log window.

struct ProbeConfig {
    std::vector<double> radii;  // ascending, positive
    std::size_t direction_count = 100;
    std::size_t input_count = 300;
    std::uint64_t seed = 0;
    double fit_lo = 0.0;  // fit window [fit_lo, fit_hi] in radius units
    double fit_hi = 0.0;

    // 24 log-spaced radii in [10^-1.5, 10^1]; fit window starts at 10^0.5.
    static ProbeConfig defaults();
};

struct RadiusStats {
    double radius = 0.0;
    double mean_remainder = 0.0;
    double mean_over_r2 = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;  // quantiles of remainder / r^2
    std::size_t n_samples = 0;
};

struct ProbeReport {
    std::vector<RadiusStats> per_radius;
    double fitted_exponent = 0.0;         // slope of log mean remainder vs log r
    double fit_r_squared = 0.0;
    double fitted_exponent_median = 0.0;  // same fit on the median curve
    bool nonpositive_window_means = false;
    std::size_t sample_count = 0;  // per radius
};

/// Loss oracles with analytic gradients. `value`/`gradient` act on the
/// probed layer's output vector z; the oracle may condition on which input
/// produced z (the MLP's cross-entropy label does).
class OracleLoss {
public:
    enum class Kind { Quadratic, PurePower, TinyMlp };
    enum class Activation { Tanh, Softplus, SquaredRelu };

    // L(z) = 0.5 z^T M z with a seeded PSD M; probed through the identity
    // layer, so z = u.
    static OracleLoss quadratic(std::size_t dim, std::uint64_t seed);
    // L(z) = sum_i |z_i|^p, p >= 2; probed through the zero layer, so the
    // base point is z = 0 and the remainder is exactly sum_i d_i^p terms.
    static OracleLoss pure_power(double p, std::size_t dim);
    // 8 -> 16 -> 16 -> 10 network with softmax cross-entropy against a
    // seeded label per input; the probed layer is the first weight matrix.
    static OracleLoss tiny_mlp(std::uint64_t seed,
                               Activation act = Activation::SquaredRelu);

    Kind kind() const { return kind_; }
    std::size_t probe_dim() const { return probe_dim_; }   // length of z
    std::size_t input_dim() const { return input_dim_; }   // length of u

    double value(std::span<const double> z, std::size_t input_index) const;
    void gradient(std::span<const double> z, std::size_t input_index,
                  std::span<double> out) const;

    const DenseMatrix& default_layer() const { return layer_; }
    std::vector<std::vector<double>> make_inputs(std::size_t count,
                                                 std::uint64_t seed) const;

private:
    OracleLoss() = default;

    Kind kind_ = Kind::Quadratic;
    std::size_t probe_dim_ = 0;
    std::size_t input_dim_ = 0;
    DenseMatrix layer_;

    DenseMatrix psd_;   // quadratic
    double power_ = 0;  // pure power

    Activation act_ = Activation::SquaredRelu;
    DenseMatrix w2_, w3_;         // MLP upper layers
    std::uint64_t label_seed_ = 0;
};

ProbeReport probe(const OracleLoss& oracle, const DenseMatrix& layer,
                  const std::vector<std::vector<double>>& inputs, const ProbeConfig& config);

// Same pipeline with caller-supplied direction matrices (exposes the
// degenerate-direction error path directly).
ProbeReport probe_with_directions(const OracleLoss& oracle, const DenseMatrix& layer,
                                  const std::vector<std::vector<double>>& inputs,
                                  const std::vector<DenseMatrix>& directions,
                                  const ProbeConfig& config);

struct ExponentFit {
    double exponent = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares of log(mean) on log(radius) over [lo, hi].
// Requires >= 3 radii and positive means inside the window.
ExponentFit fit_exponent(std::span<const double> radii, std::span<const double> means,
                         double lo, double hi);

}  // namespace isocurve
