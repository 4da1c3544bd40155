#include "isocurve/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "isocurve/errors.hpp"
#include "isocurve/kernels.hpp"
#include "isocurve/rng.hpp"

namespace isocurve {
namespace {

constexpr std::size_t kMlpIn = 8;
constexpr std::size_t kMlpHidden = 16;
constexpr std::size_t kMlpClasses = 10;

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, CounterRng& rng,
                            double scale) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.next_gaussian();
    }
    return m;
}

double activate(OracleLoss::Activation act, double x) {
    switch (act) {
        case OracleLoss::Activation::Tanh:
            return std::tanh(x);
        case OracleLoss::Activation::Softplus:
            return x > 30.0 ? x : std::log1p(std::exp(x));
        case OracleLoss::Activation::SquaredRelu: {
            const double r = std::max(0.0, x);
            return r * r;
        }
    }
    return x;
}

double activate_deriv(OracleLoss::Activation act, double x) {
    switch (act) {
        case OracleLoss::Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case OracleLoss::Activation::Softplus:
            return 1.0 / (1.0 + std::exp(-x));
        case OracleLoss::Activation::SquaredRelu:
            return 2.0 * std::max(0.0, x);
    }
    return 1.0;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ProbeConfig ProbeConfig::defaults() {
    ProbeConfig cfg;
    const int count = 24;
    for (int i = 0; i < count; ++i) {
        const double log_r = -1.5 + 2.5 * static_cast<double>(i) / (count - 1);
        cfg.radii.push_back(std::pow(10.0, log_r));
    }
    cfg.fit_lo = std::pow(10.0, 0.5);
    cfg.fit_hi = cfg.radii.back();
    return cfg;
}

OracleLoss OracleLoss::quadratic(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ContractError("quadratic oracle: dim must be >= 1");
    OracleLoss o;
    o.kind_ = Kind::Quadratic;
    o.probe_dim_ = dim;
    o.input_dim_ = dim;
    o.layer_ = DenseMatrix::identity(dim);
    CounterRng rng(seed, 17);
    DenseMatrix a = gaussian_matrix(dim, dim, rng, 1.0);
    o.psd_ = matmul_tn(a, a);
    kernels::scale(1.0 / static_cast<double>(dim), o.psd_.data(), o.psd_.size());
    return o;
}

OracleLoss OracleLoss::pure_power(double p, std::size_t dim) {
    if (dim == 0) throw ContractError("pure_power oracle: dim must be >= 1");
    if (p < 2.0) throw ContractError("pure_power oracle: exponent must be >= 2");
    OracleLoss o;
    o.kind_ = Kind::PurePower;
    o.probe_dim_ = dim;
    o.input_dim_ = dim;
    o.layer_ = DenseMatrix(dim, dim);  // zero layer: base point z = 0
    o.power_ = p;
    return o;
}

OracleLoss OracleLoss::tiny_mlp(std::uint64_t seed, Activation act) {
    OracleLoss o;
    o.kind_ = Kind::TinyMlp;
    o.probe_dim_ = kMlpHidden;
    o.input_dim_ = kMlpIn;
    o.act_ = act;
    o.label_seed_ = seed;
    CounterRng rng(seed, 23);
    o.layer_ = gaussian_matrix(kMlpHidden, kMlpIn, rng, 1.0 / std::sqrt(double(kMlpIn)));
    o.w2_ = gaussian_matrix(kMlpHidden, kMlpHidden, rng, 1.0 / std::sqrt(double(kMlpHidden)));
    o.w3_ = gaussian_matrix(kMlpClasses, kMlpHidden, rng, 1.0 / std::sqrt(double(kMlpHidden)));
    return o;
}

double OracleLoss::value(std::span<const double> z, std::size_t input_index) const {
    if (z.size() != probe_dim_) throw ShapeError("oracle value: bad z length");
    switch (kind_) {
        case Kind::Quadratic: {
            std::vector<double> mz(probe_dim_, 0.0);
            for (std::size_t i = 0; i < probe_dim_; ++i) {
                mz[i] = kernels::dot(psd_.row(i), z.data(), probe_dim_);
            }
            return 0.5 * kernels::dot(z.data(), mz.data(), probe_dim_);
        }
        case Kind::PurePower: {
            double total = 0.0;
            for (double v : z) total += std::pow(std::fabs(v), power_);
            return total;
        }
        case Kind::TinyMlp: {
            std::vector<double> a1(kMlpHidden), h2(kMlpHidden), a2(kMlpHidden),
                logits(kMlpClasses);
            for (std::size_t i = 0; i < kMlpHidden; ++i) a1[i] = activate(act_, z[i]);
            for (std::size_t i = 0; i < kMlpHidden; ++i) {
                h2[i] = kernels::dot(w2_.row(i), a1.data(), kMlpHidden);
                a2[i] = activate(act_, h2[i]);
            }
            for (std::size_t i = 0; i < kMlpClasses; ++i) {
                logits[i] = kernels::dot(w3_.row(i), a2.data(), kMlpHidden);
            }
            const std::size_t label =
                CounterRng(label_seed_, 7919 + input_index).next_u64() % kMlpClasses;
            const double max_logit = *std::max_element(logits.begin(), logits.end());
            double lse = 0.0;
            for (double l : logits) lse += std::exp(l - max_logit);
            return max_logit + std::log(lse) - logits[label];
        }
    }
    return 0.0;
}

void OracleLoss::gradient(std::span<const double> z, std::size_t input_index,
                          std::span<double> out) const {
    if (z.size() != probe_dim_ || out.size() != probe_dim_) {
        throw ShapeError("oracle gradient: bad length");
    }
    switch (kind_) {
        case Kind::Quadratic: {
            for (std::size_t i = 0; i < probe_dim_; ++i) {
                out[i] = kernels::dot(psd_.row(i), z.data(), probe_dim_);
            }
            return;
        }
        case Kind::PurePower: {
            for (std::size_t i = 0; i < probe_dim_; ++i) {
                const double a = std::fabs(z[i]);
                out[i] = (z[i] >= 0.0 ? 1.0 : -1.0) * power_ * std::pow(a, power_ - 1.0);
            }
            return;
        }
        case Kind::TinyMlp: {
            std::vector<double> a1(kMlpHidden), h2(kMlpHidden), a2(kMlpHidden),
                logits(kMlpClasses), p(kMlpClasses);
            for (std::size_t i = 0; i < kMlpHidden; ++i) a1[i] = activate(act_, z[i]);
            for (std::size_t i = 0; i < kMlpHidden; ++i) {
                h2[i] = kernels::dot(w2_.row(i), a1.data(), kMlpHidden);
                a2[i] = activate(act_, h2[i]);
            }
            for (std::size_t i = 0; i < kMlpClasses; ++i) {
                logits[i] = kernels::dot(w3_.row(i), a2.data(), kMlpHidden);
            }
            const std::size_t label =
                CounterRng(label_seed_, 7919 + input_index).next_u64() % kMlpClasses;
            const double max_logit = *std::max_element(logits.begin(), logits.end());
            double lse = 0.0;
            for (std::size_t i = 0; i < kMlpClasses; ++i) {
                p[i] = std::exp(logits[i] - max_logit);
                lse += p[i];
            }
            for (std::size_t i = 0; i < kMlpClasses; ++i) p[i] /= lse;
            p[label] -= 1.0;

            std::vector<double> da2(kMlpHidden, 0.0), da1(kMlpHidden, 0.0);
            for (std::size_t c = 0; c < kMlpClasses; ++c) {
                kernels::axpy(p[c], w3_.row(c), da2.data(), kMlpHidden);
            }
            for (std::size_t i = 0; i < kMlpHidden; ++i) da2[i] *= activate_deriv(act_, h2[i]);
            for (std::size_t i = 0; i < kMlpHidden; ++i) {
                kernels::axpy(da2[i], w2_.row(i), da1.data(), kMlpHidden);
            }
            for (std::size_t i = 0; i < kMlpHidden; ++i) {
                out[i] = da1[i] * activate_deriv(act_, z[i]);
            }
            return;
        }
    }
}

std::vector<std::vector<double>> OracleLoss::make_inputs(std::size_t count,
                                                         std::uint64_t seed) const {
    std::vector<std::vector<double>> inputs(count, std::vector<double>(input_dim_));
    for (std::size_t i = 0; i < count; ++i) {
        CounterRng rng(seed, 50000 + i);
        for (std::size_t j = 0; j < input_dim_; ++j) inputs[i][j] = rng.next_gaussian();
    }
    return inputs;
}

ProbeReport probe_with_directions(const OracleLoss& oracle, const DenseMatrix& layer,
                                  const std::vector<std::vector<double>>& inputs,
                                  const std::vector<DenseMatrix>& directions,
                                  const ProbeConfig& config) {
    if (layer.rows() != oracle.probe_dim() || layer.cols() != oracle.input_dim()) {
        throw ShapeError("probe: layer shape does not match the oracle");
    }
    if (inputs.empty() || directions.empty()) {
        throw ContractError("probe: need at least one input and one direction");
    }
    if (config.radii.size() < 2) throw ContractError("probe: need at least two radii");
    for (std::size_t i = 0; i < config.radii.size(); ++i) {
        if (config.radii[i] <= 0.0 || (i > 0 && config.radii[i] <= config.radii[i - 1])) {
            throw ContractError("probe: radii must be ascending and positive");
        }
    }
    if (config.fit_lo < config.radii.front() * (1.0 - 1e-9) ||
        config.fit_hi > config.radii.back() * (1.0 + 1e-9) || config.fit_lo >= config.fit_hi) {
        throw ContractError("probe: fit window must lie within the radii range");
    }

    const std::size_t dim = oracle.probe_dim();
    const std::size_t n_inputs = inputs.size();
    const std::size_t n_dirs = directions.size();
    const std::size_t n_samples = n_inputs * n_dirs;

    // Radius-independent per-(direction, input) state: base value/gradient
    // and the unit perturbation direction of the layer output.
    std::vector<std::vector<double>> base_z(n_inputs, std::vector<double>(dim));
    std::vector<double> base_value(n_inputs);
    std::vector<std::vector<double>> base_grad(n_inputs, std::vector<double>(dim));
    for (std::size_t i = 0; i < n_inputs; ++i) {
        if (inputs[i].size() != oracle.input_dim()) {
            throw ShapeError("probe: input length does not match the oracle");
        }
        if (kernels::sq_norm(inputs[i].data(), inputs[i].size()) == 0.0) {
            throw ContractError("probe: inputs must be nonzero");
        }
        for (std::size_t r = 0; r < dim; ++r) {
            base_z[i][r] = kernels::dot(layer.row(r), inputs[i].data(), layer.cols());
        }
        base_value[i] = oracle.value(base_z[i], i);
        oracle.gradient(base_z[i], i, base_grad[i]);
    }

    std::vector<std::vector<double>> unit_dirs(n_samples, std::vector<double>(dim));
    std::vector<double> grad_dot(n_samples);
    for (std::size_t d = 0; d < n_dirs; ++d) {
        if (directions[d].rows() != layer.rows() || directions[d].cols() != layer.cols()) {
            throw ShapeError("probe: direction shape does not match the layer");
        }
        for (std::size_t i = 0; i < n_inputs; ++i) {
            const std::size_t s = d * n_inputs + i;
            for (std::size_t r = 0; r < dim; ++r) {
                unit_dirs[s][r] =
                    kernels::dot(directions[d].row(r), inputs[i].data(), layer.cols());
            }
            const double norm = std::sqrt(kernels::sq_norm(unit_dirs[s].data(), dim));
            if (norm == 0.0) {
                throw ContractError("probe: degenerate direction (delta W u = 0) at direction " +
                                    std::to_string(d) + ", input " + std::to_string(i));
            }
            kernels::scale(1.0 / norm, unit_dirs[s].data(), dim);
            grad_dot[s] = kernels::dot(base_grad[i].data(), unit_dirs[s].data(), dim);
        }
    }

    ProbeReport report;
    report.sample_count = n_samples;
    report.per_radius.resize(config.radii.size());

    std::vector<double> z(dim), over_r2(n_samples), sorted(n_samples);
    for (std::size_t ri = 0; ri < config.radii.size(); ++ri) {
        const double r = config.radii[ri];
        for (std::size_t d = 0; d < n_dirs; ++d) {
            for (std::size_t i = 0; i < n_inputs; ++i) {
                const std::size_t s = d * n_inputs + i;
                for (std::size_t c = 0; c < dim; ++c) {
                    z[c] = base_z[i][c] + r * unit_dirs[s][c];
                }
                const double remainder = oracle.value(z, i) - base_value[i] - r * grad_dot[s];
                over_r2[s] = remainder / (r * r);
            }
        }
        RadiusStats& stats = report.per_radius[ri];
        stats.radius = r;
        stats.n_samples = n_samples;
        stats.mean_over_r2 = kernels::sum(over_r2.data(), n_samples) / double(n_samples);
        stats.mean_remainder = stats.mean_over_r2 * r * r;
        sorted = over_r2;
        std::sort(sorted.begin(), sorted.end());
        stats.q10 = quantile_sorted(sorted, 0.10);
        stats.q50 = quantile_sorted(sorted, 0.50);
        stats.q90 = quantile_sorted(sorted, 0.90);
    }

    std::vector<double> radii(config.radii.begin(), config.radii.end());
    std::vector<double> means, medians;
    for (const RadiusStats& s : report.per_radius) {
        means.push_back(s.mean_remainder);
        medians.push_back(s.q50 * s.radius * s.radius);
    }
    try {
        ExponentFit fit = fit_exponent(radii, means, config.fit_lo, config.fit_hi);
        report.fitted_exponent = fit.exponent;
        report.fit_r_squared = fit.r_squared;
    } catch (const ContractError&) {
        report.nonpositive_window_means = true;
        report.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
        report.fit_r_squared = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        report.fitted_exponent_median =
            fit_exponent(radii, medians, config.fit_lo, config.fit_hi).exponent;
    } catch (const ContractError&) {
        report.fitted_exponent_median = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

ProbeReport probe(const OracleLoss& oracle, const DenseMatrix& layer,
                  const std::vector<std::vector<double>>& inputs, const ProbeConfig& config) {
    if (config.direction_count == 0) throw ContractError("probe: direction_count must be >= 1");
    std::vector<DenseMatrix> directions;
    directions.reserve(config.direction_count);
    for (std::size_t d = 0; d < config.direction_count; ++d) {
        CounterRng rng(config.seed, 90000 + d);
        directions.push_back(gaussian_matrix(layer.rows(), layer.cols(), rng, 1.0));
    }
    return probe_with_directions(oracle, layer, inputs, directions, config);
}

ExponentFit fit_exponent(std::span<const double> radii, std::span<const double> means,
                         double lo, double hi) {
    if (radii.size() != means.size()) throw ShapeError("fit_exponent: length mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] < lo * (1.0 - 1e-12) || radii[i] > hi * (1.0 + 1e-12)) continue;
        if (!(means[i] > 0.0)) {
            throw ContractError("fit_exponent: nonpositive mean inside the fit window");
        }
        xs.push_back(std::log(radii[i]));
        ys.push_back(std::log(means[i]));
    }
    if (xs.size() < 3) {
        throw ContractError("fit_exponent: need at least 3 radii inside the fit window");
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    ExponentFit fit;
    fit.exponent = sxy / sxx;
    fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace isocurve
