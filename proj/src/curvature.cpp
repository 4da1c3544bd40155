#include "isocurve/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "isocurve/errors.hpp"

namespace isocurve {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ParseError(std::string("curvature spec: ") + what);
}

// Pool-adjacent-violators projection of slopes onto the non-decreasing cone,
// weighted by interval lengths.
std::vector<double> isotonic_slopes(const std::vector<double>& slopes,
                                    const std::vector<double>& weights) {
    struct Pool {
        double value;
        double weight;
        std::size_t count;
    };
    std::vector<Pool> pools;
    pools.reserve(slopes.size());
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        pools.push_back({slopes[i], weights[i], 1});
        while (pools.size() >= 2 && pools[pools.size() - 2].value > pools.back().value) {
            const Pool b = pools.back();
            pools.pop_back();
            Pool& a = pools.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
            a.count += b.count;
        }
    }
    std::vector<double> out;
    out.reserve(slopes.size());
    for (const Pool& p : pools) {
        out.insert(out.end(), p.count, p.value);
    }
    return out;
}


// Below the first knot the curve extends with the first slope, floored at
// zero (the minimal convex non-negative extension); above the last knot the
// last slope extends.
double tabulated_zero_crossing(const TabulatedCurvature& t) {
    if (t.slopes.front() <= 0.0) return 0.0;
    return t.radii.front() - t.values.front() / t.slopes.front();
}

double tabulated_value(const TabulatedCurvature& t, double r) {
    const auto& radii = t.radii;
    if (r <= radii.front()) {
        return std::max(0.0, t.values.front() + t.slopes.front() * (r - radii.front()));
    }
    auto it = std::upper_bound(radii.begin(), radii.end(), r);
    const std::size_t hi = std::min<std::size_t>(it - radii.begin(), radii.size() - 1);
    if (r > radii.back()) {
        return t.values.back() + t.slopes.back() * (r - radii.back());
    }
    const std::size_t seg = hi - 1;
    return t.values[seg] + t.slopes[seg] * (r - radii[seg]);
}

Subdifferential tabulated_subdiff(const TabulatedCurvature& t, double r) {
    const auto& radii = t.radii;
    if (r < radii.front()) {
        const double crossing = tabulated_zero_crossing(t);
        if (r < crossing) return {0.0, 0.0};
        if (r == crossing && crossing > 0.0) return {0.0, t.slopes.front()};
        return {t.slopes.front(), t.slopes.front()};
    }
    if (r > radii.back()) return {t.slopes.back(), t.slopes.back()};
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (r == radii[i]) {
            const double lo = (i == 0) ? t.slopes.front() : t.slopes[i - 1];
            const double hi = (i + 1 == radii.size()) ? t.slopes.back() : t.slopes[i];
            return {lo, hi};
        }
    }
    auto it = std::upper_bound(radii.begin(), radii.end(), r);
    const std::size_t seg = static_cast<std::size_t>(it - radii.begin()) - 1;
    return {t.slopes[seg], t.slopes[seg]};
}

}  // namespace

CurvatureSpec CurvatureSpec::quadratic(double c) {
    require(c > 0.0, "quadratic coefficient must be > 0");
    return CurvatureSpec(QuadraticCurvature{c});
}

CurvatureSpec CurvatureSpec::power(double c, double alpha) {
    require(c > 0.0, "power coefficient must be > 0");
    require(alpha >= 0.0, "power exponent offset alpha must be >= 0");
    return CurvatureSpec(PowerCurvature{c, alpha});
}

CurvatureSpec CurvatureSpec::quartic(double c) {
    require(c > 0.0, "quartic coefficient must be > 0");
    return CurvatureSpec(QuarticCurvature{c});
}

CurvatureSpec CurvatureSpec::kink(double a, double b, double r_tilde) {
    require(a >= 0.0, "kink slope A must be >= 0");
    require(b > a, "kink slope B must exceed A");
    require(r_tilde > 0.0, "kink radius must be > 0");
    return CurvatureSpec(KinkCurvature{a, b, r_tilde});
}

CurvatureSpec CurvatureSpec::tabulated(std::vector<double> radii, std::vector<double> values) {
    require(radii.size() >= 2, "tabulated spec needs at least two points");
    require(radii.size() == values.size(), "tabulated radii/values lengths differ");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        require(std::isfinite(radii[i]) && std::isfinite(values[i]), "entries must be finite");
        require(radii[i] > 0.0, "tabulated radii must be positive");
        if (i > 0) require(radii[i] > radii[i - 1], "tabulated radii must be ascending");
    }

    TabulatedCurvature t;
    t.radii = std::move(radii);
    const std::size_t segs = t.radii.size() - 1;
    std::vector<double> slopes(segs), weights(segs);
    for (std::size_t i = 0; i < segs; ++i) {
        weights[i] = t.radii[i + 1] - t.radii[i];
        slopes[i] = (values[i + 1] - values[i]) / weights[i];
    }
    t.slopes = isotonic_slopes(slopes, weights);

    t.values.resize(t.radii.size());
    t.values[0] = values[0];
    double max_shift = 0.0;
    for (std::size_t i = 0; i < segs; ++i) {
        t.values[i + 1] = t.values[i] + t.slopes[i] * weights[i];
        max_shift = std::max(max_shift, std::fabs(t.values[i + 1] - values[i + 1]));
    }
    t.projection_distance = max_shift;

    require(t.slopes.front() >= 0.0, "tabulated curve must be non-decreasing after convexification");
    require(t.values.front() >= 0.0, "tabulated values must be non-negative");
    return CurvatureSpec(std::move(t));
}

const char* CurvatureSpec::variant_name() const {
    struct Namer {
        const char* operator()(const QuadraticCurvature&) const { return "quadratic"; }
        const char* operator()(const PowerCurvature&) const { return "power"; }
        const char* operator()(const QuarticCurvature&) const { return "quartic"; }
        const char* operator()(const KinkCurvature&) const { return "kink"; }
        const char* operator()(const TabulatedCurvature&) const { return "tabulated"; }
    };
    return std::visit(Namer{}, variant_);
}

double h_value(const CurvatureSpec& spec, double r) {
    if (r < 0.0) throw ContractError("h_value: radius must be >= 0");
    struct Eval {
        double r;
        double operator()(const QuadraticCurvature& q) const { return q.c * r * r; }
        double operator()(const PowerCurvature& p) const { return p.c * std::pow(r, 2.0 + p.alpha); }
        double operator()(const QuarticCurvature& q) const { return q.c * r * r * r * r; }
        double operator()(const KinkCurvature& k) const {
            return (r <= k.r_tilde) ? k.a * r : k.a * k.r_tilde + k.b * (r - k.r_tilde);
        }
        double operator()(const TabulatedCurvature& t) const { return tabulated_value(t, r); }
    };
    return std::visit(Eval{r}, spec.variant());
}

Subdifferential h_subdiff(const CurvatureSpec& spec, double r) {
    if (r <= 0.0) throw ContractError("h_subdiff: radius must be > 0");
    struct Eval {
        double r;
        Subdifferential operator()(const QuadraticCurvature& q) const {
            const double d = 2.0 * q.c * r;
            return {d, d};
        }
        Subdifferential operator()(const PowerCurvature& p) const {
            const double d = p.c * (2.0 + p.alpha) * std::pow(r, 1.0 + p.alpha);
            return {d, d};
        }
        Subdifferential operator()(const QuarticCurvature& q) const {
            const double d = 4.0 * q.c * r * r * r;
            return {d, d};
        }
        Subdifferential operator()(const KinkCurvature& k) const {
            if (r < k.r_tilde) return {k.a, k.a};
            if (r > k.r_tilde) return {k.b, k.b};
            return {k.a, k.b};
        }
        Subdifferential operator()(const TabulatedCurvature& t) const {
            return tabulated_subdiff(t, r);
        }
    };
    return std::visit(Eval{r}, spec.variant());
}

double q_value(const CurvatureSpec& spec, double x) {
    if (x < 0.0) throw ContractError("q_value: argument must be >= 0");
    if (const auto* q = spec.get_if<QuadraticCurvature>()) return q->c * x;
    if (const auto* q = spec.get_if<QuarticCurvature>()) return q->c * x * x;
    if (const auto* p = spec.get_if<PowerCurvature>()) {
        if (p->alpha == 0.0) return p->c * x;
        if (p->alpha == 1.0) return p->c * x * std::sqrt(x);
        if (p->alpha == 2.0) return p->c * x * x;
        return p->c * std::pow(x, 1.0 + 0.5 * p->alpha);
    }
    return h_value(spec, std::sqrt(x));
}

double q_deriv(const CurvatureSpec& spec, double x) {
    if (x < 0.0) throw ContractError("q_deriv: argument must be >= 0");
    if (const auto* q = spec.get_if<QuadraticCurvature>()) return q->c;
    if (const auto* q = spec.get_if<QuarticCurvature>()) return 2.0 * q->c * x;
    if (const auto* p = spec.get_if<PowerCurvature>()) {
        const double e = 1.0 + 0.5 * p->alpha;
        if (p->alpha == 0.0) return p->c;
        if (p->alpha == 1.0) return p->c * e * std::sqrt(x);
        if (p->alpha == 2.0) return 2.0 * p->c * x;
        return p->c * e * std::pow(x, 0.5 * p->alpha);
    }
    // q'(x) = H'(sqrt(x)) / (2 sqrt(x)), midpoint selection at kinks.
    const double r = std::sqrt(std::max(x, 1e-300));
    const Subdifferential s = h_subdiff(spec, r);
    return 0.5 * (s.lo + s.hi) / (2.0 * r);
}

double q_second_deriv(const CurvatureSpec& spec, double x) {
    if (x < 0.0) throw ContractError("q_second_deriv: argument must be >= 0");
    if (spec.get_if<QuadraticCurvature>()) return 0.0;
    if (const auto* q = spec.get_if<QuarticCurvature>()) return 2.0 * q->c;
    if (const auto* p = spec.get_if<PowerCurvature>()) {
        const double e = 1.0 + 0.5 * p->alpha;
        if (p->alpha == 0.0) return 0.0;
        if (p->alpha == 2.0) return 2.0 * p->c;
        return p->c * e * (e - 1.0) * std::pow(std::max(x, 1e-300), 0.5 * p->alpha - 1.0);
    }
    // Piecewise-linear H: q(x) = H'(r) * (d sqrt(x)/dx) pieces; second
    // derivative of slope*sqrt(x) is -slope/(4 x^1.5).
    const double r = std::sqrt(std::max(x, 1e-300));
    const Subdifferential s = h_subdiff(spec, r);
    const double slope = 0.5 * (s.lo + s.hi);
    return -slope / (4.0 * r * r * r);
}

bool assumption_superquadratic_holds(const CurvatureSpec& spec, std::span<const double> grid) {
    if (grid.size() < 3) throw ContractError("growth check needs at least 3 grid points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= 0.0 || (i > 0 && grid[i] <= grid[i - 1])) {
            throw ContractError("growth check grid must be ascending and positive");
        }
    }
    std::vector<double> x(grid.size()), y(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        x[i] = grid[i] * grid[i];
        y[i] = h_value(spec, grid[i]);
        if (i > 0 && y[i] <= y[i - 1]) return false;  // not strictly increasing
    }
    for (std::size_t i = 2; i < grid.size(); ++i) {
        const double s1 = (y[i - 1] - y[i - 2]) / (x[i - 1] - x[i - 2]);
        const double s2 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        const double scale = std::max({std::fabs(s1), std::fabs(s2), 1.0});
        if ((s2 - s1) / (x[i] - x[i - 2]) < -1e-9 * scale) return false;
    }
    return true;
}

std::vector<double> default_growth_grid() {
    std::vector<double> grid;
    const int points = 64;
    for (int i = 0; i < points; ++i) {
        const double log_r = -3.0 + 6.0 * static_cast<double>(i) / (points - 1);
        grid.push_back(std::pow(10.0, log_r));
    }
    return grid;
}

bool has_closed_form_expectation(const CurvatureSpec& spec) {
    return spec.get_if<QuadraticCurvature>() != nullptr ||
           spec.get_if<QuarticCurvature>() != nullptr;
}

}  // namespace isocurve
