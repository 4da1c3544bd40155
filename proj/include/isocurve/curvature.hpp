#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace isocurve {

// Curvature profiles H: increasing convex functions of the perturbation
// radius r >= 0 that weight the quadratic-and-above part of a one-step
// loss change. All solver paths consume these through h_value/h_subdiff
// and the q(x) = H(sqrt(x)) composition used by the spectral program.

struct QuadraticCurvature {
    double c;  // H(r) = c r^2
};

struct PowerCurvature {
    double c;      // H(r) = c r^(2+alpha)
    double alpha;  // >= 0
};

struct QuarticCurvature {
    double c;  // H(r) = c r^4
};

// Piecewise linear with slope A below r_tilde and B above; the
// subdifferential at r_tilde is the full interval [A, B].
struct KinkCurvature {
    double a;        // left slope, >= 0
    double b;        // right slope, > a
    double r_tilde;  // > 0
};

// Monotone convex piecewise-linear interpolant through (radii, values).
// Slopes are projected to be non-decreasing at construction (pool adjacent
// violators); the projection distance is kept for diagnostics. The last
// slope extrapolates beyond the grid, the first below it.
struct TabulatedCurvature {
    std::vector<double> radii;   // ascending, positive
    std::vector<double> values;  // convexified on construction
    std::vector<double> slopes;  // non-decreasing, derived
    double projection_distance = 0.0;
};

class CurvatureSpec {
public:
    using Variant = std::variant<QuadraticCurvature, PowerCurvature, QuarticCurvature,
                                 KinkCurvature, TabulatedCurvature>;

    static CurvatureSpec quadratic(double c);
    static CurvatureSpec power(double c, double alpha);
    static CurvatureSpec quartic(double c);
    static CurvatureSpec kink(double a, double b, double r_tilde);
    static CurvatureSpec tabulated(std::vector<double> radii, std::vector<double> values);

    const Variant& variant() const { return variant_; }
    const char* variant_name() const;

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&variant_);
    }

private:
    explicit CurvatureSpec(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

// H(r); r must be >= 0.
double h_value(const CurvatureSpec& spec, double r);

// Closed interval of slopes [lo, hi] of H at r > 0; lo == hi except at a
// kink radius.
struct Subdifferential {
    double lo;
    double hi;
};
Subdifferential h_subdiff(const CurvatureSpec& spec, double r);

// q(x) = H(sqrt(x)) and a derivative selection for it (midpoint of the
// subdifferential at kinks). q_second_deriv returns the piecewise second
// derivative where defined (0 on linear pieces).
double q_value(const CurvatureSpec& spec, double x);
double q_deriv(const CurvatureSpec& spec, double x);
double q_second_deriv(const CurvatureSpec& spec, double x);

// True iff x -> H(sqrt(x)) has second divided differences >= -1e-9 on the
// grid and H is strictly increasing along it.
bool assumption_superquadratic_holds(const CurvatureSpec& spec, std::span<const double> grid);

// Default log-spaced grid for the check above.
std::vector<double> default_growth_grid();

// True for variants whose sphere expectation has a closed form
// (quadratic and quartic).
bool has_closed_form_expectation(const CurvatureSpec& spec);

}  // namespace isocurve
