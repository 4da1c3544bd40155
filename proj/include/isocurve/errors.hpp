#pragma once

#include <stdexcept>
#include <string>

namespace isocurve {

// Input shapes do not match the operation's contract.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A precondition on argument values was violated.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed CSV/JSON input or an invalid configuration value.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input is numerically rank deficient where full rank is required.
struct RankDeficiencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative routine hit its iteration cap before reaching tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterates grew without bound; the problem has no finite minimizer.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace isocurve
