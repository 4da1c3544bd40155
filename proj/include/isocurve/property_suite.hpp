#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace isocurve {

// Cross-module invariant suite behind the `check` subcommand: each property
// draws seeded random instances, measures its worst violation, and reports
// pass/fail against a fixed tolerance.

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::size_t cases = 0;
    double worst = 0.0;      // worst observed margin (property-specific units)
    double tolerance = 0.0;  // pass iff worst <= tolerance
    std::string note;
};

struct PropertySuiteOptions {
    std::uint64_t seed = 0;
    std::size_t max_dim = 8;
    std::size_t mc_samples = 20000;
    // Negative control: corrupts the named property's measurement so it
    // must fail; verifies the harness actually gates on failures.
    std::string inject_fault;
};

std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& opts);

}  // namespace isocurve
