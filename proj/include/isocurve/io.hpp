#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "isocurve/curvature.hpp"
#include "isocurve/matrix.hpp"

namespace isocurve {

// CSV matrix format shared by every subcommand: first line "rows,cols",
// then one comma-separated row per line. Values are written with 17
// significant digits so doubles round-trip exactly.

DenseMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);
void write_vector_csv(const std::filesystem::path& path, std::span<const double> values);

std::string format_double(double v);  // %.17g

// JSON curvature spec, e.g. {"variant": "kink", "A": 0.1, "B": 10.0,
// "r_tilde": 1.0}; see README for the full set.
CurvatureSpec curvature_from_json(const nlohmann::json& j);
nlohmann::json curvature_to_json(const CurvatureSpec& spec);
CurvatureSpec load_curvature(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Every run records the resolved configuration next to its outputs; a rerun
// with an identical manifest reproduces the outputs byte for byte.
struct RunManifest {
    std::string subcommand;
    nlohmann::json inputs;  // named input paths
    nlohmann::json config;  // resolved flag values
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m);

}  // namespace isocurve
