#include "isocurve/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "isocurve/errors.hpp"
#include "isocurve/version.hpp"

namespace isocurve {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else if (ch != '\r') {
            current += ch;
        }
    }
    fields.push_back(current);
    return fields;
}

double parse_double(const std::string& field, const std::filesystem::path& path) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &consumed);
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": not a number: '" + field + "'");
    }
    while (consumed < field.size() &&
           (field[consumed] == ' ' || field[consumed] == '\t')) {
        ++consumed;
    }
    if (consumed != field.size()) {
        throw ParseError(path.string() + ": trailing characters in '" + field + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError(path.string() + ": non-finite value '" + field + "'");
    }
    return value;
}

std::size_t parse_count(const std::string& field, const std::filesystem::path& path) {
    const double v = parse_double(field, path);
    if (v < 1.0 || v != std::floor(v) || v > 1e9) {
        throw ParseError(path.string() + ": bad dimension '" + field + "'");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");

    const std::vector<std::string> header = split_fields(line);
    if (header.size() != 2) {
        throw ParseError(path.string() + ": first line must be 'rows,cols'");
    }
    const std::size_t rows = parse_count(header[0], path);
    const std::size_t cols = parse_count(header[1], path);

    std::vector<double> data;
    data.reserve(rows * cols);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (row >= rows) {
            if (line.empty()) continue;
            throw ParseError(path.string() + ": more rows than declared");
        }
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != cols) {
            throw ParseError(path.string() + ": row " + std::to_string(row + 1) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(cols));
        }
        for (const std::string& f : fields) data.push_back(parse_double(f, path));
        ++row;
    }
    if (row != rows) {
        throw ParseError(path.string() + ": declared " + std::to_string(rows) +
                         " rows, found " + std::to_string(row));
    }
    try {
        return DenseMatrix::from_data(rows, cols, std::move(data));
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write matrix file: " + path.string());
    out << m.rows() << "," << m.cols() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
}

void write_vector_csv(const std::filesystem::path& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write vector file: " + path.string());
    out << values.size() << ",1\n";
    for (double v : values) out << format_double(v) << "\n";
}

namespace {

double json_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw ParseError(std::string("curvature json: missing numeric field '") + key + "'");
    }
    return j[key].get<double>();
}

std::vector<double> json_number_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw ParseError(std::string("curvature json: missing array field '") + key + "'");
    }
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) {
            throw ParseError(std::string("curvature json: non-numeric entry in '") + key + "'");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

CurvatureSpec curvature_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string()) {
        throw ParseError("curvature json: expected an object with a 'variant' string");
    }
    const std::string variant = j["variant"].get<std::string>();
    try {
        if (variant == "quadratic") return CurvatureSpec::quadratic(json_number(j, "c"));
        if (variant == "quartic") return CurvatureSpec::quartic(json_number(j, "c"));
        if (variant == "power") {
            return CurvatureSpec::power(json_number(j, "c"), json_number(j, "alpha"));
        }
        if (variant == "kink") {
            return CurvatureSpec::kink(json_number(j, "A"), json_number(j, "B"),
                                       json_number(j, "r_tilde"));
        }
        if (variant == "tabulated") {
            return CurvatureSpec::tabulated(json_number_array(j, "radii"),
                                            json_number_array(j, "values"));
        }
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("curvature json: ") + e.what());
    }
    throw ParseError("curvature json: unknown variant '" + variant + "'");
}

nlohmann::json curvature_to_json(const CurvatureSpec& spec) {
    nlohmann::json j;
    j["variant"] = spec.variant_name();
    if (const auto* q = spec.get_if<QuadraticCurvature>()) {
        j["c"] = q->c;
    } else if (const auto* q = spec.get_if<QuarticCurvature>()) {
        j["c"] = q->c;
    } else if (const auto* p = spec.get_if<PowerCurvature>()) {
        j["c"] = p->c;
        j["alpha"] = p->alpha;
    } else if (const auto* k = spec.get_if<KinkCurvature>()) {
        j["A"] = k->a;
        j["B"] = k->b;
        j["r_tilde"] = k->r_tilde;
    } else if (const auto* t = spec.get_if<TabulatedCurvature>()) {
        j["radii"] = t->radii;
        j["values"] = t->values;
        j["convexification_distance"] = t->projection_distance;
    }
    return j;
}

CurvatureSpec load_curvature(const std::filesystem::path& path) {
    return curvature_from_json(load_json(path));
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open json file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write json file: " + path.string());
    out << j.dump(2) << "\n";
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["subcommand"] = m.subcommand;
    j["inputs"] = m.inputs;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["out_dir"] = m.out_dir;
    j["outputs"] = m.outputs;
    return j;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
    write_json(out_dir / "manifest.json", manifest_to_json(m));
}

}  // namespace isocurve
