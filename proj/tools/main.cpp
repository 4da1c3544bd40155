#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isocurve/certificates.hpp"
#include "isocurve/curvature.hpp"
#include "isocurve/errors.hpp"
#include "isocurve/io.hpp"
#include "isocurve/linalg.hpp"
#include "isocurve/muon.hpp"
#include "isocurve/probe.hpp"
#include "isocurve/property_suite.hpp"
#include "isocurve/solver.hpp"
#include "isocurve/sphere.hpp"
#include "isocurve/threads.hpp"
#include "isocurve/version.hpp"

namespace {

using isocurve::CurvatureSpec;
using isocurve::DenseMatrix;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitSolverFailure = 2;
constexpr int kExitInputError = 3;

struct CommonFlags {
    std::string gradient_path;
    std::string curvature_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t samples = 100000;
    double tol = 1e-6;
    unsigned threads = 0;
};

void apply_threads(unsigned threads) {
    if (threads > 0) isocurve::set_thread_count(threads);
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

json solution_diagnostics(const isocurve::SpectrumSolution& sol, std::uint64_t seed,
                          std::size_t samples) {
    const isocurve::HomogenizationReport homog = isocurve::homogenization_report(
        sol.sigma, sol.sigma_star, 1e-9, sol.sigma_star_std_err);
    json j;
    j["path"] = isocurve::solve_path_name(sol.path);
    j["iterations"] = sol.iterations;
    j["objective"] = sol.objective;
    j["stationarity_residual"] = sol.stationarity_residual;
    j["ordering_preserved"] = sol.ordering_preserved;
    j["sigma_star_std_err"] = sol.sigma_star_std_err;
    j["homogenization"] = {{"all_pass", homog.all_pass},
                           {"worst_margin", homog.worst_margin},
                           {"pairs_checked", homog.pairs.size()}};
    if (sol.path == isocurve::SolvePath::KinkParametric || sol.kink_certificate_feasible) {
        j["kink_certificate"] = {{"feasible", sol.kink_certificate_feasible},
                                 {"residual", sol.kink_certificate_residual}};
    }
    j["seed"] = seed;
    j["samples"] = samples;
    return j;
}

int cmd_solve(const CommonFlags& flags) {
    apply_threads(flags.threads);
    const DenseMatrix gradient = isocurve::read_matrix_csv(flags.gradient_path);
    const CurvatureSpec curvature = isocurve::load_curvature(flags.curvature_path);
    const auto out = ensure_out_dir(flags.out_dir);

    isocurve::ModelProblem problem{gradient, curvature,
                                   {gradient.cols(), flags.samples, flags.seed}};
    isocurve::GenericOptions opts;
    opts.tol = flags.tol;
    const isocurve::SpectrumSolution sol = isocurve::solve(problem, opts);

    isocurve::write_vector_csv(out / "sigma.csv", sol.sigma);
    isocurve::write_vector_csv(out / "sigma_star.csv", sol.sigma_star);
    isocurve::write_matrix_csv(out / "q_star.csv", sol.q_star);
    isocurve::write_json(out / "diagnostics.json",
                         solution_diagnostics(sol, flags.seed, flags.samples));

    isocurve::RunManifest manifest;
    manifest.subcommand = "solve";
    manifest.inputs = {{"gradient", flags.gradient_path},
                       {"curvature", flags.curvature_path}};
    manifest.config = {{"samples", flags.samples}, {"tol", flags.tol}};
    manifest.seed = flags.seed;
    manifest.out_dir = flags.out_dir;
    manifest.outputs = {"sigma.csv", "sigma_star.csv", "q_star.csv", "diagnostics.json"};
    isocurve::write_manifest(out, manifest);
    return kExitOk;
}

isocurve::OracleLoss oracle_from_json(const json& j) {
    if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string()) {
        throw isocurve::ParseError("oracle json: expected an object with a 'variant' string");
    }
    const std::string variant = j["variant"].get<std::string>();
    const std::uint64_t seed = j.value("seed", 0ull);
    if (variant == "quadratic") {
        return isocurve::OracleLoss::quadratic(j.value("dim", 16u), seed);
    }
    if (variant == "pure_power") {
        return isocurve::OracleLoss::pure_power(j.value("p", 4.0), j.value("dim", 16u));
    }
    if (variant == "tiny_mlp") {
        return isocurve::OracleLoss::tiny_mlp(seed);
    }
    throw isocurve::ParseError("oracle json: unknown variant '" + variant + "'");
}

isocurve::ProbeConfig probe_config_from_json(const json& j) {
    isocurve::ProbeConfig cfg = isocurve::ProbeConfig::defaults();
    const bool custom_radii = j.contains("radii") || j.contains("radii_log10_min");
    if (j.contains("radii")) {
        cfg.radii = j["radii"].get<std::vector<double>>();
    } else if (j.contains("radii_log10_min")) {
        cfg.radii.clear();
        const double lo = j["radii_log10_min"].get<double>();
        const double hi = j.value("radii_log10_max", 1.0);
        const int count = j.value("radii_count", 24);
        if (count < 2) throw isocurve::ParseError("probe config: radii_count must be >= 2");
        for (int i = 0; i < count; ++i) {
            cfg.radii.push_back(std::pow(10.0, lo + (hi - lo) * i / (count - 1)));
        }
    }
    if (custom_radii) {
        // Keep the conventional fit start at 10^0.5 when it falls inside
        // the custom range; otherwise fit over the full range.
        const double conventional_lo = std::pow(10.0, 0.5);
        cfg.fit_lo = (conventional_lo >= cfg.radii.front() && conventional_lo <= cfg.radii.back())
                         ? conventional_lo
                         : cfg.radii.front();
        cfg.fit_hi = cfg.radii.back();
    }
    cfg.direction_count = j.value("direction_count", cfg.direction_count);
    cfg.input_count = j.value("input_count", cfg.input_count);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("fit_window")) {
        const auto window = j["fit_window"].get<std::vector<double>>();
        if (window.size() != 2) {
            throw isocurve::ParseError("probe config: fit_window must be [lo, hi]");
        }
        cfg.fit_lo = window[0];
        cfg.fit_hi = window[1];
    }
    return cfg;
}

int cmd_probe(const std::string& oracle_path, const std::string& config_path,
              const CommonFlags& flags, bool seed_given) {
    apply_threads(flags.threads);
    const json oracle_json = isocurve::load_json(oracle_path);
    json config_json = json::object();
    if (!config_path.empty()) config_json = isocurve::load_json(config_path);

    const isocurve::OracleLoss oracle = oracle_from_json(oracle_json);
    isocurve::ProbeConfig cfg = probe_config_from_json(config_json);
    if (seed_given) cfg.seed = flags.seed;

    const auto inputs = oracle.make_inputs(cfg.input_count, cfg.seed);
    const isocurve::ProbeReport report =
        isocurve::probe(oracle, oracle.default_layer(), inputs, cfg);

    const auto out = ensure_out_dir(flags.out_dir);
    {
        std::ofstream csv(out / "probe.csv", std::ios::trunc);
        csv << "radius,mean_remainder_over_r2,q10,q50,q90,n_samples\n";
        for (const auto& s : report.per_radius) {
            csv << isocurve::format_double(s.radius) << ","
                << isocurve::format_double(s.mean_over_r2) << ","
                << isocurve::format_double(s.q10) << "," << isocurve::format_double(s.q50)
                << "," << isocurve::format_double(s.q90) << "," << s.n_samples << "\n";
        }
    }
    json summary;
    summary["fitted_exponent"] = report.nonpositive_window_means
                                     ? json(nullptr)
                                     : json(report.fitted_exponent);
    summary["fit_r_squared"] =
        std::isnan(report.fit_r_squared) ? json(nullptr) : json(report.fit_r_squared);
    summary["fitted_exponent_median"] = std::isnan(report.fitted_exponent_median)
                                            ? json(nullptr)
                                            : json(report.fitted_exponent_median);
    summary["nonpositive_window_means"] = report.nonpositive_window_means;
    summary["sample_count_per_radius"] = report.sample_count;
    summary["fit_window"] = {cfg.fit_lo, cfg.fit_hi};
    isocurve::write_json(out / "summary.json", summary);

    isocurve::RunManifest manifest;
    manifest.subcommand = "probe";
    manifest.inputs = {{"oracle", oracle_path}, {"probe_config", config_path}};
    manifest.config = {{"direction_count", cfg.direction_count},
                       {"input_count", cfg.input_count},
                       {"radii", cfg.radii},
                       {"fit_window", {cfg.fit_lo, cfg.fit_hi}}};
    manifest.seed = cfg.seed;
    manifest.out_dir = flags.out_dir;
    manifest.outputs = {"probe.csv", "summary.json"};
    isocurve::write_manifest(out, manifest);
    return kExitOk;
}

int cmd_certify(const CommonFlags& flags) {
    apply_threads(flags.threads);
    const DenseMatrix gradient = isocurve::read_matrix_csv(flags.gradient_path);
    const CurvatureSpec curvature = isocurve::load_curvature(flags.curvature_path);
    const auto out = ensure_out_dir(flags.out_dir);

    json certificate;
    certificate["curvature"] = isocurve::curvature_to_json(curvature);
    certificate["seed"] = flags.seed;
    certificate["samples"] = flags.samples;

    if (const auto* kink = curvature.get_if<isocurve::KinkCurvature>()) {
        if (gradient.rows() < gradient.cols()) {
            throw isocurve::ContractError(
                "certify: kink certificates need rows >= cols (wide gradients are "
                "unsupported)");
        }
        const std::vector<double> sigma = isocurve::singular_values(gradient);
        isocurve::SphereSampler sampler{gradient.cols(), flags.samples, flags.seed};
        const isocurve::KinkCertificate cert =
            isocurve::kink_certificate(sigma, *kink, sampler, 1.0);
        const DenseMatrix candidate = kink->r_tilde * isocurve::msgn_exact(gradient);
        certificate["kind"] = "kink";
        certificate["alignment_gap"] = isocurve::alignment_gap(gradient, candidate);
        certificate["kink_certificate"] = {
            {"feasible", cert.feasible},
            {"moment_residual", cert.moment_residual},
            {"threshold", cert.threshold},
            {"iterations", cert.iterations},
        };
    } else {
        isocurve::ModelProblem problem{gradient, curvature,
                                       {gradient.cols(), flags.samples, flags.seed}};
        const isocurve::SpectrumSolution sol = isocurve::solve(problem);
        certificate["kind"] = "smooth";
        certificate["alignment_gap"] = isocurve::alignment_gap(gradient, sol.q_star);
        certificate["solve_path"] = isocurve::solve_path_name(sol.path);
        if (!curvature.get_if<isocurve::TabulatedCurvature>()) {
            std::vector<double> grid;
            for (int i = 0; i < 100; ++i) {
                grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 99.0));
            }
            certificate["converse_gap"] = isocurve::converse_gap(gradient, curvature, grid);
            certificate["converse_grid"] = {{"points", 100}, {"log10_range", {-2.0, 2.0}}};
        } else {
            certificate["converse_gap"] = nullptr;
            certificate["note"] =
                "converse gap needs a differentiable curvature; tabulated curves are "
                "piecewise linear";
        }
    }
    isocurve::write_json(out / "certificate.json", certificate);

    isocurve::RunManifest manifest;
    manifest.subcommand = "certify";
    manifest.inputs = {{"gradient", flags.gradient_path},
                       {"curvature", flags.curvature_path}};
    manifest.config = {{"samples", flags.samples}};
    manifest.seed = flags.seed;
    manifest.out_dir = flags.out_dir;
    manifest.outputs = {"certificate.json"};
    isocurve::write_manifest(out, manifest);
    return kExitOk;
}

int cmd_compare(const CommonFlags& flags) {
    apply_threads(flags.threads);
    const DenseMatrix gradient = isocurve::read_matrix_csv(flags.gradient_path);
    const CurvatureSpec curvature = isocurve::load_curvature(flags.curvature_path);
    const auto out = ensure_out_dir(flags.out_dir);

    const isocurve::ComparisonResult result = isocurve::compare_one_step(gradient, curvature);

    {
        std::ofstream csv(out / "compare.csv", std::ios::trunc);
        csv << "rule,gamma,realized_decrease\n";
        for (const auto& rule : result.rules) {
            for (std::size_t i = 0; i < result.grid.gammas.size(); ++i) {
                csv << rule.rule << "," << isocurve::format_double(result.grid.gammas[i])
                    << "," << isocurve::format_double(rule.grid_decrease[i]) << "\n";
            }
        }
    }
    json summary;
    summary["ns_order_inversions"] = result.ns_order_inversions;
    json rules = json::object();
    for (const auto& rule : result.rules) {
        rules[rule.rule] = {{"best_gamma", rule.best_gamma},
                            {"realized_decrease", rule.realized_decrease},
                            {"predicted_decrease", rule.predicted_decrease}};
    }
    summary["rules"] = rules;
    isocurve::write_json(out / "summary.json", summary);

    isocurve::RunManifest manifest;
    manifest.subcommand = "compare";
    manifest.inputs = {{"gradient", flags.gradient_path},
                       {"curvature", flags.curvature_path}};
    manifest.config = {{"grid_points", result.grid.gammas.size()}};
    manifest.seed = flags.seed;
    manifest.out_dir = flags.out_dir;
    manifest.outputs = {"compare.csv", "summary.json"};
    isocurve::write_manifest(out, manifest);
    return kExitOk;
}

int cmd_check(const CommonFlags& flags, std::size_t max_dim, const std::string& inject) {
    apply_threads(flags.threads);
    isocurve::PropertySuiteOptions opts;
    opts.seed = flags.seed;
    opts.max_dim = max_dim;
    opts.mc_samples = flags.samples;
    opts.inject_fault = inject;

    const std::vector<isocurve::PropertyResult> results = isocurve::run_property_suite(opts);
    bool all_pass = true;
    json items = json::array();
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        items.push_back({{"name", r.name},
                         {"pass", r.pass},
                         {"cases", r.cases},
                         {"worst_margin", r.worst},
                         {"tolerance", r.tolerance},
                         {"note", r.note}});
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (cases=" << r.cases
                  << ", worst=" << r.worst << ")\n";
    }
    json report;
    report["all_pass"] = all_pass;
    report["seed"] = flags.seed;
    report["max_dim"] = max_dim;
    report["samples"] = flags.samples;
    report["properties"] = items;

    const auto out = ensure_out_dir(flags.out_dir);
    isocurve::write_json(out / "property_report.json", report);

    isocurve::RunManifest manifest;
    manifest.subcommand = "check";
    manifest.inputs = json::object();
    manifest.config = {{"max_dim", max_dim},
                       {"samples", flags.samples},
                       {"inject_fault", inject}};
    manifest.seed = flags.seed;
    manifest.out_dir = flags.out_dir;
    manifest.outputs = {"property_report.json"};
    isocurve::write_manifest(out, manifest);
    return all_pass ? kExitOk : kExitPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvature-aware one-step update solver and certificates"};
    app.set_version_flag("--version",
                         std::string(isocurve::kToolName) + " " + isocurve::kToolVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    std::string oracle_path, probe_config_path, inject;
    std::size_t max_dim = 8;

    auto add_common = [&](CLI::App* cmd, bool needs_gradient) {
        if (needs_gradient) {
            cmd->add_option("--gradient", flags.gradient_path, "gradient matrix CSV")
                ->required();
            cmd->add_option("--curvature", flags.curvature_path, "curvature spec JSON")
                ->required();
        }
        cmd->add_option("--out-dir", flags.out_dir, "output directory");
        cmd->add_option("--seed", flags.seed, "random seed (default 0)");
        cmd->add_option("--samples", flags.samples, "Monte Carlo sample count");
        cmd->add_option("--tol", flags.tol, "solver tolerance");
        cmd->add_option("--threads", flags.threads, "worker threads (default: all cores)");
    };

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve the one-step update program");
    add_common(solve_cmd, true);
    CLI::App* probe_cmd =
        app.add_subcommand("probe", "estimate curvature growth from Taylor remainders");
    probe_cmd->add_option("--oracle", oracle_path, "oracle loss JSON")->required();
    probe_cmd->add_option("--config", probe_config_path, "probe config JSON");
    add_common(probe_cmd, false);
    CLI::App* certify_cmd = app.add_subcommand("certify", "emit optimality certificates");
    add_common(certify_cmd, true);
    CLI::App* compare_cmd = app.add_subcommand("compare", "one-step update rule comparison");
    add_common(compare_cmd, true);
    CLI::App* check_cmd = app.add_subcommand("check", "run the cross-module property suite");
    add_common(check_cmd, false);
    check_cmd->add_option("--max-dim", max_dim, "dimension cap for random instances");
    check_cmd->add_option("--inject-fault", inject, "force the named property to fail")
        ->group("");  // test hook, hidden from help

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(flags);
        if (probe_cmd->parsed()) {
            return cmd_probe(oracle_path, probe_config_path, flags,
                             probe_cmd->count("--seed") > 0);
        }
        if (certify_cmd->parsed()) return cmd_certify(flags);
        if (compare_cmd->parsed()) return cmd_compare(flags);
        if (check_cmd->parsed()) return cmd_check(flags, max_dim, inject);
    } catch (const isocurve::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const isocurve::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
