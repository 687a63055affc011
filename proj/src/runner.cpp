#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "io_util.hpp"
#include "msh_io.hpp"
#include "projection.hpp"
#include "shape_problem.hpp"

namespace meshguard {

namespace {

std::string snapshot_name(long n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "iter_%04ld.msh", n);
    return buf;
}

}  // namespace

CheckOutcome run_check(const Mesh& mesh, const PolicyConfig& policy,
                       const std::string& report_csv_path,
                       const std::string& summary_json_path) {
    CheckOutcome outcome;
    outcome.stats = mesh_quality(mesh);
    try {
        (void)build_thresholds(mesh, policy.policy);
        outcome.feasible = true;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Infeasible) throw;
        outcome.feasible = false;
    }

    nlohmann::json summary;
    summary["min_angle"] = outcome.stats.min_angle;
    summary["max_angle"] = outcome.stats.max_angle;
    summary["max_aspect_ratio"] = outcome.stats.max_aspect_ratio;
    summary["worst_cell"] = outcome.stats.worst_cell;
    summary["feasible_under_policy"] = outcome.feasible;
    outcome.summary_json = summary.dump(2);

    if (!report_csv_path.empty()) atomic_write_file(report_csv_path, quality_report_csv(mesh));
    if (!summary_json_path.empty()) atomic_write_file(summary_json_path, outcome.summary_json);
    return outcome;
}

ProjectOutcome run_project(const Mesh& mesh, const PolicyConfig& policy,
                           std::span<const double> field) {
    if (static_cast<long>(field.size()) != mesh.node_count() * mesh.dim())
        fail(ErrorKind::Argument, "field length does not match dim * node_count");

    ConstraintSystem system =
        ConstraintSystem::build(mesh, policy.policy, policy.fixed_boundary_groups, policy.epsilon);
    std::vector<double> g;
    evaluate_constraints(mesh, system, g);
    for (long k = 0; k < system.quality_count(); ++k)
        if (g[k] > system.epsilon)
            fail(ErrorKind::Infeasible,
                 "mesh is infeasible under the policy: constraint " + std::to_string(k) +
                     " has value " + std::to_string(g[k]));

    const std::vector<int> active = active_set(g, system);
    ProjectionOperator op(assemble_jacobian(mesh, system, active));
    ProjectionResult proj = op.project(field);

    ProjectOutcome outcome;
    outcome.direction = std::move(proj.direction);
    outcome.multipliers = std::move(proj.multipliers);
    outcome.active = active;
    outcome.tangency_residual = proj.tangency_residual;
    return outcome;
}

std::string iteration_record_json(const IterationRecord& record) {
    nlohmann::json j;
    j["n"] = record.n;
    j["J"] = record.J;
    j["grad_norm"] = record.grad_norm;
    j["grad_norm_rel"] = record.grad_norm_rel;
    if (record.termination.empty()) {
        j["t"] = record.t;
        j["t_star"] = record.t_star;
        j["slope"] = record.slope;
        j["q_active"] = record.q_active;
        j["cg_iterations"] = record.multiplier_solver_iterations;
        j["newton_iterations"] = record.newton_iterations;
        j["bisect_iterations"] = record.bisect_iterations;
        j["activated"] = record.activated;
        j["dropped"] = record.dropped;
        j["projection_residual"] = record.projection_residual;
    } else {
        j["termination_reason"] = record.termination;
    }
    if (record.has_quality) {
        j["min_angle"] = record.min_angle;
        j["max_aspect_ratio"] = record.max_aspect_ratio;
    }
    return j.dump();
}

std::vector<double> read_field(const std::string& path, const Mesh& mesh) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open field file '" + path + "'");
    const int dim = mesh.dim();
    std::vector<double> field;
    field.reserve(mesh.node_count() * dim);
    double value = 0.0;
    while (in >> value) field.push_back(value);
    if (static_cast<long>(field.size()) != mesh.node_count() * dim)
        fail(ErrorKind::Parse, "field file '" + path + "' has " +
                                   std::to_string(field.size()) + " values, expected " +
                                   std::to_string(mesh.node_count() * dim));
    return field;
}

void write_field(const std::string& path, const Mesh& mesh, std::span<const double> field) {
    if (static_cast<long>(field.size()) != mesh.node_count() * mesh.dim())
        fail(ErrorKind::Argument, "field length does not match dim * node_count");
    std::ostringstream out;
    char buf[64];
    const int dim = mesh.dim();
    for (long n = 0; n < mesh.node_count(); ++n) {
        for (int k = 0; k < dim; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", field[n * dim + k]);
            out << (k ? " " : "") << buf;
        }
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

RunArtifacts run_optimization(const RunConfig& config, const RunOverrides& overrides,
                              const IterationObserver& extra_observer) {
    namespace fs = std::filesystem;

    RunConfig effective = config;
    if (!overrides.output_dir.empty()) effective.output_dir = overrides.output_dir;
    if (overrides.threads > 0) effective.threads = overrides.threads;
    if (overrides.write_every >= 0) effective.write_every = overrides.write_every;
    if (overrides.disable_constraints) effective.constraints_enabled = false;

    Mesh mesh = load_msh(effective.mesh_path);
    resolve_functional_targets(effective.functional, mesh);
    effective.functional.validate(mesh);

    const std::vector<int> fixed_nodes = mesh.group_nodes(effective.fixed_boundary_groups);
    ConstraintSystem system = ConstraintSystem::build(
        mesh, effective.threshold_policy, effective.fixed_boundary_groups, effective.epsilon);

    std::vector<double> x0(mesh.coords().begin(), mesh.coords().end());
    ShapeProblem problem(std::move(mesh), effective.functional, effective.elasticity,
                         std::move(system), fixed_nodes, effective.threads);

    fs::create_directories(effective.output_dir);
    // Stream records to a .partial file for live inspection; the named
    // artifact appears atomically when the run completes.
    const fs::path log_path = fs::path(effective.output_dir) / "run_log.jsonl";
    const fs::path log_partial = log_path.string() + ".partial";
    std::ofstream log(log_partial, std::ios::trunc);
    if (!log) fail(ErrorKind::Io, "cannot open run log '" + log_partial.string() + "'");

    const int write_every = effective.write_every;
    const std::string out_dir = effective.output_dir;
    IterationObserver observer = [&](const IterationRecord& record,
                                     std::span<const double> coords) {
        log << iteration_record_json(record) << "\n";
        log.flush();
        if (write_every > 0 && record.termination.empty() && record.n % write_every == 0) {
            problem.mesh().set_coords(coords);
            save_msh(problem.mesh(), (fs::path(out_dir) / snapshot_name(record.n)).string());
        }
        if (extra_observer) extra_observer(record, coords);
    };

    RunArtifacts artifacts;
    OptimizeResult result = optimize(problem, x0, effective.optimize_options(), observer);

    log.close();
    std::error_code ec;
    fs::rename(log_partial, log_path, ec);
    if (ec) fail(ErrorKind::Io, "cannot finalize run log '" + log_path.string() + "'");

    problem.mesh().set_coords(result.x);
    save_msh(problem.mesh(), (fs::path(out_dir) / "final.msh").string());

    artifacts.final_mesh = std::make_unique<Mesh>(problem.mesh());
    artifacts.result = std::move(result);
    return artifacts;
}

}  // namespace meshguard
