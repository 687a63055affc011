// meshguard command line: `check`, `project` and `optimize` subcommands on
// top of the shared-library C API. Exit codes: 0 success/feasible,
// 1 infeasible or diverged, 2 usage/configuration error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshguard.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;

int exit_code_for(mg_status status) {
    switch (status) {
        case MG_OK:
            return kExitOk;
        case MG_ERROR_IO:
        case MG_ERROR_PARSE:
        case MG_ERROR_ARGUMENT:
        case MG_ERROR_UNSUPPORTED:
            return kExitUsage;
        default:
            return kExitInfeasible;
    }
}

int report_failure(const char* what, mg_status status) {
    std::cerr << "meshguard: " << what << " failed (" << mg_status_string(status)
              << "): " << mg_last_error_message() << "\n";
    return exit_code_for(status);
}

std::string slurp(const std::string& path, bool& ok) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    ok = true;
    return ss.str();
}

struct MeshHandle {
    mg_mesh* mesh = nullptr;
    ~MeshHandle() { mg_mesh_free(mesh); }
};

int cmd_check(const std::string& mesh_path, const std::string& config_path,
              const std::string& output_dir) {
    bool ok = false;
    const std::string policy_json = slurp(config_path, ok);
    if (!ok) {
        std::cerr << "meshguard: cannot read policy config '" << config_path << "'\n";
        return kExitUsage;
    }

    MeshHandle handle;
    if (mg_status s = mg_mesh_load(mesh_path.c_str(), &handle.mesh))
        return report_failure("mesh load", s);

    std::filesystem::create_directories(output_dir);
    const std::string csv = (std::filesystem::path(output_dir) / "quality_report.csv").string();
    const std::string summary = (std::filesystem::path(output_dir) / "summary.json").string();

    int32_t feasible = 0;
    if (mg_status s = mg_quality_check(handle.mesh, policy_json.c_str(), csv.c_str(),
                                       summary.c_str(), &feasible))
        return report_failure("quality check", s);

    std::cout << "wrote " << csv << " and " << summary << "\n";
    std::cout << (feasible ? "mesh is feasible under the policy"
                           : "mesh is INFEASIBLE under the policy")
              << "\n";
    return feasible ? kExitOk : kExitInfeasible;
}

int cmd_project(const std::string& mesh_path, const std::string& field_path,
                const std::string& config_path, const std::string& output_dir) {
    bool ok = false;
    const std::string policy_json = slurp(config_path, ok);
    if (!ok) {
        std::cerr << "meshguard: cannot read policy config '" << config_path << "'\n";
        return kExitUsage;
    }

    MeshHandle handle;
    if (mg_status s = mg_mesh_load(mesh_path.c_str(), &handle.mesh))
        return report_failure("mesh load", s);

    const int64_t len = mg_mesh_dim(handle.mesh) * mg_mesh_node_count(handle.mesh);
    std::vector<double> field(len);
    if (mg_status s = mg_field_read(field_path.c_str(), handle.mesh, field.data(), len))
        return report_failure("field read", s);

    mg_projection* projection = nullptr;
    if (mg_status s =
            mg_project_field(handle.mesh, policy_json.c_str(), field.data(), len, &projection))
        return report_failure("projection", s);

    std::filesystem::create_directories(output_dir);
    const std::string field_out =
        (std::filesystem::path(output_dir) / "projected_field.txt").string();
    const std::string mult_out =
        (std::filesystem::path(output_dir) / "multipliers.txt").string();

    std::vector<double> projected(len);
    mg_status s = mg_projection_direction(projection, projected.data(), len);
    if (s == MG_OK) s = mg_field_write(field_out.c_str(), handle.mesh, projected.data(), len);
    if (s == MG_OK) s = mg_projection_write_multipliers(projection, mult_out.c_str());
    const int64_t q = mg_projection_active_count(projection);
    mg_projection_free(projection);
    if (s != MG_OK) return report_failure("projection output", s);

    std::cout << "projected field written to " << field_out << " (" << q
              << " active constraints)\n";
    return kExitOk;
}

int cmd_optimize(const std::string& config_path, const std::string& output_dir, int threads,
                 int write_every, bool no_constraints) {
    mg_run* run = nullptr;
    if (mg_status s =
            mg_optimize(config_path.c_str(), output_dir.empty() ? nullptr : output_dir.c_str(),
                        threads, write_every, no_constraints ? 1 : 0, &run))
        return report_failure("optimize", s);

    const std::string reason = mg_run_termination_reason(run);
    std::cout << "terminated after " << mg_run_iterations(run) << " iterations (" << reason
              << "), final functional value " << mg_run_final_functional(run) << "\n";
    mg_run_free(run);

    const bool diverged =
        reason == "step_underflow" || reason == "no_descent" || reason == "numeric_failure";
    return diverged ? kExitInfeasible : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mesh-quality-constrained shape optimization toolkit"};
    app.require_subcommand(1);

    std::string mesh_path, field_path, config_path, output_dir = "out";
    int threads = 0;
    int write_every = -1;
    bool no_constraints = false;

    CLI::App* check = app.add_subcommand("check", "quality report and policy feasibility");
    check->add_option("--mesh", mesh_path, "mesh file (MSH 2.2 ASCII)")->required();
    check->add_option("--config", config_path, "policy JSON file")->required();
    check->add_option("--output-dir", output_dir, "output directory");

    CLI::App* project = app.add_subcommand("project", "project a nodal field onto the active-set tangent space");
    project->add_option("--mesh", mesh_path, "mesh file (MSH 2.2 ASCII)")->required();
    project->add_option("--field", field_path, "nodal field file")->required();
    project->add_option("--config", config_path, "policy JSON file")->required();
    project->add_option("--output-dir", output_dir, "output directory");

    CLI::App* optimize = app.add_subcommand("optimize", "run quality-constrained shape optimization");
    optimize->add_option("--config", config_path, "run configuration JSON file")->required();
    optimize->add_option("--output-dir", output_dir, "output directory (overrides config)");
    optimize->add_option("--threads", threads, "worker threads (1 = bitwise reproducible)");
    optimize->add_option("--write-every", write_every, "write a mesh snapshot every N iterations");
    optimize->add_flag("--no-constraints", no_constraints, "disable the mesh quality constraints");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (check->parsed()) return cmd_check(mesh_path, config_path, output_dir);
    if (project->parsed()) return cmd_project(mesh_path, field_path, config_path, output_dir);
    if (optimize->parsed()) {
        const bool dir_given = optimize->count("--output-dir") > 0;
        return cmd_optimize(config_path, dir_given ? output_dir : std::string(), threads,
                            write_every, no_constraints);
    }
    return kExitUsage;
}
