#include "meshguard.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "io_util.hpp"
#include "mesh.hpp"
#include "msh_io.hpp"
#include "runner.hpp"

using namespace meshguard;

extern "C" {

struct mg_mesh {
    Mesh mesh;
};

struct mg_projection {
    ProjectOutcome outcome;
};

struct mg_run {
    OptimizeResult result;
    std::unique_ptr<mg_mesh> final_mesh;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

mg_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return MG_ERROR_IO;
        case ErrorKind::Parse: return MG_ERROR_PARSE;
        case ErrorKind::Argument: return MG_ERROR_ARGUMENT;
        case ErrorKind::Degenerate: return MG_ERROR_DEGENERATE;
        case ErrorKind::Infeasible: return MG_ERROR_INFEASIBLE;
        case ErrorKind::Numeric: return MG_ERROR_NUMERIC;
        case ErrorKind::Unsupported: return MG_ERROR_UNSUPPORTED;
    }
    return MG_ERROR_NUMERIC;
}

// Run fn, translating exceptions into status codes + last-error message.
template <typename Fn>
mg_status guarded(Fn&& fn) {
    try {
        fn();
        return MG_OK;
    } catch (const Error& e) {
        set_error(e.what());
        return status_of(e.kind());
    } catch (const std::exception& e) {
        set_error(e.what());
        return MG_ERROR_NUMERIC;
    }
}

mg_status require(bool condition, const char* message) {
    if (condition) return MG_OK;
    set_error(message);
    return MG_ERROR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* mg_status_string(mg_status status) {
    switch (status) {
        case MG_OK: return "ok";
        case MG_ERROR_IO: return "io error";
        case MG_ERROR_PARSE: return "parse error";
        case MG_ERROR_ARGUMENT: return "invalid argument";
        case MG_ERROR_DEGENERATE: return "degenerate cell";
        case MG_ERROR_INFEASIBLE: return "infeasible";
        case MG_ERROR_NUMERIC: return "numeric failure";
        case MG_ERROR_UNSUPPORTED: return "unsupported";
    }
    return "unknown";
}

const char* mg_last_error_message(void) { return g_last_error.c_str(); }

mg_status mg_mesh_load(const char* path, mg_mesh** out) {
    if (mg_status s = require(path && out, "path and out must be non-null")) return s;
    return guarded([&] { *out = new mg_mesh{load_msh(path)}; });
}

mg_status mg_mesh_save(const mg_mesh* mesh, const char* path) {
    if (mg_status s = require(mesh && path, "mesh and path must be non-null")) return s;
    return guarded([&] { save_msh(mesh->mesh, path); });
}

void mg_mesh_free(mg_mesh* mesh) { delete mesh; }

int32_t mg_mesh_dim(const mg_mesh* mesh) { return mesh ? mesh->mesh.dim() : 0; }

int64_t mg_mesh_node_count(const mg_mesh* mesh) { return mesh ? mesh->mesh.node_count() : 0; }

int64_t mg_mesh_cell_count(const mg_mesh* mesh) { return mesh ? mesh->mesh.cell_count() : 0; }

int64_t mg_mesh_orientation_repairs(const mg_mesh* mesh) {
    return mesh ? mesh->mesh.orientation_repairs() : 0;
}

mg_status mg_mesh_coords(const mg_mesh* mesh, double* buffer, int64_t len) {
    if (mg_status s = require(mesh && buffer, "mesh and buffer must be non-null")) return s;
    const auto coords = mesh->mesh.coords();
    if (mg_status s = require(len == static_cast<int64_t>(coords.size()),
                              "buffer length must equal dim * node_count"))
        return s;
    std::memcpy(buffer, coords.data(), coords.size() * sizeof(double));
    return MG_OK;
}

mg_status mg_mesh_set_coords(mg_mesh* mesh, const double* buffer, int64_t len) {
    if (mg_status s = require(mesh && buffer, "mesh and buffer must be non-null")) return s;
    return guarded([&] {
        mesh->mesh.set_coords(std::span<const double>(buffer, static_cast<size_t>(len)));
    });
}

mg_status mg_mesh_cell_measure(const mg_mesh* mesh, int64_t cell, double* out) {
    if (mg_status s = require(mesh && out, "mesh and out must be non-null")) return s;
    if (mg_status s = require(cell >= 0 && cell < mesh->mesh.cell_count(),
                              "cell index out of range"))
        return s;
    *out = mesh->mesh.cell_measure(cell);
    return MG_OK;
}

mg_status mg_quality_check(const mg_mesh* mesh, const char* policy_json,
                           const char* report_csv_path, const char* summary_json_path,
                           int32_t* feasible_out) {
    if (mg_status s = require(mesh && policy_json, "mesh and policy_json must be non-null"))
        return s;
    return guarded([&] {
        const PolicyConfig policy = parse_policy_config(policy_json);
        const CheckOutcome outcome =
            run_check(mesh->mesh, policy, report_csv_path ? report_csv_path : "",
                      summary_json_path ? summary_json_path : "");
        if (feasible_out) *feasible_out = outcome.feasible ? 1 : 0;
    });
}

mg_status mg_field_read(const char* path, const mg_mesh* mesh, double* buffer, int64_t len) {
    if (mg_status s = require(path && mesh && buffer, "arguments must be non-null")) return s;
    if (mg_status s = require(len == mesh->mesh.node_count() * mesh->mesh.dim(),
                              "buffer length must equal dim * node_count"))
        return s;
    return guarded([&] {
        const std::vector<double> field = read_field(path, mesh->mesh);
        std::memcpy(buffer, field.data(), field.size() * sizeof(double));
    });
}

mg_status mg_field_write(const char* path, const mg_mesh* mesh, const double* buffer,
                         int64_t len) {
    if (mg_status s = require(path && mesh && buffer, "arguments must be non-null")) return s;
    return guarded([&] {
        write_field(path, mesh->mesh,
                    std::span<const double>(buffer, static_cast<size_t>(len)));
    });
}

mg_status mg_project_field(const mg_mesh* mesh, const char* policy_json, const double* field,
                           int64_t len, mg_projection** out) {
    if (mg_status s =
            require(mesh && policy_json && field && out, "arguments must be non-null"))
        return s;
    return guarded([&] {
        const PolicyConfig policy = parse_policy_config(policy_json);
        ProjectOutcome outcome =
            run_project(mesh->mesh, policy,
                        std::span<const double>(field, static_cast<size_t>(len)));
        *out = new mg_projection{std::move(outcome)};
    });
}

int64_t mg_projection_active_count(const mg_projection* proj) {
    return proj ? static_cast<int64_t>(proj->outcome.active.size()) : 0;
}

mg_status mg_projection_direction(const mg_projection* proj, double* buffer, int64_t len) {
    if (mg_status s = require(proj && buffer, "projection and buffer must be non-null")) return s;
    if (mg_status s = require(len == static_cast<int64_t>(proj->outcome.direction.size()),
                              "buffer length mismatch"))
        return s;
    std::memcpy(buffer, proj->outcome.direction.data(), len * sizeof(double));
    return MG_OK;
}

mg_status mg_projection_multipliers(const mg_projection* proj, double* buffer, int64_t len) {
    if (mg_status s = require(proj && buffer, "projection and buffer must be non-null")) return s;
    if (mg_status s = require(len == static_cast<int64_t>(proj->outcome.multipliers.size()),
                              "buffer length mismatch"))
        return s;
    std::memcpy(buffer, proj->outcome.multipliers.data(), len * sizeof(double));
    return MG_OK;
}

mg_status mg_projection_write_multipliers(const mg_projection* proj, const char* path) {
    if (mg_status s = require(proj && path, "projection and path must be non-null")) return s;
    return guarded([&] {
        std::ostringstream out;
        out << "# q " << proj->outcome.multipliers.size() << "\n";
        char buf[64];
        for (size_t r = 0; r < proj->outcome.multipliers.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%d %.17g\n", proj->outcome.active[r],
                          proj->outcome.multipliers[r]);
            out << buf;
        }
        atomic_write_file(path, out.str());
    });
}

void mg_projection_free(mg_projection* proj) { delete proj; }

mg_status mg_optimize(const char* config_json_path, const char* output_dir, int32_t threads,
                      int32_t write_every, int32_t disable_constraints, mg_run** out) {
    if (mg_status s = require(config_json_path && out,
                              "config_json_path and out must be non-null"))
        return s;
    return guarded([&] {
        const RunConfig config = load_run_config(config_json_path);
        RunOverrides overrides;
        if (output_dir) overrides.output_dir = output_dir;
        overrides.threads = threads;
        overrides.write_every = write_every >= 0 ? write_every : -1;
        overrides.disable_constraints = disable_constraints != 0;
        RunArtifacts artifacts = run_optimization(config, overrides);
        auto run = std::make_unique<mg_run>();
        run->result = std::move(artifacts.result);
        run->final_mesh = std::make_unique<mg_mesh>(mg_mesh{std::move(*artifacts.final_mesh)});
        *out = run.release();
    });
}

int64_t mg_run_iterations(const mg_run* run) { return run ? run->result.iterations : 0; }

double mg_run_final_functional(const mg_run* run) { return run ? run->result.J : 0.0; }

const char* mg_run_termination_reason(const mg_run* run) {
    return run ? run->result.termination.c_str() : "";
}

const mg_mesh* mg_run_final_mesh(const mg_run* run) {
    return run ? run->final_mesh.get() : nullptr;
}

void mg_run_free(mg_run* run) { delete run; }

}  // extern "C"
