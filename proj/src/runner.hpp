#pragma once

#include <memory>
#include <string>

#include "config.hpp"
#include "mesh.hpp"
#include "optimizer.hpp"

namespace meshguard {

struct CheckOutcome {
    QualityStats stats;
    bool feasible = false;
    std::string summary_json;
};

// Evaluate the mesh against the policy; optionally write the CSV report
// and JSON summary. Feasible iff building the constraint thresholds
// succeeds (initial-mesh feasibility).
CheckOutcome run_check(const Mesh& mesh, const PolicyConfig& policy,
                       const std::string& report_csv_path, const std::string& summary_json_path);

struct ProjectOutcome {
    std::vector<double> direction;
    std::vector<double> multipliers;
    std::vector<int> active;
    double tangency_residual = 0.0;
};

ProjectOutcome run_project(const Mesh& mesh, const PolicyConfig& policy,
                           std::span<const double> field);

struct RunArtifacts {
    OptimizeResult result;
    std::unique_ptr<Mesh> final_mesh;
};

struct RunOverrides {
    std::string output_dir;       // empty keeps the config value
    int threads = 0;              // <= 0 keeps the config value
    int write_every = -1;         // < 0 keeps the config value
    bool disable_constraints = false;
};

// Load the mesh, build the shape problem and run the optimization,
// writing run_log.jsonl, final.msh and optional iterate snapshots into the
// output directory. An extra observer may be supplied for tests.
RunArtifacts run_optimization(const RunConfig& config, const RunOverrides& overrides = {},
                              const IterationObserver& extra_observer = {});

// Field file helpers (one line per node, dim columns).
std::vector<double> read_field(const std::string& path, const Mesh& mesh);
void write_field(const std::string& path, const Mesh& mesh, std::span<const double> field);

std::string iteration_record_json(const IterationRecord& record);

}  // namespace meshguard
