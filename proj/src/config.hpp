#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elasticity.hpp"
#include "functionals.hpp"
#include "optimizer.hpp"
#include "quality.hpp"

namespace meshguard {

// Threshold policy + activity tolerance + fixed groups, the common part of
// the `check`/`project` policy files and the full run configuration.
struct PolicyConfig {
    ThresholdPolicy policy;
    double epsilon = 1e-2;
    std::vector<std::string> fixed_boundary_groups;
};

struct RunConfig {
    std::string mesh_path;
    std::vector<std::string> fixed_boundary_groups;
    ThresholdPolicy threshold_policy;
    double epsilon = 1e-2;
    ElasticityParams elasticity;
    FunctionalSpec functional;
    SearchMethod method = SearchMethod::GradientDescent;
    int lbfgs_memory = 5;
    double t_0 = 1.0;
    double sigma = 1e-4;
    double omega = 0.5;
    double tau_stop = 1e-3;
    long n_max = 100;
    bool constraints_enabled = true;
    double kkt_tolerance = 1e-8;
    std::string output_dir = "out";
    int threads = 1;
    int write_every = 0;

    OptimizeOptions optimize_options() const;
};

// Parse from JSON text. Unknown fields are rejected to catch typos early.
// Volume/barycenter targets may be omitted to mean "frozen from the
// initial mesh"; see resolve_functional_targets.
PolicyConfig parse_policy_config(const std::string& json_text);
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fill omitted volume/barycenter targets from the mesh.
void resolve_functional_targets(FunctionalSpec& spec, const Mesh& mesh);

}  // namespace meshguard
