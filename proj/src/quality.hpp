#pragma once

#include <span>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace meshguard {

enum class PolicyKind { Global, Relative, Combined };

// Minimum (solid) angle threshold policy. Global uses alpha_thr for every
// cell; Relative scales each cell's initial minimum angle by nu; Combined
// uses alpha_thr where the initial minimum exceeds it and nu * initial
// minimum elsewhere. Units: radians in 2D, steradians in 3D.
struct ThresholdPolicy {
    PolicyKind kind = PolicyKind::Global;
    double alpha_thr = 0.0;
    double nu = 0.0;

    void validate(int dim) const;
};

// Per-constraint thresholds, length (dim+1) * cell_count, cell-major with
// one entry per cell vertex. Throws ErrorKind::Infeasible (naming the worst
// cell) if the initial mesh violates a Global threshold.
std::vector<double> build_thresholds(const Mesh& mesh, const ThresholdPolicy& policy);

// Constraint row layout: quality rows first, cell-major and local-vertex-
// minor (row = cell * (dim+1) + vertex), then equality rows for fixed
// nodes, componentwise (row = quality_count + f * dim + component for the
// f-th fixed node). Thresholds and fixed positions are frozen from the
// mesh the system was built on.
struct ConstraintSystem {
    int dim = 0;
    long cell_count = 0;
    std::vector<double> thresholds;
    std::vector<int> fixed_nodes;          // sorted unique
    std::vector<double> fixed_positions;   // dim per fixed node
    double epsilon = 0.0;

    long quality_count() const { return static_cast<long>(thresholds.size()); }
    long equality_count() const { return static_cast<long>(fixed_nodes.size()) * dim; }
    long total_count() const { return quality_count() + equality_count(); }

    long row_of_cell_vertex(long cell, int vertex) const { return cell * (dim + 1) + vertex; }

    static ConstraintSystem build(const Mesh& mesh, const ThresholdPolicy& policy,
                                  std::span<const std::string> fixed_groups, double epsilon);
};

// g_m = alpha_thr - alpha_m for quality rows, v - v0 componentwise for
// fixed-node rows. Deterministic layout per ConstraintSystem; parallel
// evaluation writes into preallocated slots.
void evaluate_constraints(const Mesh& mesh, const ConstraintSystem& system,
                          std::vector<double>& g, int threads = 1);

// Active rows: every equality row plus inequality rows with |g_k| <= eps,
// ascending.
std::vector<int> active_set(std::span<const double> g, const ConstraintSystem& system);

struct QualityStats {
    double min_angle = 0.0;
    double max_angle = 0.0;
    double max_aspect_ratio = 0.0;
    long worst_cell = -1;  // cell attaining min_angle
};

QualityStats mesh_quality(const Mesh& mesh);

// CSV report, one row per cell: cell_id,min_angle,max_angle,aspect_ratio.
std::string quality_report_csv(const Mesh& mesh);

}  // namespace meshguard
