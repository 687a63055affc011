#include "quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"

namespace meshguard {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Solid angle of a regular tetrahedron, the upper bound for a meaningful 3D
// minimum-angle threshold.
const double kRegularTetSolidAngle = std::acos(23.0 / 27.0);

std::array<double, 4> cell_angles(const Mesh& mesh, long c) {
    const auto nodes = mesh.cell(c);
    if (mesh.dim() == 2) {
        const auto a =
            triangle_angles(mesh.point2(nodes[0]), mesh.point2(nodes[1]), mesh.point2(nodes[2]));
        return {a[0], a[1], a[2], 0.0};
    }
    return tet_solid_angles(mesh.point3(nodes[0]), mesh.point3(nodes[1]), mesh.point3(nodes[2]),
                            mesh.point3(nodes[3]));
}

double cell_min_angle(const Mesh& mesh, long c) {
    const auto a = cell_angles(mesh, c);
    double m = a[0];
    for (int v = 1; v <= mesh.dim(); ++v) m = std::min(m, a[v]);
    return m;
}

}  // namespace

void ThresholdPolicy::validate(int dim) const {
    const double upper = (dim == 2) ? kPi / 3.0 : kRegularTetSolidAngle;
    if (kind == PolicyKind::Global || kind == PolicyKind::Combined) {
        if (!(alpha_thr > 0.0 && alpha_thr < upper)) {
            std::ostringstream msg;
            msg << "alpha_thr must lie in (0, " << upper << ") for dim " << dim << ", got "
                << alpha_thr;
            fail(ErrorKind::Argument, msg.str());
        }
    }
    if (kind == PolicyKind::Relative || kind == PolicyKind::Combined) {
        if (!(nu > 0.0 && nu < 1.0))
            fail(ErrorKind::Argument, "relative tolerance nu must lie in (0, 1)");
    }
}

std::vector<double> build_thresholds(const Mesh& mesh, const ThresholdPolicy& policy) {
    policy.validate(mesh.dim());
    const int verts = mesh.dim() + 1;
    std::vector<double> thresholds(static_cast<size_t>(mesh.cell_count()) * verts);

    if (policy.kind == PolicyKind::Global) {
        double worst = std::numeric_limits<double>::max();
        long worst_cell = -1;
        for (long c = 0; c < mesh.cell_count(); ++c) {
            const double m = cell_min_angle(mesh, c);
            if (m < worst) {
                worst = m;
                worst_cell = c;
            }
        }
        if (policy.alpha_thr > worst) {
            std::ostringstream msg;
            msg << "initial mesh is infeasible under global threshold " << policy.alpha_thr
                << ": cell " << worst_cell << " has minimum angle " << worst;
            fail(ErrorKind::Infeasible, msg.str());
        }
        std::fill(thresholds.begin(), thresholds.end(), policy.alpha_thr);
        return thresholds;
    }

    for (long c = 0; c < mesh.cell_count(); ++c) {
        const double min0 = cell_min_angle(mesh, c);
        double thr;
        if (policy.kind == PolicyKind::Relative) {
            thr = policy.nu * min0;
        } else {  // Combined
            thr = (min0 > policy.alpha_thr) ? policy.alpha_thr : policy.nu * min0;
        }
        for (int v = 0; v < verts; ++v) thresholds[c * verts + v] = thr;
    }
    return thresholds;
}

ConstraintSystem ConstraintSystem::build(const Mesh& mesh, const ThresholdPolicy& policy,
                                         std::span<const std::string> fixed_groups,
                                         double epsilon) {
    if (!(epsilon > 0.0)) fail(ErrorKind::Argument, "activity tolerance epsilon must be > 0");
    ConstraintSystem system;
    system.dim = mesh.dim();
    system.cell_count = mesh.cell_count();
    system.thresholds = build_thresholds(mesh, policy);
    system.epsilon = epsilon;
    system.fixed_nodes = mesh.group_nodes(fixed_groups);
    system.fixed_positions.reserve(system.fixed_nodes.size() * mesh.dim());
    const auto coords = mesh.coords();
    for (int node : system.fixed_nodes)
        for (int k = 0; k < mesh.dim(); ++k)
            system.fixed_positions.push_back(coords[static_cast<long>(node) * mesh.dim() + k]);
    return system;
}

void evaluate_constraints(const Mesh& mesh, const ConstraintSystem& system,
                          std::vector<double>& g, int threads) {
    if (mesh.dim() != system.dim || mesh.cell_count() != system.cell_count)
        fail(ErrorKind::Argument, "mesh does not match the constraint system");
    const int verts = mesh.dim() + 1;
    g.resize(system.total_count());
    parallel_for(static_cast<size_t>(mesh.cell_count()), threads, [&](size_t c) {
        const auto angles = cell_angles(mesh, static_cast<long>(c));
        for (int v = 0; v < verts; ++v)
            g[c * verts + v] = system.thresholds[c * verts + v] - angles[v];
    });
    const auto coords = mesh.coords();
    const long base = system.quality_count();
    for (size_t f = 0; f < system.fixed_nodes.size(); ++f) {
        const long node = system.fixed_nodes[f];
        for (int k = 0; k < system.dim; ++k)
            g[base + f * system.dim + k] =
                coords[node * system.dim + k] - system.fixed_positions[f * system.dim + k];
    }
}

std::vector<int> active_set(std::span<const double> g, const ConstraintSystem& system) {
    std::vector<int> active;
    const long nq = system.quality_count();
    for (long k = 0; k < nq; ++k)
        if (std::abs(g[k]) <= system.epsilon) active.push_back(static_cast<int>(k));
    for (long k = nq; k < system.total_count(); ++k) active.push_back(static_cast<int>(k));
    return active;
}

QualityStats mesh_quality(const Mesh& mesh) {
    QualityStats stats;
    stats.min_angle = std::numeric_limits<double>::max();
    stats.max_angle = 0.0;
    stats.max_aspect_ratio = 0.0;
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const auto angles = cell_angles(mesh, c);
        for (int v = 0; v <= mesh.dim(); ++v) {
            if (angles[v] < stats.min_angle) {
                stats.min_angle = angles[v];
                stats.worst_cell = c;
            }
            stats.max_angle = std::max(stats.max_angle, angles[v]);
        }
        const auto nodes = mesh.cell(c);
        const double aspect =
            mesh.dim() == 2
                ? triangle_aspect_ratio(mesh.point2(nodes[0]), mesh.point2(nodes[1]),
                                        mesh.point2(nodes[2]))
                : tet_aspect_ratio(mesh.point3(nodes[0]), mesh.point3(nodes[1]),
                                   mesh.point3(nodes[2]), mesh.point3(nodes[3]));
        stats.max_aspect_ratio = std::max(stats.max_aspect_ratio, aspect);
    }
    return stats;
}

std::string quality_report_csv(const Mesh& mesh) {
    std::ostringstream out;
    out << "cell_id,min_angle,max_angle,aspect_ratio\n";
    char buf[128];
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const auto angles = cell_angles(mesh, c);
        double lo = angles[0], hi = angles[0];
        for (int v = 1; v <= mesh.dim(); ++v) {
            lo = std::min(lo, angles[v]);
            hi = std::max(hi, angles[v]);
        }
        const auto nodes = mesh.cell(c);
        const double aspect =
            mesh.dim() == 2
                ? triangle_aspect_ratio(mesh.point2(nodes[0]), mesh.point2(nodes[1]),
                                        mesh.point2(nodes[2]))
                : tet_aspect_ratio(mesh.point3(nodes[0]), mesh.point3(nodes[1]),
                                   mesh.point3(nodes[2]), mesh.point3(nodes[3]));
        std::snprintf(buf, sizeof(buf), "%ld,%.12g,%.12g,%.12g\n", c, lo, hi, aspect);
        out << buf;
    }
    return out.str();
}

}  // namespace meshguard
