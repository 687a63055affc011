#include "functionals.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace meshguard {

namespace {

double term_weight(const FunctionalTerm& term) {
    return std::visit([](const auto& t) { return t.weight; }, term);
}

// Gradient of the signed area of triangle (i,j,k) w.r.t. vertex i is
// 0.5 * (yj - yk, xk - xj); cyclic in (i,j,k).
Vec2 area_gradient(Vec2 pj, Vec2 pk) { return {0.5 * (pj.y - pk.y), 0.5 * (pk.x - pj.x)}; }

std::vector<int> target_distance_nodes(const Mesh& mesh, const TargetDistanceTerm& term) {
    if (!term.boundary_group.empty()) return mesh.group_nodes(term.boundary_group);
    std::vector<int> nodes;
    for (long e = 0; e < mesh.boundary_elem_count(); ++e)
        for (int v : mesh.boundary_elem(e)) nodes.push_back(v);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

double star_distance(const StarReference& star, Vec2 p, Vec2* grad) {
    const double dx = p.x - star.center[0];
    const double dy = p.y - star.center[1];
    const double r = std::sqrt(dx * dx + dy * dy);
    if (r == 0.0) fail(ErrorKind::Numeric, "boundary node coincides with the star center");
    const double theta = std::atan2(dy, dx);
    const double target = star.radius * (1.0 + star.amplitude * std::cos(star.lobes * theta));
    const double phi = r - target;
    if (grad) {
        const double dtarget_dtheta =
            -star.radius * star.amplitude * star.lobes * std::sin(star.lobes * theta);
        // grad theta = (-dy, dx) / r^2
        grad->x = dx / r + dtarget_dtheta * dy / (r * r);
        grad->y = dy / r - dtarget_dtheta * dx / (r * r);
    }
    return phi;
}

double ellipsoid_distance(const EllipsoidReference& ell, Vec3 p, Vec3* grad) {
    const double dx = p.x - ell.center[0];
    const double dy = p.y - ell.center[1];
    const double dz = p.z - ell.center[2];
    const double sx = ell.semi_axes[0], sy = ell.semi_axes[1], sz = ell.semi_axes[2];
    const double rho =
        std::sqrt(dx * dx / (sx * sx) + dy * dy / (sy * sy) + dz * dz / (sz * sz));
    if (rho == 0.0) fail(ErrorKind::Numeric, "boundary node coincides with the ellipsoid center");
    if (grad) {
        grad->x = dx / (sx * sx * rho);
        grad->y = dy / (sy * sy * rho);
        grad->z = dz / (sz * sz * rho);
    }
    return rho - 1.0;
}

double boundary_measure(const Mesh& mesh) {
    double total = 0.0;
    if (mesh.dim() == 2) {
        for (long e = 0; e < mesh.boundary_elem_count(); ++e) {
            const auto nodes = mesh.boundary_elem(e);
            total += norm(mesh.point2(nodes[0]) - mesh.point2(nodes[1]));
        }
    } else {
        for (long e = 0; e < mesh.boundary_elem_count(); ++e) {
            const auto nodes = mesh.boundary_elem(e);
            const Vec3 a = mesh.point3(nodes[0]);
            total += 0.5 * norm(cross(mesh.point3(nodes[1]) - a, mesh.point3(nodes[2]) - a));
        }
    }
    return total;
}

struct BarycenterState {
    double volume = 0.0;
    double moment[3] = {0.0, 0.0, 0.0};  // integral of x over the domain
};

BarycenterState barycenter_state(const Mesh& mesh) {
    BarycenterState s;
    const int dim = mesh.dim();
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const double m = mesh.cell_measure(c);
        s.volume += m;
        const auto nodes = mesh.cell(c);
        for (int k = 0; k < dim; ++k) {
            double centroid = 0.0;
            for (int v = 0; v <= dim; ++v) centroid += mesh.coords()[nodes[v] * dim + k];
            centroid /= (dim + 1);
            s.moment[k] += m * centroid;
        }
    }
    return s;
}

}  // namespace

void FunctionalSpec::validate(const Mesh& mesh) const {
    if (terms.empty()) fail(ErrorKind::Argument, "functional must have at least one term");
    for (const auto& term : terms) {
        if (term_weight(term) < 0.0) fail(ErrorKind::Argument, "functional weights must be >= 0");
        if (const auto* vol = std::get_if<VolumeTerm>(&term)) {
            if (std::isnan(vol->target))
                fail(ErrorKind::Argument, "volume target is unresolved");
        }
        if (const auto* bc = std::get_if<BarycenterTerm>(&term)) {
            if (static_cast<int>(bc->target.size()) != mesh.dim())
                fail(ErrorKind::Argument, "barycenter target dimension does not match the mesh");
            for (double v : bc->target)
                if (std::isnan(v)) fail(ErrorKind::Argument, "barycenter target is unresolved");
        }
        if (const auto* td = std::get_if<TargetDistanceTerm>(&term)) {
            if (!td->boundary_group.empty() && !mesh.has_group(td->boundary_group))
                fail(ErrorKind::Argument,
                     "boundary group '" + td->boundary_group + "' does not exist in the mesh");
            const bool is_star = std::holds_alternative<StarReference>(td->reference);
            if (is_star && mesh.dim() != 2)
                fail(ErrorKind::Argument, "star reference requires a 2D mesh");
            if (!is_star && mesh.dim() != 3)
                fail(ErrorKind::Argument, "ellipsoid reference requires a 3D mesh");
        }
    }
}

double mesh_volume(const Mesh& mesh) {
    double total = 0.0;
    for (long c = 0; c < mesh.cell_count(); ++c) total += mesh.cell_measure(c);
    return total;
}

double evaluate_functional(const Mesh& mesh, const FunctionalSpec& spec) {
    double J = 0.0;
    for (const auto& term : spec.terms) {
        if (const auto* vol = std::get_if<VolumeTerm>(&term)) {
            const double diff = mesh_volume(mesh) - vol->target;
            J += 0.5 * vol->weight * diff * diff;
        } else if (const auto* bc = std::get_if<BarycenterTerm>(&term)) {
            const BarycenterState s = barycenter_state(mesh);
            double sq = 0.0;
            for (int k = 0; k < mesh.dim(); ++k) {
                const double diff = s.moment[k] / s.volume - bc->target[k];
                sq += diff * diff;
            }
            J += 0.5 * bc->weight * sq;
        } else if (const auto* per = std::get_if<PerimeterTerm>(&term)) {
            J += per->weight * boundary_measure(mesh);
        } else if (const auto* td = std::get_if<TargetDistanceTerm>(&term)) {
            const auto nodes = target_distance_nodes(mesh, *td);
            double sq = 0.0;
            if (mesh.dim() == 2) {
                const auto& star = std::get<StarReference>(td->reference);
                for (int nidx : nodes) {
                    const double phi = star_distance(star, mesh.point2(nidx), nullptr);
                    sq += phi * phi;
                }
            } else {
                const auto& ell = std::get<EllipsoidReference>(td->reference);
                for (int nidx : nodes) {
                    const double phi = ellipsoid_distance(ell, mesh.point3(nidx), nullptr);
                    sq += phi * phi;
                }
            }
            J += 0.5 * td->weight * sq;
        }
    }
    return J;
}

namespace {

// d(vol)/d(coords), accumulated scaled by `scale` into b.
void accumulate_volume_gradient(const Mesh& mesh, double scale, std::vector<double>& b) {
    const int dim = mesh.dim();
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const auto nodes = mesh.cell(c);
        if (dim == 2) {
            const Vec2 p0 = mesh.point2(nodes[0]);
            const Vec2 p1 = mesh.point2(nodes[1]);
            const Vec2 p2 = mesh.point2(nodes[2]);
            const Vec2 g0 = area_gradient(p1, p2);
            const Vec2 g1 = area_gradient(p2, p0);
            const Vec2 g2 = area_gradient(p0, p1);
            b[nodes[0] * 2] += scale * g0.x;
            b[nodes[0] * 2 + 1] += scale * g0.y;
            b[nodes[1] * 2] += scale * g1.x;
            b[nodes[1] * 2 + 1] += scale * g1.y;
            b[nodes[2] * 2] += scale * g2.x;
            b[nodes[2] * 2 + 1] += scale * g2.y;
        } else {
            const Vec3 p0 = mesh.point3(nodes[0]);
            const Vec3 p1 = mesh.point3(nodes[1]);
            const Vec3 p2 = mesh.point3(nodes[2]);
            const Vec3 p3 = mesh.point3(nodes[3]);
            const Vec3 g1 = (1.0 / 6.0) * cross(p2 - p0, p3 - p0);
            const Vec3 g2 = (1.0 / 6.0) * cross(p3 - p0, p1 - p0);
            const Vec3 g3 = (1.0 / 6.0) * cross(p1 - p0, p2 - p0);
            const Vec3 g0 = -1.0 * (g1 + g2 + g3);
            const Vec3 gs[4] = {g0, g1, g2, g3};
            for (int v = 0; v < 4; ++v) {
                b[nodes[v] * 3] += scale * gs[v].x;
                b[nodes[v] * 3 + 1] += scale * gs[v].y;
                b[nodes[v] * 3 + 2] += scale * gs[v].z;
            }
        }
    }
}

// d(moment_k)/d(coords) scaled by scale[k], plus the centroid part.
void accumulate_moment_gradient(const Mesh& mesh, const double scale[3], std::vector<double>& b) {
    const int dim = mesh.dim();
    const auto coords = mesh.coords();
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const auto nodes = mesh.cell(c);
        const double m = mesh.cell_measure(c);
        double centroid[3] = {0, 0, 0};
        for (int k = 0; k < dim; ++k) {
            for (int v = 0; v <= dim; ++v) centroid[k] += coords[nodes[v] * dim + k];
            centroid[k] /= (dim + 1);
        }
        // measure-gradient part: sum_k scale[k] * centroid[k] * d(m)/dx
        double measure_scale = 0.0;
        for (int k = 0; k < dim; ++k) measure_scale += scale[k] * centroid[k];
        if (dim == 2) {
            const Vec2 p0 = mesh.point2(nodes[0]);
            const Vec2 p1 = mesh.point2(nodes[1]);
            const Vec2 p2 = mesh.point2(nodes[2]);
            const Vec2 gs[3] = {area_gradient(p1, p2), area_gradient(p2, p0),
                                area_gradient(p0, p1)};
            for (int v = 0; v < 3; ++v) {
                b[nodes[v] * 2] += measure_scale * gs[v].x;
                b[nodes[v] * 2 + 1] += measure_scale * gs[v].y;
            }
        } else {
            const Vec3 p0 = mesh.point3(nodes[0]);
            const Vec3 p1 = mesh.point3(nodes[1]);
            const Vec3 p2 = mesh.point3(nodes[2]);
            const Vec3 p3 = mesh.point3(nodes[3]);
            const Vec3 g1 = (1.0 / 6.0) * cross(p2 - p0, p3 - p0);
            const Vec3 g2 = (1.0 / 6.0) * cross(p3 - p0, p1 - p0);
            const Vec3 g3 = (1.0 / 6.0) * cross(p1 - p0, p2 - p0);
            const Vec3 g0 = -1.0 * (g1 + g2 + g3);
            const Vec3 gs[4] = {g0, g1, g2, g3};
            for (int v = 0; v < 4; ++v) {
                b[nodes[v] * 3] += measure_scale * gs[v].x;
                b[nodes[v] * 3 + 1] += measure_scale * gs[v].y;
                b[nodes[v] * 3 + 2] += measure_scale * gs[v].z;
            }
        }
        // centroid part: d(centroid_k)/d(x_{v,k}) = 1/(dim+1)
        for (int v = 0; v <= dim; ++v)
            for (int k = 0; k < dim; ++k)
                b[nodes[v] * dim + k] += scale[k] * m / (dim + 1);
    }
}

void accumulate_perimeter_gradient(const Mesh& mesh, double weight, std::vector<double>& b) {
    if (mesh.dim() == 2) {
        for (long e = 0; e < mesh.boundary_elem_count(); ++e) {
            const auto nodes = mesh.boundary_elem(e);
            const Vec2 pa = mesh.point2(nodes[0]);
            const Vec2 pb = mesh.point2(nodes[1]);
            const Vec2 d = pa - pb;
            const double len = norm(d);
            if (len == 0.0) fail(ErrorKind::Degenerate, "zero-length boundary edge");
            b[nodes[0] * 2] += weight * d.x / len;
            b[nodes[0] * 2 + 1] += weight * d.y / len;
            b[nodes[1] * 2] -= weight * d.x / len;
            b[nodes[1] * 2 + 1] -= weight * d.y / len;
        }
    } else {
        for (long e = 0; e < mesh.boundary_elem_count(); ++e) {
            const auto nodes = mesh.boundary_elem(e);
            const Vec3 pa = mesh.point3(nodes[0]);
            const Vec3 pb = mesh.point3(nodes[1]);
            const Vec3 pc = mesh.point3(nodes[2]);
            const Vec3 n = cross(pb - pa, pc - pa);
            const double nn = norm(n);
            if (nn == 0.0) fail(ErrorKind::Degenerate, "zero-area boundary face");
            const Vec3 nhat = (1.0 / nn) * n;
            const Vec3 ga = 0.5 * cross(pb - pc, nhat);
            const Vec3 gb = 0.5 * cross(pc - pa, nhat);
            const Vec3 gc = 0.5 * cross(pa - pb, nhat);
            const Vec3 gs[3] = {ga, gb, gc};
            for (int v = 0; v < 3; ++v) {
                b[nodes[v] * 3] += weight * gs[v].x;
                b[nodes[v] * 3 + 1] += weight * gs[v].y;
                b[nodes[v] * 3 + 2] += weight * gs[v].z;
            }
        }
    }
}

}  // namespace

void functional_gradient(const Mesh& mesh, const FunctionalSpec& spec, std::vector<double>& b) {
    const int dim = mesh.dim();
    b.assign(static_cast<size_t>(mesh.node_count()) * dim, 0.0);

    for (const auto& term : spec.terms) {
        if (const auto* vol = std::get_if<VolumeTerm>(&term)) {
            const double diff = mesh_volume(mesh) - vol->target;
            accumulate_volume_gradient(mesh, vol->weight * diff, b);
        } else if (const auto* bc = std::get_if<BarycenterTerm>(&term)) {
            const BarycenterState s = barycenter_state(mesh);
            // J = w/2 |F/vol - tgt|^2; dJ = w r^T (dF/vol - F dvol/vol^2)
            double moment_scale[3] = {0, 0, 0};
            double volume_scale = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double r = s.moment[k] / s.volume - bc->target[k];
                moment_scale[k] = bc->weight * r / s.volume;
                volume_scale -= bc->weight * r * s.moment[k] / (s.volume * s.volume);
            }
            accumulate_moment_gradient(mesh, moment_scale, b);
            accumulate_volume_gradient(mesh, volume_scale, b);
        } else if (const auto* per = std::get_if<PerimeterTerm>(&term)) {
            accumulate_perimeter_gradient(mesh, per->weight, b);
        } else if (const auto* td = std::get_if<TargetDistanceTerm>(&term)) {
            const auto nodes = target_distance_nodes(mesh, *td);
            if (dim == 2) {
                const auto& star = std::get<StarReference>(td->reference);
                for (int nidx : nodes) {
                    Vec2 grad;
                    const double phi = star_distance(star, mesh.point2(nidx), &grad);
                    b[nidx * 2] += td->weight * phi * grad.x;
                    b[nidx * 2 + 1] += td->weight * phi * grad.y;
                }
            } else {
                const auto& ell = std::get<EllipsoidReference>(td->reference);
                for (int nidx : nodes) {
                    Vec3 grad;
                    const double phi = ellipsoid_distance(ell, mesh.point3(nidx), &grad);
                    b[nidx * 3] += td->weight * phi * grad.x;
                    b[nidx * 3 + 1] += td->weight * phi * grad.y;
                    b[nidx * 3 + 2] += td->weight * phi * grad.z;
                }
            }
        }
    }
}

}  // namespace meshguard
