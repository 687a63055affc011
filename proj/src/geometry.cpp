#include "geometry.hpp"

#include "errors.hpp"

namespace meshguard {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void degenerate(const char* what) {
    fail(ErrorKind::Degenerate, std::string("degenerate cell: ") + what);
}

}  // namespace

Vec2 angle_derivative(Vec2 a, Vec2 b) {
    // With zero-padded cross products, a x (a x b) = c * (a.y, -a.x) where
    // c = a x b, so the normalized form reduces to sign(c) (a.y, -a.x)/|a|^2.
    const double c = cross(a, b);
    const double aa = dot(a, a);
    if (aa == 0.0 || c == 0.0) degenerate("collinear edge vectors");
    const double s = (c > 0.0 ? 1.0 : -1.0) / aa;
    return {s * a.y, -s * a.x};
}

Vec3 angle_derivative(Vec3 a, Vec3 b) {
    const Vec3 w = cross(a, cross(a, b));
    const double na = norm(a);
    const double nw = norm(w);
    if (na == 0.0 || nw == 0.0) degenerate("parallel vectors in angle derivative");
    return (1.0 / (na * nw)) * w;
}

std::array<double, 3> triangle_angles(Vec2 a, Vec2 b, Vec2 c) {
    const std::array<Vec2, 3> p{a, b, c};
    std::array<double, 3> angles{};
    for (int i = 0; i < 3; ++i) {
        const Vec2 u = p[i] - p[(i + 1) % 3];
        const Vec2 v = p[i] - p[(i + 2) % 3];
        const double nu = norm(u);
        const double nv = norm(v);
        if (nu == 0.0 || nv == 0.0) degenerate("zero edge length");
        angles[i] = clamped_acos(dot(u, v) / (nu * nv));
    }
    return angles;
}

TriangleAngleGradients triangle_angle_gradients(Vec2 a, Vec2 b, Vec2 c) {
    const std::array<Vec2, 3> p{a, b, c};
    TriangleAngleGradients out;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        const Vec2 eij = p[i] - p[j];
        const Vec2 eik = p[i] - p[k];
        const Vec2 tij = angle_derivative(eij, eik);
        const Vec2 tik = angle_derivative(eik, eij);
        out.grad[i][i] = tij + tik;
        out.grad[i][j] = {-tij.x, -tij.y};
        out.grad[i][k] = {-tik.x, -tik.y};
    }
    return out;
}

double tet_dihedral_angle(Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    const Vec3 nabc = cross(b - a, c - a);
    const Vec3 nabd = cross(b - a, d - a);
    const double n1 = norm(nabc);
    const double n2 = norm(nabd);
    if (n1 == 0.0 || n2 == 0.0) degenerate("zero face normal");
    return clamped_acos(dot(nabc, nabd) / (n1 * n2));
}

std::array<double, 4> tet_solid_angles(Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    const std::array<Vec3, 4> p{a, b, c, d};
    std::array<double, 4> angles{};
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4;
        const int k = (i + 2) % 4;
        const int l = (i + 3) % 4;
        // The dihedral formula is symmetric in the opposite pair, so the
        // vertex ordering of (j,k,l) does not matter here.
        const double dij = tet_dihedral_angle(p[i], p[j], p[k], p[l]);
        const double dik = tet_dihedral_angle(p[i], p[k], p[j], p[l]);
        const double dil = tet_dihedral_angle(p[i], p[l], p[j], p[k]);
        angles[i] = dij + dik + dil - kPi;
    }
    return angles;
}

namespace {

// Gradient of the solid angle at p[i] with respect to all four vertices.
// e_pq = p[p] - p[q], n_pqr = e_pq x e_pr.
void solid_angle_gradient_at(const std::array<Vec3, 4>& p, int i, int j, int k, int l,
                             std::array<Vec3, 4>& grad) {
    const Vec3 eij = p[i] - p[j];
    const Vec3 eik = p[i] - p[k];
    const Vec3 eil = p[i] - p[l];
    const Vec3 ejk = p[j] - p[k];
    const Vec3 ejl = p[j] - p[l];
    const Vec3 ekl = p[k] - p[l];

    const Vec3 nijk = cross(eij, eik);
    const Vec3 nijl = cross(eij, eil);
    const Vec3 nikj = cross(eik, eij);
    const Vec3 nikl = cross(eik, eil);
    const Vec3 nilj = cross(eil, eij);
    const Vec3 nilk = cross(eil, eik);

    const Vec3 t_ijk_ijl = angle_derivative(nijk, nijl);
    const Vec3 t_ijl_ijk = angle_derivative(nijl, nijk);
    const Vec3 t_ikj_ikl = angle_derivative(nikj, nikl);
    const Vec3 t_ikl_ikj = angle_derivative(nikl, nikj);
    const Vec3 t_ilj_ilk = angle_derivative(nilj, nilk);
    const Vec3 t_ilk_ilj = angle_derivative(nilk, nilj);

    grad[i] = {0, 0, 0};
    grad[i] = grad[i] - cross(t_ijk_ijl - t_ikj_ikl, ejk);
    grad[i] = grad[i] - cross(t_ijl_ijk - t_ilj_ilk, ejl);
    grad[i] = grad[i] - cross(t_ikl_ikj - t_ilk_ilj, ekl);

    grad[j] = {0, 0, 0};
    grad[j] = grad[j] - cross(t_ikj_ikl - t_ijk_ijl, eik);
    grad[j] = grad[j] - cross(t_ilj_ilk - t_ijl_ijk, eil);

    grad[k] = {0, 0, 0};
    grad[k] = grad[k] - cross(t_ijk_ijl - t_ikj_ikl, eij);
    grad[k] = grad[k] - cross(t_ilk_ilj - t_ikl_ikj, eil);

    grad[l] = {0, 0, 0};
    grad[l] = grad[l] - cross(t_ijl_ijk - t_ilj_ilk, eij);
    grad[l] = grad[l] - cross(t_ikl_ikj - t_ilk_ilj, eik);
}

}  // namespace

TetSolidAngleGradients tet_solid_angle_gradients(Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    const std::array<Vec3, 4> p{a, b, c, d};
    TetSolidAngleGradients out;
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4;
        const int k = (i + 2) % 4;
        const int l = (i + 3) % 4;
        solid_angle_gradient_at(p, i, j, k, l, out.grad[i]);
    }
    return out;
}

double triangle_aspect_ratio(Vec2 a, Vec2 b, Vec2 c) {
    const double la = norm(b - a);
    const double lb = norm(c - b);
    const double lc = norm(a - c);
    const double longest = std::max(la, std::max(lb, lc));
    const double area = std::abs(triangle_area(a, b, c));
    if (area == 0.0) degenerate("zero area in aspect ratio");
    const double inradius = area / (0.5 * (la + lb + lc));
    return longest / (2.0 * std::sqrt(3.0) * inradius);
}

double tet_aspect_ratio(Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    const std::array<Vec3, 4> p{a, b, c, d};
    double longest = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) longest = std::max(longest, norm(p[i] - p[j]));
    double face_area = 0.0;
    for (int i = 0; i < 4; ++i) {
        // face (i, i+1, i+2); the four cyclic triples cover all faces
        const Vec3 u = p[(i + 1) % 4] - p[i];
        const Vec3 v = p[(i + 2) % 4] - p[i];
        face_area += 0.5 * norm(cross(u, v));
    }
    const double volume = std::abs(tet_volume(a, b, c, d));
    if (volume == 0.0 || face_area == 0.0) degenerate("zero volume in aspect ratio");
    const double inradius = 3.0 * volume / face_area;
    return longest / (2.0 * std::sqrt(6.0) * inradius);
}

}  // namespace meshguard
