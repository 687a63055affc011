#pragma once

#include <array>
#include <cmath>

namespace meshguard {

struct Vec2 {
    double x{}, y{};
};

struct Vec3 {
    double x{}, y{}, z{};
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline double clamped_acos(double v) {
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return std::acos(v);
}

// Signed measures. Positive for counterclockwise triangles / positively
// oriented tetrahedra.
inline double triangle_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * cross(b - a, c - a);
}

inline double tet_volume(Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

// Derivative of the angle between vectors a and b with respect to a,
// T(a,b) = a x (a x b) / (|a| |a x (a x b)|).
Vec2 angle_derivative(Vec2 a, Vec2 b);
Vec3 angle_derivative(Vec3 a, Vec3 b);

// Interior angles at the three vertices, in vertex order. Arguments to
// acos are clamped to [-1, 1].
std::array<double, 3> triangle_angles(Vec2 a, Vec2 b, Vec2 c);

// grad[m][v] is the gradient of the angle at vertex m with respect to the
// coordinates of vertex v.
struct TriangleAngleGradients {
    std::array<std::array<Vec2, 3>, 3> grad;
};
TriangleAngleGradients triangle_angle_gradients(Vec2 a, Vec2 b, Vec2 c);

// Dihedral angle at the edge between vertices 0 and 1 (apex edge a-b with
// opposite vertices c and d).
double tet_dihedral_angle(Vec3 a, Vec3 b, Vec3 c, Vec3 d);

// Solid angles at the four vertices, computed as the sum of the three
// incident dihedral angles minus pi.
std::array<double, 4> tet_solid_angles(Vec3 a, Vec3 b, Vec3 c, Vec3 d);

struct TetSolidAngleGradients {
    std::array<std::array<Vec3, 4>, 4> grad;
};
TetSolidAngleGradients tet_solid_angle_gradients(Vec3 a, Vec3 b, Vec3 c, Vec3 d);

// Normalized aspect ratios: 1 for regular cells, growing without bound as a
// cell degenerates. Triangle: longest edge / (2 sqrt(3) inradius).
// Tetrahedron: longest edge / (2 sqrt(6) inradius).
double triangle_aspect_ratio(Vec2 a, Vec2 b, Vec2 c);
double tet_aspect_ratio(Vec3 a, Vec3 b, Vec3 c, Vec3 d);

}  // namespace meshguard
