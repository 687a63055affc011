#include <doctest.h>

#include <cmath>
#include <random>

#include "geometry.hpp"
#include "test_util.hpp"

using namespace meshguard;
using namespace meshguard::testing;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("signed cell measures") {
    CHECK(triangle_area({0, 0}, {1, 0}, {0, 1}) == doctest::Approx(0.5));
    CHECK(tet_volume({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}) ==
          doctest::Approx(1.0 / 6.0));
    // swapped nodes signal inversion
    CHECK(triangle_area({0, 0}, {0, 1}, {1, 0}) == doctest::Approx(-0.5));
}

TEST_CASE("measure is translation invariant and scales as h^d") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const auto tri = random_triangle(rng);
        const double area = triangle_area(tri[0], tri[1], tri[2]);
        const Vec2 shift{1.7, -2.3};
        CHECK(triangle_area(tri[0] + shift, tri[1] + shift, tri[2] + shift) ==
              doctest::Approx(area).epsilon(1e-12));
        const double h = 2.5;
        CHECK(triangle_area(h * tri[0], h * tri[1], h * tri[2]) ==
              doctest::Approx(h * h * area).epsilon(1e-12));

        const auto tet = random_tet(rng);
        const double volume = tet_volume(tet[0], tet[1], tet[2], tet[3]);
        const Vec3 shift3{0.3, 1.1, -0.7};
        CHECK(tet_volume(tet[0] + shift3, tet[1] + shift3, tet[2] + shift3, tet[3] + shift3) ==
              doctest::Approx(volume).epsilon(1e-12));
        CHECK(tet_volume(h * tet[0], h * tet[1], h * tet[2], h * tet[3]) ==
              doctest::Approx(h * h * h * volume).epsilon(1e-12));
    }
}

TEST_CASE("triangle angles: fixtures and angle sum") {
    const auto equilateral = triangle_angles({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0});
    for (double a : equilateral) CHECK(a == doctest::Approx(kPi / 3.0).epsilon(1e-14));

    const auto right = triangle_angles({0, 0}, {1, 0}, {0, 1});
    CHECK(right[0] == doctest::Approx(kPi / 2.0));
    CHECK(right[1] == doctest::Approx(kPi / 4.0));
    CHECK(right[2] == doctest::Approx(kPi / 4.0));

    std::mt19937 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto tri = random_triangle(rng, 0.01);
        const auto angles = triangle_angles(tri[0], tri[1], tri[2]);
        CHECK(angles[0] + angles[1] + angles[2] == doctest::Approx(kPi).epsilon(1e-12));
        for (double a : angles) {
            CHECK(a > 0.0);
            CHECK(a < kPi);
        }
    }
}

TEST_CASE("triangle angle gradients match finite differences") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto tri = random_triangle(rng);
        const auto grads = triangle_angle_gradients(tri[0], tri[1], tri[2]);
        std::vector<double> x = {tri[0].x, tri[0].y, tri[1].x, tri[1].y, tri[2].x, tri[2].y};
        for (int m = 0; m < 3; ++m) {
            auto angle_m = [m](const std::vector<double>& v) {
                return triangle_angles({v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]})[m];
            };
            for (int vtx = 0; vtx < 3; ++vtx) {
                const double gx = grads.grad[m][vtx].x;
                const double gy = grads.grad[m][vtx].y;
                const double fx = central_difference(angle_m, x, 2 * vtx);
                const double fy = central_difference(angle_m, x, 2 * vtx + 1);
                const double scale = std::max({1e-8, std::abs(fx), std::abs(fy)});
                CHECK(std::abs(gx - fx) / scale <= 1e-6);
                CHECK(std::abs(gy - fy) / scale <= 1e-6);
            }
        }
    }
}

TEST_CASE("triangle angle gradients: structural identities") {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto tri = random_triangle(rng);
        const auto grads = triangle_angle_gradients(tri[0], tri[1], tri[2]);
        // translation invariance: gradients of one angle sum to zero
        for (int m = 0; m < 3; ++m) {
            Vec2 sum{0, 0};
            for (int vtx = 0; vtx < 3; ++vtx) sum = sum + grads.grad[m][vtx];
            CHECK(std::abs(sum.x) <= 1e-12);
            CHECK(std::abs(sum.y) <= 1e-12);
        }
        // angle sum is constant: gradients of the three angles cancel per vertex
        for (int vtx = 0; vtx < 3; ++vtx) {
            Vec2 sum{0, 0};
            for (int m = 0; m < 3; ++m) sum = sum + grads.grad[m][vtx];
            CHECK(std::abs(sum.x) <= 1e-12);
            CHECK(std::abs(sum.y) <= 1e-12);
        }
    }
}

TEST_CASE("tet solid angles: fixtures") {
    // regular tetrahedron
    const Vec3 a{1, 1, 1}, b{1, -1, -1}, c{-1, 1, -1}, d{-1, -1, 1};
    const auto regular = tet_solid_angles(a, b, c, d);
    const double expected = std::acos(23.0 / 27.0);
    for (double angle : regular) CHECK(std::abs(angle - expected) <= 1e-12);

    // unit corner: octant of the full sphere at the right-angle vertex
    const auto corner = tet_solid_angles({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    CHECK(std::abs(corner[0] - kPi / 2.0) <= 1e-12);
}

TEST_CASE("tet solid angles agree with the Van Oosterom-Strackee oracle") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto tet = random_tet(rng);
        const auto angles = tet_solid_angles(tet[0], tet[1], tet[2], tet[3]);
        double total = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double oracle =
                solid_angle_vos(tet[i], tet[(i + 1) % 4], tet[(i + 2) % 4], tet[(i + 3) % 4]);
            CHECK(std::abs(angles[i] - oracle) <= 1e-10);
            CHECK(angles[i] > 0.0);
            CHECK(angles[i] < 2.0 * kPi);
            total += angles[i];
        }
        CHECK(total <= 2.0 * kPi + 1e-12);
    }
}

TEST_CASE("tet solid angle gradients match finite differences") {
    std::mt19937 rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const auto tet = random_tet(rng, 0.02);
        const auto grads = tet_solid_angle_gradients(tet[0], tet[1], tet[2], tet[3]);
        std::vector<double> x(12);
        for (int v = 0; v < 4; ++v) {
            x[3 * v] = tet[v].x;
            x[3 * v + 1] = tet[v].y;
            x[3 * v + 2] = tet[v].z;
        }
        for (int m = 0; m < 4; ++m) {
            auto angle_m = [m](const std::vector<double>& v) {
                return tet_solid_angles({v[0], v[1], v[2]}, {v[3], v[4], v[5]},
                                        {v[6], v[7], v[8]}, {v[9], v[10], v[11]})[m];
            };
            for (int vtx = 0; vtx < 4; ++vtx) {
                const double analytic[3] = {grads.grad[m][vtx].x, grads.grad[m][vtx].y,
                                            grads.grad[m][vtx].z};
                for (int k = 0; k < 3; ++k) {
                    const double fd = central_difference(angle_m, x, 3 * vtx + k);
                    const double scale = std::max(1e-8, std::abs(fd));
                    CHECK(std::abs(analytic[k] - fd) / scale <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("tet solid angle gradients: invariances") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto tet = random_tet(rng, 0.02);
        const auto grads = tet_solid_angle_gradients(tet[0], tet[1], tet[2], tet[3]);
        for (int m = 0; m < 4; ++m) {
            Vec3 sum{0, 0, 0};
            for (int vtx = 0; vtx < 4; ++vtx) sum = sum + grads.grad[m][vtx];
            CHECK(norm(sum) <= 1e-12);
        }
    }

    // rotation equivariance: rotating the tet rotates every gradient
    const double angle = 0.83;
    const double ca = std::cos(angle), sa = std::sin(angle);
    auto rotate = [&](Vec3 v) {
        // rotation about the z axis then the x axis
        const Vec3 rz{ca * v.x - sa * v.y, sa * v.x + ca * v.y, v.z};
        return Vec3{rz.x, ca * rz.y - sa * rz.z, sa * rz.y + ca * rz.z};
    };
    for (int trial = 0; trial < 20; ++trial) {
        const auto tet = random_tet(rng, 0.02);
        const auto grads = tet_solid_angle_gradients(tet[0], tet[1], tet[2], tet[3]);
        const auto rotated = tet_solid_angle_gradients(rotate(tet[0]), rotate(tet[1]),
                                                       rotate(tet[2]), rotate(tet[3]));
        for (int m = 0; m < 4; ++m)
            for (int vtx = 0; vtx < 4; ++vtx)
                CHECK(norm(rotated.grad[m][vtx] - rotate(grads.grad[m][vtx])) <= 1e-10);
    }
}

TEST_CASE("aspect ratios are 1 for regular cells") {
    CHECK(triangle_aspect_ratio({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tet_aspect_ratio({1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // squashed triangle degrades
    CHECK(triangle_aspect_ratio({0, 0}, {1, 0}, {0.5, 0.05}) > 3.0);
}
