#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace meshguard::testing {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Faces (sorted node tuples) appearing in exactly one cell.
template <int FaceNodes>
std::vector<std::array<int, FaceNodes>> boundary_faces(
    const std::vector<std::array<int, FaceNodes>>& faces) {
    std::map<std::array<int, FaceNodes>, std::pair<int, std::array<int, FaceNodes>>> count;
    for (const auto& face : faces) {
        auto key = face;
        std::sort(key.begin(), key.end());
        auto [it, inserted] = count.emplace(key, std::make_pair(0, face));
        it->second.first += 1;
    }
    std::vector<std::array<int, FaceNodes>> result;
    for (const auto& [key, value] : count)
        if (value.first == 1) result.push_back(value.second);
    return result;
}

}  // namespace

Mesh unit_square() {
    std::vector<double> coords = {0, 0, 1, 0, 1, 1, 0, 1};
    std::vector<int> cells = {0, 1, 2, 0, 2, 3};
    std::vector<int> boundary = {0, 1, 1, 2, 2, 3, 3, 0};
    std::vector<int> boundary_tags = {1, 2, 3, 4};
    std::vector<PhysicalGroup> groups = {
        {1, 1, "bottom"}, {2, 1, "right"}, {3, 1, "top"}, {4, 1, "left"}};
    return Mesh(2, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), {}, std::move(groups));
}

Mesh square_with_center() {
    std::vector<double> coords = {0, 0, 1, 0, 1, 1, 0, 1, 0.5, 0.5};
    std::vector<int> cells = {0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4};
    std::vector<int> boundary = {0, 1, 1, 2, 2, 3, 3, 0};
    std::vector<int> boundary_tags = {1, 2, 3, 4};
    std::vector<PhysicalGroup> groups = {
        {1, 1, "bottom"}, {2, 1, "right"}, {3, 1, "top"}, {4, 1, "left"}};
    return Mesh(2, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), {}, std::move(groups));
}

Mesh square_grid(int n) {
    const int nodes_per_axis = n + 1;
    auto node_id = [nodes_per_axis](int i, int j) { return i * nodes_per_axis + j; };
    std::vector<double> coords;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            coords.push_back(static_cast<double>(j) / n);
            coords.push_back(static_cast<double>(i) / n);
        }
    std::vector<int> cells;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int v00 = node_id(i, j), v01 = node_id(i, j + 1);
            const int v10 = node_id(i + 1, j), v11 = node_id(i + 1, j + 1);
            cells.insert(cells.end(), {v00, v01, v11});
            cells.insert(cells.end(), {v00, v11, v10});
        }
    }
    std::vector<int> boundary, boundary_tags;
    auto add_edge = [&](int a, int b) {
        boundary.push_back(a);
        boundary.push_back(b);
        boundary_tags.push_back(1);
    };
    for (int j = 0; j < n; ++j) add_edge(node_id(0, j), node_id(0, j + 1));
    for (int j = 0; j < n; ++j) add_edge(node_id(n, j), node_id(n, j + 1));
    for (int i = 0; i < n; ++i) add_edge(node_id(i, 0), node_id(i + 1, 0));
    for (int i = 0; i < n; ++i) add_edge(node_id(i, n), node_id(i + 1, n));
    std::vector<PhysicalGroup> groups = {{1, 1, "boundary"}};
    return Mesh(2, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), {}, std::move(groups));
}

Mesh disk_mesh(int rings) {
    std::vector<double> coords = {0.0, 0.0};
    std::vector<int> ring_start = {0};  // node index where ring k starts
    for (int k = 1; k <= rings; ++k) {
        ring_start.push_back(static_cast<int>(coords.size() / 2));
        const int nk = 6 * k;
        const double r = static_cast<double>(k) / rings;
        for (int j = 0; j < nk; ++j) {
            const double a = 2.0 * kPi * j / nk;
            coords.push_back(r * std::cos(a));
            coords.push_back(r * std::sin(a));
        }
    }

    std::vector<int> cells;
    // center fan
    for (int j = 0; j < 6; ++j) {
        cells.push_back(0);
        cells.push_back(ring_start[1] + j);
        cells.push_back(ring_start[1] + (j + 1) % 6);
    }
    // stitched ring bands
    for (int k = 2; k <= rings; ++k) {
        const int na = 6 * (k - 1);
        const int nb = 6 * k;
        const int in0 = ring_start[k - 1];
        const int out0 = ring_start[k];
        int i = 0, j = 0;
        while (i < na || j < nb) {
            const double in_next = (i + 1) * 2.0 * kPi / na;
            const double out_next = (j + 1) * 2.0 * kPi / nb;
            if (j < nb && (i >= na || out_next <= in_next)) {
                cells.push_back(in0 + i % na);
                cells.push_back(out0 + j % nb);
                cells.push_back(out0 + (j + 1) % nb);
                ++j;
            } else {
                cells.push_back(in0 + i % na);
                cells.push_back(out0 + j % nb);
                cells.push_back(in0 + (i + 1) % na);
                ++i;
            }
        }
    }

    std::vector<int> boundary, boundary_tags;
    const int n_outer = 6 * rings;
    for (int j = 0; j < n_outer; ++j) {
        boundary.push_back(ring_start[rings] + j);
        boundary.push_back(ring_start[rings] + (j + 1) % n_outer);
        boundary_tags.push_back(1);
    }
    std::vector<PhysicalGroup> groups = {{1, 1, "outer"}};
    return Mesh(2, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), {}, std::move(groups));
}

Mesh ball_mesh(int divisions) {
    const int m = divisions;
    const int nodes_per_axis = m + 1;
    auto node_id = [nodes_per_axis](int i, int j, int k) {
        return (i * nodes_per_axis + j) * nodes_per_axis + k;
    };

    std::vector<double> coords;
    coords.reserve(3 * nodes_per_axis * nodes_per_axis * nodes_per_axis);
    for (int i = 0; i <= m; ++i) {
        for (int j = 0; j <= m; ++j) {
            for (int k = 0; k <= m; ++k) {
                const double x = 2.0 * i / m - 1.0;
                const double y = 2.0 * j / m - 1.0;
                const double z = 2.0 * k / m - 1.0;
                // smooth cube-to-ball map; a diffeomorphism of the solid
                // cube onto the unit ball with bounded distortion
                const double x2 = x * x, y2 = y * y, z2 = z * z;
                coords.push_back(x * std::sqrt(1.0 - y2 / 2 - z2 / 2 + y2 * z2 / 3));
                coords.push_back(y * std::sqrt(1.0 - z2 / 2 - x2 / 2 + z2 * x2 / 3));
                coords.push_back(z * std::sqrt(1.0 - x2 / 2 - y2 / 2 + x2 * y2 / 3));
            }
        }
    }

    // Kuhn subdivision: six tets per hex along the main diagonal.
    static const int kPaths[6][2][3] = {
        {{1, 0, 0}, {1, 1, 0}}, {{1, 0, 0}, {1, 0, 1}}, {{0, 1, 0}, {1, 1, 0}},
        {{0, 1, 0}, {0, 1, 1}}, {{0, 0, 1}, {1, 0, 1}}, {{0, 0, 1}, {0, 1, 1}},
    };
    std::vector<int> cells;
    std::vector<std::array<int, 3>> faces;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                for (const auto& path : kPaths) {
                    const int v0 = node_id(i, j, k);
                    const int v1 = node_id(i + path[0][0], j + path[0][1], k + path[0][2]);
                    const int v2 = node_id(i + path[1][0], j + path[1][1], k + path[1][2]);
                    const int v3 = node_id(i + 1, j + 1, k + 1);
                    cells.insert(cells.end(), {v0, v1, v2, v3});
                }
            }
        }
    }

    for (size_t c = 0; c < cells.size() / 4; ++c) {
        const int* t = cells.data() + 4 * c;
        faces.push_back({t[0], t[1], t[2]});
        faces.push_back({t[0], t[1], t[3]});
        faces.push_back({t[0], t[2], t[3]});
        faces.push_back({t[1], t[2], t[3]});
    }
    const auto surface = boundary_faces<3>(faces);

    std::vector<int> boundary, boundary_tags;
    for (const auto& face : surface) {
        boundary.insert(boundary.end(), face.begin(), face.end());
        boundary_tags.push_back(1);
    }
    std::vector<PhysicalGroup> groups = {{1, 2, "surface"}};
    return Mesh(3, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), {}, std::move(groups));
}

double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, size_t i, double h) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

double solid_angle_vos(Vec3 apex, Vec3 a, Vec3 b, Vec3 c) {
    const Vec3 r1 = a - apex;
    const Vec3 r2 = b - apex;
    const Vec3 r3 = c - apex;
    const double n1 = norm(r1), n2 = norm(r2), n3 = norm(r3);
    const double triple = std::abs(dot(r1, cross(r2, r3)));
    const double denom =
        n1 * n2 * n3 + dot(r1, r2) * n3 + dot(r1, r3) * n2 + dot(r2, r3) * n1;
    return 2.0 * std::atan2(triple, denom);
}

std::array<Vec2, 3> random_triangle(std::mt19937& rng, double min_area) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    while (true) {
        std::array<Vec2, 3> p;
        for (auto& v : p) v = {uniform(rng), uniform(rng)};
        if (std::abs(triangle_area(p[0], p[1], p[2])) >= min_area) return p;
    }
}

std::array<Vec3, 4> random_tet(std::mt19937& rng, double min_volume) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    while (true) {
        std::array<Vec3, 4> p;
        for (auto& v : p) v = {uniform(rng), uniform(rng), uniform(rng)};
        if (std::abs(tet_volume(p[0], p[1], p[2], p[3])) >= min_volume) return p;
    }
}

}  // namespace meshguard::testing
