#pragma once

#include <functional>
#include <random>
#include <vector>

#include "mesh.hpp"

namespace meshguard::testing {

// Two-triangle unit square with per-side boundary groups
// ("bottom", "right", "top", "left").
Mesh unit_square();

// Unit square split into four triangles around a center node; same side
// groups as unit_square. Node 4 is the center.
Mesh square_with_center();

// n x n structured grid of the unit square, two triangles per quad, all
// four sides in group "boundary".
Mesh square_grid(int n);

// Structured fan disk: `rings` concentric rings, 6k nodes on ring k,
// 6*rings^2 triangles, boundary group "outer". Radius 1, centered at the
// origin.
Mesh disk_mesh(int rings);

// Ball of radius 1 from a Kuhn-subdivided cube grid mapped radially onto
// the sphere; divisions^3 * 6 tetrahedra, boundary group "surface".
Mesh ball_mesh(int divisions);

// Central finite differences of f with respect to entry i of x.
double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, size_t i, double h = 1e-6);

// Solid angle at `apex` subtended by (a, b, c), via the Van Oosterom-
// Strackee tangent half-angle formula. Independent oracle for the
// dihedral-sum route.
double solid_angle_vos(Vec3 apex, Vec3 a, Vec3 b, Vec3 c);

// Random non-degenerate simplices in the unit box. Rejection sampling
// keeps |measure| above min_measure.
std::array<Vec2, 3> random_triangle(std::mt19937& rng, double min_area = 0.05);
std::array<Vec3, 4> random_tet(std::mt19937& rng, double min_volume = 0.01);

}  // namespace meshguard::testing

#include "optimizer.hpp"

namespace meshguard::testing {

// Small dense problem for exercising the descent loop and the projection
// machinery outside the mesh setting: f(x) = 0.5 |x - target|^2 under
// user-supplied smooth inequality constraints, Euclidean inner product.
class SyntheticProblem : public OptimizationProblem {
public:
    struct Constraint {
        std::function<double(std::span<const double>)> value;
        std::function<std::vector<double>(std::span<const double>)> gradient;
    };

    SyntheticProblem(std::vector<double> target, std::vector<Constraint> constraints,
                     double epsilon)
        : target_(std::move(target)), constraints_(std::move(constraints)), epsilon_(epsilon) {}

    long dof_count() const override { return static_cast<long>(target_.size()); }

    double evaluate(std::span<const double> x) override {
        double acc = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - target_[i];
            acc += d * d;
        }
        return 0.5 * acc;
    }

    void gradient(std::span<const double> x, std::vector<double>& b) override {
        b.resize(x.size());
        for (size_t i = 0; i < x.size(); ++i) b[i] = x[i] - target_[i];
    }

    void gradient_deformation(std::span<const double>, std::span<const double> b,
                              std::vector<double>& G) override {
        G.assign(b.begin(), b.end());
    }

    double inner_product(std::span<const double>, std::span<const double> u,
                         std::span<const double> v) override {
        double acc = 0.0;
        for (size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
        return acc;
    }

    long constraint_count() const override { return static_cast<long>(constraints_.size()); }
    long inequality_count() const override { return static_cast<long>(constraints_.size()); }
    double activity_tolerance() const override { return epsilon_; }

    void evaluate_constraints(std::span<const double> x, std::vector<double>& g) override {
        g.resize(constraints_.size());
        for (size_t k = 0; k < constraints_.size(); ++k) g[k] = constraints_[k].value(x);
    }

    ConstraintJacobian constraint_jacobian(std::span<const double> x,
                                           std::span<const int> active) override {
        ConstraintJacobian jac;
        jac.active.assign(active.begin(), active.end());
        CsrMatrix& A = jac.matrix;
        A.rows = static_cast<long>(active.size());
        A.cols = dof_count();
        A.row_ptr.assign(A.rows + 1, 0);
        for (long r = 0; r < A.rows; ++r) A.row_ptr[r + 1] = (r + 1) * A.cols;
        A.col.resize(A.rows * A.cols);
        A.val.resize(A.rows * A.cols);
        for (long r = 0; r < A.rows; ++r) {
            const std::vector<double> grad = constraints_[active[r]].gradient(x);
            for (long c = 0; c < A.cols; ++c) {
                A.col[r * A.cols + c] = c;
                A.val[r * A.cols + c] = grad[c];
            }
        }
        return jac;
    }

private:
    std::vector<double> target_;
    std::vector<Constraint> constraints_;
    double epsilon_;
};

}  // namespace meshguard::testing
