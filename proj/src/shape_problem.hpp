#pragma once

#include <string>
#include <vector>

#include "elasticity.hpp"
#include "functionals.hpp"
#include "optimizer.hpp"
#include "quality.hpp"

namespace meshguard {

// Shape optimization problem over the flat node coordinate vector of a
// simplicial mesh. The gradient deformation solves the linear-elasticity
// problem a(G, V) = dJ[V]; the quality constraints bound every triangle
// angle / tetrahedral solid angle from below by the frozen per-cell
// thresholds, plus componentwise equality rows pinning fixed-boundary
// nodes.
class ShapeProblem : public OptimizationProblem {
public:
    ShapeProblem(Mesh mesh, FunctionalSpec functional, ElasticityParams elasticity,
                 ConstraintSystem constraints, std::vector<int> fixed_nodes, int threads = 1);

    long dof_count() const override;
    double evaluate(std::span<const double> x) override;
    void gradient(std::span<const double> x, std::vector<double>& b) override;
    void gradient_deformation(std::span<const double> x, std::span<const double> b,
                              std::vector<double>& G) override;
    double inner_product(std::span<const double> x, std::span<const double> u,
                         std::span<const double> v) override;
    long constraint_count() const override;
    long inequality_count() const override;
    double activity_tolerance() const override;
    void evaluate_constraints(std::span<const double> x, std::vector<double>& g) override;
    ConstraintJacobian constraint_jacobian(std::span<const double> x,
                                           std::span<const int> active) override;
    void iterate_statistics(std::span<const double> x, IterationRecord& record) override;

    const Mesh& mesh() const { return mesh_; }
    Mesh& mesh() { return mesh_; }
    const ConstraintSystem& constraints() const { return constraints_; }
    long deformation_solver_iterations() const { return deformation_iterations_; }

private:
    Mesh mesh_;
    FunctionalSpec functional_;
    ElasticityParams elasticity_;
    ConstraintSystem constraints_;
    std::vector<int> fixed_nodes_;
    int threads_;

    // Stiffness operator cached at the iterate of the latest
    // gradient_deformation call; inner_product uses it.
    CsrMatrix stiffness_;
    bool stiffness_valid_ = false;
    long deformation_iterations_ = 0;

    void stamp(std::span<const double> x) { mesh_.set_coords(x); }
};

}  // namespace meshguard
