#include "shape_problem.hpp"

#include "errors.hpp"

namespace meshguard {

ShapeProblem::ShapeProblem(Mesh mesh, FunctionalSpec functional, ElasticityParams elasticity,
                           ConstraintSystem constraints, std::vector<int> fixed_nodes,
                           int threads)
    : mesh_(std::move(mesh)),
      functional_(std::move(functional)),
      elasticity_(std::move(elasticity)),
      constraints_(std::move(constraints)),
      fixed_nodes_(std::move(fixed_nodes)),
      threads_(threads) {
    functional_.validate(mesh_);
    elasticity_.validate(mesh_.dim(), !fixed_nodes_.empty());
}

long ShapeProblem::dof_count() const { return mesh_.node_count() * mesh_.dim(); }

double ShapeProblem::evaluate(std::span<const double> x) {
    stamp(x);
    return evaluate_functional(mesh_, functional_);
}

void ShapeProblem::gradient(std::span<const double> x, std::vector<double>& b) {
    stamp(x);
    functional_gradient(mesh_, functional_, b);
}

void ShapeProblem::gradient_deformation(std::span<const double> x, std::span<const double> b,
                                        std::vector<double>& G) {
    stamp(x);
    stiffness_ = assemble_stiffness(mesh_, elasticity_, fixed_nodes_, threads_);
    stiffness_valid_ = true;
    const DeformationSolveResult solve =
        meshguard::gradient_deformation(stiffness_, fixed_nodes_, mesh_.dim(), b, G);
    deformation_iterations_ = solve.iterations;
}

double ShapeProblem::inner_product(std::span<const double> /*x*/, std::span<const double> u,
                                   std::span<const double> v) {
    // a(u, v) with the stiffness frozen at the latest gradient-deformation
    // iterate; the descent loop only queries it there.
    if (!stiffness_valid_)
        fail(ErrorKind::Argument, "inner_product called before gradient_deformation");
    std::vector<double> Kv(v.size());
    stiffness_.matvec(v, Kv);
    double acc = 0.0;
    for (size_t i = 0; i < u.size(); ++i) acc += u[i] * Kv[i];
    return acc;
}

long ShapeProblem::constraint_count() const { return constraints_.total_count(); }

long ShapeProblem::inequality_count() const { return constraints_.quality_count(); }

double ShapeProblem::activity_tolerance() const { return constraints_.epsilon; }

void ShapeProblem::evaluate_constraints(std::span<const double> x, std::vector<double>& g) {
    stamp(x);
    meshguard::evaluate_constraints(mesh_, constraints_, g, threads_);
}

ConstraintJacobian ShapeProblem::constraint_jacobian(std::span<const double> x,
                                                     std::span<const int> active) {
    stamp(x);
    return assemble_jacobian(mesh_, constraints_, active, threads_);
}

void ShapeProblem::iterate_statistics(std::span<const double> x, IterationRecord& record) {
    stamp(x);
    const QualityStats stats = mesh_quality(mesh_);
    record.has_quality = true;
    record.min_angle = stats.min_angle;
    record.max_aspect_ratio = stats.max_aspect_ratio;
}

}  // namespace meshguard
