#pragma once

#include <functional>
#include <span>
#include <vector>

#include "quality.hpp"
#include "sparse.hpp"

namespace meshguard {

// Jacobian of the active constraints, one row per active constraint in
// ascending constraint order. Quality rows have at most 6 (2D) / 12 (3D)
// nonzeros; fixed-node rows exactly one entry equal to 1.
struct ConstraintJacobian {
    CsrMatrix matrix;
    std::vector<int> active;  // active constraint index per row, sorted
};

ConstraintJacobian assemble_jacobian(const Mesh& mesh, const ConstraintSystem& system,
                                     std::span<const int> active, int threads = 1);

struct ProjectionResult {
    std::vector<double> direction;    // p = s - A^T lambda
    std::vector<double> multipliers;  // lambda, one per active row
    double tangency_residual = 0.0;   // ||A p||_inf / max(1, ||A s||_inf)
    long solver_iterations = 0;
};

struct RestoreResult {
    bool converged = false;
    long iterations = 0;
    double residual = 0.0;  // ||h||_inf at exit
};

// Settings for the normal-equations solve AA^T lambda = rhs.
struct MultiplierSolveOptions {
    long dense_threshold = 500;  // direct Cholesky for q <= this
    double cg_rtol = 1e-12;
    double tangency_tolerance = 1e-10;
    // Pivot acceptance ratio of the rank filter; rows whose Cholesky pivot
    // falls below pivot_ratio * diagonal are excluded from the operator.
    double pivot_ratio = 1e-5;
};

// Holds the Jacobian frozen at an accepted iterate x_n together with the
// factorization / preconditioner of AA^T, reused across the projection,
// the Newton back-projection and all bisection probes of one outer
// iteration.
//
// Active gradients can become numerically dependent (LICQ failure, e.g.
// clusters of angle constraints in a compressed mesh region). The dense
// route therefore runs a greedy pivoted-Cholesky selection and excludes
// rows that add no reliable new direction; the caller keeps monitoring the
// excluded constraints through the trial-step screen, which is how the
// pseudoinverse route is realized here without destroying the tangency
// bound of the kept rows. Equality rows are always admitted first.
class ProjectionOperator {
public:
    ProjectionOperator(ConstraintJacobian jacobian, MultiplierSolveOptions options = {},
                       long equality_threshold = -1);

    long active_count() const { return jacobian_.matrix.rows; }
    const ConstraintJacobian& jacobian() const { return jacobian_; }
    // Constraint indices excluded by the rank filter, ascending.
    const std::vector<int>& filtered() const { return filtered_; }
    bool regularized() const { return shift_ > 0.0; }

    // lambda = (AA^T)^{-1} rhs. Throws ErrorKind::Numeric when the solve
    // does not converge.
    void solve_normal(std::span<const double> rhs, std::vector<double>& lambda,
                      long* iterations = nullptr) const;

    // p = s - A^T lambda with AA^T lambda = A s; identity when q = 0.
    ProjectionResult project(std::span<const double> s) const;

    // Frozen-Jacobian Newton back-projection: repeats
    //   y <- y - A^T (AA^T)^{-1} h(y)
    // until ||h||_inf <= tolerance, where eval_active fills h with the
    // active-constraint values at y.
    RestoreResult restore(
        std::span<double> y,
        const std::function<void(std::span<const double>, std::span<double>)>& eval_active,
        double tolerance, int max_iterations) const;

private:
    ConstraintJacobian jacobian_;
    MultiplierSolveOptions options_;
    std::vector<int> filtered_;
    mutable double shift_ = 0.0;
    bool use_dense_ = false;
    std::vector<double> dense_normal_;          // AA^T (dense path only)
    mutable std::vector<double> dense_factor_;  // Cholesky of AA^T (+ shift)
    std::vector<double> normal_diag_;           // diag(AA^T) for Jacobi CG

    void build(long equality_threshold);
    void rank_filter(long equality_threshold);
    void rebuild_dense_factor() const;
    bool residual_ok(std::span<const double> rhs, std::span<const double> lambda) const;
    void apply_normal(std::span<const double> x, std::span<double> y) const;
};

struct DropDecision {
    enum class Kind { Keep, Drop, Converged };
    Kind kind = Kind::Keep;
    int constraint = -1;      // constraint index to drop (Kind::Drop)
    double gamma = 0.0;       // -min over inequality multipliers, clipped at 0
    double multiplier = 0.0;  // multiplier of the dropped constraint
};

// Rosen's drop rule. Equality rows (constraint index >= inequality_count)
// are never drop candidates. Converged when ||p|| <= kkt_tol and every
// inequality multiplier >= -kkt_tol; otherwise Drop the most negative
// inequality multiplier when ||p|| < gamma; otherwise Keep.
DropDecision drop_rule(std::span<const double> p, std::span<const double> multipliers,
                       std::span<const int> active, long inequality_count, double kkt_tol);

}  // namespace meshguard
