#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "projection.hpp"

namespace meshguard {

// Abstraction the descent loop runs on. For shape optimization the
// variables are the flat mesh coordinates; the same loop drives the small
// synthetic test problems.
class OptimizationProblem {
public:
    virtual ~OptimizationProblem() = default;

    virtual long dof_count() const = 0;

    virtual double evaluate(std::span<const double> x) = 0;
    // Euclidean derivative dJ/dx.
    virtual void gradient(std::span<const double> x, std::vector<double>& b) = 0;
    // Riesz representative of b in the problem's inner product (the
    // gradient deformation); identity for Euclidean problems.
    virtual void gradient_deformation(std::span<const double> x, std::span<const double> b,
                                      std::vector<double>& G) = 0;
    // Inner product the gradient deformation was defined in, at x.
    virtual double inner_product(std::span<const double> x, std::span<const double> u,
                                 std::span<const double> v) = 0;

    virtual long constraint_count() const = 0;
    // Rows [0, inequality_count) are inequalities, the rest equalities.
    virtual long inequality_count() const = 0;
    virtual double activity_tolerance() const = 0;
    virtual void evaluate_constraints(std::span<const double> x, std::vector<double>& g) = 0;
    virtual ConstraintJacobian constraint_jacobian(std::span<const double> x,
                                                   std::span<const int> active) = 0;

    // Optional per-iterate statistics (mesh quality).
    virtual void iterate_statistics(std::span<const double> /*x*/,
                                    struct IterationRecord& /*record*/) {}
};

enum class SearchMethod { GradientDescent, Lbfgs };

struct OptimizeOptions {
    double t0 = 1.0;
    double sigma = 1e-4;
    double omega = 0.5;
    double tau_stop = 1e-3;
    long n_max = 100;
    bool constraints_enabled = true;
    SearchMethod method = SearchMethod::GradientDescent;
    int lbfgs_memory = 5;
    double kkt_tolerance = 1e-8;
    int newton_max = 10;
    int bisect_max = 30;
    double bisect_rtol = 1e-3;
    long dense_threshold = 200;
    int threads = 1;
};

struct IterationRecord {
    long n = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double grad_norm_rel = 0.0;
    double t = 0.0;
    double t_star = 0.0;
    double slope = 0.0;
    long q_active = 0;
    long multiplier_solver_iterations = 0;
    long newton_iterations = 0;
    long bisect_iterations = 0;
    long activated = 0;
    long dropped = 0;
    double projection_residual = 0.0;
    bool has_quality = false;
    double min_angle = 0.0;
    double max_aspect_ratio = 0.0;
    std::string termination;  // empty except on the final record
};

using IterationObserver = std::function<void(const IterationRecord&, std::span<const double>)>;

struct OptimizeResult {
    std::vector<double> x;
    double J = 0.0;
    long iterations = 0;
    std::string termination;
    std::vector<IterationRecord> records;
};

// Trial step y = x + t p, back-projected onto the constraints active at x
// with the frozen operator, then screened: a previously inactive
// inequality constraint becoming positive marks the trial infeasible.
// is_active flags every constraint index active at x.
struct TrialStep {
    bool feasible = false;
    long newton_iterations = 0;
    std::vector<double> y;
    std::vector<double> g;  // all constraint values at y (valid when feasible)
};

TrialStep restore_trial_step(OptimizationProblem& problem, const ProjectionOperator& op,
                             std::span<const char> is_active, std::span<const double> x,
                             std::span<const double> p, double t,
                             const OptimizeOptions& options);

// Largest feasible step not exceeding t_init, resolved by bisection when
// the full step violates previously inactive constraints. found is false
// when no feasible step above 1e-12 * t_init exists.
struct FeasibleStep {
    bool found = false;
    double t = 0.0;
    TrialStep probe;
    std::vector<int> newly_active;  // inactive at x, within tolerance at t
    long bisect_iterations = 0;
    long newton_iterations = 0;
};

FeasibleStep max_feasible_step(OptimizationProblem& problem, const ProjectionOperator& op,
                               std::span<const char> is_active, std::span<const double> x,
                               std::span<const double> p, double t_init,
                               const OptimizeOptions& options);

// Gradient-based descent with Rosen's gradient projection interleaved:
// tangent-space projection of the search direction, multiplier-based
// constraint dropping, frozen-Jacobian back-projection after each trial
// step, bisection to the maximum feasible step and a feasibility-aware
// Armijo line search. Every accepted iterate is feasible.
OptimizeResult optimize(OptimizationProblem& problem, std::span<const double> x0,
                        const OptimizeOptions& options, const IterationObserver& observer = {});

// Two-loop L-BFGS recursion in the problem's inner product. Pairs with
// curvature <= 1e-14 are skipped; reset() must be called whenever the
// active set changes.
class LbfgsHistory {
public:
    explicit LbfgsHistory(int memory) : memory_(memory) {}

    void reset();
    void push(std::vector<double> s, std::vector<double> y, double sy);
    // direction = -H G; falls back to -G with empty memory.
    void direction(OptimizationProblem& problem, std::span<const double> x,
                   std::span<const double> G, std::vector<double>& out) const;
    bool empty() const { return pairs_.empty(); }

private:
    struct Pair {
        std::vector<double> s;
        std::vector<double> y;
        double sy;
    };
    int memory_;
    std::vector<Pair> pairs_;
};

}  // namespace meshguard
