#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "errors.hpp"
#include "logging.hpp"

namespace meshguard {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<int> detect_active(std::span<const double> g, long inequality_count, double eps) {
    std::vector<int> active;
    for (long k = 0; k < inequality_count; ++k)
        if (std::abs(g[k]) <= eps) active.push_back(static_cast<int>(k));
    for (long k = inequality_count; k < static_cast<long>(g.size()); ++k)
        active.push_back(static_cast<int>(k));
    return active;
}

}  // namespace

TrialStep restore_trial_step(OptimizationProblem& problem, const ProjectionOperator& op,
                             std::span<const char> is_active, std::span<const double> x,
                             std::span<const double> p, double t,
                             const OptimizeOptions& options) {
    TrialStep probe;
    probe.y.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) probe.y[i] = x[i] + t * p[i];

    const double eps = problem.activity_tolerance();
    std::vector<double> g_all;
    auto eval_active = [&](std::span<const double> y, std::span<double> h) {
        problem.evaluate_constraints(y, g_all);
        const auto& active = op.jacobian().active;
        for (size_t r = 0; r < active.size(); ++r) h[r] = g_all[active[r]];
    };

    const RestoreResult restore =
        op.restore(probe.y, eval_active, eps / 10.0, options.newton_max);
    probe.newton_iterations = restore.iterations;
    if (!restore.converged) return probe;  // outside the Newton basin

    problem.evaluate_constraints(probe.y, g_all);
    const long ineq = problem.inequality_count();
    for (long k = 0; k < ineq; ++k) {
        if (!std::isfinite(g_all[k])) return probe;
        // inactive rows must not become positive; rows the rank filter took
        // out of the operator ride along their kept near-duplicates and are
        // held to twice the restoration tolerance
        if (is_active[k] == 0 && g_all[k] > 0.0) return probe;
        if (is_active[k] == 2 && g_all[k] > 0.2 * eps) return probe;
    }
    for (long k = ineq; k < problem.constraint_count(); ++k)
        if (is_active[k] == 2 && std::abs(g_all[k]) > 0.2 * eps) return probe;
    probe.g = std::move(g_all);
    probe.feasible = true;
    return probe;
}

FeasibleStep max_feasible_step(OptimizationProblem& problem, const ProjectionOperator& op,
                               std::span<const char> is_active, std::span<const double> x,
                               std::span<const double> p, double t_init,
                               const OptimizeOptions& options) {
    FeasibleStep step;
    const double eps = problem.activity_tolerance();
    const long ineq = problem.inequality_count();
    auto collect_newly_active = [&](const TrialStep& probe) {
        step.newly_active.clear();
        for (long k = 0; k < ineq; ++k)
            if (!is_active[k] && std::abs(probe.g[k]) <= eps)
                step.newly_active.push_back(static_cast<int>(k));
    };

    TrialStep full = restore_trial_step(problem, op, is_active, x, p, t_init, options);
    step.newton_iterations += full.newton_iterations;
    if (full.feasible) {
        step.found = true;
        step.t = t_init;
        collect_newly_active(full);
        step.probe = std::move(full);
        return step;
    }

    double lo = 0.0;
    double hi = t_init;
    TrialStep best;
    while (step.bisect_iterations < options.bisect_max &&
           (hi - lo) > options.bisect_rtol * t_init) {
        const double mid = 0.5 * (lo + hi);
        TrialStep probe = restore_trial_step(problem, op, is_active, x, p, mid, options);
        ++step.bisect_iterations;
        step.newton_iterations += probe.newton_iterations;
        if (probe.feasible) {
            lo = mid;
            best = std::move(probe);
        } else {
            hi = mid;
        }
    }
    const double t_min = 1e-12 * t_init;
    if (!best.feasible || lo <= t_min) return step;  // no feasible step above t_min
    step.found = true;
    step.t = lo;
    collect_newly_active(best);
    step.probe = std::move(best);
    return step;
}

void LbfgsHistory::reset() { pairs_.clear(); }

void LbfgsHistory::push(std::vector<double> s, std::vector<double> y, double sy) {
    if (sy <= 1e-14) return;  // curvature too small, skip the pair
    pairs_.push_back({std::move(s), std::move(y), sy});
    if (static_cast<int>(pairs_.size()) > memory_) pairs_.erase(pairs_.begin());
}

void LbfgsHistory::direction(OptimizationProblem& problem, std::span<const double> x,
                             std::span<const double> G, std::vector<double>& out) const {
    out.assign(G.begin(), G.end());
    if (pairs_.empty()) {
        for (double& v : out) v = -v;
        return;
    }
    const long m = static_cast<long>(pairs_.size());
    std::vector<double> alpha(m);
    for (long k = m - 1; k >= 0; --k) {
        const auto& pair = pairs_[k];
        alpha[k] = problem.inner_product(x, pair.s, out) / pair.sy;
        for (size_t i = 0; i < out.size(); ++i) out[i] -= alpha[k] * pair.y[i];
    }
    const auto& last = pairs_.back();
    const double yy = problem.inner_product(x, last.y, last.y);
    if (yy > 0.0) {
        const double gamma = last.sy / yy;
        for (double& v : out) v *= gamma;
    }
    for (long k = 0; k < m; ++k) {
        const auto& pair = pairs_[k];
        const double beta = problem.inner_product(x, pair.y, out) / pair.sy;
        for (size_t i = 0; i < out.size(); ++i) out[i] += (alpha[k] - beta) * pair.s[i];
    }
    for (double& v : out) v = -v;
}

OptimizeResult optimize(OptimizationProblem& problem, std::span<const double> x0,
                        const OptimizeOptions& options, const IterationObserver& observer) {
    const long n_dofs = problem.dof_count();
    if (static_cast<long>(x0.size()) != n_dofs)
        fail(ErrorKind::Argument, "initial point length does not match the problem");

    OptimizeResult result;
    result.x.assign(x0.begin(), x0.end());
    std::span<const double> x(result.x);

    const long ineq = problem.inequality_count();
    const double eps = problem.activity_tolerance();
    std::vector<double> g;

    if (options.constraints_enabled) {
        problem.evaluate_constraints(x, g);
        for (long k = 0; k < ineq; ++k) {
            if (g[k] > eps) {
                std::ostringstream msg;
                msg << "initial point is infeasible: constraint " << k << " has value " << g[k]
                    << " > epsilon " << eps;
                fail(ErrorKind::Infeasible, msg.str());
            }
        }
    }

    double J = problem.evaluate(x);
    double t = options.t0;
    const double t_floor = 1e-12 * options.t0;
    double g0_norm = -1.0;

    LbfgsHistory lbfgs(options.lbfgs_memory);
    std::vector<double> prev_x, prev_G;
    std::vector<int> prev_active;
    bool have_prev = false;

    std::vector<double> b, G, S;
    std::string termination;

    auto emit = [&](IterationRecord& rec) {
        result.records.push_back(rec);
        if (observer) observer(rec, x);
    };

    long n = 0;
    for (; n <= options.n_max; ++n) {
        IterationRecord rec;
        rec.n = n;
        rec.J = J;
        try {

            problem.gradient(x, b);
            problem.gradient_deformation(x, b, G);
            const double grad_norm = std::sqrt(std::max(0.0, dot(b, G)));
            if (n == 0) g0_norm = grad_norm;
            rec.grad_norm = grad_norm;
            rec.grad_norm_rel = (g0_norm > 0.0) ? grad_norm / g0_norm : 0.0;
            problem.iterate_statistics(x, rec);

            // Active set at x_n and L-BFGS bookkeeping.
            std::vector<int> active;
            if (options.constraints_enabled) {
                problem.evaluate_constraints(x, g);
                active = detect_active(g, ineq, eps);
                if (static_cast<long>(active.size()) > n_dofs) {
                    std::ostringstream msg;
                    msg << "active set has " << active.size() << " constraints but only " << n_dofs
                        << " variables; the problem is over-constrained at this iterate";
                    fail(ErrorKind::Argument, msg.str());
                }
            }
            if (options.method == SearchMethod::Lbfgs) {
                if (have_prev && active != prev_active) {
                    // stored pairs live on a different constraint manifold
                    lbfgs.reset();
                }
                if (have_prev) {
                    std::vector<double> s(n_dofs), y(n_dofs);
                    for (long i = 0; i < n_dofs; ++i) {
                        s[i] = result.x[i] - prev_x[i];
                        y[i] = G[i] - prev_G[i];
                    }
                    const double sy = problem.inner_product(x, y, s);
                    lbfgs.push(std::move(s), std::move(y), sy);
                }
                lbfgs.direction(problem, x, G, S);
            } else {
                S.assign(G.begin(), G.end());
                for (double& v : S) v = -v;
            }

            // Projection onto the active constraints, with Rosen's drop rule.
            std::vector<double> p;
            std::unique_ptr<ProjectionOperator> op;
            bool converged_kkt = false;
            if (options.constraints_enabled) {
                MultiplierSolveOptions solve_options;
                solve_options.dense_threshold = options.dense_threshold;
                op = std::make_unique<ProjectionOperator>(
                    problem.constraint_jacobian(x, active), solve_options, ineq);
                while (true) {
                    ProjectionResult proj = op->project(S);
                    rec.multiplier_solver_iterations += proj.solver_iterations;
                    rec.projection_residual = std::max(rec.projection_residual, proj.tangency_residual);
                    const DropDecision decision =
                        drop_rule(proj.direction, proj.multipliers, op->jacobian().active, ineq,
                                  options.kkt_tolerance);
                    if (decision.kind == DropDecision::Kind::Converged) {
                        converged_kkt = true;
                        p = std::move(proj.direction);
                        break;
                    }
                    if (decision.kind == DropDecision::Kind::Drop) {
                        active.erase(std::find(active.begin(), active.end(), decision.constraint));
                        ++rec.dropped;
                        log_debug("dropped constraint " + std::to_string(decision.constraint) +
                                  " with multiplier " + std::to_string(decision.multiplier));
                        op = std::make_unique<ProjectionOperator>(
                            problem.constraint_jacobian(x, active), solve_options, ineq);
                        continue;
                    }
                    p = std::move(proj.direction);
                    break;
                }
                rec.q_active = op->active_count();
            } else {
                p = S;
            }

            if (converged_kkt) {
                termination = "kkt";
                rec.termination = termination;
                emit(rec);
                break;
            }
            if (grad_norm <= options.tau_stop * g0_norm) {
                termination = "gradient_tolerance";
                rec.termination = termination;
                emit(rec);
                break;
            }
            if (n == options.n_max) {
                termination = "max_iterations";
                rec.termination = termination;
                emit(rec);
                break;
            }

            double slope = dot(b, p);  // = a(G_n, P_n)
            if (slope >= 0.0) {
                bool recovered = false;
                if (options.method == SearchMethod::Lbfgs && !lbfgs.empty()) {
                    lbfgs.reset();
                    S.assign(G.begin(), G.end());
                    for (double& v : S) v = -v;
                    if (options.constraints_enabled) {
                        ProjectionResult proj = op->project(S);
                        rec.projection_residual =
                            std::max(rec.projection_residual, proj.tangency_residual);
                        p = std::move(proj.direction);
                    } else {
                        p = S;
                    }
                    slope = dot(b, p);
                    recovered = slope < 0.0;
                }
                if (!recovered) {
                    termination = "no_descent";
                    rec.termination = termination;
                    emit(rec);
                    break;
                }
            }
            rec.slope = slope;

            // Step cap by the maximum feasible step, then Armijo with
            // feasibility re-checked at every trial. 1 marks rows in the
            // operator, 2 rows the rank filter excluded.
            std::vector<char> is_active(options.constraints_enabled ? problem.constraint_count() : 0,
                                        0);
            if (op) {
                for (int k : op->jacobian().active) is_active[k] = 1;
                for (int k : op->filtered()) is_active[k] = 2;
            }

            double t_trial = t;
            std::vector<double> y_star;
            double J_new = 0.0;
            bool accepted = false;
            bool underflow = false;

            if (options.constraints_enabled) {
                FeasibleStep step =
                    max_feasible_step(problem, *op, is_active, x, p, t_trial, options);
                rec.bisect_iterations = step.bisect_iterations;
                rec.newton_iterations += step.newton_iterations;
                if (!step.found) {
                    termination = "step_underflow";
                    rec.termination = termination;
                    emit(rec);
                    break;
                }
                t_trial = step.t;
                rec.t_star = step.t;
                TrialStep probe = std::move(step.probe);
                while (true) {
                    if (probe.feasible) {
                        J_new = problem.evaluate(probe.y);
                        if (std::isfinite(J_new) && J_new <= J + options.sigma * t_trial * slope) {
                            // newly active = inactive at x_n, within tolerance now
                            for (long k = 0; k < ineq; ++k)
                                if (!is_active[k] && std::abs(probe.g[k]) <= eps) ++rec.activated;
                            y_star = std::move(probe.y);
                            accepted = true;
                            break;
                        }
                    }
                    t_trial *= options.omega;
                    if (t_trial < t_floor) {
                        underflow = true;
                        break;
                    }
                    probe = restore_trial_step(problem, *op, is_active, x, p, t_trial, options);
                    rec.newton_iterations += probe.newton_iterations;
                }
            } else {
                while (true) {
                    std::vector<double> y(n_dofs);
                    for (long i = 0; i < n_dofs; ++i) y[i] = x[i] + t_trial * p[i];
                    J_new = problem.evaluate(y);
                    if (std::isfinite(J_new) && J_new <= J + options.sigma * t_trial * slope) {
                        y_star = std::move(y);
                        accepted = true;
                        break;
                    }
                    t_trial *= options.omega;
                    if (t_trial < t_floor) {
                        underflow = true;
                        break;
                    }
                }
            }

            if (underflow || !accepted) {
                termination = "step_underflow";
                rec.termination = termination;
                emit(rec);
                break;
            }

            // Feasible-method audit: re-evaluate every constraint from scratch
            // at the accepted iterate.
            if (options.constraints_enabled) {
                problem.evaluate_constraints(y_star, g);
                const double slack = 1e-9;
                for (long k = 0; k < ineq; ++k)
                    if (g[k] > eps * (1.0 + slack))
                        fail(ErrorKind::Numeric,
                             "feasible-method invariant violated at iteration " + std::to_string(n) +
                                 ": constraint " + std::to_string(k) + " = " + std::to_string(g[k]));
                for (long k = ineq; k < problem.constraint_count(); ++k)
                    if (std::abs(g[k]) > (eps / 10.0) * (1.0 + slack))
                        fail(ErrorKind::Numeric,
                             "equality constraint drift at iteration " + std::to_string(n));
            }

            if (options.method == SearchMethod::Lbfgs) {
                prev_x = result.x;
                prev_G = G;
                prev_active = active;
                have_prev = true;
            }

            // Emit with the coordinates the record describes (the iterate the
            // step departed from), then advance.
            rec.t = t_trial;
            emit(rec);
            result.x = std::move(y_star);
            x = std::span<const double>(result.x);
            J = J_new;
            t = t_trial / options.omega;

        } catch (const Error& e) {
            // Solver breakdown or a cell collapsing mid-run ends the run
            // with the last accepted iterate, like the classical method
            // grinding to a halt on a degraded mesh. Configuration errors
            // still propagate.
            if (e.kind() != ErrorKind::Numeric && e.kind() != ErrorKind::Degenerate) throw;
            log_warn(std::string("optimization stopped at iteration ") + std::to_string(n) +
                     ": " + e.what());
            termination = "numeric_failure";
            rec.termination = termination;
            emit(rec);
            break;
        }
    }

    result.J = J;
    result.iterations = n;
    result.termination = termination.empty() ? "max_iterations" : termination;
    return result;
}

}  // namespace meshguard
