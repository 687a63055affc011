#include "projection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "logging.hpp"
#include "parallel.hpp"

namespace meshguard {

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

ConstraintJacobian assemble_jacobian(const Mesh& mesh, const ConstraintSystem& system,
                                     std::span<const int> active, int threads) {
    const int dim = mesh.dim();
    const int verts = dim + 1;
    const long q = static_cast<long>(active.size());
    const long nq = system.quality_count();

    ConstraintJacobian jac;
    jac.active.assign(active.begin(), active.end());
    CsrMatrix& A = jac.matrix;
    A.rows = q;
    A.cols = static_cast<long>(mesh.node_count()) * dim;
    A.row_ptr.resize(q + 1);

    // Fixed layout: quality rows have (dim+1)*dim entries, fixed rows one.
    A.row_ptr[0] = 0;
    for (long r = 0; r < q; ++r) {
        const long entries = (active[r] < nq) ? static_cast<long>(verts) * dim : 1;
        A.row_ptr[r + 1] = A.row_ptr[r] + entries;
    }
    A.col.resize(A.row_ptr[q]);
    A.val.resize(A.row_ptr[q]);

    parallel_for(static_cast<size_t>(q), threads, [&](size_t r) {
        const long k = active[r];
        const long offset = A.row_ptr[r];
        if (k < nq) {
            const long cell = k / verts;
            const int vertex = static_cast<int>(k % verts);
            const auto nodes = mesh.cell(cell);
            std::array<std::pair<long, double>, 12> entries;
            int count = 0;
            if (dim == 2) {
                const auto grads = triangle_angle_gradients(
                    mesh.point2(nodes[0]), mesh.point2(nodes[1]), mesh.point2(nodes[2]));
                for (int v = 0; v < 3; ++v) {
                    const Vec2 dg = -1.0 * grads.grad[vertex][v];  // grad g = -grad alpha
                    entries[count++] = {static_cast<long>(nodes[v]) * 2, dg.x};
                    entries[count++] = {static_cast<long>(nodes[v]) * 2 + 1, dg.y};
                }
            } else {
                const auto grads = tet_solid_angle_gradients(
                    mesh.point3(nodes[0]), mesh.point3(nodes[1]), mesh.point3(nodes[2]),
                    mesh.point3(nodes[3]));
                for (int v = 0; v < 4; ++v) {
                    const Vec3 dg = -1.0 * grads.grad[vertex][v];
                    entries[count++] = {static_cast<long>(nodes[v]) * 3, dg.x};
                    entries[count++] = {static_cast<long>(nodes[v]) * 3 + 1, dg.y};
                    entries[count++] = {static_cast<long>(nodes[v]) * 3 + 2, dg.z};
                }
            }
            // rows keep ascending column order (row_dot and AA^T rely on it)
            std::sort(entries.begin(), entries.begin() + count);
            for (int e = 0; e < count; ++e) {
                A.col[offset + e] = entries[e].first;
                A.val[offset + e] = entries[e].second;
            }
        } else {
            const long eq = k - nq;
            const long node = system.fixed_nodes[eq / dim];
            const int comp = static_cast<int>(eq % dim);
            A.col[offset] = node * dim + comp;
            A.val[offset] = 1.0;
        }
    });
    return jac;
}

namespace {

// Inner product of two sorted sparse rows.
double row_dot(const CsrMatrix& A, long i, long j) {
    double acc = 0.0;
    long ki = A.row_ptr[i];
    long kj = A.row_ptr[j];
    while (ki < A.row_ptr[i + 1] && kj < A.row_ptr[j + 1]) {
        if (A.col[ki] == A.col[kj]) {
            acc += A.val[ki] * A.val[kj];
            ++ki;
            ++kj;
        } else if (A.col[ki] < A.col[kj]) {
            ++ki;
        } else {
            ++kj;
        }
    }
    return acc;
}

}  // namespace

ProjectionOperator::ProjectionOperator(ConstraintJacobian jacobian, MultiplierSolveOptions options,
                                       long equality_threshold)
    : jacobian_(std::move(jacobian)), options_(options) {
    build(equality_threshold);
}

void ProjectionOperator::rank_filter(long equality_threshold) {
    const CsrMatrix& A = jacobian_.matrix;
    const long q = A.rows;

    // Dense Gram matrix of the rows.
    std::vector<double> normal(static_cast<size_t>(q) * q);
    for (long i = 0; i < q; ++i) {
        for (long j = i; j < q; ++j) {
            const double acc = row_dot(A, i, j);
            normal[i * q + j] = acc;
            normal[j * q + i] = acc;
        }
    }

    // Pivoted Cholesky selection: admit the row with the largest remaining
    // relative pivot, equality rows first (mutually orthogonal unit rows).
    // Rows whose pivot decays below pivot_ratio times their own norm add no
    // numerically reliable direction and are excluded.
    std::vector<double> pivots(q), factor(static_cast<size_t>(q) * q, 0.0);
    std::vector<char> keep_mask(q, 0);
    std::vector<long> admitted;
    for (long j = 0; j < q; ++j) pivots[j] = normal[j * q + j];
    auto is_equality = [&](long r) {
        return equality_threshold >= 0 && jacobian_.active[r] >= equality_threshold;
    };

    while (static_cast<long>(admitted.size()) < q) {
        const long k = static_cast<long>(admitted.size());
        long best = -1;
        double best_ratio = 0.0;
        bool best_equality = false;
        for (long j = 0; j < q; ++j) {
            if (keep_mask[j]) continue;
            const double diag = normal[j * q + j];
            const double ratio = diag > 0.0 ? pivots[j] / diag : 0.0;
            if (ratio <= options_.pivot_ratio) continue;
            const bool eq = is_equality(j);
            if (best < 0 || (eq && !best_equality) ||
                (eq == best_equality && ratio > best_ratio)) {
                best = j;
                best_ratio = ratio;
                best_equality = eq;
            }
        }
        if (best < 0) break;  // every remaining row is numerically dependent

        const double piv = std::sqrt(pivots[best]);
        factor[best * q + k] = piv;
        keep_mask[best] = 1;
        admitted.push_back(best);
        for (long j = 0; j < q; ++j) {
            if (keep_mask[j]) continue;
            double c = normal[j * q + best];
            for (long m = 0; m < k; ++m) c -= factor[j * q + m] * factor[best * q + m];
            const double ljk = c / piv;
            factor[j * q + k] = ljk;
            pivots[j] -= ljk * ljk;
        }
    }

    if (static_cast<long>(admitted.size()) == q) return;

    for (long r = 0; r < q; ++r)
        if (!keep_mask[r]) filtered_.push_back(jacobian_.active[r]);
    std::ostringstream msg;
    msg << "rank filter excluded " << filtered_.size() << " of " << q
        << " active constraint gradients (numerically dependent)";
    log_info(msg.str());

    // Rebuild the Jacobian from the kept rows, ascending.
    ConstraintJacobian reduced;
    CsrMatrix& R = reduced.matrix;
    R.cols = A.cols;
    R.row_ptr.push_back(0);
    for (long r = 0; r < q; ++r) {
        if (!keep_mask[r]) continue;
        reduced.active.push_back(jacobian_.active[r]);
        for (long kk = A.row_ptr[r]; kk < A.row_ptr[r + 1]; ++kk) {
            R.col.push_back(A.col[kk]);
            R.val.push_back(A.val[kk]);
        }
        R.row_ptr.push_back(static_cast<long>(R.col.size()));
    }
    R.rows = static_cast<long>(reduced.active.size());
    jacobian_ = std::move(reduced);
}

void ProjectionOperator::build(long equality_threshold) {
    if (jacobian_.matrix.rows == 0) return;

    use_dense_ = jacobian_.matrix.rows <= options_.dense_threshold;
    if (use_dense_) rank_filter(equality_threshold);

    const CsrMatrix& A = jacobian_.matrix;
    const long q = A.rows;
    normal_diag_.assign(q, 0.0);
    for (long r = 0; r < q; ++r) normal_diag_[r] = row_dot(A, r, r);

    if (!use_dense_) return;

    dense_normal_.assign(static_cast<size_t>(q) * q, 0.0);
    for (long i = 0; i < q; ++i) {
        for (long j = i; j < q; ++j) {
            const double acc = row_dot(A, i, j);
            dense_normal_[i * q + j] = acc;
            dense_normal_[j * q + i] = acc;
        }
    }

    dense_factor_ = dense_normal_;
    if (!cholesky_factor(dense_factor_, q)) {
        // The rank filter keeps this path rare; shift toward the
        // pseudoinverse solution if it still triggers.
        double trace = 0.0;
        for (long i = 0; i < q; ++i) trace += dense_normal_[i * q + i];
        shift_ = 1e-12 * trace / static_cast<double>(q);
        std::ostringstream msg;
        msg << "active-constraint Jacobian is rank deficient; applying Tikhonov shift "
            << shift_;
        log_warn(msg.str());
        rebuild_dense_factor();
    }
}

void ProjectionOperator::rebuild_dense_factor() const {
    const long q = jacobian_.matrix.rows;
    dense_factor_ = dense_normal_;
    for (long i = 0; i < q; ++i) dense_factor_[i * q + i] += shift_;
    if (!cholesky_factor(dense_factor_, q))
        fail(ErrorKind::Numeric, "Cholesky factorization of AA^T failed even with shift");
}

bool ProjectionOperator::residual_ok(std::span<const double> rhs,
                                     std::span<const double> lambda) const {
    const long q = jacobian_.matrix.rows;
    std::vector<double> r(q);
    apply_normal(lambda, r);
    double err = 0.0, scale = 1.0;
    for (long i = 0; i < q; ++i) {
        err = std::max(err, std::abs(r[i] - rhs[i]));
        scale = std::max(scale, std::abs(rhs[i]));
    }
    return err <= 0.5 * options_.tangency_tolerance * scale;
}

void ProjectionOperator::apply_normal(std::span<const double> x, std::span<double> y) const {
    const CsrMatrix& A = jacobian_.matrix;
    std::vector<double> tmp(A.cols, 0.0);
    A.matvec_transpose(x, tmp);
    A.matvec(tmp, y);
    if (shift_ > 0.0)
        for (long i = 0; i < A.rows; ++i) y[i] += shift_ * x[i];
}

void ProjectionOperator::solve_normal(std::span<const double> rhs, std::vector<double>& lambda,
                                      long* iterations) const {
    const long q = jacobian_.matrix.rows;
    lambda.assign(q, 0.0);
    if (q == 0) return;

    if (use_dense_) {
        cholesky_solve(dense_factor_, q, rhs, lambda);
        if (iterations) *iterations = 0;
        // A tiny positive pivot slips past the factorization when AA^T is
        // only numerically rank deficient; catch it through the residual
        // and fall back to the shifted (pseudoinverse-like) system.
        if (shift_ == 0.0 && !residual_ok(rhs, lambda)) {
            double trace = 0.0;
            for (double d : normal_diag_) trace += d;
            shift_ = 1e-12 * trace / static_cast<double>(q);
            std::ostringstream msg;
            msg << "multiplier system is nearly singular; applying Tikhonov shift " << shift_;
            log_warn(msg.str());
            rebuild_dense_factor();
            cholesky_solve(dense_factor_, q, rhs, lambda);
        }
        return;
    }

    auto apply = [this](std::span<const double> x, std::span<double> y) { apply_normal(x, y); };
    CgResult cg = pcg(apply, normal_diag_, rhs, lambda, options_.cg_rtol, 10 * q);
    if (!cg.converged) {
        // Retry once with a Tikhonov shift before giving up.
        double trace = 0.0;
        for (double d : normal_diag_) trace += d;
        shift_ = 1e-12 * trace / static_cast<double>(q);
        log_warn("multiplier CG stalled (residual " + std::to_string(cg.relative_residual) +
                 "); retrying with Tikhonov shift");
        lambda.assign(q, 0.0);
        cg = pcg(apply, normal_diag_, rhs, lambda, options_.cg_rtol, 10 * q);
        if (!cg.converged) {
            std::ostringstream msg;
            msg << "multiplier solve did not converge: relative residual "
                << cg.relative_residual << " after " << cg.iterations << " iterations";
            fail(ErrorKind::Numeric, msg.str());
        }
    }
    if (iterations) *iterations = cg.iterations;
}

ProjectionResult ProjectionOperator::project(std::span<const double> s) const {
    const CsrMatrix& A = jacobian_.matrix;
    ProjectionResult result;
    result.direction.assign(s.begin(), s.end());
    if (A.rows == 0) return result;

    std::vector<double> rhs(A.rows);
    A.matvec(s, rhs);
    solve_normal(rhs, result.multipliers, &result.solver_iterations);

    std::vector<double> correction(A.cols);
    A.matvec_transpose(result.multipliers, correction);
    for (long i = 0; i < A.cols; ++i) result.direction[i] -= correction[i];

    std::vector<double> residual(A.rows);
    A.matvec(result.direction, residual);
    result.tangency_residual = inf_norm(residual) / std::max(1.0, inf_norm(rhs));
    if (result.tangency_residual > options_.tangency_tolerance) {
        std::ostringstream msg;
        msg << "projected direction is not tangent to the active constraints: residual "
            << result.tangency_residual << " (q=" << A.rows << ", filtered=" << filtered_.size()
            << ", dense=" << use_dense_ << ", shift=" << shift_ << ")";
        fail(ErrorKind::Numeric, msg.str());
    }
    return result;
}

RestoreResult ProjectionOperator::restore(
    std::span<double> y,
    const std::function<void(std::span<const double>, std::span<double>)>& eval_active,
    double tolerance, int max_iterations) const {
    const CsrMatrix& A = jacobian_.matrix;
    RestoreResult result;
    if (A.rows == 0) {
        result.converged = true;
        return result;
    }

    std::vector<double> h(A.rows), lambda, correction(A.cols);
    for (int it = 0; it <= max_iterations; ++it) {
        eval_active(y, h);
        result.residual = inf_norm(h);
        result.iterations = it;
        if (result.residual <= tolerance) {
            result.converged = true;
            return result;
        }
        if (it == max_iterations) break;
        if (!std::isfinite(result.residual)) break;
        solve_normal(h, lambda);
        A.matvec_transpose(lambda, correction);
        for (long i = 0; i < A.cols; ++i) y[i] -= correction[i];
    }
    return result;
}

DropDecision drop_rule(std::span<const double> p, std::span<const double> multipliers,
                       std::span<const int> active, long inequality_count, double kkt_tol) {
    DropDecision decision;

    double pnorm_sq = 0.0;
    for (double v : p) pnorm_sq += v * v;
    const double pnorm = std::sqrt(pnorm_sq);

    double min_multiplier = 0.0;
    int min_index = -1;
    for (size_t r = 0; r < active.size(); ++r) {
        if (active[r] >= inequality_count) continue;  // equality rows stay
        if (multipliers[r] < min_multiplier) {
            min_multiplier = multipliers[r];
            min_index = active[r];
        }
    }
    decision.gamma = -min_multiplier;  // 0 when all inequality multipliers >= 0

    if (pnorm <= kkt_tol && min_multiplier >= -kkt_tol) {
        decision.kind = DropDecision::Kind::Converged;
        return decision;
    }
    if (pnorm < decision.gamma) {
        decision.kind = DropDecision::Kind::Drop;
        decision.constraint = min_index;
        decision.multiplier = min_multiplier;
        return decision;
    }
    decision.kind = DropDecision::Kind::Keep;
    return decision;
}

}  // namespace meshguard
