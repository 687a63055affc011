#include "sparse.hpp"

#include <cmath>

namespace meshguard {

void CsrMatrix::matvec(std::span<const double> x, std::span<double> y) const {
    for (long r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (long k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
}

void CsrMatrix::matvec_transpose(std::span<const double> x, std::span<double> y) const {
    for (long j = 0; j < cols; ++j) y[j] = 0.0;
    for (long r = 0; r < rows; ++r)
        for (long k = row_ptr[r]; k < row_ptr[r + 1]; ++k) y[col[k]] += val[k] * x[r];
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (long r = 0; r < rows; ++r)
        for (long k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (col[k] == r) d[r] = val[k];
    return d;
}

CgResult pcg(const std::function<void(std::span<const double>, std::span<double>)>& apply,
             std::span<const double> diag, std::span<const double> b, std::span<double> x,
             double rtol, long max_iterations) {
    const long n = static_cast<long>(b.size());
    CgResult result;

    std::vector<double> r(n), z(n), p(n), ap(n);

    auto dot = [n](std::span<const double> u, std::span<const double> v) {
        double acc = 0.0;
        for (long i = 0; i < n; ++i) acc += u[i] * v[i];
        return acc;
    };
    auto precond = [&](std::span<const double> u, std::span<double> out) {
        for (long i = 0; i < n; ++i) out[i] = (diag[i] != 0.0) ? u[i] / diag[i] : u[i];
    };

    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        for (long i = 0; i < n; ++i) x[i] = 0.0;
        result.converged = true;
        return result;
    }

    apply(x, r);
    for (long i = 0; i < n; ++i) r[i] = b[i] - r[i];
    precond(r, z);
    p.assign(z.begin(), z.end());
    double rz = dot(r, z);

    for (long it = 0; it < max_iterations; ++it) {
        const double rnorm = std::sqrt(dot(r, r));
        result.relative_residual = rnorm / bnorm;
        if (result.relative_residual <= rtol) {
            result.converged = true;
            result.iterations = it;
            return result;
        }
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {  // loss of positive definiteness
            result.iterations = it;
            return result;
        }
        const double alpha = rz / pap;
        for (long i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (long i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    const double rnorm = std::sqrt(dot(r, r));
    result.relative_residual = rnorm / bnorm;
    result.converged = result.relative_residual <= rtol;
    result.iterations = max_iterations;
    return result;
}

bool cholesky_factor(std::vector<double>& a, long n) {
    for (long j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (long k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (long i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (long k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& factor, long n, std::span<const double> b,
                    std::span<double> x) {
    // forward substitution L y = b
    for (long i = 0; i < n; ++i) {
        double s = b[i];
        for (long k = 0; k < i; ++k) s -= factor[i * n + k] * x[k];
        x[i] = s / factor[i * n + i];
    }
    // backward substitution L^T x = y
    for (long i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (long k = i + 1; k < n; ++k) s -= factor[k * n + i] * x[k];
        x[i] = s / factor[i * n + i];
    }
}

}  // namespace meshguard
