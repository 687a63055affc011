#pragma once

#include <functional>
#include <span>
#include <vector>

namespace meshguard {

// General CSR matrix.
struct CsrMatrix {
    long rows = 0;
    long cols = 0;
    std::vector<long> row_ptr;  // rows + 1
    std::vector<long> col;
    std::vector<double> val;

    void matvec(std::span<const double> x, std::span<double> y) const;
    // y = A^T x
    void matvec_transpose(std::span<const double> x, std::span<double> y) const;
    std::vector<double> diagonal() const;
    long nnz_of_row(long r) const { return row_ptr[r + 1] - row_ptr[r]; }
};

struct CgResult {
    bool converged = false;
    long iterations = 0;
    double relative_residual = 0.0;
};

// Preconditioned conjugate gradients with Jacobi preconditioning given by
// `diag`. apply must compute y = A x for an SPD operator. Relative residual
// ||b - Ax|| <= rtol * ||b||.
CgResult pcg(const std::function<void(std::span<const double>, std::span<double>)>& apply,
             std::span<const double> diag, std::span<const double> b, std::span<double> x,
             double rtol, long max_iterations);

// Dense symmetric positive definite solver (in-place Cholesky). Returns
// false if a nonpositive pivot is met. a is row-major n x n and is
// overwritten by the factor.
bool cholesky_factor(std::vector<double>& a, long n);
void cholesky_solve(const std::vector<double>& factor, long n, std::span<const double> b,
                    std::span<double> x);

}  // namespace meshguard
