#pragma once

#include <span>
#include <vector>

#include "mesh.hpp"
#include "sparse.hpp"

namespace meshguard {

struct ElasticityParams {
    double mu = 1.0;
    double lambda = 0.0;
    double delta = 0.0;
    bool inverse_volume_weighting = false;

    // mu > 0, 2 mu + dim lambda > 0, delta >= 0. Checked on assembly.
    void validate_coefficients(int dim) const;
    // Additionally requires delta > 0 when no boundary is fixed (pure
    // Neumann), the condition for a solvable deformation problem.
    void validate(int dim, bool has_fixed_nodes) const;
};

// P1 stiffness operator of the linear-elasticity bilinear form
//   a(V, W) = int 2 mu eps(V):eps(W) + lambda div V div W + delta V.W dx
// on dim*N dofs (node-major ordering matching the coordinate vector).
// Fixed nodes are eliminated symmetrically: their rows and columns are
// zeroed and the diagonal set to 1. With inverse_volume_weighting the
// parameters are scaled by 1 / |cell| per cell.
CsrMatrix assemble_stiffness(const Mesh& mesh, const ElasticityParams& params,
                             std::span<const int> fixed_nodes, int threads = 1);

struct DeformationSolveResult {
    long iterations = 0;
    double relative_residual = 0.0;
};

// Solve K G = b for the gradient deformation. Entries of b at fixed nodes
// are ignored (eliminated); G is exactly zero there. Relative residual
// 1e-10, at most 50 * dofs iterations. Throws ErrorKind::Numeric on
// non-convergence.
DeformationSolveResult gradient_deformation(const CsrMatrix& stiffness,
                                            std::span<const int> fixed_nodes, int dim,
                                            std::span<const double> b, std::vector<double>& G);

}  // namespace meshguard
