#include "elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"

namespace meshguard {

void ElasticityParams::validate_coefficients(int dim) const {
    if (!(mu > 0.0)) fail(ErrorKind::Argument, "mu_elas must be > 0");
    if (!(2.0 * mu + dim * lambda > 0.0))
        fail(ErrorKind::Argument, "2*mu_elas + dim*lambda_elas must be > 0");
    if (delta < 0.0) fail(ErrorKind::Argument, "delta_elas must be >= 0");
}

void ElasticityParams::validate(int dim, bool has_fixed_nodes) const {
    validate_coefficients(dim);
    if (!has_fixed_nodes && delta == 0.0)
        fail(ErrorKind::Argument,
             "pure Neumann problem: delta_elas must be > 0 when no boundary is fixed");
}

namespace {

// Gradients of the P1 barycentric shape functions: rows of the inverse of
// the edge matrix [p1-p0 | p2-p0 | ...], with grad(phi_0) = -sum of the
// others.
void shape_gradients_2d(const Mesh& mesh, std::span<const int> nodes, double grads[3][2]) {
    const Vec2 p0 = mesh.point2(nodes[0]);
    const Vec2 e1 = mesh.point2(nodes[1]) - p0;
    const Vec2 e2 = mesh.point2(nodes[2]) - p0;
    const double det = e1.x * e2.y - e1.y * e2.x;
    grads[1][0] = e2.y / det;
    grads[1][1] = -e2.x / det;
    grads[2][0] = -e1.y / det;
    grads[2][1] = e1.x / det;
    grads[0][0] = -grads[1][0] - grads[2][0];
    grads[0][1] = -grads[1][1] - grads[2][1];
}

void shape_gradients_3d(const Mesh& mesh, std::span<const int> nodes, double grads[4][3]) {
    const Vec3 p0 = mesh.point3(nodes[0]);
    const Vec3 e1 = mesh.point3(nodes[1]) - p0;
    const Vec3 e2 = mesh.point3(nodes[2]) - p0;
    const Vec3 e3 = mesh.point3(nodes[3]) - p0;
    const Vec3 c23 = cross(e2, e3);
    const Vec3 c31 = cross(e3, e1);
    const Vec3 c12 = cross(e1, e2);
    const double det = dot(e1, c23);
    grads[1][0] = c23.x / det;
    grads[1][1] = c23.y / det;
    grads[1][2] = c23.z / det;
    grads[2][0] = c31.x / det;
    grads[2][1] = c31.y / det;
    grads[2][2] = c31.z / det;
    grads[3][0] = c12.x / det;
    grads[3][1] = c12.y / det;
    grads[3][2] = c12.z / det;
    for (int k = 0; k < 3; ++k) grads[0][k] = -grads[1][k] - grads[2][k] - grads[3][k];
}

}  // namespace

CsrMatrix assemble_stiffness(const Mesh& mesh, const ElasticityParams& params,
                             std::span<const int> fixed_nodes, int threads) {
    const int dim = mesh.dim();
    params.validate_coefficients(dim);

    const int verts = dim + 1;
    const long n_nodes = mesh.node_count();
    const long n_dofs = n_nodes * dim;
    const long n_cells = mesh.cell_count();
    const int block = verts * dim;  // element matrix is block x block

    // Node adjacency (including self) defines the block sparsity.
    std::vector<std::vector<int>> neighbors(n_nodes);
    for (long c = 0; c < n_cells; ++c) {
        const auto nodes = mesh.cell(c);
        for (int a = 0; a < verts; ++a)
            for (int b = 0; b < verts; ++b) neighbors[nodes[a]].push_back(nodes[b]);
    }
    for (auto& list : neighbors) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    CsrMatrix K;
    K.rows = K.cols = n_dofs;
    K.row_ptr.resize(n_dofs + 1);
    K.row_ptr[0] = 0;
    for (long node = 0; node < n_nodes; ++node) {
        const long row_nnz = static_cast<long>(neighbors[node].size()) * dim;
        for (int k = 0; k < dim; ++k)
            K.row_ptr[node * dim + k + 1] = K.row_ptr[node * dim + k] + row_nnz;
    }
    K.col.resize(K.row_ptr[n_dofs]);
    K.val.assign(K.row_ptr[n_dofs], 0.0);
    for (long node = 0; node < n_nodes; ++node) {
        for (int k = 0; k < dim; ++k) {
            long offset = K.row_ptr[node * dim + k];
            for (int nb : neighbors[node])
                for (int c = 0; c < dim; ++c) K.col[offset++] = static_cast<long>(nb) * dim + c;
        }
    }

    // Element matrices in parallel, deterministic serial scatter.
    std::vector<double> element(static_cast<size_t>(n_cells) * block * block);
    parallel_for(static_cast<size_t>(n_cells), threads, [&](size_t c) {
        double grads[4][3] = {};
        if (dim == 2) {
            double g2[3][2];
            shape_gradients_2d(mesh, mesh.cell(c), g2);
            for (int a = 0; a < 3; ++a)
                for (int k = 0; k < 2; ++k) grads[a][k] = g2[a][k];
        } else {
            shape_gradients_3d(mesh, mesh.cell(c), grads);
        }
        const double measure = mesh.cell_measure(static_cast<long>(c));
        const double weight = params.inverse_volume_weighting ? 1.0 / measure : 1.0;
        const double mu = params.mu * weight;
        const double lam = params.lambda * weight;
        const double del = params.delta * weight;
        const double mass_scale = measure / static_cast<double>((dim + 1) * (dim + 2));

        double* em = element.data() + static_cast<size_t>(c) * block * block;
        for (int a = 0; a < verts; ++a) {
            for (int b = 0; b < verts; ++b) {
                double gab = 0.0;
                for (int k = 0; k < dim; ++k) gab += grads[a][k] * grads[b][k];
                const double mass = del * mass_scale * (a == b ? 2.0 : 1.0);
                for (int i = 0; i < dim; ++i) {
                    for (int j = 0; j < dim; ++j) {
                        double v = mu * grads[a][j] * grads[b][i] + lam * grads[a][i] * grads[b][j];
                        if (i == j) v += mu * gab;
                        v *= measure;
                        if (i == j) v += mass;
                        em[(a * dim + i) * block + (b * dim + j)] = v;
                    }
                }
            }
        }
    });

    for (long c = 0; c < n_cells; ++c) {
        const auto nodes = mesh.cell(c);
        const double* em = element.data() + static_cast<size_t>(c) * block * block;
        for (int a = 0; a < verts; ++a) {
            for (int i = 0; i < dim; ++i) {
                const long row = static_cast<long>(nodes[a]) * dim + i;
                for (int b = 0; b < verts; ++b) {
                    for (int j = 0; j < dim; ++j) {
                        const long colidx = static_cast<long>(nodes[b]) * dim + j;
                        // find slot in the sorted row
                        long lo = K.row_ptr[row];
                        long hi = K.row_ptr[row + 1];
                        while (lo < hi) {
                            const long mid = (lo + hi) / 2;
                            if (K.col[mid] < colidx)
                                lo = mid + 1;
                            else
                                hi = mid;
                        }
                        K.val[lo] += em[(a * dim + i) * block + (b * dim + j)];
                    }
                }
            }
        }
    }

    // Symmetric elimination of fixed nodes: zero rows/columns, unit diagonal.
    if (!fixed_nodes.empty()) {
        std::vector<char> fixed_dof(n_dofs, 0);
        for (int node : fixed_nodes)
            for (int k = 0; k < dim; ++k) fixed_dof[static_cast<long>(node) * dim + k] = 1;
        for (long r = 0; r < n_dofs; ++r) {
            for (long k = K.row_ptr[r]; k < K.row_ptr[r + 1]; ++k) {
                if (fixed_dof[r] || fixed_dof[K.col[k]])
                    K.val[k] = (r == K.col[k]) ? 1.0 : 0.0;
            }
        }
    }
    return K;
}

DeformationSolveResult gradient_deformation(const CsrMatrix& stiffness,
                                            std::span<const int> fixed_nodes, int dim,
                                            std::span<const double> b, std::vector<double>& G) {
    const long n = stiffness.rows;
    if (static_cast<long>(b.size()) != n)
        fail(ErrorKind::Argument, "derivative vector length does not match the stiffness operator");

    std::vector<double> rhs(b.begin(), b.end());
    for (int node : fixed_nodes)
        for (int k = 0; k < dim; ++k) rhs[static_cast<long>(node) * dim + k] = 0.0;

    G.assign(n, 0.0);
    auto apply = [&stiffness](std::span<const double> x, std::span<double> y) {
        stiffness.matvec(x, y);
    };
    const std::vector<double> diag = stiffness.diagonal();
    const CgResult cg = pcg(apply, diag, rhs, G, 1e-10, 50 * n);
    if (!cg.converged) {
        std::ostringstream msg;
        msg << "gradient deformation solve did not converge: relative residual "
            << cg.relative_residual << " after " << cg.iterations << " iterations";
        fail(ErrorKind::Numeric, msg.str());
    }
    for (int node : fixed_nodes)
        for (int k = 0; k < dim; ++k) G[static_cast<long>(node) * dim + k] = 0.0;

    DeformationSolveResult result;
    result.iterations = cg.iterations;
    result.relative_residual = cg.relative_residual;
    return result;
}

}  // namespace meshguard
