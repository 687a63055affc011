#pragma once

#include <variant>
#include <vector>

#include "mesh.hpp"

namespace meshguard {

// Quadratic volume penalty 0.5 * weight * (vol - target)^2.
struct VolumeTerm {
    double target = 0.0;
    double weight = 0.0;
};

// 0.5 * weight * |bc - target|^2 with bc the domain barycenter.
struct BarycenterTerm {
    std::vector<double> target;  // dim entries
    double weight = 0.0;
};

// weight * total boundary measure (edge length in 2D, face area in 3D),
// summed over the stored boundary elements.
struct PerimeterTerm {
    double weight = 0.0;
};

// 2D reference curve r(theta) = radius * (1 + amplitude * cos(lobes*theta))
// around center.
struct StarReference {
    std::array<double, 2> center{0.0, 0.0};
    double radius = 1.0;
    double amplitude = 0.0;
    int lobes = 0;
};

// 3D reference surface |x - center|_S = 1 with S = diag(semi_axes).
struct EllipsoidReference {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
};

// 0.5 * weight * sum over boundary nodes of the squared signed distance
// proxy to the reference. boundary_group selects the nodes; empty means
// every node on a stored boundary element.
struct TargetDistanceTerm {
    double weight = 0.0;
    std::string boundary_group;
    std::variant<StarReference, EllipsoidReference> reference;
};

using FunctionalTerm = std::variant<VolumeTerm, BarycenterTerm, PerimeterTerm, TargetDistanceTerm>;

struct FunctionalSpec {
    std::vector<FunctionalTerm> terms;

    // Weights >= 0, at least one term, targets and references matching the
    // mesh dimension, referenced boundary groups present.
    void validate(const Mesh& mesh) const;
};

double evaluate_functional(const Mesh& mesh, const FunctionalSpec& spec);

// Exact derivative of evaluate_functional with respect to the flat node
// coordinate vector; b is resized to dim * node_count.
void functional_gradient(const Mesh& mesh, const FunctionalSpec& spec, std::vector<double>& b);

double mesh_volume(const Mesh& mesh);

}  // namespace meshguard
