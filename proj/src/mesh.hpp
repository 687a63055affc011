#pragma once

#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace meshguard {

// Physical group from the mesh file. dim is the group's topological
// dimension (d-1 for boundary groups, d for volume groups).
struct PhysicalGroup {
    int id{};
    int dim{};
    std::string name;
};

// Simplicial mesh: triangles in 2D, tetrahedra in 3D. Coordinates are
// stored flat as [x1,y1,(z1),x2,...]; cells as dim+1 node indices each;
// boundary elements (lines in 2D, triangles in 3D) as dim node indices
// each, carrying the physical tag of their group. Connectivity and tags
// are immutable after construction; only coordinates can be updated.
class Mesh {
public:
    Mesh(int dim, std::vector<double> coords, std::vector<int> cells,
         std::vector<int> boundary_elems, std::vector<int> boundary_elem_tags,
         std::vector<int> cell_tags, std::vector<PhysicalGroup> groups);

    int dim() const { return dim_; }
    long node_count() const { return static_cast<long>(coords_.size()) / dim_; }
    long cell_count() const { return static_cast<long>(cells_.size()) / (dim_ + 1); }
    long boundary_elem_count() const {
        return dim_ == 0 ? 0 : static_cast<long>(boundary_elems_.size()) / dim_;
    }

    std::span<const double> coords() const { return coords_; }
    void set_coords(std::span<const double> coords);

    // Node indices of one cell / boundary element.
    std::span<const int> cell(long c) const {
        return {cells_.data() + c * (dim_ + 1), static_cast<size_t>(dim_ + 1)};
    }
    std::span<const int> boundary_elem(long e) const {
        return {boundary_elems_.data() + e * dim_, static_cast<size_t>(dim_)};
    }
    int boundary_elem_tag(long e) const { return boundary_elem_tags_[e]; }
    int cell_tag(long c) const { return cell_tags_[c]; }

    const std::vector<PhysicalGroup>& groups() const { return groups_; }
    bool has_group(const std::string& name) const;
    // Sorted unique node indices belonging to boundary elements of the
    // named group.
    std::vector<int> group_nodes(const std::string& name) const;
    std::vector<int> group_nodes(std::span<const std::string> names) const;

    Vec2 point2(long n) const { return {coords_[2 * n], coords_[2 * n + 1]}; }
    Vec3 point3(long n) const {
        return {coords_[3 * n], coords_[3 * n + 1], coords_[3 * n + 2]};
    }

    // Signed area/volume of cell c.
    double cell_measure(long c) const;

    // Number of cells whose orientation was repaired by a node swap when
    // the mesh was constructed.
    long orientation_repairs() const { return orientation_repairs_; }

    // Bounding-box diameter of the current coordinates.
    double bbox_diameter() const;

    // Throws on out-of-range indices, duplicate nodes within a cell, or
    // cells whose |signed measure| <= 1e-14 * bbox_diameter^dim.
    void validate() const;

private:
    int dim_;
    std::vector<double> coords_;
    std::vector<int> cells_;
    std::vector<int> boundary_elems_;
    std::vector<int> boundary_elem_tags_;
    std::vector<int> cell_tags_;
    std::vector<PhysicalGroup> groups_;
    long orientation_repairs_ = 0;

    void repair_orientation();
};

}  // namespace meshguard
