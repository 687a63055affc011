#include "mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "logging.hpp"

namespace meshguard {

Mesh::Mesh(int dim, std::vector<double> coords, std::vector<int> cells,
           std::vector<int> boundary_elems, std::vector<int> boundary_elem_tags,
           std::vector<int> cell_tags, std::vector<PhysicalGroup> groups)
    : dim_(dim),
      coords_(std::move(coords)),
      cells_(std::move(cells)),
      boundary_elems_(std::move(boundary_elems)),
      boundary_elem_tags_(std::move(boundary_elem_tags)),
      cell_tags_(std::move(cell_tags)),
      groups_(std::move(groups)) {
    if (dim_ != 2 && dim_ != 3)
        fail(ErrorKind::Argument, "mesh dimension must be 2 or 3");
    if (coords_.empty() || coords_.size() % dim_ != 0)
        fail(ErrorKind::Argument, "coordinate vector length must be a positive multiple of dim");
    if (cells_.empty() || cells_.size() % (dim_ + 1) != 0)
        fail(ErrorKind::Argument, "cell vector length must be a positive multiple of dim+1");
    if (boundary_elems_.size() % dim_ != 0 ||
        boundary_elem_tags_.size() * dim_ != boundary_elems_.size())
        fail(ErrorKind::Argument, "inconsistent boundary element arrays");
    if (cell_tags_.empty()) cell_tags_.assign(cell_count(), 0);
    if (static_cast<long>(cell_tags_.size()) != cell_count())
        fail(ErrorKind::Argument, "cell tag count does not match cell count");
    repair_orientation();
    validate();
}

void Mesh::set_coords(std::span<const double> coords) {
    if (coords.size() != coords_.size())
        fail(ErrorKind::Argument, "coordinate vector length mismatch in set_coords");
    std::copy(coords.begin(), coords.end(), coords_.begin());
}

bool Mesh::has_group(const std::string& name) const {
    for (const auto& g : groups_)
        if (g.name == name) return true;
    return false;
}

std::vector<int> Mesh::group_nodes(const std::string& name) const {
    const std::string n(name);
    return group_nodes(std::span<const std::string>(&n, 1));
}

std::vector<int> Mesh::group_nodes(std::span<const std::string> names) const {
    std::vector<int> ids;
    for (const auto& name : names) {
        bool found = false;
        for (const auto& g : groups_) {
            if (g.name == name) {
                ids.push_back(g.id);
                found = true;
            }
        }
        if (!found)
            fail(ErrorKind::Argument, "boundary group '" + name + "' does not exist in the mesh");
    }
    std::vector<int> nodes;
    for (long e = 0; e < boundary_elem_count(); ++e) {
        if (std::find(ids.begin(), ids.end(), boundary_elem_tags_[e]) == ids.end()) continue;
        for (int v : boundary_elem(e)) nodes.push_back(v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

double Mesh::cell_measure(long c) const {
    const auto nodes = cell(c);
    if (dim_ == 2) return triangle_area(point2(nodes[0]), point2(nodes[1]), point2(nodes[2]));
    return tet_volume(point3(nodes[0]), point3(nodes[1]), point3(nodes[2]), point3(nodes[3]));
}

double Mesh::bbox_diameter() const {
    double lo[3], hi[3];
    for (int k = 0; k < dim_; ++k) {
        lo[k] = std::numeric_limits<double>::max();
        hi[k] = std::numeric_limits<double>::lowest();
    }
    for (long n = 0; n < node_count(); ++n) {
        for (int k = 0; k < dim_; ++k) {
            const double v = coords_[n * dim_ + k];
            lo[k] = std::min(lo[k], v);
            hi[k] = std::max(hi[k], v);
        }
    }
    double sq = 0.0;
    for (int k = 0; k < dim_; ++k) sq += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    return std::sqrt(sq);
}

void Mesh::repair_orientation() {
    const int stride = dim_ + 1;
    for (long c = 0; c < cell_count(); ++c) {
        if (cell_measure(c) < 0.0) {
            std::swap(cells_[c * stride + stride - 2], cells_[c * stride + stride - 1]);
            ++orientation_repairs_;
        }
    }
    if (orientation_repairs_ > 0)
        log_info("repaired orientation of " + std::to_string(orientation_repairs_) + " cells");
}

void Mesh::validate() const {
    const long n = node_count();
    const int stride = dim_ + 1;
    for (long c = 0; c < cell_count(); ++c) {
        const auto nodes = cell(c);
        for (int a = 0; a < stride; ++a) {
            if (nodes[a] < 0 || nodes[a] >= n) {
                std::ostringstream msg;
                msg << "cell " << c << " references node " << nodes[a] << " outside [0, " << n
                    << ")";
                fail(ErrorKind::Parse, msg.str());
            }
            for (int b = a + 1; b < stride; ++b)
                if (nodes[a] == nodes[b]) {
                    std::ostringstream msg;
                    msg << "cell " << c << " has duplicate node " << nodes[a];
                    fail(ErrorKind::Parse, msg.str());
                }
        }
    }
    for (long e = 0; e < boundary_elem_count(); ++e)
        for (int v : boundary_elem(e))
            if (v < 0 || v >= n)
                fail(ErrorKind::Parse,
                     "boundary element " + std::to_string(e) + " references invalid node");

    const double tol = 1e-14 * std::pow(bbox_diameter(), dim_);
    for (long c = 0; c < cell_count(); ++c) {
        const double measure = cell_measure(c);
        if (!(measure > tol)) {
            std::ostringstream msg;
            msg << "cell " << c << " is degenerate (signed measure " << measure
                << ", tolerance " << tol << ")";
            fail(ErrorKind::Degenerate, msg.str());
        }
    }
}

}  // namespace meshguard
