#include "msh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "errors.hpp"
#include "io_util.hpp"

namespace meshguard {

namespace {

[[noreturn]] void parse_fail(const std::string& source, const std::string& what) {
    fail(ErrorKind::Parse, source + ": " + what);
}

std::string next_line(std::istream& in, const std::string& source) {
    std::string line;
    while (std::getline(in, line)) {
        // tolerate \r\n and blank lines
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) return line;
    }
    parse_fail(source, "unexpected end of file");
}

void expect_section_end(std::istream& in, const std::string& source, const std::string& tag) {
    const std::string line = next_line(in, source);
    if (line != tag) parse_fail(source, "expected '" + tag + "', got '" + line + "'");
}

struct RawElement {
    int type{};
    int physical{};
    std::vector<long> nodes;
};

}  // namespace

Mesh parse_msh(std::istream& in, const std::string& source) {
    std::string line = next_line(in, source);
    if (line != "$MeshFormat") parse_fail(source, "missing $MeshFormat section");
    {
        std::istringstream fmt(next_line(in, source));
        double version = 0.0;
        int file_type = -1, data_size = 0;
        fmt >> version >> file_type >> data_size;
        if (!fmt) parse_fail(source, "malformed $MeshFormat line");
        if (std::abs(version - 2.2) > 1e-9)
            fail(ErrorKind::Unsupported,
                 source + ": unsupported MSH version (only 2.2 ASCII is supported)");
        if (file_type != 0)
            fail(ErrorKind::Unsupported, source + ": binary MSH files are not supported");
        expect_section_end(in, source, "$EndMeshFormat");
    }

    std::vector<PhysicalGroup> groups;
    std::vector<long> node_ids;
    std::vector<double> xyz;  // 3 per node as stored in the file
    std::vector<RawElement> elements;

    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        if (line == "$PhysicalNames") {
            const long count = std::stol(next_line(in, source));
            for (long i = 0; i < count; ++i) {
                std::istringstream ls(next_line(in, source));
                PhysicalGroup g;
                ls >> g.dim >> g.id;
                std::string rest;
                std::getline(ls, rest);
                const auto first = rest.find('"');
                const auto last = rest.rfind('"');
                if (!ls || first == std::string::npos || last <= first)
                    parse_fail(source, "malformed $PhysicalNames entry");
                g.name = rest.substr(first + 1, last - first - 1);
                groups.push_back(std::move(g));
            }
            expect_section_end(in, source, "$EndPhysicalNames");
        } else if (line == "$Nodes") {
            const long count = std::stol(next_line(in, source));
            node_ids.reserve(count);
            xyz.reserve(3 * count);
            for (long i = 0; i < count; ++i) {
                std::istringstream ls(next_line(in, source));
                long id = 0;
                double x = 0, y = 0, z = 0;
                ls >> id >> x >> y >> z;
                if (!ls) parse_fail(source, "malformed node line");
                node_ids.push_back(id);
                xyz.push_back(x);
                xyz.push_back(y);
                xyz.push_back(z);
            }
            expect_section_end(in, source, "$EndNodes");
        } else if (line == "$Elements") {
            const long count = std::stol(next_line(in, source));
            elements.reserve(count);
            for (long i = 0; i < count; ++i) {
                std::istringstream ls(next_line(in, source));
                long id = 0;
                int type = 0, ntags = 0;
                ls >> id >> type >> ntags;
                if (!ls) parse_fail(source, "malformed element line");
                RawElement el;
                el.type = type;
                for (int t = 0; t < ntags; ++t) {
                    int tag = 0;
                    ls >> tag;
                    if (t == 0) el.physical = tag;
                }
                int nnodes = 0;
                switch (type) {
                    case 1: nnodes = 2; break;  // line
                    case 2: nnodes = 3; break;  // triangle
                    case 4: nnodes = 4; break;  // tetrahedron
                    default:
                        fail(ErrorKind::Unsupported, source + ": unsupported element type " +
                                                         std::to_string(type) +
                                                         " (expected 1, 2 or 4)");
                }
                el.nodes.resize(nnodes);
                for (int k = 0; k < nnodes; ++k) ls >> el.nodes[k];
                if (!ls) parse_fail(source, "element line with too few nodes");
                elements.push_back(std::move(el));
            }
            expect_section_end(in, source, "$EndElements");
        } else if (line[0] == '$') {
            // skip unknown section
            const std::string end_tag = "$End" + line.substr(1);
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
                    line.pop_back();
                if (line == end_tag) break;
            }
        } else {
            parse_fail(source, "unexpected content outside a section: '" + line + "'");
        }
    }

    if (node_ids.empty()) parse_fail(source, "mesh has no nodes");
    if (elements.empty()) parse_fail(source, "mesh has no elements");

    std::unordered_map<long, int> id_to_index;
    id_to_index.reserve(node_ids.size());
    for (size_t i = 0; i < node_ids.size(); ++i) {
        if (!id_to_index.emplace(node_ids[i], static_cast<int>(i)).second)
            parse_fail(source, "duplicate node id " + std::to_string(node_ids[i]));
    }

    const bool has_tets =
        std::any_of(elements.begin(), elements.end(), [](const RawElement& e) { return e.type == 4; });
    const bool has_tris =
        std::any_of(elements.begin(), elements.end(), [](const RawElement& e) { return e.type == 2; });
    const int dim = has_tets ? 3 : 2;
    if (dim == 2 && !has_tris) parse_fail(source, "mesh has no triangles and no tetrahedra");

    std::vector<double> coords;
    coords.reserve(dim * node_ids.size());
    if (dim == 2) {
        double max_abs_z = 0.0;
        for (size_t i = 0; i < node_ids.size(); ++i)
            max_abs_z = std::max(max_abs_z, std::abs(xyz[3 * i + 2]));
        double span = 0.0;
        for (size_t i = 0; i < node_ids.size(); ++i)
            span = std::max({span, std::abs(xyz[3 * i]), std::abs(xyz[3 * i + 1])});
        if (max_abs_z > 1e-12 * std::max(1.0, span))
            fail(ErrorKind::Unsupported,
                 source + ": mesh has nonzero z coordinates but no tetrahedra");
        for (size_t i = 0; i < node_ids.size(); ++i) {
            coords.push_back(xyz[3 * i]);
            coords.push_back(xyz[3 * i + 1]);
        }
    } else {
        for (size_t i = 0; i < node_ids.size(); ++i) {
            coords.push_back(xyz[3 * i]);
            coords.push_back(xyz[3 * i + 1]);
            coords.push_back(xyz[3 * i + 2]);
        }
    }

    const int volume_type = (dim == 2) ? 2 : 4;
    const int boundary_type = (dim == 2) ? 1 : 2;
    std::vector<int> cells, cell_tags, boundary, boundary_tags;
    for (const auto& el : elements) {
        std::vector<int> local(el.nodes.size());
        for (size_t k = 0; k < el.nodes.size(); ++k) {
            const auto it = id_to_index.find(el.nodes[k]);
            if (it == id_to_index.end())
                parse_fail(source, "element references unknown node id " +
                                       std::to_string(el.nodes[k]));
            local[k] = it->second;
        }
        if (el.type == volume_type) {
            cells.insert(cells.end(), local.begin(), local.end());
            cell_tags.push_back(el.physical);
        } else if (el.type == boundary_type) {
            boundary.insert(boundary.end(), local.begin(), local.end());
            boundary_tags.push_back(el.physical);
        } else {
            fail(ErrorKind::Unsupported,
                 source + ": element type " + std::to_string(el.type) +
                     " does not match mesh dimension " + std::to_string(dim));
        }
    }
    if (cells.empty()) parse_fail(source, "mesh has no volume cells");

    return Mesh(dim, std::move(coords), std::move(cells), std::move(boundary),
                std::move(boundary_tags), std::move(cell_tags), std::move(groups));
}

Mesh load_msh(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open mesh file '" + path + "'");
    return parse_msh(in, path);
}

std::string format_msh(const Mesh& mesh) {
    std::ostringstream out;
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    if (!mesh.groups().empty()) {
        out << "$PhysicalNames\n" << mesh.groups().size() << "\n";
        for (const auto& g : mesh.groups())
            out << g.dim << " " << g.id << " \"" << g.name << "\"\n";
        out << "$EndPhysicalNames\n";
    }
    const int dim = mesh.dim();
    out << "$Nodes\n" << mesh.node_count() << "\n";
    char buf[64];
    const auto coords = mesh.coords();
    for (long n = 0; n < mesh.node_count(); ++n) {
        out << (n + 1);
        for (int k = 0; k < dim; ++k) {
            std::snprintf(buf, sizeof(buf), " %.17g", coords[n * dim + k]);
            out << buf;
        }
        if (dim == 2) out << " 0";
        out << "\n";
    }
    out << "$EndNodes\n";

    const long total = mesh.boundary_elem_count() + mesh.cell_count();
    out << "$Elements\n" << total << "\n";
    long id = 1;
    const int boundary_type = (dim == 2) ? 1 : 2;
    const int volume_type = (dim == 2) ? 2 : 4;
    for (long e = 0; e < mesh.boundary_elem_count(); ++e) {
        const int tag = mesh.boundary_elem_tag(e);
        out << id++ << " " << boundary_type << " 2 " << tag << " " << tag;
        for (int v : mesh.boundary_elem(e)) out << " " << (v + 1);
        out << "\n";
    }
    for (long c = 0; c < mesh.cell_count(); ++c) {
        const int tag = mesh.cell_tag(c);
        out << id++ << " " << volume_type << " 2 " << tag << " " << tag;
        for (int v : mesh.cell(c)) out << " " << (v + 1);
        out << "\n";
    }
    out << "$EndElements\n";
    return out.str();
}

void save_msh(const Mesh& mesh, const std::string& path) {
    if (mesh.node_count() == 0) fail(ErrorKind::Argument, "refusing to save empty mesh");
    atomic_write_file(path, format_msh(mesh));
}

}  // namespace meshguard
