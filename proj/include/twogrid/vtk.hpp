#pragma once

/// Legacy VTK 3.0 ASCII writer for tet meshes with cell scalars and
/// point vectors, plus small text-file helpers.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twogrid/mesh.hpp"

namespace twogrid {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Renders the mesh and fields as legacy VTK ASCII (UNSTRUCTURED_GRID,
/// cell type 10). Cell scalars must have one value per tet; point
/// vectors must have 3 values per node.
inline std::string vtk_text(const TetMesh& mesh,
                            const std::vector<std::pair<std::string, VecX>>& cell_scalars,
                            const std::vector<std::pair<std::string, VecX>>& point_vectors = {}) {
    for (const auto& [name, f] : cell_scalars)
        if (f.size() != mesh.n_tets())
            throw SizeMismatch("vtk_text: cell field '" + name + "' length mismatch");
    for (const auto& [name, f] : point_vectors)
        if (f.size() != 3 * mesh.n_nodes())
            throw SizeMismatch("vtk_text: point field '" + name + "' length mismatch");

    std::ostringstream os;
    os << "# vtk DataFile Version 3.0\n";
    os << "twogrid output\n";
    os << "ASCII\n";
    os << "DATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.n_nodes() << " double\n";
    for (const auto& p : mesh.nodes)
        os << detail::fmt17(p.x()) << ' ' << detail::fmt17(p.y()) << ' ' << detail::fmt17(p.z())
           << "\n";
    os << "CELLS " << mesh.n_tets() << ' ' << 5 * mesh.n_tets() << "\n";
    for (const auto& t : mesh.tets)
        os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << "\n";
    os << "CELL_TYPES " << mesh.n_tets() << "\n";
    for (int e = 0; e < mesh.n_tets(); ++e) os << "10\n";
    if (!cell_scalars.empty()) {
        os << "CELL_DATA " << mesh.n_tets() << "\n";
        for (const auto& [name, f] : cell_scalars) {
            os << "SCALARS " << name << " double 1\n";
            os << "LOOKUP_TABLE default\n";
            for (Eigen::Index i = 0; i < f.size(); ++i) os << detail::fmt17(f[i]) << "\n";
        }
    }
    if (!point_vectors.empty()) {
        os << "POINT_DATA " << mesh.n_nodes() << "\n";
        for (const auto& [name, f] : point_vectors) {
            os << "VECTORS " << name << " double\n";
            for (int n = 0; n < mesh.n_nodes(); ++n)
                os << detail::fmt17(f[3 * n]) << ' ' << detail::fmt17(f[3 * n + 1]) << ' '
                   << detail::fmt17(f[3 * n + 2]) << "\n";
        }
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_vtk(const TetMesh& mesh,
                      const std::vector<std::pair<std::string, VecX>>& cell_scalars,
                      const std::vector<std::pair<std::string, VecX>>& point_vectors,
                      const std::string& path) {
    write_text_file(path, vtk_text(mesh, cell_scalars, point_vectors));
}

}  // namespace twogrid
