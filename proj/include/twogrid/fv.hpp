#pragma once

/// Finite-volume geometry derived from a tet mesh: element centroids,
/// bulk volumes and two-point face transmissibilities.

#include <map>
#include <vector>

#include "twogrid/mesh.hpp"

namespace twogrid {

/// Interior face shared by elements i and j. `trans` is geometric
/// (permeability included, 1/viscosity applied by the flow module);
/// `normal` is the unit face normal oriented from i to j.
struct FvConnection {
    int i;
    int j;
    double trans;
    double area;
    Vec3 normal;
    Vec3 face_centroid;
};

/// Boundary face of a single element. An empty tag means the face was
/// not listed in the mesh boundary section; such faces default to
/// no-flow in the flow module.
struct FvBoundaryConnection {
    int elem;
    std::string tag;
    double trans;
    double area;
    Vec3 face_centroid;
};

struct FvGrid {
    std::vector<Vec3> centroids;
    std::vector<double> volumes;
    std::vector<FvConnection> connections;
    std::vector<FvBoundaryConnection> boundary_conns;

    int n_elems() const { return static_cast<int>(volumes.size()); }
};

/// Two-point construction. Half-transmissibility from element i to a
/// face: T_i = k·A / (d_i·n̂), with d_i the centroid-to-face-centroid
/// vector and n̂ the outward unit normal; this reduces to k·A/|d_i|
/// when d_i is normal to the face and stays consistent when the face
/// centroid is offset sideways from the centroid line. Interior faces
/// combine the two halves harmonically.
inline FvGrid build_fv_grid(const TetMesh& mesh, double permeability, double viscosity) {
    if (permeability <= 0.0) throw ValidationError("build_fv_grid: permeability must be > 0");
    if (viscosity <= 0.0) throw ValidationError("build_fv_grid: viscosity must be > 0");
    if (mesh.n_tets() == 0) throw EmptyMesh("build_fv_grid: mesh has zero elements");

    FvGrid grid;
    grid.centroids.resize(static_cast<size_t>(mesh.n_tets()));
    grid.volumes.resize(static_cast<size_t>(mesh.n_tets()));
    double scale = 0.0;
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const Tet t = mesh.tet(e);
        grid.centroids[static_cast<size_t>(e)] = tet_centroid(t);
        grid.volumes[static_cast<size_t>(e)] = tet_volume(t);
        scale = std::max(scale, tet_diameter(t));
    }
    const double area_eps = 1e-14 * scale * scale;
    const double dist_eps = 1e-14 * scale;

    // deterministic face enumeration via ordered map on sorted node ids
    std::map<std::array<int, 3>, std::vector<std::pair<int, int>>> faces;
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        for (int lf = 0; lf < 4; ++lf) {
            const auto* f = detail::kTetFaces[lf];
            faces[detail::sorted_face(t[f[0]], t[f[1]], t[f[2]])].emplace_back(e, lf);
        }
    }
    std::map<std::array<int, 3>, std::string> tag_of;
    for (const auto& bf : mesh.boundary_faces)
        tag_of[detail::sorted_face(bf.nodes[0], bf.nodes[1], bf.nodes[2])] = bf.tag;

    // half-transmissibility of element e through its local face lf;
    // n is set to the outward unit normal
    auto half_trans = [&](int e, int lf, Vec3& fc, double& area, Vec3& n) {
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        const auto* f = detail::kTetFaces[lf];
        const Vec3& a = mesh.nodes[static_cast<size_t>(t[f[0]])];
        const Vec3& b = mesh.nodes[static_cast<size_t>(t[f[1]])];
        const Vec3& c = mesh.nodes[static_cast<size_t>(t[f[2]])];
        const Vec3 cross = (b - a).cross(c - a);  // outward for positive orientation
        area = 0.5 * cross.norm();
        if (area <= area_eps) throw DegenerateFace("build_fv_grid: face area below threshold");
        n = cross.normalized();
        fc = (a + b + c) / 3.0;
        const double dn = (fc - grid.centroids[static_cast<size_t>(e)]).dot(n);
        if (dn <= dist_eps)
            throw DegenerateFace("build_fv_grid: centroid-to-face distance below threshold");
        return permeability * area / dn;
    };

    for (const auto& [key, elems] : faces) {
        if (elems.size() == 1) {
            const auto [e, lf] = elems[0];
            Vec3 fc, n;
            double area;
            const double t = half_trans(e, lf, fc, area, n);
            std::string tag;
            if (auto it = tag_of.find(key); it != tag_of.end()) tag = it->second;
            grid.boundary_conns.push_back(FvBoundaryConnection{e, tag, t, area, fc});
        } else if (elems.size() == 2) {
            auto [ei, lfi] = elems[0];
            auto [ej, lfj] = elems[1];
            if (ei > ej) {
                std::swap(ei, ej);
                std::swap(lfi, lfj);
            }
            Vec3 fci, ni, fcj, nj;
            double ai, aj;
            const double ti = half_trans(ei, lfi, fci, ai, ni);
            const double tj = half_trans(ej, lfj, fcj, aj, nj);
            const double tij = 1.0 / (1.0 / ti + 1.0 / tj);
            grid.connections.push_back(FvConnection{ei, ej, tij, ai, ni, fci});
        } else {
            throw DanglingFace("build_fv_grid: face shared by more than two tets");
        }
    }
    return grid;
}

}  // namespace twogrid
