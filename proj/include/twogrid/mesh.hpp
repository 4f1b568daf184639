#pragma once

/// Tetrahedral mesh data model, tetmesh v1 ASCII I/O and box-domain
/// generation.
///
/// tetmesh v1 (whitespace separated, 0-based ids, '#' comment lines):
///   tetmesh v1
///   nodes <N>
///   <x> <y> <z>            N lines
///   tets <M>
///   <n0> <n1> <n2> <n3>    M lines
///   boundary <F>
///   <n0> <n1> <n2> <tag>   F lines

#include <array>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "twogrid/geometry.hpp"

namespace twogrid {

struct BoundaryFace {
    std::array<int, 3> nodes;
    std::string tag;
};

struct TetMesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    std::vector<BoundaryFace> boundary_faces;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_tets() const { return static_cast<int>(tets.size()); }

    Tet tet(int e) const {
        const auto& t = tets[static_cast<size_t>(e)];
        return Tet{{nodes[static_cast<size_t>(t[0])], nodes[static_cast<size_t>(t[1])],
                    nodes[static_cast<size_t>(t[2])], nodes[static_cast<size_t>(t[3])]}};
    }

    double total_volume() const {
        double v = 0.0;
        for (int e = 0; e < n_tets(); ++e) v += tet_volume(tet(e));
        return v;
    }

    std::vector<std::string> boundary_tags() const {
        std::vector<std::string> tags;
        for (const auto& f : boundary_faces)
            if (std::find(tags.begin(), tags.end(), f.tag) == tags.end()) tags.push_back(f.tag);
        return tags;
    }
};

namespace detail {

inline std::array<int, 3> sorted_face(int a, int b, int c) {
    std::array<int, 3> f{a, b, c};
    std::sort(f.begin(), f.end());
    return f;
}

// local faces, outward for a positively oriented tet
inline constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

}  // namespace detail

/// Checks index ranges, fixes negative orientations (returned via
/// `repaired`) and verifies each boundary face belongs to exactly one tet.
inline void validate_and_repair(TetMesh& mesh, int* repaired = nullptr) {
    int fixes = 0;
    for (auto& t : mesh.tets) {
        for (int n : t)
            if (n < 0 || n >= mesh.n_nodes())
                throw IndexError("tet references node id " + std::to_string(n) + " out of range");
        Tet tt{{mesh.nodes[static_cast<size_t>(t[0])], mesh.nodes[static_cast<size_t>(t[1])],
                mesh.nodes[static_cast<size_t>(t[2])], mesh.nodes[static_cast<size_t>(t[3])]}};
        if (tet_signed_volume(tt) < 0.0) {
            std::swap(t[2], t[3]);
            ++fixes;
        }
    }
    std::map<std::array<int, 3>, int> face_count;
    for (const auto& t : mesh.tets)
        for (const auto& lf : detail::kTetFaces)
            ++face_count[detail::sorted_face(t[lf[0]], t[lf[1]], t[lf[2]])];
    for (const auto& f : mesh.boundary_faces) {
        for (int n : f.nodes)
            if (n < 0 || n >= mesh.n_nodes())
                throw IndexError("boundary face references node id " + std::to_string(n) +
                                 " out of range");
        auto it = face_count.find(detail::sorted_face(f.nodes[0], f.nodes[1], f.nodes[2]));
        if (it == face_count.end() || it->second != 1)
            throw DanglingFace("boundary face is not a face of exactly one tet");
    }
    if (repaired) *repaired = fixes;
}

inline TetMesh load_mesh(const std::string& text, int* repaired = nullptr) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next_tokens = [&](std::vector<std::string>& toks) -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            toks.clear();
            std::istringstream ls(line);
            std::string tk;
            while (ls >> tk) toks.push_back(tk);
            return true;
        }
        return false;
    };
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError("line " + std::to_string(lineno) + ": " + msg);
    };
    auto to_double = [&](const std::string& s) {
        size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw fail("expected number, got '" + s + "'");
        }
        if (used != s.size()) throw fail("expected number, got '" + s + "'");
        return v;
    };
    auto to_int = [&](const std::string& s) {
        size_t used = 0;
        long v = 0;
        try {
            v = std::stol(s, &used);
        } catch (const std::exception&) {
            throw fail("expected integer, got '" + s + "'");
        }
        if (used != s.size()) throw fail("expected integer, got '" + s + "'");
        return static_cast<int>(v);
    };

    std::vector<std::string> toks;
    if (!next_tokens(toks) || toks.size() != 2 || toks[0] != "tetmesh" || toks[1] != "v1")
        throw fail("expected header 'tetmesh v1'");

    TetMesh mesh;
    if (!next_tokens(toks) || toks.size() != 2 || toks[0] != "nodes")
        throw fail("expected 'nodes <N>'");
    const int nn = to_int(toks[1]);
    mesh.nodes.reserve(static_cast<size_t>(nn));
    for (int i = 0; i < nn; ++i) {
        if (!next_tokens(toks) || toks.size() != 3) throw fail("expected node '<x> <y> <z>'");
        mesh.nodes.push_back(Vec3(to_double(toks[0]), to_double(toks[1]), to_double(toks[2])));
    }

    if (!next_tokens(toks) || toks.size() != 2 || toks[0] != "tets")
        throw fail("expected 'tets <M>'");
    const int nt = to_int(toks[1]);
    mesh.tets.reserve(static_cast<size_t>(nt));
    for (int i = 0; i < nt; ++i) {
        if (!next_tokens(toks) || toks.size() != 4) throw fail("expected tet '<n0> <n1> <n2> <n3>'");
        mesh.tets.push_back({to_int(toks[0]), to_int(toks[1]), to_int(toks[2]), to_int(toks[3])});
    }

    if (next_tokens(toks)) {
        if (toks.size() != 2 || toks[0] != "boundary") throw fail("expected 'boundary <F>'");
        const int nf = to_int(toks[1]);
        for (int i = 0; i < nf; ++i) {
            if (!next_tokens(toks) || toks.size() != 4)
                throw fail("expected boundary face '<n0> <n1> <n2> <tag>'");
            mesh.boundary_faces.push_back(
                BoundaryFace{{to_int(toks[0]), to_int(toks[1]), to_int(toks[2])}, toks[3]});
        }
    }

    validate_and_repair(mesh, repaired);
    return mesh;
}

inline std::string save_mesh(const TetMesh& mesh) {
    std::ostringstream out;
    char buf[96];
    out << "tetmesh v1\n";
    out << "nodes " << mesh.n_nodes() << "\n";
    for (const auto& p : mesh.nodes) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    out << "tets " << mesh.n_tets() << "\n";
    for (const auto& t : mesh.tets) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << "\n";
    out << "boundary " << mesh.boundary_faces.size() << "\n";
    for (const auto& f : mesh.boundary_faces)
        out << f.nodes[0] << ' ' << f.nodes[1] << ' ' << f.nodes[2] << ' ' << f.tag << "\n";
    return out.str();
}

/// Structured box mesh: each hex cell is split into 6 tets (Kuhn split,
/// reflected by cell parity in each axis so that, for cubic cells, the
/// segment between adjacent tet centroids is orthogonal to the shared
/// face (this makes the two-point flux construction exact there).
/// Boundary faces are tagged xmin/xmax/ymin/ymax/zmin/zmax.
inline TetMesh box_tet_mesh(int nx, int ny, int nz, double lx, double ly, double lz) {
    if (nx < 1 || ny < 1 || nz < 1) throw ValidationError("box_tet_mesh: counts must be >= 1");
    if (lx <= 0 || ly <= 0 || lz <= 0) throw ValidationError("box_tet_mesh: lengths must be > 0");

    TetMesh mesh;
    auto nid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                mesh.nodes.push_back(Vec3(lx * i / nx, ly * j / ny, lz * k / nz));

    // the 6 Kuhn path permutations of (x, y, z)
    static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int par[3] = {i % 2, j % 2, k % 2};
                for (const auto& perm : kPerms) {
                    int loc[4][3] = {{0, 0, 0}};
                    for (int s = 0; s < 3; ++s) {
                        for (int a = 0; a < 3; ++a) loc[s + 1][a] = loc[s][a];
                        loc[s + 1][perm[s]] = 1;
                    }
                    std::array<int, 4> ids{};
                    for (int s = 0; s < 4; ++s) {
                        int g[3];
                        for (int a = 0; a < 3; ++a)
                            g[a] = (par[a] ? 1 - loc[s][a] : loc[s][a]);
                        ids[static_cast<size_t>(s)] = nid(i + g[0], j + g[1], k + g[2]);
                    }
                    mesh.tets.push_back(ids);
                }
            }

    // boundary faces = faces occurring once; tag by the axis plane they lie on
    std::map<std::array<int, 3>, int> face_count;
    for (const auto& t : mesh.tets)
        for (const auto& lf : detail::kTetFaces)
            ++face_count[detail::sorted_face(t[lf[0]], t[lf[1]], t[lf[2]])];
    const double dims[3] = {lx, ly, lz};
    const char* names[3][2] = {{"xmin", "xmax"}, {"ymin", "ymax"}, {"zmin", "zmax"}};
    for (const auto& [f, cnt] : face_count) {
        if (cnt != 1) continue;
        std::string tag;
        for (int a = 0; a < 3 && tag.empty(); ++a) {
            for (int side = 0; side < 2; ++side) {
                const double plane = side ? dims[a] : 0.0;
                bool on = true;
                for (int n : f) on = on && std::abs(mesh.nodes[static_cast<size_t>(n)][a] - plane) <
                                               1e-12 * (1.0 + dims[a]);
                if (on) {
                    tag = names[a][side];
                    break;
                }
            }
        }
        mesh.boundary_faces.push_back(BoundaryFace{f, tag});
    }

    validate_and_repair(mesh);
    return mesh;
}

}  // namespace twogrid
