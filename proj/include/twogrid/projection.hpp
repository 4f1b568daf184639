#pragma once

/// Two-grid transfer: vertex-containment pair detection between the
/// flow and geomechanics meshes, and row-normalized volume-weighted
/// projection operators built from the pair list.

#include <optional>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "twogrid/mesh.hpp"

namespace twogrid {

/// An intersecting flow/mech element pair with the raw volume weights
/// Meas(E^f) and Meas(E^p) each side contributes.
struct ElementPair {
    int flow_elem;
    int mech_elem;
    double w_f2m;  // Meas(E^f)
    double w_m2f;  // Meas(E^p)
};

/// Sparse row-stochastic map; row r lists (source element, weight) with
/// weights summing to 1 for covered targets. Empty rows mean the target
/// has no detected partner.
struct ProjectionOperator {
    int n_source = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    int n_target() const { return static_cast<int>(rows.size()); }
    int n_uncovered() const {
        int n = 0;
        for (const auto& r : rows)
            if (r.empty()) ++n;
        return n;
    }
};

namespace detail {

struct Aabb {
    Vec3 lo, hi;
};

inline Aabb tet_aabb(const Tet& t) {
    Aabb b{t[0], t[0]};
    for (int i = 1; i < 4; ++i) {
        b.lo = b.lo.cwiseMin(t[i]);
        b.hi = b.hi.cwiseMax(t[i]);
    }
    return b;
}

inline bool aabb_overlap(const Aabb& a, const Aabb& b, double pad) {
    return (a.lo.array() <= b.hi.array() + pad).all() &&
           (a.hi.array() + pad >= b.lo.array()).all();
}

}  // namespace detail

/// Pair (f, g) is flagged iff a vertex of flow element f lies in mech
/// element g or vice versa (both containment loops); each pair appears
/// once no matter how many vertex tests succeed. The bounding-box
/// prefilter does not change the result set. Note this vertex test can
/// miss configurations whose overlap has no vertex containment (an edge
/// piercing a face); that is the documented behavior of the method.
///
/// Vertex-flagged candidates are confirmed by a clipped intersection
/// volume: containment is boundary-inclusive, so elements that only
/// touch across a shared face or node (zero-measure overlap) would
/// otherwise be paired. Dropping them makes the operators exactly the
/// identity on identical meshes; the filter never adds pairs.
inline std::vector<ElementPair> detect_pairs(const TetMesh& flow_mesh, const TetMesh& mech_mesh,
                                             double tol = 1e-9) {
    if (flow_mesh.n_tets() == 0 || mech_mesh.n_tets() == 0)
        throw EmptyMesh("detect_pairs: a mesh has zero elements");

    std::vector<Tet> ft(static_cast<size_t>(flow_mesh.n_tets()));
    std::vector<Tet> mt(static_cast<size_t>(mech_mesh.n_tets()));
    std::vector<detail::Aabb> fb(ft.size()), mb(mt.size());
    double scale = 0.0;
    for (int f = 0; f < flow_mesh.n_tets(); ++f) {
        ft[static_cast<size_t>(f)] = flow_mesh.tet(f);
        fb[static_cast<size_t>(f)] = detail::tet_aabb(ft[static_cast<size_t>(f)]);
        scale = std::max(scale, tet_diameter(ft[static_cast<size_t>(f)]));
    }
    for (int g = 0; g < mech_mesh.n_tets(); ++g) {
        mt[static_cast<size_t>(g)] = mech_mesh.tet(g);
        mb[static_cast<size_t>(g)] = detail::tet_aabb(mt[static_cast<size_t>(g)]);
        scale = std::max(scale, tet_diameter(mt[static_cast<size_t>(g)]));
    }
    const double pad = tol * scale;

    std::vector<ElementPair> pairs;
    for (int g = 0; g < mech_mesh.n_tets(); ++g) {
        const Tet& tg = mt[static_cast<size_t>(g)];
        for (int f = 0; f < flow_mesh.n_tets(); ++f) {
            if (!detail::aabb_overlap(fb[static_cast<size_t>(f)], mb[static_cast<size_t>(g)], pad))
                continue;
            const Tet& tf = ft[static_cast<size_t>(f)];
            bool hit = false;
            for (int v = 0; v < 4 && !hit; ++v) hit = point_in_tet(tg, tf[v], tol);
            for (int v = 0; v < 4 && !hit; ++v) hit = point_in_tet(tf, tg[v], tol);
            if (!hit) continue;
            const double vf = tet_volume(tf);
            const double vg = tet_volume(tg);
            if (tet_clip_volume(tf, tg) <= 1e-12 * std::min(vf, vg)) continue;
            pairs.push_back(ElementPair{f, g, vf, vg});
        }
    }
    // canonical order by (flow, mech); construction already yields each pair once
    std::sort(pairs.begin(), pairs.end(), [](const ElementPair& a, const ElementPair& b) {
        return std::make_pair(a.flow_elem, a.mech_elem) < std::make_pair(b.flow_elem, b.mech_elem);
    });
    return pairs;
}

/// Builds both operators from a deduplicated pair list. flow_to_mech
/// rows (one per mech element) normalize the Meas(E^f) weights;
/// mech_to_flow rows normalize Meas(E^p).
inline std::pair<ProjectionOperator, ProjectionOperator> build_projection(
    const std::vector<ElementPair>& pairs, int n_flow, int n_mech) {
    ProjectionOperator f2m, m2f;
    f2m.n_source = n_flow;
    f2m.rows.resize(static_cast<size_t>(n_mech));
    m2f.n_source = n_mech;
    m2f.rows.resize(static_cast<size_t>(n_flow));
    for (const auto& p : pairs) {
        f2m.rows[static_cast<size_t>(p.mech_elem)].emplace_back(p.flow_elem, p.w_f2m);
        m2f.rows[static_cast<size_t>(p.flow_elem)].emplace_back(p.mech_elem, p.w_m2f);
    }
    for (auto* op : {&f2m, &m2f}) {
        for (auto& row : op->rows) {
            double sum = 0.0;
            for (const auto& [src, w] : row) sum += w;
            for (auto& [src, w] : row) w /= sum;
        }
    }
    return {std::move(f2m), std::move(m2f)};
}

/// Applies the operator; uncovered targets take the fallback value
/// (previous field value, or the reference value at t=0).
inline VecX apply_projection(const ProjectionOperator& op, const VecX& field,
                             const VecX& fallback) {
    if (field.size() != op.n_source)
        throw SizeMismatch("apply_projection: field length " + std::to_string(field.size()) +
                           " != source count " + std::to_string(op.n_source));
    if (fallback.size() != op.n_target())
        throw SizeMismatch("apply_projection: fallback length mismatch");
    VecX out(op.n_target());
    for (int r = 0; r < op.n_target(); ++r) {
        const auto& row = op.rows[static_cast<size_t>(r)];
        if (row.empty()) {
            out[r] = fallback[r];
            continue;
        }
        double v = 0.0;
        for (const auto& [src, w] : row) v += w * field[src];
        out[r] = v;
    }
    return out;
}

inline VecX apply_projection(const ProjectionOperator& op, const VecX& field) {
    return apply_projection(op, field, VecX::Zero(op.n_target()));
}

/// key = value diagnostics for the operator pair.
struct ProjectionDiagnostics {
    int n_pairs = 0;
    int uncovered_mech = 0;
    int uncovered_flow = 0;
    double min_weight = 0.0;
    double max_weight = 0.0;

    std::string to_text() const {
        std::ostringstream os;
        os << "pair_count = " << n_pairs << "\n";
        os << "uncovered_mech = " << uncovered_mech << "\n";
        os << "uncovered_flow = " << uncovered_flow << "\n";
        os << "min_row_weight = " << min_weight << "\n";
        os << "max_row_weight = " << max_weight << "\n";
        return os.str();
    }
};

inline ProjectionDiagnostics projection_diagnostics(const std::vector<ElementPair>& pairs,
                                                    const ProjectionOperator& f2m,
                                                    const ProjectionOperator& m2f) {
    ProjectionDiagnostics d;
    d.n_pairs = static_cast<int>(pairs.size());
    d.uncovered_mech = f2m.n_uncovered();
    d.uncovered_flow = m2f.n_uncovered();
    double lo = 1.0, hi = 0.0;
    for (const auto* op : {&f2m, &m2f})
        for (const auto& row : op->rows)
            for (const auto& [src, w] : row) {
                lo = std::min(lo, w);
                hi = std::max(hi, w);
            }
    d.min_weight = lo;
    d.max_weight = hi;
    return d;
}

}  // namespace twogrid
