#pragma once

/// Barycentric predicates and volume measures on tetrahedra.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "twogrid/core.hpp"

namespace twogrid {

/// Tetrahedron by its four vertices. Positive orientation means
/// det([v1-v0, v2-v0, v3-v0]) > 0; mesh loading enforces this.
struct Tet {
    std::array<Vec3, 4> v;

    const Vec3& operator[](int i) const { return v[static_cast<size_t>(i)]; }
    Vec3& operator[](int i) { return v[static_cast<size_t>(i)]; }
};

/// Barycentric coordinates w.r.t. a tet; sums to 1 for any point.
struct Bary {
    std::array<double, 4> l;

    double operator[](int i) const { return l[static_cast<size_t>(i)]; }
    double min() const { return *std::min_element(l.begin(), l.end()); }
};

inline double tet_signed_volume(const Tet& t) {
    Eigen::Matrix3d m;
    m.col(0) = t[1] - t[0];
    m.col(1) = t[2] - t[0];
    m.col(2) = t[3] - t[0];
    return m.determinant() / 6.0;
}

inline double tet_volume(const Tet& t) { return std::abs(tet_signed_volume(t)); }

inline Vec3 tet_centroid(const Tet& t) { return (t[0] + t[1] + t[2] + t[3]) / 4.0; }

/// Longest edge length.
inline double tet_diameter(const Tet& t) {
    double d = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) d = std::max(d, (t[a] - t[b]).norm());
    return d;
}

/// Scale-invariant degeneracy threshold on |signed volume|.
inline double tet_vol_eps(const Tet& t) {
    const double d = tet_diameter(t);
    return 1e-14 * d * d * d;
}

inline Bary barycentric_coords(const Tet& t, const Vec3& p) {
    Eigen::Matrix3d m;
    m.col(0) = t[1] - t[0];
    m.col(1) = t[2] - t[0];
    m.col(2) = t[3] - t[0];
    const double vol6 = m.determinant();
    if (std::abs(vol6 / 6.0) <= tet_vol_eps(t))
        throw DegenerateTet("barycentric_coords: degenerate tetrahedron");
    const Vec3 lam = m.partialPivLu().solve(p - t[0]);
    return Bary{{1.0 - lam[0] - lam[1] - lam[2], lam[0], lam[1], lam[2]}};
}

/// Containment with relative tolerance on the barycentric coordinates;
/// boundary points (λ == 0) count as inside.
inline bool point_in_tet(const Tet& t, const Vec3& p, double tol = 1e-9) {
    return barycentric_coords(t, p).min() >= -tol;
}

namespace detail {

/// Sutherland-Hodgman clip of a convex polygon by the half-space
/// n·x <= d; points within eps of the plane count as inside and are
/// reported through `on_plane` for cap reconstruction.
inline std::vector<Vec3> clip_polygon(const std::vector<Vec3>& poly, const Vec3& n, double d,
                                      double eps, std::vector<Vec3>& on_plane) {
    std::vector<Vec3> out;
    const size_t m = poly.size();
    for (size_t i = 0; i < m; ++i) {
        const Vec3& cur = poly[i];
        const Vec3& nxt = poly[(i + 1) % m];
        const double dc = n.dot(cur) - d;
        const double dn = n.dot(nxt) - d;
        if (dc <= eps) {
            out.push_back(cur);
            if (std::abs(dc) <= eps) on_plane.push_back(cur);
        }
        if ((dc > eps && dn < -eps) || (dc < -eps && dn > eps)) {
            const double t = dc / (dc - dn);
            const Vec3 x = cur + t * (nxt - cur);
            out.push_back(x);
            on_plane.push_back(x);
        }
    }
    return out;
}

}  // namespace detail

/// Exact (clipping-based) volume of the intersection of two tets.
/// Clips the faces of `a` by the four half-spaces of `b`, rebuilds the
/// cap polygon on each cutting plane, and integrates pyramid volumes
/// about an interior point. Returns 0 for zero-measure contact.
inline double tet_clip_volume(const Tet& a, const Tet& b) {
    const double scale = std::max(tet_diameter(a), tet_diameter(b));
    const double eps = 1e-12 * scale;

    static constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    std::vector<std::vector<Vec3>> faces;
    for (const auto& f : kFaces) faces.push_back({a[f[0]], a[f[1]], a[f[2]]});

    const double sb = tet_signed_volume(b) >= 0.0 ? 1.0 : -1.0;
    for (const auto& f : kFaces) {
        // outward normal of b's face (flip for negative orientation)
        Vec3 n = (b[f[1]] - b[f[0]]).cross(b[f[2]] - b[f[0]]) * sb;
        const double nn = n.norm();
        if (nn <= eps * eps) return 0.0;
        n /= nn;
        const double d = n.dot(b[f[0]]);

        std::vector<Vec3> on_plane;
        std::vector<std::vector<Vec3>> next;
        for (const auto& poly : faces) {
            auto clipped = detail::clip_polygon(poly, n, d, eps, on_plane);
            if (clipped.size() >= 3) next.push_back(std::move(clipped));
        }
        // cap polygon: deduplicate and order the cut points by angle
        std::vector<Vec3> cap;
        for (const auto& p : on_plane) {
            bool dup = false;
            for (const auto& q : cap) dup = dup || (p - q).norm() <= 10 * eps;
            if (!dup) cap.push_back(p);
        }
        if (cap.size() >= 3) {
            Vec3 c = Vec3::Zero();
            for (const auto& p : cap) c += p;
            c /= static_cast<double>(cap.size());
            const Vec3 u = (cap[0] - c).norm() > eps ? (cap[0] - c).normalized()
                                                     : Vec3(n.unitOrthogonal());
            const Vec3 v = n.cross(u);
            std::sort(cap.begin(), cap.end(), [&](const Vec3& p, const Vec3& q) {
                return std::atan2(v.dot(p - c), u.dot(p - c)) <
                       std::atan2(v.dot(q - c), u.dot(q - c));
            });
            next.push_back(std::move(cap));
        }
        faces = std::move(next);
        if (faces.empty()) return 0.0;
    }

    Vec3 o = Vec3::Zero();
    int np = 0;
    for (const auto& poly : faces)
        for (const auto& p : poly) {
            o += p;
            ++np;
        }
    if (np == 0) return 0.0;
    o /= static_cast<double>(np);

    double vol = 0.0;
    for (const auto& poly : faces) {
        Vec3 c = Vec3::Zero();
        for (const auto& p : poly) c += p;
        c /= static_cast<double>(poly.size());
        Vec3 area2 = Vec3::Zero();  // Newell area vector (twice the area)
        for (size_t i = 0; i < poly.size(); ++i)
            area2 += (poly[i] - c).cross(poly[(i + 1) % poly.size()] - c);
        vol += std::abs((c - o).dot(area2)) / 6.0;
    }
    return vol;
}

/// Monte Carlo estimate of Meas(a ∩ b): uniform samples in a, hit
/// fraction in b. Deterministic for a fixed seed. Test oracle for the
/// vertex-containment pair detection, which is not an exact
/// intersection test.
inline double overlap_volume_mc(const Tet& a, const Tet& b, std::int64_t n_samples,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        double s = uni(rng), t = uni(rng), u = uni(rng);
        // fold the unit cube onto the unit simplex
        if (s + t > 1.0) { s = 1.0 - s; t = 1.0 - t; }
        if (t + u > 1.0) {
            const double tt = t;
            t = 1.0 - u;
            u = 1.0 - s - tt;
        } else if (s + t + u > 1.0) {
            const double ss = s;
            s = 1.0 - t - u;
            u = ss + t + u - 1.0;
        }
        const Vec3 p = a[0] + s * (a[1] - a[0]) + t * (a[2] - a[0]) + u * (a[3] - a[0]);
        if (point_in_tet(b, p, 0.0)) ++hits;
    }
    return tet_volume(a) * static_cast<double>(hits) / static_cast<double>(n_samples);
}

}  // namespace twogrid
