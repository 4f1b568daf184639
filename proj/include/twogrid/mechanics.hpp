#pragma once

/// P1 (linear tetrahedron) quasi-static elasticity with Biot
/// effective-stress pressure load, Dirichlet/traction/rigid-plate
/// boundary conditions via master-slave condensation.

#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

#include "twogrid/flow.hpp"  // solve_spd
#include "twogrid/material.hpp"
#include "twogrid/mesh.hpp"

namespace twogrid {

struct MechState {
    VecX u;        // 3 per node
    VecX eps_v;    // per element
    VecX sigma_v;  // per element
    VecX p_mech;   // projected pressure per element
};

/// Per-tag displacement component constraints; roller when value 0.
struct MechFixed {
    std::array<bool, 3> fix{false, false, false};
    std::array<double, 3> value{0.0, 0.0, 0.0};
};

/// All nodes on `tag` share one unknown displacement in `direction`,
/// loaded by the signed total force (along the +direction axis).
struct RigidPlate {
    std::string tag;
    int direction = 0;
    double force = 0.0;
};

struct MechBcSpec {
    std::map<std::string, MechFixed> fixed;
    std::map<std::string, Vec3> tractions;  // Pa, applied on tagged faces
    std::vector<RigidPlate> plates;
};

namespace detail {

struct P1Grads {
    std::array<Vec3, 4> g;  // gradients of the four shape functions
    double vol;
};

inline P1Grads shape_gradients(const Tet& t) {
    Eigen::Matrix3d J;
    J.col(0) = t[1] - t[0];
    J.col(1) = t[2] - t[0];
    J.col(2) = t[3] - t[0];
    const double det = J.determinant();
    if (std::abs(det) / 6.0 <= tet_vol_eps(t))
        throw DegenerateElement("shape_gradients: zero-volume tetrahedron");
    const Eigen::Matrix3d Jinv = J.inverse();
    P1Grads out;
    out.vol = std::abs(det) / 6.0;
    for (int a = 1; a < 4; ++a) out.g[static_cast<size_t>(a)] = Jinv.row(a - 1).transpose();
    out.g[0] = -(out.g[1] + out.g[2] + out.g[3]);
    return out;
}

/// Isotropic drained stiffness in Voigt order (xx, yy, zz, xy, yz, xz)
/// with engineering shear strains.
inline Eigen::Matrix<double, 6, 6> voigt_D(const PoroelasticMaterial& mat) {
    const double lam = mat.lambda();
    const double g = mat.G();
    Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) D(i, j) = (i == j) ? lam + 2.0 * g : lam;
    for (int i = 3; i < 6; ++i) D(i, i) = g;
    return D;
}

}  // namespace detail

/// Global P1 stiffness, symmetric positive semidefinite before
/// constraints (6 rigid zero-energy modes).
inline Eigen::SparseMatrix<double> assemble_stiffness(const TetMesh& mesh,
                                                      const PoroelasticMaterial& mat) {
    const int ndof = 3 * mesh.n_nodes();
    const Eigen::Matrix<double, 6, 6> D = detail::voigt_D(mat);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.n_tets()) * 144);
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const auto gr = detail::shape_gradients(mesh.tet(e));
        Eigen::Matrix<double, 6, 12> B = Eigen::Matrix<double, 6, 12>::Zero();
        for (int a = 0; a < 4; ++a) {
            const Vec3& g = gr.g[static_cast<size_t>(a)];
            const int c = 3 * a;
            B(0, c + 0) = g.x();
            B(1, c + 1) = g.y();
            B(2, c + 2) = g.z();
            B(3, c + 0) = g.y();
            B(3, c + 1) = g.x();
            B(4, c + 1) = g.z();
            B(4, c + 2) = g.y();
            B(5, c + 0) = g.z();
            B(5, c + 2) = g.x();
        }
        const Eigen::Matrix<double, 12, 12> Ke = gr.vol * (B.transpose() * D * B);
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        for (int a = 0; a < 4; ++a)
            for (int i = 0; i < 3; ++i)
                for (int b = 0; b < 4; ++b)
                    for (int j = 0; j < 3; ++j)
                        trip.emplace_back(3 * t[a] + i, 3 * t[b] + j, Ke(3 * a + i, 3 * b + j));
    }
    Eigen::SparseMatrix<double> K(ndof, ndof);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

/// Nodal load from element-constant pressure via the effective-stress
/// weak form: f[a] += b * (p_e - p_ref) * V_e * grad(N_a).
inline VecX assemble_pressure_load(const TetMesh& mesh, const PoroelasticMaterial& mat,
                                   const VecX& p_mech, double p_ref) {
    if (p_mech.size() != mesh.n_tets())
        throw SizeMismatch("assemble_pressure_load: pressure length != element count");
    VecX f = VecX::Zero(3 * mesh.n_nodes());
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const double dp = p_mech[e] - p_ref;
        if (dp == 0.0 || mat.b == 0.0) continue;
        const auto gr = detail::shape_gradients(mesh.tet(e));
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        for (int a = 0; a < 4; ++a)
            f.segment<3>(3 * t[a]) += mat.b * dp * gr.vol * gr.g[static_cast<size_t>(a)];
    }
    return f;
}

/// Body force rho_b * g with V/4 lumping; rho_b = phi0*rho_f0 + (1-phi0)*rho_s.
inline VecX assemble_body_force(const TetMesh& mesh, const PoroelasticMaterial& mat) {
    VecX f = VecX::Zero(3 * mesh.n_nodes());
    if (mat.gravity.squaredNorm() == 0.0) return f;
    const Vec3 bg = mat.rho_bulk() * mat.gravity;
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const double v4 = tet_volume(mesh.tet(e)) / 4.0;
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        for (int a = 0; a < 4; ++a) f.segment<3>(3 * t[a]) += v4 * bg;
    }
    return f;
}

/// Surface tractions on tagged boundary faces, A/3 lumping per node.
inline VecX assemble_traction_load(const TetMesh& mesh, const MechBcSpec& bc) {
    VecX f = VecX::Zero(3 * mesh.n_nodes());
    for (const auto& bf : mesh.boundary_faces) {
        auto it = bc.tractions.find(bf.tag);
        if (it == bc.tractions.end()) continue;
        const Vec3& a = mesh.nodes[static_cast<size_t>(bf.nodes[0])];
        const Vec3& b = mesh.nodes[static_cast<size_t>(bf.nodes[1])];
        const Vec3& c = mesh.nodes[static_cast<size_t>(bf.nodes[2])];
        const double area = 0.5 * ((b - a).cross(c - a)).norm();
        for (int n : bf.nodes) f.segment<3>(3 * n) += (area / 3.0) * it->second;
    }
    return f;
}

/// Reduction map from full nodal DOFs to constrained unknowns.
/// red_of[dof] is the reduced column (-1 for fixed DOFs); all DOFs tied
/// to a rigid plate share one column. plate_red lists that column per
/// plate, in bc order.
struct ConstraintMap {
    int n_red = 0;
    std::vector<int> red_of;
    std::vector<double> fixed_value;
    std::vector<int> plate_red;
};

inline ConstraintMap build_constraints(const TetMesh& mesh, const MechBcSpec& bc) {
    const int nn = mesh.n_nodes();
    const int ndof = 3 * nn;
    std::vector<int> state(static_cast<size_t>(ndof), 0);  // 0 free, 1 fixed, 2+i plate i
    std::vector<double> fval(static_cast<size_t>(ndof), 0.0);

    std::map<std::string, std::vector<int>> nodes_of_tag;
    for (const auto& bf : mesh.boundary_faces)
        for (int n : bf.nodes) nodes_of_tag[bf.tag].push_back(n);
    for (auto& [tag, ns] : nodes_of_tag) {
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    }

    for (const auto& [tag, fx] : bc.fixed) {
        auto it = nodes_of_tag.find(tag);
        if (it == nodes_of_tag.end())
            throw ValidationError("mechanics bc: tag '" + tag + "' not present in mesh");
        for (int n : it->second)
            for (int c = 0; c < 3; ++c)
                if (fx.fix[static_cast<size_t>(c)]) {
                    state[static_cast<size_t>(3 * n + c)] = 1;
                    fval[static_cast<size_t>(3 * n + c)] = fx.value[static_cast<size_t>(c)];
                }
    }
    for (size_t pi = 0; pi < bc.plates.size(); ++pi) {
        const auto& pl = bc.plates[pi];
        auto it = nodes_of_tag.find(pl.tag);
        if (it == nodes_of_tag.end())
            throw ValidationError("mechanics bc: plate tag '" + pl.tag + "' not present in mesh");
        for (int n : it->second) {
            auto& s = state[static_cast<size_t>(3 * n + pl.direction)];
            if (s == 1)
                throw ValidationError("mechanics bc: plate DOF also fixed on tag '" + pl.tag + "'");
            s = 2 + static_cast<int>(pi);
        }
    }

    ConstraintMap cm;
    cm.red_of.assign(static_cast<size_t>(ndof), -1);
    cm.fixed_value.assign(fval.begin(), fval.end());
    cm.plate_red.assign(bc.plates.size(), -1);
    int next = 0;
    for (int d = 0; d < ndof; ++d) {
        if (state[static_cast<size_t>(d)] == 0) {
            cm.red_of[static_cast<size_t>(d)] = next++;
        } else if (state[static_cast<size_t>(d)] >= 2) {
            const int pi = state[static_cast<size_t>(d)] - 2;
            if (cm.plate_red[static_cast<size_t>(pi)] < 0)
                cm.plate_red[static_cast<size_t>(pi)] = next++;
            cm.red_of[static_cast<size_t>(d)] = cm.plate_red[static_cast<size_t>(pi)];
        }
    }
    cm.n_red = next;

    // rigid-mode check: every rigid-body motion must violate some
    // constraint (a fixed DOF, or unequal values inside a plate group)
    Vec3 cen = Vec3::Zero();
    for (const auto& p : mesh.nodes) cen += p;
    cen /= static_cast<double>(nn);
    double rad = 1.0;
    for (const auto& p : mesh.nodes) rad = std::max(rad, (p - cen).norm());
    auto rigid = [&](int m, int node) -> Vec3 {
        if (m < 3) return Vec3::Unit(m);
        const Vec3 r = (mesh.nodes[static_cast<size_t>(node)] - cen) / rad;
        return Vec3::Unit(m - 3).cross(r);
    };
    std::vector<Eigen::Matrix<double, 1, 6>> rows;
    for (int d = 0; d < ndof; ++d)
        if (state[static_cast<size_t>(d)] == 1) {
            Eigen::Matrix<double, 1, 6> row;
            for (int m = 0; m < 6; ++m) row(m) = rigid(m, d / 3)[d % 3];
            rows.push_back(row);
        }
    for (size_t pi = 0; pi < bc.plates.size(); ++pi) {
        int ref = -1;
        const int dir = bc.plates[pi].direction;
        for (int n = 0; n < nn; ++n) {
            if (state[static_cast<size_t>(3 * n + dir)] != 2 + static_cast<int>(pi)) continue;
            if (ref < 0) {
                ref = n;
                continue;
            }
            Eigen::Matrix<double, 1, 6> row;
            for (int m = 0; m < 6; ++m) row(m) = rigid(m, n)[dir] - rigid(m, ref)[dir];
            rows.push_back(row);
        }
    }
    Eigen::MatrixXd C(static_cast<Eigen::Index>(rows.size()), 6);
    for (size_t r = 0; r < rows.size(); ++r) C.row(static_cast<Eigen::Index>(r)) = rows[r];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
    qr.setThreshold(1e-10);
    if (rows.size() < 6 || qr.rank() < 6)
        throw InsufficientConstraints("mechanics bc: rigid-body modes are not eliminated");
    return cm;
}

/// Solves K u = f under the constraint map: reduced K_red = P^T K P,
/// plate forces go to their master rows, fixed values back-substituted.
inline VecX solve_mechanics(const Eigen::SparseMatrix<double>& K, const VecX& f,
                            const ConstraintMap& cm, const MechBcSpec& bc,
                            const VecX* guess = nullptr) {
    const Eigen::Index ndof = K.rows();
    if (f.size() != ndof) throw SizeMismatch("solve_mechanics: load length mismatch");

    std::vector<Eigen::Triplet<double>> trip;
    VecX rhs = VecX::Zero(cm.n_red);
    for (Eigen::Index d = 0; d < ndof; ++d) {
        const int r = cm.red_of[static_cast<size_t>(d)];
        if (r >= 0) rhs[r] += f[d];
    }
    for (size_t pi = 0; pi < bc.plates.size(); ++pi)
        rhs[cm.plate_red[pi]] += bc.plates[pi].force;
    for (int col = 0; col < K.outerSize(); ++col) {
        const int rc = cm.red_of[static_cast<size_t>(col)];
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
            const int rr = cm.red_of[static_cast<size_t>(it.row())];
            if (rr < 0) continue;
            if (rc >= 0)
                trip.emplace_back(rr, rc, it.value());
            else if (cm.fixed_value[static_cast<size_t>(col)] != 0.0)
                rhs[rr] -= it.value() * cm.fixed_value[static_cast<size_t>(col)];
        }
    }
    Eigen::SparseMatrix<double> Kred(cm.n_red, cm.n_red);
    Kred.setFromTriplets(trip.begin(), trip.end());

    VecX q0 = VecX::Zero(cm.n_red);
    if (guess) {
        if (guess->size() != ndof) throw SizeMismatch("solve_mechanics: guess length mismatch");
        for (Eigen::Index d = 0; d < ndof; ++d) {
            const int r = cm.red_of[static_cast<size_t>(d)];
            if (r >= 0) q0[r] = (*guess)[d];
        }
    }
    const VecX q = solve_spd(Kred, rhs, q0);

    VecX u(ndof);
    for (Eigen::Index d = 0; d < ndof; ++d) {
        const int r = cm.red_of[static_cast<size_t>(d)];
        u[d] = (r >= 0) ? q[r] : cm.fixed_value[static_cast<size_t>(d)];
    }
    return u;
}

/// Per-element volumetric strain and volumetric total stress:
/// eps_v = tr(eps), sigma_v = sigma_v0 + K_dr*eps_v - b*(p_mech - p_ref).
inline std::pair<VecX, VecX> element_strain_stress(const TetMesh& mesh,
                                                   const PoroelasticMaterial& mat, const VecX& u,
                                                   const VecX& p_mech, double p_ref,
                                                   const VecX& sigma_v0) {
    if (u.size() != 3 * mesh.n_nodes())
        throw SizeMismatch("element_strain_stress: displacement length mismatch");
    if (p_mech.size() != mesh.n_tets() || sigma_v0.size() != mesh.n_tets())
        throw SizeMismatch("element_strain_stress: element field length mismatch");
    VecX eps_v(mesh.n_tets()), sigma_v(mesh.n_tets());
    for (int e = 0; e < mesh.n_tets(); ++e) {
        const auto gr = detail::shape_gradients(mesh.tet(e));
        const auto& t = mesh.tets[static_cast<size_t>(e)];
        double ev = 0.0;
        for (int a = 0; a < 4; ++a)
            ev += gr.g[static_cast<size_t>(a)].dot(u.segment<3>(3 * t[a]));
        eps_v[e] = ev;
        sigma_v[e] = sigma_v0[e] + mat.K_dr() * ev - mat.b * (p_mech[e] - p_ref);
    }
    return {std::move(eps_v), std::move(sigma_v)};
}

}  // namespace twogrid
