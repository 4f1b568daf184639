#pragma once

/// Finite-volume backward-Euler single-phase flow in fixed-stress form:
/// pressure unknowns at element centers, volumetric total stress frozen
/// at the latest mechanics iterate.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twogrid/fv.hpp"
#include "twogrid/material.hpp"

namespace twogrid {

struct FlowState {
    VecX p;
    VecX eps_v;
    VecX sigma_v;
    VecX p0;
    VecX sigma_v0;

    static FlowState reference(int n, double p_ref = 0.0, double sigma_v_ref = 0.0) {
        FlowState s;
        s.p = VecX::Constant(n, p_ref);
        s.eps_v = VecX::Zero(n);
        s.sigma_v = VecX::Constant(n, sigma_v_ref);
        s.p0 = s.p;
        s.sigma_v0 = s.sigma_v;
        return s;
    }
};

struct FlowBc {
    enum Kind { NoFlow, FixedPressure } kind = NoFlow;
    double value = 0.0;

    static FlowBc no_flow() { return FlowBc{NoFlow, 0.0}; }
    static FlowBc fixed_pressure(double p) { return FlowBc{FixedPressure, p}; }
};

struct FlowBcSpec {
    std::map<std::string, FlowBc> by_tag;  // untagged or unlisted faces: no-flow
    std::optional<VecX> source;            // volumetric rate per bulk volume, 1/s

    const FlowBc* lookup(const std::string& tag) const {
        auto it = by_tag.find(tag);
        return it == by_tag.end() ? nullptr : &it->second;
    }
};

struct FlowSystem {
    Eigen::SparseMatrix<double> A;
    VecX rhs;
};

namespace detail {

/// Gravity part of the flow potential at a point: -rho_f0 * g . x, so
/// that Phi = p + gamma increases with height for downward gravity.
inline double gravity_head(const PoroelasticMaterial& mat, const Vec3& x) {
    return -mat.rho_f0 * mat.gravity.dot(x);
}

}  // namespace detail

/// Assembles the SPD system for one backward-Euler step. Per element i:
///   V_i*(b^2/K_dr + 1/M)*(p_i - p_i^n)/dt
///     + V_i*(b/K_dr)*(sigma_v_new_i - sigma_v_i^n)/dt
///     + sum_j (T_ij/mu)*(Phi_i - Phi_j) - V_i*f_i = 0
/// Fixed-pressure boundaries enter through boundary connections (ghost
/// value at the face centroid), which keeps the matrix symmetric.
inline FlowSystem assemble_flow_step(const FvGrid& grid, const PoroelasticMaterial& mat,
                                     const FlowState& state, const VecX& sigma_v_new, double dt,
                                     const FlowBcSpec& bc) {
    if (dt <= 0.0) throw NonPositiveDt("assemble_flow_step: dt must be > 0");
    const int n = grid.n_elems();
    if (state.p.size() != n || sigma_v_new.size() != n)
        throw SizeMismatch("assemble_flow_step: field length != element count");
    if (bc.source && bc.source->size() != n)
        throw SizeMismatch("assemble_flow_step: source length != element count");

    const double S = mat.storage();
    bool has_dirichlet = false;
    for (const auto& bconn : grid.boundary_conns) {
        const FlowBc* b = bc.lookup(bconn.tag);
        if (b && b->kind == FlowBc::FixedPressure) has_dirichlet = true;
    }
    if (!has_dirichlet && S <= 0.0)
        throw SingularSystem(
            "assemble_flow_step: no fixed-pressure boundary and zero accumulation");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) + 4 * grid.connections.size());
    VecX rhs = VecX::Zero(n);

    for (int i = 0; i < n; ++i) {
        const double acc = grid.volumes[static_cast<size_t>(i)] * S / dt;
        trip.emplace_back(i, i, acc);
        rhs[i] += acc * state.p[i];
        rhs[i] -= grid.volumes[static_cast<size_t>(i)] * (mat.b / mat.K_dr()) *
                  (sigma_v_new[i] - state.sigma_v[i]) / dt;
        if (bc.source) rhs[i] += grid.volumes[static_cast<size_t>(i)] * (*bc.source)[i];
    }

    const bool grav = mat.gravity.squaredNorm() > 0.0;
    for (const auto& c : grid.connections) {
        const double t = c.trans / mat.mu;
        trip.emplace_back(c.i, c.i, t);
        trip.emplace_back(c.j, c.j, t);
        trip.emplace_back(c.i, c.j, -t);
        trip.emplace_back(c.j, c.i, -t);
        if (grav) {
            const double dg = detail::gravity_head(mat, grid.centroids[static_cast<size_t>(c.i)]) -
                              detail::gravity_head(mat, grid.centroids[static_cast<size_t>(c.j)]);
            rhs[c.i] -= t * dg;
            rhs[c.j] += t * dg;
        }
    }
    for (const auto& bconn : grid.boundary_conns) {
        const FlowBc* b = bc.lookup(bconn.tag);
        if (!b || b->kind == FlowBc::NoFlow) continue;
        const double t = bconn.trans / mat.mu;
        trip.emplace_back(bconn.elem, bconn.elem, t);
        double ghost = b->value;
        if (grav)
            ghost += detail::gravity_head(mat, bconn.face_centroid) -
                     detail::gravity_head(mat, grid.centroids[static_cast<size_t>(bconn.elem)]);
        rhs[bconn.elem] += t * ghost;
    }

    FlowSystem sys;
    sys.A.resize(n, n);
    sys.A.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = std::move(rhs);
    return sys;
}

/// Diagonal-preconditioned CG solve of an SPD system; verifies the
/// relative residual bound after the solve. Single-threaded Eigen,
/// deterministic for identical inputs.
inline VecX solve_spd(const Eigen::SparseMatrix<double>& A, const VecX& rhs, const VecX& guess,
                      double rel_tol = 1e-10) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(0.1 * rel_tol);
    cg.setMaxIterations(10 * A.rows());
    cg.compute(A);
    VecX x = cg.solveWithGuess(rhs, guess);
    const double rn = rhs.norm();
    const double res = (A * x - rhs).norm();
    if (!(res <= rel_tol * (rn > 0.0 ? rn : 1.0)))
        throw SolverDiverged("solve_spd: relative residual " + std::to_string(res / (rn > 0 ? rn : 1.0)) +
                             " exceeds bound after " + std::to_string(cg.iterations()) +
                             " iterations");
    return x;
}

inline VecX solve_flow_step(const FlowSystem& sys, const VecX& p_guess) {
    return solve_spd(sys.A, sys.rhs, p_guess);
}

inline VecX solve_flow_step(const FlowSystem& sys) {
    return solve_spd(sys.A, sys.rhs, VecX::Zero(sys.rhs.size()));
}

/// Interior Darcy volume fluxes, one per grid connection:
/// q_ij = (T_ij/mu)*(Phi_i - Phi_j), Phi the gravity-corrected potential.
inline std::vector<double> darcy_fluxes(const FvGrid& grid, const PoroelasticMaterial& mat,
                                        const VecX& p) {
    if (p.size() != grid.n_elems()) throw SizeMismatch("darcy_fluxes: field length mismatch");
    std::vector<double> q;
    q.reserve(grid.connections.size());
    for (const auto& c : grid.connections) {
        double phi_i = p[c.i], phi_j = p[c.j];
        if (mat.gravity.squaredNorm() > 0.0) {
            phi_i += detail::gravity_head(mat, grid.centroids[static_cast<size_t>(c.i)]);
            phi_j += detail::gravity_head(mat, grid.centroids[static_cast<size_t>(c.j)]);
        }
        q.push_back(c.trans / mat.mu * (phi_i - phi_j));
    }
    return q;
}

/// Outward volume fluxes through boundary connections with a
/// fixed-pressure condition; no-flow faces contribute 0.
inline std::vector<double> darcy_boundary_fluxes(const FvGrid& grid,
                                                 const PoroelasticMaterial& mat, const VecX& p,
                                                 const FlowBcSpec& bc) {
    if (p.size() != grid.n_elems())
        throw SizeMismatch("darcy_boundary_fluxes: field length mismatch");
    std::vector<double> q;
    q.reserve(grid.boundary_conns.size());
    for (const auto& bconn : grid.boundary_conns) {
        const FlowBc* b = bc.lookup(bconn.tag);
        if (!b || b->kind == FlowBc::NoFlow) {
            q.push_back(0.0);
            continue;
        }
        double phi_i = p[bconn.elem], phi_b = b->value;
        if (mat.gravity.squaredNorm() > 0.0) {
            phi_i += detail::gravity_head(mat, grid.centroids[static_cast<size_t>(bconn.elem)]);
            phi_b += detail::gravity_head(mat, bconn.face_centroid);
        }
        q.push_back(bconn.trans / mat.mu * (phi_i - phi_b));
    }
    return q;
}

/// Fluid content increment and current porosity:
///   zeta = b*eps_v + (1/M)*(p - p0)
///   (rho_f/rho_f0)*phi - phi0 = (b/K_dr)*(sigma_v - sigma_v0)
///                               + (b^2/K_dr + 1/M)*(p - p0)
/// with the slightly-compressible closure rho_f/rho_f0 = 1 + c_f*(p - p0).
inline std::pair<VecX, VecX> fluid_content_and_porosity(const PoroelasticMaterial& mat,
                                                        const FlowState& state, const VecX& p,
                                                        const VecX& sigma_v) {
    const auto n = state.p0.size();
    if (p.size() != n || sigma_v.size() != n || state.eps_v.size() != n)
        throw SizeMismatch("fluid_content_and_porosity: field length mismatch");
    VecX zeta(n), phi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dp = p[i] - state.p0[i];
        zeta[i] = mat.b * state.eps_v[i] + dp / mat.M;
        const double rhs = (mat.b / mat.K_dr()) * (sigma_v[i] - state.sigma_v0[i]) +
                           mat.storage() * dp;
        phi[i] = (mat.phi0 + rhs) / (1.0 + mat.c_f * dp);
    }
    return {std::move(zeta), std::move(phi)};
}

}  // namespace twogrid
