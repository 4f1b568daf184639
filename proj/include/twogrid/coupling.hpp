#pragma once

/// Fixed-stress split staggered driver: per timestep, iterate
/// flow solve -> project p to the mech grid -> mechanics solve ->
/// project eps_v / sigma_v back to the flow grid, until the
/// volume-weighted pressure increment is small.

#include <functional>
#include <utility>
#include <vector>

#include "twogrid/flow.hpp"
#include "twogrid/mechanics.hpp"
#include "twogrid/projection.hpp"

namespace twogrid {

struct CouplingConfig {
    std::vector<double> dts;   // timestep schedule, s
    double fs_tol = 1e-6;      // relative pressure-increment tolerance
    int fs_maxiter = 50;
    double p_scale = 1.0;      // absolute floor of the relative check, Pa
};

struct StepDiagnostics {
    int iterations = 0;
    double final_increment = 0.0;       // relative, as tested against fs_tol
    std::vector<double> increments;     // relative increment per iteration
};

/// Flow-element index containing the point; throws if none does.
inline int locate_element(const TetMesh& mesh, const Vec3& pt, double tol = 1e-9) {
    for (int e = 0; e < mesh.n_tets(); ++e)
        if (point_in_tet(mesh.tet(e), pt, tol)) return e;
    throw ProbeOutsideMesh("locate_element: point is outside the mesh");
}

/// Holds both grids, transfer operators, assembled mechanics stiffness
/// and the evolving coupled state. Construction performs the initial
/// equilibrium solve at p = p0 with tractions and plate forces zeroed,
/// which establishes sigma_v0; time stepping applies the full loads,
/// so the undrained (Skempton) response appears in the first step.
class CoupledSim {
public:
    CoupledSim(TetMesh flow_mesh, TetMesh mech_mesh, PoroelasticMaterial mat, FlowBcSpec flow_bc,
               MechBcSpec mech_bc, CouplingConfig cfg, double p_init = 0.0)
        : flow_mesh_(std::move(flow_mesh)),
          mech_mesh_(std::move(mech_mesh)),
          mat_(std::move(mat)),
          flow_bc_(std::move(flow_bc)),
          mech_bc_(std::move(mech_bc)),
          cfg_(std::move(cfg)),
          p_ref_(p_init) {
        mat_.validate();
        if (cfg_.fs_tol <= 0.0 || cfg_.fs_maxiter < 1)
            throw ValidationError("coupling: fs_tol must be > 0 and fs_maxiter >= 1");
        for (double dt : cfg_.dts)
            if (dt <= 0.0) throw NonPositiveDt("coupling: schedule contains dt <= 0");

        grid_ = build_fv_grid(flow_mesh_, mat_.k, mat_.mu);
        pairs_ = detect_pairs(flow_mesh_, mech_mesh_);
        std::tie(f2m_, m2f_) = build_projection(pairs_, flow_mesh_.n_tets(), mech_mesh_.n_tets());
        K_ = assemble_stiffness(mech_mesh_, mat_);
        cmap_ = build_constraints(mech_mesh_, mech_bc_);
        body_force_ = assemble_body_force(mech_mesh_, mat_);

        // initial equilibrium: reference loads only
        MechBcSpec bc0 = mech_bc_;
        bc0.tractions.clear();
        for (auto& pl : bc0.plates) pl.force = 0.0;
        const VecX p_mech0 = VecX::Constant(mech_mesh_.n_tets(), p_ref_);
        mech_.u = solve_mechanics(K_, body_force_, cmap_, bc0);
        const VecX sv_zero = VecX::Zero(mech_mesh_.n_tets());
        std::tie(mech_.eps_v, mech_.sigma_v) =
            element_strain_stress(mech_mesh_, mat_, mech_.u, p_mech0, p_ref_, sv_zero);
        mech_.p_mech = p_mech0;
        sigma_v0_mech_ = mech_.sigma_v;

        flow_ = FlowState::reference(flow_mesh_.n_tets(), p_ref_);
        flow_.sigma_v0 =
            apply_projection(m2f_, sigma_v0_mech_, VecX::Zero(flow_mesh_.n_tets()));
        flow_.sigma_v = flow_.sigma_v0;
        flow_.eps_v = apply_projection(m2f_, mech_.eps_v, VecX::Zero(flow_mesh_.n_tets()));
    }

    const TetMesh& mesh_flow() const { return flow_mesh_; }
    const TetMesh& mesh_mech() const { return mech_mesh_; }
    const FvGrid& grid() const { return grid_; }
    const FlowState& flow() const { return flow_; }
    const MechState& mech() const { return mech_; }
    const std::vector<ElementPair>& pairs() const { return pairs_; }
    const ProjectionOperator& op_f2m() const { return f2m_; }
    const ProjectionOperator& op_m2f() const { return m2f_; }
    const PoroelasticMaterial& material() const { return mat_; }
    double time() const { return time_; }
    int step_index() const { return step_; }
    double p_ref() const { return p_ref_; }

    /// Volume-weighted RMS of a flow-grid field (comparable to Pa).
    double vnorm(const VecX& x) const {
        double s = 0.0, vtot = 0.0;
        for (int i = 0; i < grid_.n_elems(); ++i) {
            s += grid_.volumes[static_cast<size_t>(i)] * x[i] * x[i];
            vtot += grid_.volumes[static_cast<size_t>(i)];
        }
        return std::sqrt(s / vtot);
    }

    /// One fixed-stress timestep. Convergence is checked from the
    /// second iteration on: the first flow solve predates any
    /// mechanics feedback within the step, so its increment carries no
    /// information (with b = 0 the second increment is exactly zero).
    /// The increment is tested against fs_tol with a safety factor:
    /// per-step iteration errors accumulate over a schedule, and the
    /// margin keeps the sensitivity of the full trajectory to fs_tol
    /// at the order of fs_tol itself rather than several times it.
    static constexpr double kFsSafety = 0.1;
    StepDiagnostics advance(double dt) {
        if (dt <= 0.0) throw NonPositiveDt("advance: dt must be > 0");
        VecX p_iter = flow_.p;
        VecX sigma_v_new = flow_.sigma_v;
        VecX eps_v_new = flow_.eps_v;
        VecX p_mech = mech_.p_mech;
        VecX u = mech_.u;
        VecX eps_v_m = mech_.eps_v;
        VecX sigma_v_m = mech_.sigma_v;

        StepDiagnostics diag;
        bool converged = false;
        for (int it = 0; it < cfg_.fs_maxiter; ++it) {
            const FlowSystem sys =
                assemble_flow_step(grid_, mat_, flow_, sigma_v_new, dt, flow_bc_);
            const VecX p_new = solve_flow_step(sys, p_iter);
            const double incr = vnorm(p_new - p_iter);
            const double ref = std::max(vnorm(p_new), cfg_.p_scale);
            p_iter = p_new;

            p_mech = apply_projection(f2m_, p_iter, p_mech);
            VecX f = assemble_pressure_load(mech_mesh_, mat_, p_mech, p_ref_) + body_force_ +
                     assemble_traction_load(mech_mesh_, mech_bc_);
            u = solve_mechanics(K_, f, cmap_, mech_bc_, &u);
            std::tie(eps_v_m, sigma_v_m) =
                element_strain_stress(mech_mesh_, mat_, u, p_mech, p_ref_, sigma_v0_mech_);
            sigma_v_new = apply_projection(m2f_, sigma_v_m, sigma_v_new);
            eps_v_new = apply_projection(m2f_, eps_v_m, eps_v_new);

            diag.iterations = it + 1;
            diag.final_increment = incr / ref;
            diag.increments.push_back(diag.final_increment);
            if (it >= 1 && incr <= kFsSafety * cfg_.fs_tol * ref) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NotConverged("fixed-stress iteration did not converge in " +
                               std::to_string(cfg_.fs_maxiter) + " iterations (increment " +
                               std::to_string(diag.final_increment) + ")");

        flow_.p = p_iter;
        flow_.sigma_v = sigma_v_new;
        flow_.eps_v = eps_v_new;
        mech_.u = u;
        mech_.eps_v = eps_v_m;
        mech_.sigma_v = sigma_v_m;
        mech_.p_mech = p_mech;
        time_ += dt;
        ++step_;
        return diag;
    }

private:
    TetMesh flow_mesh_;
    TetMesh mech_mesh_;
    PoroelasticMaterial mat_;
    FlowBcSpec flow_bc_;
    MechBcSpec mech_bc_;
    CouplingConfig cfg_;
    double p_ref_;

    FvGrid grid_;
    std::vector<ElementPair> pairs_;
    ProjectionOperator f2m_, m2f_;
    Eigen::SparseMatrix<double> K_;
    ConstraintMap cmap_;
    VecX body_force_;
    VecX sigma_v0_mech_;

    FlowState flow_;
    MechState mech_;
    double time_ = 0.0;
    int step_ = 0;
};

struct SimSeries {
    std::vector<double> times;                       // after each step
    std::vector<std::vector<double>> probe_p;        // per step, per probe
    std::vector<StepDiagnostics> diags;              // per step
};

/// Runs the configured schedule, sampling probe pressures after every
/// step; `on_step` (if set) fires after each step and once with
/// step = 0 right after initialization.
inline SimSeries run_simulation(CoupledSim& sim, const CouplingConfig& cfg,
                                const std::vector<Vec3>& probes,
                                const std::function<void(const CoupledSim&, int)>& on_step = {}) {
    std::vector<int> probe_elems;
    probe_elems.reserve(probes.size());
    for (const auto& pt : probes) probe_elems.push_back(locate_element(sim.mesh_flow(), pt));

    SimSeries out;
    if (on_step) on_step(sim, 0);
    for (double dt : cfg.dts) {
        const StepDiagnostics d = sim.advance(dt);
        out.times.push_back(sim.time());
        out.diags.push_back(d);
        std::vector<double> pp;
        pp.reserve(probe_elems.size());
        for (int e : probe_elems) pp.push_back(sim.flow().p[e]);
        out.probe_p.push_back(std::move(pp));
        if (on_step) on_step(sim, sim.step_index());
    }
    return out;
}

}  // namespace twogrid
