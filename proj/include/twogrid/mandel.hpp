#pragma once

/// Analytical Mandel's problem (derived constants, series roots,
/// pressure series) and the coupled two-grid benchmark driver.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "twogrid/coupling.hpp"
#include "twogrid/vtk.hpp"

namespace twogrid {

struct MandelParams {
    double a = 0.0;     // drainage half-width, m
    double F = 0.0;     // plate force per unit out-of-plane thickness, N/m
    double nu = 0.0;
    double nu_u = 0.0;
    double B = 0.0;     // Skempton coefficient
    double c = 0.0;     // consolidation coefficient, m^2/s
    std::vector<long double> roots;
};

/// B = b*M/(K_dr + b^2*M); nu_u = (3nu + b*B*(1-2nu))/(3 - b*B*(1-2nu));
/// c = (k/mu)*M*(K_dr + 4G/3)/(K_dr + 4G/3 + b^2*M).
inline void derive_constants(const PoroelasticMaterial& mat, double& B, double& nu_u, double& c) {
    const double Kdr = mat.K_dr();
    const double G = mat.G();
    B = mat.b * mat.M / (Kdr + mat.b * mat.b * mat.M);
    nu_u = (3.0 * mat.nu + mat.b * B * (1.0 - 2.0 * mat.nu)) /
           (3.0 - mat.b * B * (1.0 - 2.0 * mat.nu));
    const double Ku = Kdr + 4.0 * G / 3.0;  // constrained (oedometer) modulus
    c = (mat.k / mat.mu) * mat.M * Ku / (Ku + mat.b * mat.b * mat.M);
}

/// Roots of tan(alpha) = cc*alpha with cc = (1-nu)/(nu_u - nu),
/// alpha_n in ((n-1)pi, (n-1)pi + pi/2). Bisection in long double: a
/// residual bound |tan a - cc*a| <= 1e-10*(1+a) is not reachable in
/// double near large roots, where sec^2 amplifies half an ulp past it.
inline std::vector<long double> mandel_roots(double nu, double nu_u, int n_terms) {
    if (!(nu < nu_u)) throw ValidationError("mandel_roots: requires nu < nu_u");
    const long double cc = (1.0L - static_cast<long double>(nu)) /
                           (static_cast<long double>(nu_u) - static_cast<long double>(nu));
    const long double pi = 3.14159265358979323846264338327950288L;
    std::vector<long double> roots;
    roots.reserve(static_cast<size_t>(n_terms));
    for (int n = 1; n <= n_terms; ++n) {
        long double lo = (n - 1) * pi;
        long double hi = lo + pi / 2.0L;
        const long double w = hi - lo;
        // the computed pole location carries ~n*ulp(pi) rounding error,
        // so stay a safely larger distance away from it
        lo += w * 1e-14L;
        hi -= w * 1e-14L;
        auto f = [&](long double x) { return std::tan(x) - cc * x; };
        long double flo = f(lo), fhi = f(hi);
        if (!(flo < 0.0L) || !(fhi > 0.0L))
            throw BracketFailure("mandel_roots: sign change missing in bracket " +
                                 std::to_string(n));
        for (int it = 0; it < 200 && hi - lo > 1e-19L * (1.0L + lo); ++it) {
            const long double mid = 0.5L * (lo + hi);
            if (f(mid) < 0.0L)
                lo = mid;
            else
                hi = mid;
        }
        roots.push_back(0.5L * (lo + hi));
    }
    return roots;
}

inline MandelParams make_mandel_params(const PoroelasticMaterial& mat, double a, double F,
                                       int n_terms) {
    MandelParams p;
    p.a = a;
    p.F = F;
    p.nu = mat.nu;
    derive_constants(mat, p.B, p.nu_u, p.c);
    p.roots = mandel_roots(p.nu, p.nu_u, n_terms);
    return p;
}

/// Classical series, xi the drainage coordinate in [0, a]:
/// p = (2FB(1+nu_u)/(3a)) sum_n [sin a_n/(a_n - sin a_n cos a_n)]
///       * (cos(a_n xi/a) - cos a_n) * exp(-a_n^2 c t / a^2)
inline double mandel_pressure(const MandelParams& prm, double xi, double t) {
    if (t <= 0.0) throw ValidationError("mandel_pressure: requires t > 0");
    const long double A = 2.0L * static_cast<long double>(prm.F) * prm.B * (1.0L + prm.nu_u) /
                          (3.0L * prm.a);
    const long double x = static_cast<long double>(xi) / prm.a;
    const long double tau = static_cast<long double>(prm.c) * t /
                            (static_cast<long double>(prm.a) * prm.a);
    long double sum = 0.0L;
    for (const long double al : prm.roots) {
        const long double s = std::sin(al), co = std::cos(al);
        sum += s / (al - s * co) * (std::cos(al * x) - co) * std::exp(-al * al * tau);
    }
    return static_cast<double>(A * sum);
}

/// Benchmark setup: domain [0,ax]x[0,by]x[0,tz]; rigid impermeable
/// plate on xmax pressing in -x with mean stress sigma0; rollers and
/// no-flux on xmin and ymin; drained traction-free ymax; z-faces as
/// plane-strain rollers. Drainage coordinate is y, half-width by.
struct MandelSetup {
    double ax = 50.0;
    double by = 10.0;
    double sigma0 = 1e6;  // mean plate stress F/by, Pa
    int n_terms = 200;
    int n_ramp = 48;
    double dt0_factor = 1e4;    // dt0 = by^2/(c*dt0_factor)
    double dtmax_factor = 10.0; // dtmax = by^2/(c*dtmax_factor)
    double t_end_factor = 2.5;  // t_end = t_end_factor*by^2/c
    double fs_tol = 1e-6;
    int fs_maxiter = 50;
    int vtk_every = 0;          // 0: no snapshots
    std::string out_dir;
};

inline PoroelasticMaterial default_mandel_material() {
    PoroelasticMaterial m;
    m.E = 1e9;
    m.nu = 0.1;
    m.b = 1.0;
    m.k = 1e-13;
    m.mu = 1e-3;
    m.rho_f0 = 1000.0;
    m.rho_s = 2650.0;
    m.set_M_from_constituents(0.2, 4.4e-10, std::numeric_limits<double>::infinity());
    return m;
}

/// Geometric dt ramp followed by a constant-dt hold to t_end.
inline std::vector<double> mandel_schedule(double c, double a_d, int n_ramp, double dt0_factor,
                                           double dtmax_factor, double t_end_factor) {
    const double dt0 = a_d * a_d / (c * dt0_factor);
    const double dtmax = a_d * a_d / (c * dtmax_factor);
    const double t_end = t_end_factor * a_d * a_d / c;
    std::vector<double> dts;
    const double r = std::pow(dtmax / dt0, 1.0 / (n_ramp - 1));
    double t = 0.0;
    for (int i = 0; i < n_ramp; ++i) {
        const double dt = dt0 * std::pow(r, i);
        dts.push_back(dt);
        t += dt;
    }
    while (t < t_end) {
        dts.push_back(dtmax);
        t += dtmax;
    }
    return dts;
}

struct MandelReport {
    std::vector<double> times;
    std::vector<double> p_num;
    std::vector<double> p_ana;
    double rel_l2 = 0.0;
    double peak_ratio = 0.0;      // max p / first-step p
    double final_over_max = 0.0;
    double undrained_error = 0.0; // |p(first) - B(1+nu_u)sigma0/3| / (that value)
    bool nonmonotonic = false;
    int max_iterations = 0;
    double probe_xi = 0.0;
    std::string probe_csv;
    std::string analytic_csv;
    std::string text;
};

enum class FineWhich { Flow, Mech };

/// Builds the two meshes (the flow mesh always has cubic cells so the
/// two-point flux is exact on it), runs the coupled schedule and
/// compares the corner probe with the series. The analytic curve is
/// evaluated at the y coordinate of the probe element's centroid, so
/// both curves describe the same control volume.
inline MandelReport mandel_benchmark(FineWhich fine, const PoroelasticMaterial& mat_in,
                                     const MandelSetup& su) {
    PoroelasticMaterial mat = mat_in;
    mat.validate();
    double B, nu_u, c;
    derive_constants(mat, B, nu_u, c);

    // fine-flow: h=1 flow cells, coarse mech; fine-mech: h=2 flow
    // cells (thickness 2 keeps them cubic; plane strain is
    // thickness-independent), fine mech
    const double tz = (fine == FineWhich::Flow) ? su.by / 10.0 : su.by / 5.0;
    const double hf = tz;
    const int fnx = static_cast<int>(std::lround(su.ax / hf));
    const int fny = static_cast<int>(std::lround(su.by / hf));
    TetMesh flow_mesh = box_tet_mesh(fnx, fny, 1, su.ax, su.by, tz);
    TetMesh mech_mesh = (fine == FineWhich::Flow)
                            ? box_tet_mesh(24, 8, 1, su.ax, su.by, tz)
                            : box_tet_mesh(40, 12, 1, su.ax, su.by, tz);

    FlowBcSpec fbc;
    fbc.by_tag["ymax"] = FlowBc::fixed_pressure(0.0);

    MechBcSpec mbc;
    mbc.fixed["xmin"].fix[0] = true;
    mbc.fixed["ymin"].fix[1] = true;
    mbc.fixed["zmin"].fix[2] = true;
    mbc.fixed["zmax"].fix[2] = true;
    mbc.plates.push_back(RigidPlate{"xmax", 0, -su.sigma0 * su.by * tz});

    CouplingConfig cfg;
    cfg.dts = mandel_schedule(c, su.by, su.n_ramp, su.dt0_factor, su.dtmax_factor,
                              su.t_end_factor);
    cfg.fs_tol = su.fs_tol;
    cfg.fs_maxiter = su.fs_maxiter;

    CoupledSim sim(std::move(flow_mesh), std::move(mech_mesh), mat, fbc, mbc, cfg);

    const Vec3 probe(su.ax, 0.0, tz / 2.0);
    const int probe_elem = locate_element(sim.mesh_flow(), probe);
    const double xi = sim.grid().centroids[static_cast<size_t>(probe_elem)].y();

    std::function<void(const CoupledSim&, int)> on_step;
    if (su.vtk_every > 0 && !su.out_dir.empty()) {
        on_step = [&](const CoupledSim& s, int step) {
            if (step % su.vtk_every != 0) return;
            write_vtk(s.mesh_flow(),
                      {{"p", s.flow().p}, {"eps_v", s.flow().eps_v},
                       {"sigma_v", s.flow().sigma_v}},
                      {}, su.out_dir + "/flow_" + std::to_string(step) + ".vtk");
            write_vtk(s.mesh_mech(),
                      {{"p", s.mech().p_mech}, {"eps_v", s.mech().eps_v},
                       {"sigma_v", s.mech().sigma_v}},
                      {{"displacement", s.mech().u}},
                      su.out_dir + "/mech_" + std::to_string(step) + ".vtk");
        };
    }
    const SimSeries series = run_simulation(sim, cfg, {probe}, on_step);

    MandelReport rep;
    rep.probe_xi = xi;
    const MandelParams prm = make_mandel_params(mat, su.by, su.sigma0 * su.by, su.n_terms);
    double ana2 = 0.0, diff2 = 0.0, pmax = 0.0;
    for (size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        const double pn = series.probe_p[i][0];
        const double pa = mandel_pressure(prm, xi, t);
        rep.times.push_back(t);
        rep.p_num.push_back(pn);
        rep.p_ana.push_back(pa);
        diff2 += (pn - pa) * (pn - pa);
        ana2 += pa * pa;
        pmax = std::max(pmax, pn);
        rep.max_iterations = std::max(rep.max_iterations, series.diags[i].iterations);
    }
    rep.rel_l2 = std::sqrt(diff2 / ana2);
    const double p_first = rep.p_num.front();
    rep.peak_ratio = pmax / p_first;
    rep.final_over_max = rep.p_num.back() / pmax;
    rep.nonmonotonic = pmax > p_first && rep.p_num.back() < pmax;
    const double p_undrained = B * (1.0 + nu_u) * su.sigma0 / 3.0;
    rep.undrained_error = std::abs(p_first - p_undrained) / p_undrained;

    std::ostringstream pcsv, acsv;
    pcsv << "t,p_num,p_ana,err\n";
    acsv << "t,p_ana\n";
    for (size_t i = 0; i < rep.times.size(); ++i) {
        pcsv << detail::fmt17(rep.times[i]) << ',' << detail::fmt17(rep.p_num[i]) << ','
             << detail::fmt17(rep.p_ana[i]) << ','
             << detail::fmt17(rep.p_num[i] - rep.p_ana[i]) << "\n";
        acsv << detail::fmt17(rep.times[i]) << ',' << detail::fmt17(rep.p_ana[i]) << "\n";
    }
    rep.probe_csv = pcsv.str();
    rep.analytic_csv = acsv.str();

    std::ostringstream txt;
    txt << "mandel benchmark (" << (fine == FineWhich::Flow ? "fine-flow" : "fine-mech")
        << ")\n";
    txt << "flow_elems = " << sim.mesh_flow().n_tets() << "\n";
    txt << "mech_elems = " << sim.mesh_mech().n_tets() << "\n";
    txt << "steps = " << rep.times.size() << "\n";
    txt << "probe_xi = " << detail::fmt17(xi) << "\n";
    txt << "B = " << detail::fmt17(B) << "\n";
    txt << "nu_u = " << detail::fmt17(nu_u) << "\n";
    txt << "c = " << detail::fmt17(c) << "\n";
    txt << "relative_l2 = " << detail::fmt17(rep.rel_l2) << "\n";
    txt << "peak_ratio = " << detail::fmt17(rep.peak_ratio) << "\n";
    txt << "final_over_max = " << detail::fmt17(rep.final_over_max) << "\n";
    txt << "undrained_error = " << detail::fmt17(rep.undrained_error) << "\n";
    txt << "max_fs_iterations = " << rep.max_iterations << "\n";
    txt << "nonmonotonic: " << (rep.nonmonotonic ? "true" : "false") << "\n";
    rep.text = txt.str();

    if (!su.out_dir.empty()) {
        write_text_file(su.out_dir + "/probe.csv", rep.probe_csv);
        write_text_file(su.out_dir + "/analytic.csv", rep.analytic_csv);
        write_text_file(su.out_dir + "/report.txt", rep.text);
    }
    return rep;
}

}  // namespace twogrid
