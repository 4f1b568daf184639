// Command-line front end: run (full simulation from a config file),
// mandel (benchmark with report), project-test (transfer-operator
// diagnostics for a mesh pair), mesh-box (tetmesh v1 generator).
//
// Exit codes: 0 success, 1 validation/configuration error, 2 numerical
// failure (solver divergence or fixed-stress non-convergence), 64 usage.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "twogrid/config.hpp"

namespace {

using namespace twogrid;

int cmd_run(const std::string& config_path) {
    const RunConfig rc = parse_config(read_text_file(config_path));
    std::cout << "# materialized configuration\n" << serialize_config(rc);
    CoupledSim sim = build_sim(rc);

    std::function<void(const CoupledSim&, int)> on_step;
    if (!rc.out_dir.empty()) {
        std::filesystem::create_directories(rc.out_dir);
        if (rc.vtk_every > 0)
            on_step = [&](const CoupledSim& s, int step) {
                if (step % rc.vtk_every != 0) return;
                write_vtk(s.mesh_flow(),
                          {{"p", s.flow().p},
                           {"eps_v", s.flow().eps_v},
                           {"sigma_v", s.flow().sigma_v}},
                          {}, rc.out_dir + "/flow_" + std::to_string(step) + ".vtk");
                write_vtk(s.mesh_mech(),
                          {{"p", s.mech().p_mech},
                           {"eps_v", s.mech().eps_v},
                           {"sigma_v", s.mech().sigma_v}},
                          {{"displacement", s.mech().u}},
                          rc.out_dir + "/mech_" + std::to_string(step) + ".vtk");
            };
    }
    const SimSeries series = run_simulation(sim, rc.coupling, rc.probes, on_step);

    std::ostringstream csv;
    csv << "t";
    for (size_t p = 0; p < rc.probes.size(); ++p) csv << ",p" << p;
    csv << "\n";
    for (size_t i = 0; i < series.times.size(); ++i) {
        csv << detail::fmt17(series.times[i]);
        for (double v : series.probe_p[i]) csv << ',' << detail::fmt17(v);
        csv << "\n";
    }
    if (!rc.out_dir.empty())
        write_text_file(rc.out_dir + "/probes.csv", csv.str());
    else
        std::cout << csv.str();

    int max_it = 0;
    for (const auto& d : series.diags) max_it = std::max(max_it, d.iterations);
    std::cout << "steps = " << series.times.size() << "\n";
    std::cout << "max_fs_iterations = " << max_it << "\n";
    return 0;
}

int cmd_mandel(const std::string& fine, const std::string& out_dir, int vtk_every) {
    MandelSetup su;
    su.out_dir = out_dir;
    su.vtk_every = vtk_every;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    const FineWhich fw = (fine == "mech") ? FineWhich::Mech : FineWhich::Flow;
    const MandelReport rep = mandel_benchmark(fw, default_mandel_material(), su);
    std::cout << rep.text;
    return 0;
}

int cmd_project_test(const std::string& mesh_a, const std::string& mesh_b) {
    const TetMesh a = load_mesh(read_text_file(mesh_a));
    const TetMesh b = load_mesh(read_text_file(mesh_b));
    const auto pairs = detect_pairs(a, b);
    const auto [f2m, m2f] = build_projection(pairs, a.n_tets(), b.n_tets());
    const auto diag = projection_diagnostics(pairs, f2m, m2f);
    std::cout << diag.to_text();

    // partition of unity on covered elements
    const VecX ones_f = VecX::Ones(a.n_tets());
    const VecX ones_m = VecX::Ones(b.n_tets());
    double max_dev = 0.0;
    const VecX cf = apply_projection(f2m, ones_f, ones_m);
    const VecX cm = apply_projection(m2f, ones_m, ones_f);
    for (Eigen::Index i = 0; i < cf.size(); ++i) max_dev = std::max(max_dev, std::abs(cf[i] - 1.0));
    for (Eigen::Index i = 0; i < cm.size(); ++i) max_dev = std::max(max_dev, std::abs(cm[i] - 1.0));
    std::cout << "partition_of_unity_max_dev = " << detail::fmt17(max_dev) << "\n";

    bool identity = a.n_tets() == b.n_tets();
    if (identity)
        for (const auto& row : f2m.rows)
            if (row.size() != 1 || row[0].second != 1.0) {
                identity = false;
                break;
            }
    std::cout << "identity: " << (identity ? "true" : "false")
              << ", uncovered: " << (diag.uncovered_mech + diag.uncovered_flow) << "\n";
    return 0;
}

int cmd_mesh_box(int nx, int ny, int nz, double lx, double ly, double lz,
                 const std::string& out) {
    const TetMesh mesh = box_tet_mesh(nx, ny, nz, lx, ly, lz);
    write_text_file(out, save_mesh(mesh));
    std::cout << "wrote " << out << " (" << mesh.n_tets() << " tets, " << mesh.n_nodes()
              << " nodes)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-grid coupled flow/geomechanics simulator"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a simulation from a config file");
    run->add_option("config", config_path, "Configuration file")->required();

    std::string fine = "flow", mandel_out;
    int mandel_vtk = 0;
    auto* mandel = app.add_subcommand("mandel", "Run the Mandel benchmark");
    mandel->add_option("--fine", fine, "Which grid is fine: flow or mech")
        ->check(CLI::IsMember({"flow", "mech"}))
        ->required();
    mandel->add_option("--out", mandel_out, "Output directory for CSV/report");
    mandel->add_option("--vtk-every", mandel_vtk, "Snapshot cadence (0 disables)");

    std::string mesh_a, mesh_b;
    auto* pt = app.add_subcommand("project-test", "Projection-operator diagnostics");
    pt->add_option("meshA", mesh_a, "First tetmesh v1 file")->required();
    pt->add_option("meshB", mesh_b, "Second tetmesh v1 file")->required();

    int nx = 1, ny = 1, nz = 1;
    double lx = 1, ly = 1, lz = 1;
    std::string box_out;
    auto* mb = app.add_subcommand("mesh-box", "Write a structured box tet mesh");
    mb->add_option("nx", nx)->required();
    mb->add_option("ny", ny)->required();
    mb->add_option("nz", nz)->required();
    mb->add_option("lx", lx)->required();
    mb->add_option("ly", ly)->required();
    mb->add_option("lz", lz)->required();
    mb->add_option("out", box_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 64;
    }

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (mandel->parsed()) return cmd_mandel(fine, mandel_out, mandel_vtk);
        if (pt->parsed()) return cmd_project_test(mesh_a, mesh_b);
        if (mb->parsed()) return cmd_mesh_box(nx, ny, nz, lx, ly, lz, box_out);
    } catch (const twogrid::NotConverged& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const twogrid::SolverDiverged& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const twogrid::SimError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
