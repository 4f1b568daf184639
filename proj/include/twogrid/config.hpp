#pragma once

/// Run configuration: INI-style sectioned text, preset expansion,
/// validation and canonical re-serialization.
///
/// Grammar (whitespace-separated values, '#' starts a comment):
///   preset = mandel                  # optional, before any section
///   [meshes]
///   flow = box <nx> <ny> <nz> <lx> <ly> <lz>   | flow = <path.tetmesh>
///   mech = ...
///   [material]
///   E, nu, b, k, mu, rho_f0, rho_s, gravity = gx gy gz, p0
///   M = <Pa>            or          phi0 =, c_f =, K_s = (inf allowed)
///   [coupling]
///   dt = <s> and n_steps = <count>   | schedule = <dt1> <dt2> ...
///                                    | schedule = geometric <dt0> <dtmax> <n>
///   fs_tol =, fs_maxiter =, p_scale =
///   [bc.<tag>.flow]
///   type = no_flow | fixed_pressure ; value = <Pa>
///   [bc.<tag>.mech]
///   fix = x y z (subset) ; value = vx vy vz ; traction = tx ty tz
///   plate = <x|y|z> <total force>
///   [probes]
///   point = x y z        (repeatable)
///   [output]
///   dir = <path> ; vtk_every = <n>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "twogrid/coupling.hpp"
#include "twogrid/mandel.hpp"

namespace twogrid {

struct MeshSource {
    enum Kind { Box, File } kind = Box;
    int nx = 1, ny = 1, nz = 1;
    double lx = 1.0, ly = 1.0, lz = 1.0;
    std::string path;

    TetMesh build() const {
        if (kind == Box) return box_tet_mesh(nx, ny, nz, lx, ly, lz);
        return load_mesh(read_text_file(path));
    }
};

struct RunConfig {
    MeshSource mesh_flow, mesh_mech;
    PoroelasticMaterial material;
    bool M_direct = true;  // M given directly vs derived from constituents
    double K_s = std::numeric_limits<double>::infinity();
    double p_init = 0.0;
    CouplingConfig coupling;
    FlowBcSpec flow_bc;
    MechBcSpec mech_bc;
    std::vector<Vec3> probes;
    std::string out_dir;
    int vtk_every = 0;
};

namespace detail {

struct ConfigEntry {
    std::string section;
    std::string key;
    std::vector<std::string> values;
    int lineno = 0;
};

inline std::vector<ConfigEntry> tokenize_config(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    std::vector<ConfigEntry> entries;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first.front() == '[') {
            std::string rest;
            std::getline(ls, rest);
            std::string full = first + rest;
            // allow trailing whitespace inside the brackets line
            while (!full.empty() && std::isspace(static_cast<unsigned char>(full.back())))
                full.pop_back();
            if (full.size() < 2 || full.back() != ']')
                throw ParseError("line " + std::to_string(lineno) + ": malformed section header");
            section = full.substr(1, full.size() - 2);
            continue;
        }
        ConfigEntry e;
        e.section = section;
        e.key = first;
        e.lineno = lineno;
        std::string eq;
        if (!(ls >> eq) || eq != "=")
            throw ParseError("line " + std::to_string(lineno) + ": expected '" + first +
                             " = <value>'");
        std::string tk;
        while (ls >> tk) e.values.push_back(tk);
        if (e.values.empty())
            throw ParseError("line " + std::to_string(lineno) + ": missing value for '" + first +
                             "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

inline double cfg_num(const ConfigEntry& e, size_t idx = 0) {
    const std::string& s = e.values.at(idx);
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (used != s.size())
        throw ParseError("line " + std::to_string(e.lineno) + ": expected number, got '" + s +
                         "'");
    return v;
}

inline int cfg_int(const ConfigEntry& e, size_t idx = 0) {
    const double v = cfg_num(e, idx);
    if (v != std::floor(v))
        throw ParseError("line " + std::to_string(e.lineno) + ": expected integer");
    return static_cast<int>(v);
}

inline int axis_index(const ConfigEntry& e, const std::string& s) {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    throw ParseError("line " + std::to_string(e.lineno) + ": expected axis x|y|z, got '" + s +
                     "'");
}

}  // namespace detail

/// Fully expanded default configuration of the Mandel benchmark
/// (fine-flow mesh roles), mirroring mandel_benchmark's setup.
inline RunConfig mandel_preset_config() {
    RunConfig rc;
    rc.mesh_flow = MeshSource{MeshSource::Box, 50, 10, 1, 50.0, 10.0, 1.0, ""};
    rc.mesh_mech = MeshSource{MeshSource::Box, 24, 8, 1, 50.0, 10.0, 1.0, ""};
    rc.material = default_mandel_material();
    rc.M_direct = false;
    rc.K_s = std::numeric_limits<double>::infinity();
    double B, nu_u, c;
    derive_constants(rc.material, B, nu_u, c);
    rc.coupling.dts = mandel_schedule(c, 10.0, 48, 1e4, 10.0, 2.5);
    rc.flow_bc.by_tag["ymax"] = FlowBc::fixed_pressure(0.0);
    rc.mech_bc.fixed["xmin"].fix[0] = true;
    rc.mech_bc.fixed["ymin"].fix[1] = true;
    rc.mech_bc.fixed["zmin"].fix[2] = true;
    rc.mech_bc.fixed["zmax"].fix[2] = true;
    rc.mech_bc.plates.push_back(RigidPlate{"xmax", 0, -1e6 * 10.0 * 1.0});
    rc.probes.push_back(Vec3(50.0, 0.0, 0.5));
    return rc;
}

inline RunConfig parse_config(const std::string& text);

namespace detail {

inline void apply_entries(RunConfig& rc, const std::vector<ConfigEntry>& entries,
                          bool& saw_M, bool& saw_constituents) {
    double phi0 = rc.material.phi0, c_f = rc.material.c_f;
    bool probes_reset = false;
    for (const auto& e : entries) {
        auto bad_key = [&]() -> ParseError {
            return ParseError("line " + std::to_string(e.lineno) + ": unknown key '" + e.key +
                              "' in section [" + e.section + "]");
        };
        auto want = [&](size_t n) {
            if (e.values.size() != n)
                throw ParseError("line " + std::to_string(e.lineno) + ": '" + e.key +
                                 "' expects " + std::to_string(n) + " value(s)");
        };
        if (e.section.empty()) {
            if (e.key == "preset") throw bad_key();  // handled by the caller
            throw bad_key();
        } else if (e.section == "meshes") {
            if (e.key != "flow" && e.key != "mech") throw bad_key();
            MeshSource ms;
            if (e.values[0] == "box") {
                want(7);
                ms.kind = MeshSource::Box;
                ms.nx = cfg_int(e, 1);
                ms.ny = cfg_int(e, 2);
                ms.nz = cfg_int(e, 3);
                ms.lx = cfg_num(e, 4);
                ms.ly = cfg_num(e, 5);
                ms.lz = cfg_num(e, 6);
            } else {
                want(1);
                ms.kind = MeshSource::File;
                ms.path = e.values[0];
            }
            (e.key == "flow" ? rc.mesh_flow : rc.mesh_mech) = ms;
        } else if (e.section == "material") {
            if (e.key == "gravity") {
                want(3);
                rc.material.gravity = Vec3(cfg_num(e, 0), cfg_num(e, 1), cfg_num(e, 2));
                continue;
            }
            if (e.key == "M") {
                want(1);
                rc.material.M = cfg_num(e);
                saw_M = true;
                continue;
            }
            if (e.key == "phi0" || e.key == "c_f" || e.key == "K_s") {
                want(1);
                saw_constituents = true;
                if (e.key == "phi0") phi0 = cfg_num(e);
                if (e.key == "c_f") c_f = cfg_num(e);
                if (e.key == "K_s") rc.K_s = cfg_num(e);
                continue;
            }
            want(1);
            const double v = cfg_num(e);
            if (e.key == "E") rc.material.E = v;
            else if (e.key == "nu") rc.material.nu = v;
            else if (e.key == "b") rc.material.b = v;
            else if (e.key == "k") rc.material.k = v;
            else if (e.key == "mu") rc.material.mu = v;
            else if (e.key == "rho_f0") rc.material.rho_f0 = v;
            else if (e.key == "rho_s") rc.material.rho_s = v;
            else if (e.key == "p0") rc.p_init = v;
            else throw bad_key();
        } else if (e.section == "coupling") {
            if (e.key == "dt") {
                want(1);
                rc.coupling.dts.assign(1, cfg_num(e));  // n_steps replicates below
            } else if (e.key == "n_steps") {
                want(1);
                const int n = cfg_int(e);
                if (n < 0)
                    throw ValidationError("coupling: n_steps must be >= 0");
                if (rc.coupling.dts.size() == 1)
                    rc.coupling.dts.assign(static_cast<size_t>(n), rc.coupling.dts[0]);
                else
                    throw ValidationError("coupling: n_steps requires a preceding single dt");
            } else if (e.key == "schedule") {
                if (e.values[0] == "geometric") {
                    want(4);
                    const double dt0 = cfg_num(e, 1), dtmax = cfg_num(e, 2);
                    const int n = cfg_int(e, 3);
                    if (n < 2 || dt0 <= 0 || dtmax <= 0)
                        throw ValidationError("coupling: bad geometric schedule");
                    rc.coupling.dts.clear();
                    const double r = std::pow(dtmax / dt0, 1.0 / (n - 1));
                    for (int i = 0; i < n; ++i) rc.coupling.dts.push_back(dt0 * std::pow(r, i));
                } else {
                    rc.coupling.dts.clear();
                    for (size_t i = 0; i < e.values.size(); ++i)
                        rc.coupling.dts.push_back(cfg_num(e, i));
                }
            } else if (e.key == "fs_tol") {
                want(1);
                rc.coupling.fs_tol = cfg_num(e);
            } else if (e.key == "fs_maxiter") {
                want(1);
                rc.coupling.fs_maxiter = cfg_int(e);
            } else if (e.key == "p_scale") {
                want(1);
                rc.coupling.p_scale = cfg_num(e);
            } else {
                throw bad_key();
            }
        } else if (e.section.rfind("bc.", 0) == 0) {
            const std::string rest = e.section.substr(3);
            const auto dot = rest.rfind('.');
            if (dot == std::string::npos)
                throw ParseError("line " + std::to_string(e.lineno) +
                                 ": bc section must be [bc.<tag>.flow] or [bc.<tag>.mech]");
            const std::string tag = rest.substr(0, dot);
            const std::string side = rest.substr(dot + 1);
            if (side == "flow") {
                auto& b = rc.flow_bc.by_tag[tag];
                if (e.key == "type") {
                    want(1);
                    if (e.values[0] == "no_flow") b.kind = FlowBc::NoFlow;
                    else if (e.values[0] == "fixed_pressure") b.kind = FlowBc::FixedPressure;
                    else
                        throw ParseError("line " + std::to_string(e.lineno) +
                                         ": flow bc type must be no_flow or fixed_pressure");
                } else if (e.key == "value") {
                    want(1);
                    b.value = cfg_num(e);
                } else {
                    throw bad_key();
                }
            } else if (side == "mech") {
                if (e.key == "fix") {
                    auto& fx = rc.mech_bc.fixed[tag];
                    for (const auto& v : e.values)
                        fx.fix[static_cast<size_t>(axis_index(e, v))] = true;
                } else if (e.key == "value") {
                    want(3);
                    auto& fx = rc.mech_bc.fixed[tag];
                    for (int c = 0; c < 3; ++c)
                        fx.value[static_cast<size_t>(c)] = cfg_num(e, static_cast<size_t>(c));
                } else if (e.key == "traction") {
                    want(3);
                    rc.mech_bc.tractions[tag] = Vec3(cfg_num(e, 0), cfg_num(e, 1), cfg_num(e, 2));
                } else if (e.key == "plate") {
                    want(2);
                    rc.mech_bc.plates.push_back(
                        RigidPlate{tag, axis_index(e, e.values[0]), cfg_num(e, 1)});
                } else {
                    throw bad_key();
                }
            } else {
                throw ParseError("line " + std::to_string(e.lineno) +
                                 ": bc section must end in .flow or .mech");
            }
        } else if (e.section == "probes") {
            if (e.key != "point") throw bad_key();
            want(3);
            if (!probes_reset) {
                rc.probes.clear();  // user probes replace preset probes
                probes_reset = true;
            }
            rc.probes.push_back(Vec3(cfg_num(e, 0), cfg_num(e, 1), cfg_num(e, 2)));
        } else if (e.section == "output") {
            if (e.key == "dir") {
                want(1);
                rc.out_dir = e.values[0];
            } else if (e.key == "vtk_every") {
                want(1);
                rc.vtk_every = cfg_int(e);
            } else {
                throw bad_key();
            }
        } else {
            throw ParseError("line " + std::to_string(e.lineno) + ": unknown section [" +
                             e.section + "]");
        }
    }
    if (saw_constituents) {
        rc.M_direct = false;
        rc.material.set_M_from_constituents(phi0, c_f, rc.K_s);
    } else {
        rc.material.phi0 = phi0;
        rc.material.c_f = c_f;
    }
}

}  // namespace detail

/// Parses and fully validates a run configuration. A top-level
/// `preset = mandel` line seeds the Mandel defaults; any sections that
/// follow override individual keys.
inline RunConfig parse_config(const std::string& text) {
    auto entries = detail::tokenize_config(text);
    RunConfig rc;
    bool saw_M = false, saw_constituents = false;
    if (!entries.empty() && entries[0].section.empty() && entries[0].key == "preset") {
        if (entries[0].values.size() != 1 || entries[0].values[0] != "mandel")
            throw ValidationError("config: unknown preset '" + entries[0].values[0] + "'");
        rc = mandel_preset_config();
        saw_constituents = true;
        entries.erase(entries.begin());
    }
    detail::apply_entries(rc, entries, saw_M, saw_constituents);
    if (saw_M && saw_constituents)
        throw ValidationError("material: give either M or (phi0, c_f, K_s), not both");
    if (rc.material.nu >= 0.5)
        throw ValidationError("material: nu must be < 0.5 (K_dr undefined at 0.5)");
    rc.material.validate();
    for (double dt : rc.coupling.dts)
        if (dt <= 0.0) throw ValidationError("coupling: schedule contains dt <= 0");
    if (rc.coupling.fs_tol <= 0.0 || rc.coupling.fs_maxiter < 1)
        throw ValidationError("coupling: fs_tol must be > 0 and fs_maxiter >= 1");
    return rc;
}

/// Canonical serialization; parse(serialize(cfg)) reproduces cfg, so
/// serialization is idempotent after one round trip.
inline std::string serialize_config(const RunConfig& rc) {
    std::ostringstream os;
    auto mesh_line = [&](const char* key, const MeshSource& ms) {
        os << key << " = ";
        if (ms.kind == MeshSource::Box)
            os << "box " << ms.nx << ' ' << ms.ny << ' ' << ms.nz << ' ' << detail::fmt17(ms.lx)
               << ' ' << detail::fmt17(ms.ly) << ' ' << detail::fmt17(ms.lz);
        else
            os << ms.path;
        os << "\n";
    };
    os << "[meshes]\n";
    mesh_line("flow", rc.mesh_flow);
    mesh_line("mech", rc.mesh_mech);
    os << "[material]\n";
    os << "E = " << detail::fmt17(rc.material.E) << "\n";
    os << "nu = " << detail::fmt17(rc.material.nu) << "\n";
    os << "b = " << detail::fmt17(rc.material.b) << "\n";
    if (rc.M_direct) {
        os << "M = " << detail::fmt17(rc.material.M) << "\n";
    } else {
        os << "phi0 = " << detail::fmt17(rc.material.phi0) << "\n";
        os << "c_f = " << detail::fmt17(rc.material.c_f) << "\n";
        os << "K_s = " << (std::isinf(rc.K_s) ? std::string("inf") : detail::fmt17(rc.K_s))
           << "\n";
    }
    os << "k = " << detail::fmt17(rc.material.k) << "\n";
    os << "mu = " << detail::fmt17(rc.material.mu) << "\n";
    os << "rho_f0 = " << detail::fmt17(rc.material.rho_f0) << "\n";
    os << "rho_s = " << detail::fmt17(rc.material.rho_s) << "\n";
    os << "gravity = " << detail::fmt17(rc.material.gravity.x()) << ' '
       << detail::fmt17(rc.material.gravity.y()) << ' '
       << detail::fmt17(rc.material.gravity.z()) << "\n";
    os << "p0 = " << detail::fmt17(rc.p_init) << "\n";
    os << "[coupling]\n";
    os << "schedule =";
    for (double dt : rc.coupling.dts) os << ' ' << detail::fmt17(dt);
    os << "\n";
    os << "fs_tol = " << detail::fmt17(rc.coupling.fs_tol) << "\n";
    os << "fs_maxiter = " << rc.coupling.fs_maxiter << "\n";
    os << "p_scale = " << detail::fmt17(rc.coupling.p_scale) << "\n";
    for (const auto& [tag, b] : rc.flow_bc.by_tag) {
        os << "[bc." << tag << ".flow]\n";
        os << "type = " << (b.kind == FlowBc::NoFlow ? "no_flow" : "fixed_pressure") << "\n";
        if (b.kind == FlowBc::FixedPressure) os << "value = " << detail::fmt17(b.value) << "\n";
    }
    std::vector<std::string> mech_tags;
    for (const auto& [tag, fx] : rc.mech_bc.fixed) mech_tags.push_back(tag);
    for (const auto& [tag, tr] : rc.mech_bc.tractions)
        if (std::find(mech_tags.begin(), mech_tags.end(), tag) == mech_tags.end())
            mech_tags.push_back(tag);
    for (const auto& pl : rc.mech_bc.plates)
        if (std::find(mech_tags.begin(), mech_tags.end(), pl.tag) == mech_tags.end())
            mech_tags.push_back(pl.tag);
    std::sort(mech_tags.begin(), mech_tags.end());
    for (const auto& tag : mech_tags) {
        os << "[bc." << tag << ".mech]\n";
        if (auto it = rc.mech_bc.fixed.find(tag); it != rc.mech_bc.fixed.end()) {
            os << "fix =";
            const char* ax = "xyz";
            for (int c = 0; c < 3; ++c)
                if (it->second.fix[static_cast<size_t>(c)]) os << ' ' << ax[c];
            os << "\n";
            if (it->second.value != std::array<double, 3>{0.0, 0.0, 0.0}) {
                os << "value = " << detail::fmt17(it->second.value[0]) << ' '
                   << detail::fmt17(it->second.value[1]) << ' '
                   << detail::fmt17(it->second.value[2]) << "\n";
            }
        }
        if (auto it = rc.mech_bc.tractions.find(tag); it != rc.mech_bc.tractions.end())
            os << "traction = " << detail::fmt17(it->second.x()) << ' '
               << detail::fmt17(it->second.y()) << ' ' << detail::fmt17(it->second.z()) << "\n";
        for (const auto& pl : rc.mech_bc.plates)
            if (pl.tag == tag)
                os << "plate = " << "xyz"[pl.direction] << ' ' << detail::fmt17(pl.force) << "\n";
    }
    if (!rc.probes.empty()) {
        os << "[probes]\n";
        for (const auto& p : rc.probes)
            os << "point = " << detail::fmt17(p.x()) << ' ' << detail::fmt17(p.y()) << ' '
               << detail::fmt17(p.z()) << "\n";
    }
    os << "[output]\n";
    if (!rc.out_dir.empty()) os << "dir = " << rc.out_dir << "\n";
    os << "vtk_every = " << rc.vtk_every << "\n";
    return os.str();
}

/// Builds the coupled simulator from a config, checking that every
/// referenced flow boundary tag exists in the flow mesh (mech tags are
/// checked inside build_constraints).
inline CoupledSim build_sim(const RunConfig& rc) {
    TetMesh flow_mesh = rc.mesh_flow.build();
    TetMesh mech_mesh = rc.mesh_mech.build();
    const auto flow_tags = flow_mesh.boundary_tags();
    for (const auto& [tag, b] : rc.flow_bc.by_tag)
        if (std::find(flow_tags.begin(), flow_tags.end(), tag) == flow_tags.end())
            throw ValidationError("flow bc: tag '" + tag + "' not present in flow mesh");
    return CoupledSim(std::move(flow_mesh), std::move(mech_mesh), rc.material, rc.flow_bc,
                      rc.mech_bc, rc.coupling, rc.p_init);
}

}  // namespace twogrid
