#pragma once

/// Poroelastic material parameters and derived moduli.

#include <cmath>
#include <limits>

#include "twogrid/core.hpp"

namespace twogrid {

struct PoroelasticMaterial {
    double E = 0.0;       // Young's modulus, Pa
    double nu = 0.0;      // Poisson ratio
    double b = 0.0;       // Biot coefficient
    double M = 0.0;       // Biot modulus, Pa
    double phi0 = 0.0;    // reference porosity
    double c_f = 0.0;     // fluid compressibility, 1/Pa
    double k = 0.0;       // permeability, m^2
    double mu = 0.0;      // fluid viscosity, Pa.s
    double rho_f0 = 0.0;  // reference fluid density, kg/m^3
    double rho_s = 0.0;   // solid density, kg/m^3
    Vec3 gravity = Vec3::Zero();

    double K_dr() const { return E / (3.0 * (1.0 - 2.0 * nu)); }
    double G() const { return E / (2.0 * (1.0 + nu)); }
    double lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }

    /// Storage coefficient of the fixed-stress pressure equation,
    /// b^2/K_dr + 1/M.
    double storage() const { return b * b / K_dr() + 1.0 / M; }

    /// Bulk density at reference porosity.
    double rho_bulk() const { return phi0 * rho_f0 + (1.0 - phi0) * rho_s; }

    /// Derives M from constituents: 1/M = phi0*c_f + (b - phi0)/K_s.
    /// K_s may be infinity (incompressible grains).
    void set_M_from_constituents(double phi0_in, double c_f_in, double K_s) {
        if (phi0_in <= 0.0 || phi0_in >= 1.0)
            throw ValidationError("material: phi0 must be in (0, 1)");
        if (c_f_in < 0.0) throw ValidationError("material: c_f must be >= 0");
        phi0 = phi0_in;
        c_f = c_f_in;
        const double inv_M =
            phi0 * c_f + (std::isinf(K_s) ? 0.0 : (b - phi0) / K_s);
        if (inv_M <= 0.0) throw ValidationError("material: derived 1/M must be > 0");
        M = 1.0 / inv_M;
    }

    void validate() const {
        if (E <= 0.0) throw ValidationError("material: E must be > 0");
        if (nu <= -1.0 || nu >= 0.5) throw ValidationError("material: nu must be in (-1, 0.5)");
        if (b < 0.0 || b > 1.0) throw ValidationError("material: b must be in [0, 1]");
        if (M <= 0.0) throw ValidationError("material: M must be > 0");
        if (k <= 0.0) throw ValidationError("material: k must be > 0");
        if (mu <= 0.0) throw ValidationError("material: mu must be > 0");
    }
};

}  // namespace twogrid
