#pragma once

#include <stdexcept>
#include <string>

namespace xwin {

enum class Units { natural, si };

/// Physical constants used at the unit-conversion boundary. Internally the
/// pipeline works in hbar = m = rho_c = 1.
struct Constants {
    double hbar = 1.0;
    double m = 1.0;
    double c = 1.0;
    Units units = Units::natural;

    static Constants natural() { return {}; }
    /// CODATA 2018 hbar and c; m in kg.
    static Constants si(double mass_kg) { return {1.054571817e-34, mass_kg, 299792458.0, Units::si}; }

    void validate() const {
        if (!(hbar > 0.0) || !(m > 0.0) || !(c > 0.0)) throw std::invalid_argument("constants must be positive");
    }
};

/// Energy scale hbar^2 / (2 m rho_c^2) converting the dimensionless energy to E.
inline double energy_unit(const Constants& k, double rho_c) { return k.hbar * k.hbar / (2.0 * k.m * rho_c * rho_c); }

/// Dimensional energy from the dimensionless E_bar = 2 m E rho_c^2 / hbar^2.
inline double energy_from_dimensionless(double e_bar, const Constants& k, double rho_c) {
    return e_bar * energy_unit(k, rho_c);
}

inline double dimensionless_energy(double energy, const Constants& k, double rho_c) {
    return energy / energy_unit(k, rho_c);
}

/// Boundary oscillation frequency omega = hbar / (2 m rho_c^2).
inline double oscillation_scale(const Constants& k, double rho_c) { return k.hbar / (2.0 * k.m * rho_c * rho_c); }

/// Casimir-force magnitude estimate |F| ~ hbar / rho_c^3 (no factor of c).
inline double casimir_scale(const Constants& k, double rho_c) { return k.hbar / (rho_c * rho_c * rho_c); }

inline const char* units_name(Units u) { return u == Units::natural ? "natural" : "SI"; }

}  // namespace xwin
