//! Physical constants and unit conversions.
//!
//! Public quantities are in GHz, fF, nH and units of the flux quantum.
//! Node fluxes inside the crate are reduced fluxes (2 pi Phi / Phi_0) and
//! energies are angular frequencies in rad/ns.

use std::f64::consts::PI;

/// Elementary charge in C (exact SI).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant in J s (exact SI).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Charging energy e^2 / 2C of a 1 fF capacitor, in GHz.
pub const CHARGING_GHZ_FF: f64 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * 1e-15) / 1e9;

/// Inductive energy (Phi_0 / 2 pi)^2 / L of a 1 nH inductor, in GHz.
pub const INDUCTIVE_GHZ_NH: f64 = PLANCK / (16.0 * PI * PI * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * 1e-9) / 1e9;

pub const TWO_PI: f64 = 2.0 * PI;

/// GHz to rad/ns.
#[inline]
pub fn angular(ghz: f64) -> f64 {
    TWO_PI * ghz
}

/// rad/ns to GHz.
#[inline]
pub fn ghz(angular: f64) -> f64 {
    angular / TWO_PI
}

/// Capacitance in fF expressed as the effective mass of a reduced flux
/// coordinate, in ns/rad, so that the kinetic term is `C_red phi_dot^2 / 2`.
#[inline]
pub fn reduced_capacitance(c_ff: f64) -> f64 {
    c_ff / (8.0 * angular(CHARGING_GHZ_FF))
}

/// Inductive energy in GHz of an inductor of `l_nh` nanohenries.
#[inline]
pub fn inductive_energy_ghz(l_nh: f64) -> f64 {
    INDUCTIVE_GHZ_NH / l_nh
}

/// Charging energy e^2 / 2C in GHz for a capacitance in fF.
#[inline]
pub fn charging_energy_ghz(c_ff: f64) -> f64 {
    CHARGING_GHZ_FF / c_ff
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_codata() {
        assert!((CHARGING_GHZ_FF - 19.370_229).abs() < 1e-5);
        assert!((INDUCTIVE_GHZ_NH - 163.461_51).abs() < 1e-4);
    }

    #[test]
    fn transmon_plasma_frequency() {
        // sqrt(8 EJ EC) for EJ = 20 GHz, C = 80 fF.
        let ec = charging_energy_ghz(80.0);
        let expected = (8.0 * 20.0 * ec).sqrt();
        let omega = (angular(20.0) / reduced_capacitance(80.0)).sqrt();
        assert!((ghz(omega) - expected).abs() < 1e-12);
    }
}
