//! Physical constants and the fixed internal unit system.
//!
//! Energies are carried as plain frequencies E/h in GHz, times in ns, flux in
//! units of Φ0 and currents in μA. Angular frequencies are ω = 2π·f in rad/ns,
//! so the phase accumulated at energy E over a time t is 2π·E·t.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fundamental constants used by the model. Values are CODATA 2018 exact or
/// recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Φ0 in Wb.
    pub flux_quantum: f64,
    /// h in J·s.
    pub planck: f64,
    /// k_B/h in GHz/K.
    pub boltzmann_over_planck: f64,
    /// Φ0/h expressed in GHz per (μA·Φ0).
    pub current_to_freq: f64,
}

/// Φ0 in Wb.
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;
/// Planck constant in J·s.
pub const PLANCK: f64 = 6.62607015e-34;
/// k_B/h in GHz/K.
pub const BOLTZMANN_OVER_PLANCK: f64 = 1.380649e-23 / PLANCK * 1e-9;
/// Energy in GHz of a current of 1 μA threading a flux of 1 Φ0.
pub const CURRENT_TO_FREQ: f64 = FLUX_QUANTUM / PLANCK * 1e-6 * 1e-9;

impl PhysConstants {
    pub const CODATA: PhysConstants = PhysConstants {
        flux_quantum: FLUX_QUANTUM,
        planck: PLANCK,
        boltzmann_over_planck: BOLTZMANN_OVER_PLANCK,
        current_to_freq: CURRENT_TO_FREQ,
    };
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// k_B·T/h in GHz.
pub fn thermal_energy(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::domain(format!(
            "temperature must be positive and finite, got {temperature} K"
        )));
    }
    Ok(BOLTZMANN_OVER_PLANCK * temperature)
}

/// Full diabatic detuning ε/h in GHz produced by a persistent current `i_p`
/// (μA) at a flux offset `flux_offset` (Φ0) from the symmetry point.
///
/// The diabatic levels are separated by 2·I_p·(Φz − Φz^sym), so that
/// v = dε/dt is the sweep velocity entering the LZ exponent.
pub fn persistent_current_energy(i_p: f64, flux_offset: f64) -> f64 {
    2.0 * i_p * CURRENT_TO_FREQ * flux_offset
}

/// Coupling energy (GHz) of a current `i_p` to one flux quantum.
pub fn coupling_energy(i_p: f64) -> f64 {
    i_p * CURRENT_TO_FREQ
}

pub fn ghz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

pub fn flux_to_weber(phi: f64) -> f64 {
    phi * FLUX_QUANTUM
}

pub fn weber_to_flux(wb: f64) -> f64 {
    wb / FLUX_QUANTUM
}

/// Angular frequency in rad/ns to rad/s.
pub fn angular_per_ns_to_per_s(omega: f64) -> f64 {
    omega * 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_mutually_consistent() {
        let c = PhysConstants::CODATA;
        let ratio = c.flux_quantum / c.planck * 1e-15;
        assert!((c.current_to_freq - ratio).abs() / ratio < 1e-12);
        // Six significant figures of the tabulated value.
        assert!((c.current_to_freq - 3120.75).abs() < 0.01);
        assert!((c.boltzmann_over_planck - 20.836619).abs() < 1e-6);
    }

    #[test]
    fn thermal_energy_examples() {
        assert!((thermal_energy(0.020).unwrap() - 0.41673).abs() < 1e-5);
        assert!((thermal_energy(1.0).unwrap() - 20.836619).abs() < 1e-6);
        assert!(matches!(thermal_energy(0.0), Err(Error::Domain(_))));
        assert!(thermal_energy(-1.0).is_err());
    }

    #[test]
    fn persistent_current_energy_examples() {
        assert!((persistent_current_energy(0.125, 0.005) - 3.9009).abs() < 1e-4);
        assert!((persistent_current_energy(0.104, 0.005) - 3.2456).abs() < 1e-4);
        assert_eq!(persistent_current_energy(0.117, 0.0), 0.0);
    }

    #[test]
    fn round_trip_conversions() {
        for &x in &[1e-6, 0.0123, 1.0, 37.5, 1e4] {
            assert!((angular_to_ghz(ghz_to_angular(x)) - x).abs() <= 1e-12 * x);
            assert!((weber_to_flux(flux_to_weber(x)) - x).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn persistent_current_energy_is_bilinear() {
        let pts = [
            (0.11, 0.003),
            (0.104, -0.0049),
            (0.129, 0.0071),
            (0.5, 1e-4),
            (0.02, -0.02),
            (1.3, 0.004),
            (0.117, 0.0005),
            (0.09, -0.003),
            (0.2, 0.009),
            (0.15, -0.0001),
        ];
        for &(i, f) in &pts {
            let e = persistent_current_energy(i, f);
            let scaled_i = persistent_current_energy(3.0 * i, f);
            let scaled_f = persistent_current_energy(i, -2.5 * f);
            assert!((scaled_i - 3.0 * e).abs() <= 1e-12 * e.abs().max(1e-300));
            assert!((scaled_f + 2.5 * e).abs() <= 1e-12 * e.abs().max(1e-300));
            let sum = persistent_current_energy(i, f + 0.001);
            let parts = e + persistent_current_energy(i, 0.001);
            assert!((sum - parts).abs() < 1e-12);
        }
    }
}
