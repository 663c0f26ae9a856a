//! Quantum flux-noise spectra: 1/f plus ohmic components with a thermal
//! (detailed-balance) asymmetry, the cutoff-regularized spectrum used by the
//! adiabatic master equation, and the MRT parameters W and ε_p that summarize
//! the low-frequency noise for the polaron-frame equation.
//!
//! Frequencies are passed as angular frequencies in rad/ns. Spectral
//! densities are returned in Φ0²/Hz (Φ0²·s), the unit in which the noise
//! amplitudes are quoted. `a_star` is the 1/f amplitude at 1 Hz for the
//! symmetrized spectrum A*/f^α, and `b` multiplies ω in rad/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_log, QuadOptions};
use crate::units::{coupling_energy, thermal_energy};

/// Parameters of the flux-noise spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// A* in Φ0²/Hz.
    pub a_star: f64,
    pub alpha: f64,
    /// B in Φ0²/Hz².
    pub b: f64,
    pub gamma: f64,
    /// Bath temperature in K.
    pub temperature: f64,
    /// Low cutoff of the AME spectrum, rad/ns.
    pub omega_l: f64,
    /// High cutoff of the AME spectrum, rad/ns.
    pub omega_h: f64,
    /// Lower limit of the MRT integrals, rad/ns.
    pub omega_low_mrt: f64,
    /// Upper limit of the MRT integrals, rad/ns.
    pub omega_high_mrt: f64,
}

impl NoiseModel {
    /// Nominal z-loop noise: A* = (8.7e-6)² Φ0²/Hz, α = 0.91,
    /// B = 1.3e-30 Φ0²/Hz², γ = 1 at 20 mK, AME cutoffs 10 MHz / 10 GHz and
    /// MRT limits 4 Hz / 10 GHz.
    pub fn nominal() -> Self {
        NoiseModel {
            a_star: 8.7e-6 * 8.7e-6,
            alpha: 0.91,
            b: 1.3e-30,
            gamma: 1.0,
            temperature: 0.020,
            omega_l: 2.0 * PI * 0.010,
            omega_h: 2.0 * PI * 10.0,
            omega_low_mrt: 2.0 * PI * 4e-9,
            omega_high_mrt: 2.0 * PI * 10.0,
        }
    }

    /// A model with no noise at all (closed-system limit).
    pub fn silent() -> Self {
        NoiseModel { a_star: 0.0, b: 0.0, ..Self::nominal() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if !(self.a_star >= 0.0 && self.b >= 0.0) {
            return bad(format!("noise amplitudes must be non-negative (a_star={}, b={})", self.a_star, self.b));
        }
        if !(self.temperature > 0.0) {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad(format!("1/f exponent must lie in (0, 2), got {}", self.alpha));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("ohmic exponent must be positive, got {}", self.gamma));
        }
        if !(self.omega_l > 0.0 && self.omega_l < self.omega_h) {
            return bad(format!("need 0 < omega_l < omega_h, got {} and {}", self.omega_l, self.omega_h));
        }
        if !(self.omega_low_mrt > 0.0 && self.omega_low_mrt < self.omega_high_mrt) {
            return bad(format!(
                "need 0 < omega_low_mrt < omega_high_mrt, got {} and {}",
                self.omega_low_mrt, self.omega_high_mrt
            ));
        }
        Ok(())
    }

    /// k_B·T/h in GHz.
    pub fn thermal_energy(&self) -> f64 {
        thermal_energy(self.temperature).expect("validated temperature")
    }

    /// ħβ in seconds.
    fn hbar_beta(&self) -> f64 {
        1.0 / (2.0 * PI * self.thermal_energy() * 1e9)
    }

    /// βħω/2 for ω in rad/ns.
    pub fn half_thermal_ratio(&self, omega: f64) -> f64 {
        omega / (4.0 * PI * self.thermal_energy())
    }

    /// Raw 1/f amplitude A (units such that A·ω_s/|ω_s|^α is in Φ0²/Hz with
    /// ω_s in rad/s).
    pub fn one_over_f_amplitude(&self) -> f64 {
        self.a_star * self.hbar_beta() * (2.0 * PI).powf(self.alpha) / 2.0
    }
}

/// x·(1 + coth x) = 2x / (1 − e^{−2x}), finite at x = 0.
#[inline]
pub fn thermal_weight(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        2.0 * x / -(-2.0 * x).exp_m1()
    }
}

/// A = A*·ħβ·(2π)^α / 2.
pub fn amplitude_from_a_star(a_star: f64, alpha: f64, temperature: f64) -> Result<f64> {
    let model = NoiseModel { a_star, alpha, temperature, ..NoiseModel::nominal() };
    thermal_energy(temperature)?;
    Ok(model.one_over_f_amplitude())
}

/// Quantum 1/f spectrum A·ω/|ω|^α·[1 + coth(βħω/2)].
pub fn psd_one_over_f(model: &NoiseModel, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::domain("the 1/f spectrum diverges at ω = 0"));
    }
    Ok(one_over_f_nonzero(model, omega))
}

#[inline]
fn one_over_f_nonzero(model: &NoiseModel, omega: f64) -> f64 {
    // A·ω_s(1 + coth x) = A·(2/ħβ)·x(1 + coth x) with x = βħω_s/2.
    let omega_s = (omega * 1e9).abs();
    let amp = model.one_over_f_amplitude();
    amp * omega_s.powf(-model.alpha) * (2.0 / model.hbar_beta()) * thermal_weight(model.half_thermal_ratio(omega))
}

/// Quantum ohmic spectrum B·ω|ω|^{γ−1}·[1 + coth(βħω/2)], with the ω → 0
/// limit 2B/(ħβ) for γ = 1 (zero for γ > 1, divergent for γ < 1).
pub fn psd_ohmic(model: &NoiseModel, omega: f64) -> f64 {
    if model.b == 0.0 {
        return 0.0;
    }
    let omega_s = (omega * 1e9).abs();
    let power = if model.gamma == 1.0 {
        1.0
    } else if omega_s == 0.0 {
        if model.gamma > 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        omega_s.powf(model.gamma - 1.0)
    };
    model.b * power * (2.0 / model.hbar_beta()) * thermal_weight(model.half_thermal_ratio(omega))
}

/// Spectrum used by the adiabatic master equation: both components damped by
/// e^{−|ω|/ω_h}, and the 1/f part frozen at its value at +ω_l for |ω| ≤ ω_l.
/// The clamp uses +ω_l for both signs, so detailed balance does not hold
/// inside the clamp window.
pub fn psd_ame(model: &NoiseModel, omega: f64) -> f64 {
    let abs = omega.abs();
    let ohmic = psd_ohmic(model, omega) * (-abs / model.omega_h).exp();
    let one_over_f = if model.a_star == 0.0 {
        0.0
    } else if abs > model.omega_l {
        one_over_f_nonzero(model, omega) * (-abs / model.omega_h).exp()
    } else {
        one_over_f_nonzero(model, model.omega_l) * (-model.omega_l / model.omega_h).exp()
    };
    one_over_f + ohmic
}

/// S⁺(ω) = [S(ω) + S(−ω)]/2.
pub fn symmetrize<F: Fn(f64) -> f64>(psd: F, omega: f64) -> f64 {
    0.5 * (psd(omega) + psd(-omega))
}

/// S⁻(ω) = [S(ω) − S(−ω)]/2.
pub fn antisymmetrize<F: Fn(f64) -> f64>(psd: F, omega: f64) -> f64 {
    0.5 * (psd(omega) - psd(-omega))
}

/// MRT width and reorganization energy, both in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrtParams {
    pub w: f64,
    pub epsilon_p: f64,
}

impl MrtParams {
    pub fn new(w: f64, epsilon_p: f64) -> Result<Self> {
        if !(w > 0.0 && epsilon_p > 0.0) || !w.is_finite() || !epsilon_p.is_finite() {
            return Err(Error::invalid(format!("MRT parameters must be positive (W={w}, ε_p={epsilon_p})")));
        }
        Ok(MrtParams { w, epsilon_p })
    }

    /// ε_p = W²/(2k_BT) for a bath in thermal equilibrium at `temperature`.
    pub fn from_fdt(w: f64, temperature: f64) -> Result<Self> {
        let kt = thermal_energy(temperature)?;
        Self::new(w, w * w / (2.0 * kt))
    }
}

/// Options for the MRT integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrtQuadrature {
    pub rel_tol: f64,
    pub panels_per_decade: usize,
}

impl Default for MrtQuadrature {
    fn default() -> Self {
        MrtQuadrature { rel_tol: 1e-8, panels_per_decade: 2 }
    }
}

fn mrt_frequency_limits_hz(model: &NoiseModel) -> (f64, f64) {
    (model.omega_low_mrt / (2.0 * PI) * 1e9, model.omega_high_mrt / (2.0 * PI) * 1e9)
}

fn check_current(i_p: f64) -> Result<()> {
    if !(i_p > 0.0) || !i_p.is_finite() {
        return Err(Error::invalid(format!("persistent current must be positive, got {i_p}")));
    }
    Ok(())
}

/// ∫ df S⁺_{1/f} over [f_low, f_high] (positive frequencies), in Φ0².
pub fn integrated_symmetric_noise(model: &NoiseModel, quad: &MrtQuadrature) -> Result<f64> {
    model.validate()?;
    if model.a_star == 0.0 {
        return Ok(0.0);
    }
    let (f_lo, f_hi) = mrt_frequency_limits_hz(model);
    let splus = |f_hz: f64| {
        let omega = 2.0 * PI * f_hz * 1e-9;
        symmetrize(|w| one_over_f_nonzero(model, w), omega)
    };
    let opts = QuadOptions { rel_tol: quad.rel_tol, ..Default::default() };
    Ok(integrate_log(splus, f_lo, f_hi, quad.panels_per_decade, &opts)?.value)
}

/// MRT width W/h in GHz: W² = 2I_p²∫_{ω_low}^{ω_high} (dω/2π) S⁺_{1/f}(ω).
pub fn mrt_width(model: &NoiseModel, i_p: f64) -> Result<f64> {
    mrt_width_with(model, i_p, &MrtQuadrature::default())
}

pub fn mrt_width_with(model: &NoiseModel, i_p: f64, quad: &MrtQuadrature) -> Result<f64> {
    check_current(i_p)?;
    let integral = integrated_symmetric_noise(model, quad)?;
    Ok(coupling_energy(i_p) * (2.0 * integral).sqrt())
}

/// Reorganization energy ε_p/h in GHz by direct quadrature of
/// 2I_p²∫ (dω/2π) S⁻_{1/f}(ω)/(ħω) over the MRT limits.
pub fn reorganization_energy_integral(model: &NoiseModel, i_p: f64) -> Result<f64> {
    check_current(i_p)?;
    model.validate()?;
    if model.a_star == 0.0 {
        return Ok(0.0);
    }
    let (f_lo, f_hi) = mrt_frequency_limits_hz(model);
    let integrand = |f_hz: f64| {
        let omega = 2.0 * PI * f_hz * 1e-9;
        let sminus = antisymmetrize(|w| one_over_f_nonzero(model, w), omega);
        // ħω/h in GHz.
        sminus / (f_hz * 1e-9)
    };
    let opts = QuadOptions { rel_tol: MrtQuadrature::default().rel_tol, ..Default::default() };
    let integral = integrate_log(integrand, f_lo, f_hi, 2, &opts)?.value;
    let g = coupling_energy(i_p);
    Ok(2.0 * g * g * integral)
}

/// W from [`mrt_width`] and ε_p from the fluctuation-dissipation relation.
pub fn mrt_params_fdt(model: &NoiseModel, i_p: f64) -> Result<MrtParams> {
    let w = mrt_width(model, i_p)?;
    MrtParams::from_fdt(w, model.temperature)
}

/// Flat config-file form of [`NoiseModel`] with unit-suffixed keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub a_star: f64,
    pub alpha: f64,
    pub b: f64,
    pub gamma: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    #[serde(rename = "f_l_GHz")]
    pub f_l_ghz: f64,
    #[serde(rename = "f_h_GHz")]
    pub f_h_ghz: f64,
    #[serde(rename = "f_low_mrt_Hz")]
    pub f_low_mrt_hz: f64,
    #[serde(rename = "f_high_mrt_GHz")]
    pub f_high_mrt_ghz: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection::from(&NoiseModel::nominal())
    }
}

impl From<&NoiseModel> for NoiseSection {
    fn from(m: &NoiseModel) -> Self {
        let to_ghz = |w: f64| w / (2.0 * PI);
        NoiseSection {
            a_star: m.a_star,
            alpha: m.alpha,
            b: m.b,
            gamma: m.gamma,
            temperature_k: m.temperature,
            f_l_ghz: to_ghz(m.omega_l),
            f_h_ghz: to_ghz(m.omega_h),
            f_low_mrt_hz: to_ghz(m.omega_low_mrt) * 1e9,
            f_high_mrt_ghz: to_ghz(m.omega_high_mrt),
        }
    }
}

impl TryFrom<NoiseSection> for NoiseModel {
    type Error = Error;

    fn try_from(s: NoiseSection) -> Result<Self> {
        let model = NoiseModel {
            a_star: s.a_star,
            alpha: s.alpha,
            b: s.b,
            gamma: s.gamma,
            temperature: s.temperature_k,
            omega_l: 2.0 * PI * s.f_l_ghz,
            omega_h: 2.0 * PI * s.f_h_ghz,
            omega_low_mrt: 2.0 * PI * s.f_low_mrt_hz * 1e-9,
            omega_high_mrt: 2.0 * PI * s.f_high_mrt_ghz,
        };
        model.validate().map_err(|e| Error::Config(format!("noise: {e}")))?;
        Ok(model)
    }
}
