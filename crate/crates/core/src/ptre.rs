//! Polaron-frame Redfield equation for incoherent tunneling.
//!
//! In the polaron frame the qubit Hamiltonian is −(ε/2)σz and tunneling
//! enters as the dissipators (Δ/2)σ± at Bohr frequencies ±ε. Their rates
//! come from S̃(ω) = ∫(dω'/2π) G_L(ω − ω')·K(ω'), a Gaussian low-frequency
//! factor set by the MRT parameters convolved with a unit-area Lorentzian
//! kernel built from the ohmic spectrum. S̃ is in ns (ħ = 1 with energies in
//! rad/ns).

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ame::rate_prefactor;
use crate::device::BiasProtocol;
use crate::error::{Error, Result};
use crate::evolution::{clip_probability, EvolveOptions, Outcome, Sampler, TrajectorySample};
use crate::interp::Pchip;
use crate::linalg::Mat2;
use crate::noise::{mrt_width, psd_ohmic, MrtParams, NoiseModel};
use crate::ode::{integrate, OdeSystem};
use crate::quadrature::{integrate_partition, QuadOptions};

/// Floor applied before taking logarithms of S̃.
const LOG_FLOOR: f64 = 1e-300;
/// Half-width of the convolution window in units of the Gaussian σ = 2W.
const WINDOW_SIGMAS: f64 = 12.0;
/// Grid spacing in units of W.
const GRID_SPACING_W: f64 = 1.0 / 40.0;

/// Gaussian factor √(π/2)/W·exp[−(ω − 4ε_p)²/(8W²)], with W and ε_p
/// converted to rad/ns. Returns ns.
pub fn g_low(mrt: &MrtParams, omega: f64) -> f64 {
    let w = 2.0 * PI * mrt.w;
    let center = 4.0 * 2.0 * PI * mrt.epsilon_p;
    let x = omega - center;
    (PI / 2.0).sqrt() / w * (-x * x / (8.0 * w * w)).exp()
}

/// Ohmic broadening of the polaron-frame spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighFrequencyKernel {
    noise: NoiseModel,
    i_p: f64,
    /// γ(0) in rad/ns.
    gamma0: f64,
}

impl HighFrequencyKernel {
    pub fn new(noise: &NoiseModel, i_p: f64) -> Result<Self> {
        noise.validate()?;
        if noise.gamma != 1.0 && noise.b != 0.0 {
            return Err(Error::invalid(format!(
                "the polaron-frame kernel needs an ohmic exponent of 1, got {}",
                noise.gamma
            )));
        }
        let mut k = HighFrequencyKernel { noise: *noise, i_p, gamma0: 0.0 };
        k.gamma0 = k.rate(0.0);
        Ok(k)
    }

    /// γ(ω) = 4I_p²S_ohm(ω)e^{−|ω|/ω_h}/ħ² in rad/ns.
    pub fn rate(&self, omega: f64) -> f64 {
        let s = psd_ohmic(&self.noise, omega) * (-omega.abs() / self.noise.omega_h).exp();
        4.0 * self.i_p * self.i_p * rate_prefactor(s)
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// γ₀γ(ω)/(ω² + γ₀²); one at ω = 0.
    pub fn g_high(&self, omega: f64) -> f64 {
        if self.gamma0 == 0.0 {
            return if omega == 0.0 { 1.0 } else { 0.0 };
        }
        if omega == 0.0 {
            return 1.0;
        }
        self.gamma0 * self.rate(omega) / (omega * omega + self.gamma0 * self.gamma0)
    }

    /// 2γ(ω)/(ω² + γ₀²), unit area under dω/2π when γ is flat.
    pub fn kernel(&self, omega: f64) -> f64 {
        2.0 * self.rate(omega) / (omega * omega + self.gamma0 * self.gamma0)
    }
}

pub fn g_high(noise: &NoiseModel, i_p: f64, omega: f64) -> Result<f64> {
    Ok(HighFrequencyKernel::new(noise, i_p)?.g_high(omega))
}

/// Convolution ∫(dω'/2π) G_L(ω − ω')·kernel(ω') for a kernel peaked at 0
/// with width `kernel_width`.
fn convolve<K: Fn(f64) -> f64>(mrt: &MrtParams, omega: f64, kernel: K, kernel_width: f64, opts: &QuadOptions) -> Result<f64> {
    let sigma = 2.0 * 2.0 * PI * mrt.w;
    let c = omega - 4.0 * 2.0 * PI * mrt.epsilon_p;
    let mut breaks: Vec<f64> = (-(WINDOW_SIGMAS as i32)..=WINDOW_SIGMAS as i32)
        .map(|k| c + k as f64 * sigma)
        .collect();
    let (lo, hi) = (c - WINDOW_SIGMAS * sigma, c + WINDOW_SIGMAS * sigma);
    let reach = lo.abs().max(hi.abs());
    if kernel_width > 0.0 {
        breaks.push(0.0);
        let mut r = 2.0 * kernel_width;
        while r < reach {
            breaks.push(r);
            breaks.push(-r);
            r *= 10.0;
        }
        let outer = lo.min(-2.0 * kernel_width).min(hi);
        let upper = hi.max(2.0 * kernel_width).max(lo);
        breaks.push(outer);
        breaks.push(upper);
        let (a, b) = (outer, upper);
        breaks.retain(|x| *x >= a && *x <= b);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |wp: f64| g_low(mrt, omega - wp) * kernel(wp);
    let r = integrate_partition(integrand, &breaks, opts)?;
    Ok(r.value / (2.0 * PI))
}

fn default_quad() -> QuadOptions {
    QuadOptions { rel_tol: 1e-10, abs_tol: 0.0, max_panels: 20_000 }
}

/// S̃(ω) in ns by direct quadrature.
pub fn polaron_psd(mrt: &MrtParams, noise: &NoiseModel, i_p: f64, omega: f64) -> Result<f64> {
    let k = HighFrequencyKernel::new(noise, i_p)?;
    polaron_psd_with(mrt, &k, omega)
}

fn polaron_psd_with(mrt: &MrtParams, kernel: &HighFrequencyKernel, omega: f64) -> Result<f64> {
    if kernel.gamma0 == 0.0 {
        return Ok(g_low(mrt, omega));
    }
    convolve(mrt, omega, |w| kernel.kernel(w), kernel.gamma0, &default_quad())
}

/// S̃ tabulated on a uniform grid and interpolated with a monotone cubic in
/// ln S̃. Values outside the grid fall back to direct quadrature.
#[derive(Debug, Clone)]
pub struct PolaronSpectrum {
    pub mrt: MrtParams,
    kernel: HighFrequencyKernel,
    table: Pchip,
}

impl PolaronSpectrum {
    /// Grid over |ω|/2π ≤ max(10(4ε_p + 2W), 2ε_max) GHz with spacing W/40.
    pub fn new(mrt: MrtParams, noise: &NoiseModel, i_p: f64, epsilon_max: f64) -> Result<Self> {
        let kernel = HighFrequencyKernel::new(noise, i_p)?;
        let half_range = (10.0 * (4.0 * mrt.epsilon_p + 2.0 * mrt.w)).max(2.0 * epsilon_max.abs());
        let n_half = (half_range / (GRID_SPACING_W * mrt.w)).ceil() as usize;
        let step = 2.0 * PI * half_range / n_half as f64;
        let omegas: Vec<f64> = (0..=2 * n_half).map(|k| (k as f64 - n_half as f64) * step).collect();
        let values: Vec<f64> = omegas
            .par_iter()
            .map(|&w| polaron_psd_with(&mrt, &kernel, w))
            .collect::<Result<_>>()?;
        if let Some((w, v)) = omegas.iter().zip(&values).find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::numeric(format!("polaron spectrum is negative or NaN ({v}) at ω = {w} rad/ns")));
        }
        let logs = values.iter().map(|v| v.max(LOG_FLOOR).ln()).collect();
        let table = Pchip::new(omegas, logs)?;
        Ok(PolaronSpectrum { mrt, kernel, table })
    }

    /// Grid nodes (rad/ns) and tabulated S̃ values (ns).
    pub fn grid(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, y) = self.table.nodes();
        (x.to_vec(), y.iter().map(|v| v.exp()).collect())
    }

    /// (lowest, highest) tabulated ω in rad/ns.
    pub fn domain(&self) -> (f64, f64) {
        self.table.domain()
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        match self.table.eval(omega) {
            Some(v) => Ok(v.exp()),
            None => self.direct(omega),
        }
    }

    pub fn direct(&self, omega: f64) -> Result<f64> {
        polaron_psd_with(&self.mrt, &self.kernel, omega)
    }
}

/// W and temperature rescalings applied to the nominal noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtreVariant {
    pub w_scale: f64,
    pub t_scale: f64,
}

impl Default for PtreVariant {
    fn default() -> Self {
        PtreVariant { w_scale: 1.0, t_scale: 1.0 }
    }
}

impl PtreVariant {
    /// `ptre`, `ptre_4w`, `ptre_t0.25`, `ptre_4w_t0.25`.
    pub fn tag(&self) -> String {
        let mut tag = String::from("ptre");
        if self.w_scale != 1.0 {
            tag.push_str(&format!("_{}w", self.w_scale));
        }
        if self.t_scale != 1.0 {
            tag.push_str(&format!("_t{}", self.t_scale));
        }
        tag
    }

    /// MRT parameters and the noise model seen by the PTRE: W is the nominal
    /// width times `w_scale`, the bath temperature is scaled by `t_scale`,
    /// and ε_p follows from the fluctuation-dissipation relation at the
    /// scaled temperature.
    pub fn apply(&self, noise: &NoiseModel, i_p: f64) -> Result<(MrtParams, NoiseModel)> {
        if !(self.w_scale > 0.0 && self.t_scale > 0.0) {
            return Err(Error::invalid(format!("PTRE scale factors must be positive: {self:?}")));
        }
        let w = mrt_width(noise, i_p)? * self.w_scale;
        let scaled = NoiseModel { temperature: noise.temperature * self.t_scale, ..*noise };
        scaled.validate()?;
        Ok((MrtParams::from_fdt(w, scaled.temperature)?, scaled))
    }
}

enum RateSource<'a> {
    Table(&'a PolaronSpectrum),
    Direct(&'a PolaronSpectrum),
}

struct PolaronFrameModel<'a, B: BiasProtocol + ?Sized> {
    protocol: &'a B,
    source: RateSource<'a>,
    failure: RefCell<Option<Error>>,
}

impl<B: BiasProtocol + ?Sized> PolaronFrameModel<'_, B> {
    fn spectrum(&self, omega: f64) -> f64 {
        let r = match self.source {
            RateSource::Table(s) => s.eval(omega),
            RateSource::Direct(s) => s.direct(omega),
        };
        match r {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    /// (σ+ rate, σ− rate) in ns⁻¹ at time t.
    fn rates(&self, t: f64) -> (f64, f64) {
        let eps = self.protocol.epsilon(t);
        let k = PI * self.protocol.point().delta;
        if k == 0.0 {
            return (0.0, 0.0);
        }
        let w = 2.0 * PI * eps;
        (k * k * self.spectrum(w), k * k * self.spectrum(-w))
    }

    fn cap(&self, t: f64) -> f64 {
        let span = self.protocol.duration();
        let h = 1e-6 * span;
        let (a, b) = ((t - h).max(0.0), (t + h).min(span));
        let v = ((self.protocol.epsilon(b) - self.protocol.epsilon(a)) / (b - a)).abs();
        let width = match self.source {
            RateSource::Table(s) | RateSource::Direct(s) => s.mrt.w,
        };
        if v > 0.0 {
            0.05 * 2.0 * width / v
        } else {
            f64::INFINITY
        }
    }
}

fn dissipator(l: &Mat2, rho: &Mat2) -> Mat2 {
    let ld = l.dagger();
    let ldl = ld * *l;
    *l * *rho * ld - (ldl * *rho + *rho * ldl).scale_re(0.5)
}

impl<B: BiasProtocol + ?Sized> OdeSystem<8> for PolaronFrameModel<'_, B> {
    fn rhs(&self, t: f64, y: &[f64; 8], dy: &mut [f64; 8]) {
        let rho = Mat2::from_real_array(y);
        let eps = self.protocol.epsilon(t);
        let h = Mat2::real(-0.5 * eps, 0.0, 0.0, 0.5 * eps);
        let mut out = h.commutator(&rho).scale(Complex64::new(0.0, -2.0 * PI));
        let (up, down) = self.rates(t);
        out = out + dissipator(&Mat2::sigma_plus(), &rho).scale_re(up);
        out = out + dissipator(&Mat2::sigma_minus(), &rho).scale_re(down);
        *dy = out.to_real_array();
    }

    fn max_step(&self, t: f64) -> f64 {
        self.cap(t)
    }
}

/// Population-only reduction of the same model.
struct PauliModel<'a, 'b, B: BiasProtocol + ?Sized>(&'b PolaronFrameModel<'a, B>);

impl<B: BiasProtocol + ?Sized> OdeSystem<2> for PauliModel<'_, '_, B> {
    fn rhs(&self, t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        let (up, down) = self.0.rates(t);
        let flow = up * y[1] - down * y[0];
        dy[0] = flow;
        dy[1] = -flow;
    }

    fn max_step(&self, t: f64) -> f64 {
        self.0.cap(t)
    }
}

/// Lower-energy persistent-current projector for −(ε/2)σz.
fn initial_projector(eps: f64) -> Mat2 {
    if eps < 0.0 {
        Mat2::real(0.0, 0.0, 0.0, 1.0)
    } else {
        Mat2::real(1.0, 0.0, 0.0, 0.0)
    }
}

/// Builds the tabulated spectrum for the protocol and evolves.
pub fn evolve_ptre<B: BiasProtocol + ?Sized>(
    protocol: &B,
    mrt: &MrtParams,
    noise: &NoiseModel,
    opts: &EvolveOptions,
) -> Result<Outcome> {
    let spectrum = PolaronSpectrum::new(*mrt, noise, protocol.point().i_p, protocol.max_abs_epsilon())?;
    evolve_ptre_with(protocol, &spectrum, opts)
}

/// Evolves with a precomputed spectrum; the spectrum can be shared across
/// runs at the same operating point.
pub fn evolve_ptre_with<B: BiasProtocol + ?Sized>(
    protocol: &B,
    spectrum: &PolaronSpectrum,
    opts: &EvolveOptions,
) -> Result<Outcome> {
    let model = PolaronFrameModel {
        protocol,
        source: if opts.direct_quadrature { RateSource::Direct(spectrum) } else { RateSource::Table(spectrum) },
        failure: RefCell::new(None),
    };
    let t_end = protocol.duration();
    let rho0 = initial_projector(protocol.epsilon(0.0));
    let mut sampler = Sampler::new(opts.trajectory_stride, 0.0);
    let mut trajectory = Vec::new();
    let sample = |t: f64, rho: &Mat2| TrajectorySample::from_density(t, rho, &protocol.hamiltonian(t));
    if sampler.due(0.0) {
        trajectory.push(sample(0.0, &rho0));
    }
    let mut max_trace_error: f64 = 0.0;
    let mut max_herm_error: f64 = 0.0;
    let result = if opts.populations_only {
        let pauli = PauliModel(&model);
        let p0 = [rho0.get(0, 0).re, rho0.get(1, 1).re];
        integrate(&pauli, 0.0, t_end, p0, &opts.solver, |t, p| {
            max_trace_error = max_trace_error.max((p[0] + p[1] - 1.0).abs());
            if sampler.due(t) || (t == t_end && opts.trajectory_stride.is_some()) {
                trajectory.push(sample(t, &Mat2::real(p[0], 0.0, 0.0, p[1])));
            }
            Ok(true)
        })
        .map(|(p, _, stats)| (Mat2::real(p[0], 0.0, 0.0, p[1]), stats))
    } else {
        integrate(&model, 0.0, t_end, rho0.to_real_array(), &opts.solver, |t, y| {
            let rho = Mat2::from_real_array(y);
            max_trace_error = max_trace_error.max((rho.trace() - 1.0).norm());
            max_herm_error = max_herm_error.max(rho.hermiticity_error());
            let lam = rho.hermitian_eigenvalues()[0];
            if lam < crate::ame::POSITIVITY_LIMIT {
                return Err(Error::numeric(format!(
                    "density matrix lost positivity (λ_min = {lam:.3e}) at t = {t:.6} ns, ε = {:.6} GHz",
                    protocol.epsilon(t)
                )));
            }
            if sampler.due(t) || (t == t_end && opts.trajectory_stride.is_some()) {
                trajectory.push(sample(t, &rho));
            }
            Ok(true)
        })
        .map(|(y, _, stats)| (Mat2::from_real_array(&y), stats))
    };
    if let Some(e) = model.failure.borrow_mut().take() {
        return Err(e);
    }
    let (rho, stats) = result?;
    let end = TrajectorySample::from_density(t_end, &rho, &protocol.hamiltonian(t_end));
    Ok(Outcome {
        p_g: clip_probability(end.p_g),
        p_e: clip_probability(end.p_e),
        stats,
        trajectory,
        rho,
        max_trace_error,
        max_hermiticity_error: max_herm_error,
    })
}
