//! Adiabatic master equation without Lamb shift.
//!
//! The density matrix is integrated in the fixed persistent-current basis.
//! Each right-hand-side call rebuilds the instantaneous eigenframe and the
//! three Lindblad operators L_0, L_{+ω_q}, L_{−ω_q} of the coupling I_p·σz.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::device::{BiasProtocol, OperatingPoint};
use crate::error::{Error, Result};
use crate::evolution::{clip_probability, EvolveOptions, Outcome, Sampler, TrajectorySample};
use crate::linalg::{Hermitian2x2, Mat2};
use crate::noise::{psd_ame, NoiseModel};
use crate::ode::{integrate, OdeSystem, StepStats};
use crate::units::CURRENT_TO_FREQ;

/// Eigenvalues below this at an accepted step abort the run.
pub const POSITIVITY_LIMIT: f64 = -1e-5;

/// |ε| beyond which the optional population-only tail takes over, in units
/// of Δ.
pub const RATE_TAIL_THRESHOLD: f64 = 30.0;

/// Instantaneous eigendecomposition of a 2×2 Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenFrame {
    /// (E_g, E_e) in GHz.
    pub energies: [f64; 2],
    pub ground: [Complex64; 2],
    pub excited: [Complex64; 2],
}

impl EigenFrame {
    /// ω_q = E_e − E_g in GHz.
    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// Bohr frequencies {0, +ω_q, −ω_q} in GHz.
    pub fn bohr_frequencies(&self) -> [f64; 3] {
        [0.0, self.gap(), -self.gap()]
    }

    /// ⟨a|M|b⟩ for a, b ∈ {g, e}, indexed 0 = g, 1 = e.
    pub fn matrix_elements(&self, m: &Mat2) -> [[Complex64; 2]; 2] {
        let v = [self.ground, self.excited];
        [[m.element(v[0], v[0]), m.element(v[0], v[1])], [m.element(v[1], v[0]), m.element(v[1], v[1])]]
    }
}

pub fn eigenframe(h: &Hermitian2x2) -> EigenFrame {
    let [ground, excited] = h.eigenvectors();
    EigenFrame { energies: h.eigenvalues(), ground, excited }
}

/// Lindblad operators of I_p·σz (matrix elements in μA).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladSet {
    /// ω_q in GHz.
    pub omega_q: f64,
    /// Pure dephasing, ω = 0.
    pub zero: Mat2,
    /// Emission |g⟩⟨e|, ω = +ω_q.
    pub emission: Mat2,
    /// Absorption |e⟩⟨g|, ω = −ω_q.
    pub absorption: Mat2,
}

impl LindbladSet {
    /// (ω in GHz, L_ω) pairs.
    pub fn operators(&self) -> [(f64, Mat2); 3] {
        [(0.0, self.zero), (self.omega_q, self.emission), (-self.omega_q, self.absorption)]
    }

    /// Σ_ω L_ω.
    pub fn reconstruct(&self) -> Mat2 {
        self.zero + self.emission + self.absorption
    }
}

pub fn lindblad_set(point: &OperatingPoint, frame: &EigenFrame) -> LindbladSet {
    let a = frame.matrix_elements(&Mat2::sigma_z().scale_re(point.i_p));
    let (g, e) = (frame.ground, frame.excited);
    let proj_g = Mat2::outer(g, g);
    let proj_e = Mat2::outer(e, e);
    LindbladSet {
        omega_q: frame.gap(),
        zero: proj_g.scale(a[0][0]) + proj_e.scale(a[1][1]),
        emission: Mat2::outer(g, e).scale(a[0][1]),
        absorption: Mat2::outer(e, g).scale(a[1][0]),
    }
}

/// Converts S(ω) in Φ0²/Hz and a coupling in μA to a rate prefactor in
/// ns⁻¹/μA²: (2π·Φ0/h)²·S·1e9.
#[inline]
pub fn rate_prefactor(psd: f64) -> f64 {
    let k = 2.0 * PI * CURRENT_TO_FREQ;
    k * k * psd * 1e9
}

/// Applies L ρ L† − ½{L†L, ρ}.
#[inline]
fn dissipator(l: &Mat2, rho: &Mat2) -> Mat2 {
    let ld = l.dagger();
    let ldl = ld * *l;
    *l * *rho * ld - (ldl * *rho + *rho * ldl).scale_re(0.5)
}

/// −2πi[H, ρ] + Σ_ω γ(ω)·D[L_ω]ρ at time t.
pub fn ame_rhs<B: BiasProtocol + ?Sized>(rho: &Mat2, t: f64, protocol: &B, noise: &NoiseModel) -> Mat2 {
    let h = protocol.hamiltonian(t);
    let comm = h.matrix().commutator(rho);
    let mut out = comm.scale(Complex64::new(0.0, -2.0 * PI));
    let frame = eigenframe(&h);
    let set = lindblad_set(protocol.point(), &frame);
    for (omega, l) in set.operators() {
        let psd = psd_ame(noise, 2.0 * PI * omega);
        if psd == 0.0 {
            continue;
        }
        out = out + dissipator(&l, rho).scale_re(rate_prefactor(psd));
    }
    out
}

struct AmeSystem<'a, B: BiasProtocol + ?Sized> {
    protocol: &'a B,
    noise: &'a NoiseModel,
}

impl<B: BiasProtocol + ?Sized> OdeSystem<8> for AmeSystem<'_, B> {
    fn rhs(&self, t: f64, y: &[f64; 8], dy: &mut [f64; 8]) {
        let rho = Mat2::from_real_array(y);
        *dy = ame_rhs(&rho, t, self.protocol, self.noise).to_real_array();
    }

    fn max_step(&self, t: f64) -> f64 {
        1.0 / (20.0 * self.protocol.gap(t).max(1e-300))
    }
}

/// Eigenbasis population rates used after the switch to the tail.
struct RateTail<'a, B: BiasProtocol + ?Sized> {
    protocol: &'a B,
    noise: &'a NoiseModel,
}

impl<B: BiasProtocol + ?Sized> RateTail<'_, B> {
    /// (g → e, e → g) rates in ns⁻¹.
    fn rates(&self, t: f64) -> (f64, f64) {
        let frame = eigenframe(&self.protocol.hamiltonian(t));
        let a = frame.matrix_elements(&Mat2::sigma_z().scale_re(self.protocol.point().i_p));
        let coupling = a[0][1].norm_sqr();
        let w = 2.0 * PI * frame.gap();
        (
            rate_prefactor(psd_ame(self.noise, -w)) * coupling,
            rate_prefactor(psd_ame(self.noise, w)) * coupling,
        )
    }
}

impl<B: BiasProtocol + ?Sized> OdeSystem<2> for RateTail<'_, B> {
    fn rhs(&self, t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        let (up, down) = self.rates(t);
        let flow = up * y[0] - down * y[1];
        dy[0] = -flow;
        dy[1] = flow;
    }
}

/// First time after the crossing at which ε(t) = 30Δ, for a bias that
/// increases monotonically through zero.
fn tail_switch_time<B: BiasProtocol + ?Sized>(protocol: &B) -> Option<f64> {
    let target = RATE_TAIL_THRESHOLD * protocol.point().delta;
    let t_end = protocol.duration();
    if !(protocol.epsilon(0.0) < 0.0 && protocol.epsilon(t_end) > target) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, t_end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if protocol.epsilon(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn min_eigenvalue(rho: &Mat2) -> f64 {
    rho.hermitian_eigenvalues()[0]
}

/// Starts from the instantaneous ground-state projector at t = 0 and
/// integrates to the end of the protocol.
pub fn evolve_ame<B: BiasProtocol + ?Sized>(protocol: &B, noise: &NoiseModel, opts: &EvolveOptions) -> Result<Outcome> {
    noise.validate()?;
    let t_end = protocol.duration();
    let h0 = protocol.hamiltonian(0.0);
    let g0 = h0.eigenvectors()[0];
    let rho0 = Mat2::outer(g0, g0);

    let switch = if opts.rate_equation_tail { tail_switch_time(protocol) } else { None };
    let t_stop = switch.unwrap_or(t_end);

    let mut sampler = Sampler::new(opts.trajectory_stride, 0.0);
    let mut trajectory = Vec::new();
    if sampler.due(0.0) {
        trajectory.push(TrajectorySample::from_density(0.0, &rho0, &h0));
    }
    let mut max_trace_error: f64 = 0.0;
    let mut max_herm_error: f64 = 0.0;
    let mut steps_seen = 0usize;
    let system = AmeSystem { protocol, noise };
    let (y, _, mut stats) = integrate(&system, 0.0, t_stop, rho0.to_real_array(), &opts.solver, |t, y| {
        let rho = Mat2::from_real_array(y);
        steps_seen += 1;
        max_trace_error = max_trace_error.max((rho.trace() - 1.0).norm());
        max_herm_error = max_herm_error.max(rho.hermiticity_error());
        let lam = min_eigenvalue(&rho);
        if lam < POSITIVITY_LIMIT {
            return Err(Error::numeric(format!(
                "density matrix lost positivity (λ_min = {lam:.3e}) at t = {t:.6} ns after {steps_seen} accepted steps; \
                 ε = {:.6} GHz, gap = {:.6} GHz",
                protocol.epsilon(t),
                protocol.gap(t)
            )));
        }
        if sampler.due(t) || (t == t_end && opts.trajectory_stride.is_some()) {
            trajectory.push(TrajectorySample::from_density(t, &rho, &protocol.hamiltonian(t)));
        }
        Ok(true)
    })?;
    let mut rho = Mat2::from_real_array(&y);

    if let Some(t_switch) = switch {
        let frame = eigenframe(&protocol.hamiltonian(t_switch));
        let pops = [rho.element(frame.ground, frame.ground).re, rho.element(frame.excited, frame.excited).re];
        let tail = RateTail { protocol, noise };
        let (p, _, tail_stats) = integrate(&tail, t_switch, t_end, pops, &opts.solver, |t, p| {
            if sampler.due(t) || (t == t_end && opts.trajectory_stride.is_some()) {
                trajectory.push(TrajectorySample { t, p_g: p[0], p_e: p[1], coherence: Complex64::new(0.0, 0.0) });
            }
            Ok(true)
        })?;
        stats = StepStats {
            accepted: stats.accepted + tail_stats.accepted,
            rejected: stats.rejected + tail_stats.rejected,
            rhs_evaluations: stats.rhs_evaluations + tail_stats.rhs_evaluations,
        };
        let end = eigenframe(&protocol.hamiltonian(t_end));
        rho = Mat2::outer(end.ground, end.ground).scale_re(p[0]) + Mat2::outer(end.excited, end.excited).scale_re(p[1]);
    }

    let end = eigenframe(&protocol.hamiltonian(t_end));
    let p_g = rho.element(end.ground, end.ground).re;
    let p_e = rho.element(end.excited, end.excited).re;
    Ok(Outcome {
        p_g: clip_probability(p_g),
        p_e: clip_probability(p_e),
        stats,
        trajectory,
        rho,
        max_trace_error,
        max_hermiticity_error: max_herm_error,
    })
}
