//! Closed-system reference: the Landau-Zener formula and a direct
//! Schrödinger propagator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::device::BiasProtocol;
use crate::error::{Error, Result};
use crate::evolution::{clip_probability, EvolveOptions, Outcome, Sampler, TrajectorySample};
use crate::linalg::{Hermitian2x2, Mat2};
use crate::ode::{integrate, OdeSystem, SolverOptions, StepStats};

/// Final excited-state probability exp(−πτ/2) = exp(−π²Δ²/v) of a single
/// linear passage, with Δ in GHz and v in GHz/ns.
pub fn p_lz(delta: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("sweep velocity must be positive, got {v}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("gap must be non-negative, got {delta}")));
    }
    let tau = 2.0 * PI * delta * delta / v;
    Ok((-PI * tau / 2.0).exp())
}

/// Two amplitudes in the persistent-current basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    pub amplitudes: [Complex64; 2],
}

impl PureState {
    pub fn new(amplitudes: [Complex64; 2]) -> Result<Self> {
        let s = PureState { amplitudes };
        let n = s.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("state vector must have finite non-zero norm"));
        }
        Ok(PureState { amplitudes: [amplitudes[0] / n, amplitudes[1] / n] })
    }

    /// Instantaneous ground state of `h`.
    pub fn ground_state(h: &Hermitian2x2) -> Self {
        PureState { amplitudes: h.eigenvectors()[0] }
    }

    pub fn norm(&self) -> f64 {
        (self.amplitudes[0].norm_sqr() + self.amplitudes[1].norm_sqr()).sqrt()
    }

    /// (p_g, p_e) in the eigenbasis of `h`.
    pub fn populations(&self, h: &Hermitian2x2) -> (f64, f64) {
        let [g, e] = h.eigenvectors();
        let overlap = |v: [Complex64; 2]| (v[0].conj() * self.amplitudes[0] + v[1].conj() * self.amplitudes[1]).norm_sqr();
        (overlap(g), overlap(e))
    }

    pub fn density(&self) -> Mat2 {
        Mat2::outer(self.amplitudes, self.amplitudes)
    }

    /// |⟨self|other⟩|.
    pub fn overlap(&self, other: &PureState) -> f64 {
        let a = &self.amplitudes;
        let b = &other.amplitudes;
        (a[0].conj() * b[0] + a[1].conj() * b[1]).norm()
    }

}

/// Interaction picture with respect to the diagonal bias term:
/// ψ₀ = c₀·e^{iπΦ(t)}, ψ₁ = c₁·e^{−iπΦ(t)} with Φ = ∫ε dt, so that only the
/// tunneling term drives c. Runs the time-reversed flow in s = −t when
/// `reversed` is set.
struct Schrodinger<'a, B: BiasProtocol + ?Sized> {
    protocol: &'a B,
    reversed: bool,
}

impl<B: BiasProtocol + ?Sized> Schrodinger<'_, B> {
    fn time(&self, s: f64) -> f64 {
        if self.reversed {
            -s
        } else {
            s
        }
    }

    /// e^{iπΦ(t)}.
    fn half_phase(&self, t: f64) -> Complex64 {
        let phi = self.protocol.epsilon_integral(t).rem_euclid(2.0);
        Complex64::from_polar(1.0, PI * phi)
    }

    fn to_lab(&self, t: f64, c: &[f64; 4]) -> PureState {
        let u = self.half_phase(t);
        PureState {
            amplitudes: [Complex64::new(c[0], c[1]) * u, Complex64::new(c[2], c[3]) * u.conj()],
        }
    }

    fn to_frame(&self, t: f64, psi: &PureState) -> [f64; 4] {
        let u = self.half_phase(t);
        let c0 = psi.amplitudes[0] * u.conj();
        let c1 = psi.amplitudes[1] * u;
        [c0.re, c0.im, c1.re, c1.im]
    }
}

impl<B: BiasProtocol + ?Sized> OdeSystem<4> for Schrodinger<'_, B> {
    fn rhs(&self, s: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let t = self.time(s);
        let sign = if self.reversed { -1.0 } else { 1.0 };
        let k = sign * PI * self.protocol.point().delta;
        // ċ₀ = iπΔ·e^{−2πiΦ}c₁, ċ₁ = iπΔ·e^{2πiΦ}c₀.
        let u = self.half_phase(t);
        let rot = u * u;
        let c0 = Complex64::new(y[0], y[1]);
        let c1 = Complex64::new(y[2], y[3]);
        let d0 = Complex64::new(0.0, k) * rot.conj() * c1;
        let d1 = Complex64::new(0.0, k) * rot * c0;
        *dy = [d0.re, d0.im, d1.re, d1.im];
    }

    fn max_step(&self, s: f64) -> f64 {
        1.0 / (20.0 * self.protocol.gap(self.time(s)).max(1e-300))
    }
}

/// Result of [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub state: PureState,
    pub stats: StepStats,
    /// Largest |‖ψ‖ − 1| over accepted steps.
    pub max_norm_error: f64,
}

/// Propagates `state` from `t0` to `t1` under the protocol's Hamiltonian.
/// `t1 < t0` runs the evolution backward in time.
pub fn propagate<B: BiasProtocol + ?Sized>(
    protocol: &B,
    state: PureState,
    t0: f64,
    t1: f64,
    opts: &SolverOptions,
) -> Result<Propagation> {
    propagate_observed(protocol, state, t0, t1, opts, |_, _| {})
}

fn propagate_observed<B: BiasProtocol + ?Sized, F: FnMut(f64, &PureState)>(
    protocol: &B,
    state: PureState,
    t0: f64,
    t1: f64,
    opts: &SolverOptions,
    mut on_step: F,
) -> Result<Propagation> {
    let reversed = t1 < t0;
    let system = Schrodinger { protocol, reversed };
    let (s0, s1) = if reversed { (-t0, -t1) } else { (t0, t1) };
    let mut max_norm_error: f64 = (state.norm() - 1.0).abs();
    let (y, _, stats) = integrate(&system, s0, s1, system.to_frame(t0, &state), opts, |s, y| {
        let t = system.time(s);
        let psi = system.to_lab(t, y);
        max_norm_error = max_norm_error.max((psi.norm() - 1.0).abs());
        on_step(t, &psi);
        Ok(true)
    })?;
    Ok(Propagation { state: system.to_lab(t1, &y), stats, max_norm_error })
}

/// Starts in the instantaneous ground state at t = 0 and returns the final
/// eigenbasis populations at the end of the protocol.
pub fn evolve_schrodinger<B: BiasProtocol + ?Sized>(protocol: &B, opts: &EvolveOptions) -> Result<Outcome> {
    let t_end = protocol.duration();
    let psi0 = PureState::ground_state(&protocol.hamiltonian(0.0));
    let mut sampler = Sampler::new(opts.trajectory_stride, 0.0);
    let mut trajectory = Vec::new();
    if sampler.due(0.0) {
        trajectory.push(TrajectorySample::from_density(0.0, &psi0.density(), &protocol.hamiltonian(0.0)));
    }
    let run = propagate_observed(protocol, psi0, 0.0, t_end, &opts.solver, |t, psi| {
        if sampler.due(t) || t == t_end && opts.trajectory_stride.is_some() {
            trajectory.push(TrajectorySample::from_density(t, &psi.density(), &protocol.hamiltonian(t)));
        }
    })?;
    let (p_g, p_e) = run.state.populations(&protocol.hamiltonian(t_end));
    let rho = run.state.density();
    Ok(Outcome {
        p_g: clip_probability(p_g),
        p_e: clip_probability(p_e),
        stats: run.stats,
        trajectory,
        rho,
        max_trace_error: run.max_norm_error * 2.0 + run.max_norm_error * run.max_norm_error,
        max_hermiticity_error: 0.0,
    })
}
