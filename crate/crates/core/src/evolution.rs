//! Options and results shared by the three propagators.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Hermitian2x2, Mat2};
use crate::ode::{SolverOptions, StepStats};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    pub solver: SolverOptions,
    /// Record a trajectory sample at the first accepted step past every
    /// multiple of this interval (ns). `None` records nothing.
    pub trajectory_stride: Option<f64>,
    /// AME only: switch to eigenbasis population rates once |ε| > 30Δ past
    /// the crossing.
    pub rate_equation_tail: bool,
    /// PTRE only: evaluate the polaron spectrum by direct quadrature on every
    /// right-hand-side call instead of through the precomputed table.
    pub direct_quadrature: bool,
    /// PTRE only: evolve populations alone (Pauli master equation).
    pub populations_only: bool,
}

/// Populations and eigenbasis coherence ⟨g|ρ|e⟩ at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub coherence: Complex64,
}

impl TrajectorySample {
    /// Projects `rho` onto the instantaneous eigenbasis of `h`.
    pub fn from_density(t: f64, rho: &Mat2, h: &Hermitian2x2) -> Self {
        let [g, e] = h.eigenvectors();
        TrajectorySample {
            t,
            p_g: rho.element(g, g).re,
            p_e: rho.element(e, e).re,
            coherence: rho.element(g, e),
        }
    }
}

/// Final state of one propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub p_g: f64,
    pub p_e: f64,
    pub stats: StepStats,
    pub trajectory: Vec<TrajectorySample>,
    /// Final density matrix in the persistent-current basis (lab frame for
    /// the AME and Schrödinger propagators, polaron frame for the PTRE).
    pub rho: Mat2,
    /// Largest deviation of the trace from one over accepted steps.
    pub max_trace_error: f64,
    /// Largest anti-Hermitian part over accepted steps.
    pub max_hermiticity_error: f64,
}

impl Outcome {
    pub fn steps(&self) -> usize {
        self.stats.accepted + self.stats.rejected
    }
}

/// Writes `t_ns,p_g,p_e,re_coh,im_coh` rows.
pub fn write_trajectory<W: Write>(samples: &[TrajectorySample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_ns", "p_g", "p_e", "re_coh", "im_coh"])?;
    for s in samples {
        w.write_record([
            s.t.to_string(),
            s.p_g.to_string(),
            s.p_e.to_string(),
            s.coherence.re.to_string(),
            s.coherence.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tracks the next sampling time for a fixed stride.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sampler {
    stride: Option<f64>,
    next: f64,
}

impl Sampler {
    pub(crate) fn new(stride: Option<f64>, t0: f64) -> Self {
        Sampler { stride: stride.filter(|s| *s > 0.0), next: t0 }
    }

    /// True when a sample is due at `t`; advances past `t`.
    pub(crate) fn due(&mut self, t: f64) -> bool {
        match self.stride {
            Some(s) if t >= self.next => {
                while self.next <= t {
                    self.next += s;
                }
                true
            }
            _ => false,
        }
    }
}

/// Clips readout populations into [0, 1].
pub(crate) fn clip_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}
