//! Dormand-Prince 5(4) integrator for small fixed-size real systems.
//!
//! States are plain `[f64; N]` arrays; complex amplitudes and density
//! matrices are packed into interleaved real/imaginary parts by the callers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Step-control settings shared by all propagators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on accepted + rejected steps for one integration.
    pub max_steps: usize,
    /// Smallest step (ns) before the integrator gives up.
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 50_000_000, min_step: 1e-12 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0 && self.min_step > 0.0 && self.max_steps > 0) {
            return Err(Error::invalid(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

/// The right-hand side of y' = f(t, y) plus an optional step-size ceiling.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);

    /// Largest admissible step starting at `t`.
    fn max_step(&self, _t: f64) -> f64 {
        f64::INFINITY
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates from `t0` to `t1 > t0`. `observer` sees every accepted step
/// and may request an early stop by returning `false`.
pub fn integrate<const N: usize, S, O>(
    system: &S,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &SolverOptions,
    mut observer: O,
) -> Result<([f64; N], f64, StepStats)>
where
    S: OdeSystem<N>,
    O: FnMut(f64, &[f64; N]) -> Result<bool>,
{
    opts.validate()?;
    if !(t1 > t0) {
        if t1 == t0 {
            return Ok((y0, t0, StepStats::default()));
        }
        return Err(Error::invalid(format!("integration interval [{t0}, {t1}] is reversed")));
    }
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    system.rhs(t, &y, &mut k1);
    stats.rhs_evaluations += 1;

    let mut h = initial_step(&y, &k1, t1 - t0, opts).min(system.max_step(t));
    let mut err_prev: f64 = 1e-4;

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::numeric(format!(
                "step budget of {} exhausted at t={t:.6} (target {t1}); {} accepted, {} rejected",
                opts.max_steps, stats.accepted, stats.rejected
            )));
        }
        h = h.min(system.max_step(t));
        let last = t + h >= t1 || t1 - (t + h) < 1e-12 * (t1 - t0);
        if last {
            h = t1 - t;
        }
        if h < opts.min_step && !last {
            return Err(Error::numeric(format!(
                "step size {h:.3e} ns fell below the minimum {:.1e} at t={t:.6}",
                opts.min_step
            )));
        }

        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];
        system.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2);
        system.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        system.rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        system.rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        system.rhs(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            &mut k6,
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t1 } else { t + h };
        system.rhs(t_new, &y_new, &mut k7);
        stats.rhs_evaluations += 6;

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::numeric(format!("non-finite error estimate at t={t:.6}, h={h:.3e}")));
        }

        if err <= 1.0 {
            // PI controller (Hairer & Wanner, II.4).
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(FAC_MIN, FAC_MAX)
            };
            err_prev = err.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            if !observer(t, &y)? {
                break;
            }
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }
    Ok((y, t, stats))
}

fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], span: f64, opts: &SolverOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}
