//! Two-level flux-qubit model: operating points, sweep schedules and the
//! instantaneous Hamiltonian H = −(ε/2)σz − (Δ/2)σx in the persistent-current
//! basis.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Hermitian2x2;
use crate::units::persistent_current_energy;

/// One flux operating point of the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// x-loop bias in Φ0.
    pub phi_x: f64,
    /// Minimum gap Δ/h in GHz.
    pub delta: f64,
    /// Persistent current in μA.
    pub i_p: f64,
}

impl OperatingPoint {
    /// A gap of exactly zero is accepted (decoupled diabatic levels); tables
    /// require strictly positive gaps.
    pub fn new(phi_x: f64, delta: f64, i_p: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("gap must be non-negative, got {delta} GHz")));
        }
        if !(i_p > 0.0) || !i_p.is_finite() {
            return Err(Error::invalid(format!("persistent current must be positive, got {i_p} μA")));
        }
        if !phi_x.is_finite() {
            return Err(Error::invalid("phi_x must be finite"));
        }
        Ok(OperatingPoint { phi_x, delta, i_p })
    }
}

/// Operating points sorted by ascending `phi_x`, with Δ strictly increasing
/// along the table.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPointTable {
    points: Vec<OperatingPoint>,
}

impl OperatingPointTable {
    pub fn new(mut points: Vec<OperatingPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("operating-point table needs at least two entries"));
        }
        points.sort_by(|a, b| a.phi_x.total_cmp(&b.phi_x));
        for p in &points {
            if !(p.delta > 0.0) {
                return Err(Error::invalid(format!(
                    "table entry at phi_x={} has non-positive gap",
                    p.phi_x
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].phi_x <= w[0].phi_x {
                return Err(Error::invalid(format!("duplicate phi_x {}", w[0].phi_x)));
            }
            if w[1].delta <= w[0].delta {
                return Err(Error::invalid(format!(
                    "gap must decrease strictly with decreasing phi_x (violated between {} and {})",
                    w[0].phi_x, w[1].phi_x
                )));
            }
        }
        Ok(OperatingPointTable { points })
    }

    /// Synthetic eight-point table: Δ/h log-spaced over 12–120 MHz and I_p
    /// linearly spaced over 0.129–0.104 μA (larger I_p at smaller gap).
    pub fn default_synthetic() -> Self {
        let n = 8;
        let points = (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                OperatingPoint {
                    phi_x: 0.480 + 0.005 * k as f64,
                    delta: 0.012 * 10f64.powf(s),
                    i_p: 0.129 - 0.025 * s,
                }
            })
            .collect();
        OperatingPointTable::new(points).expect("default table is valid")
    }

    pub fn points(&self) -> &[OperatingPoint] {
        &self.points
    }

    /// Δ interpolated log-linearly and I_p linearly in `phi_x`.
    pub fn interpolate(&self, phi_x: f64) -> Result<OperatingPoint> {
        let first = self.points.first().unwrap();
        let last = self.points.last().unwrap();
        if !(phi_x >= first.phi_x && phi_x <= last.phi_x) {
            return Err(Error::Range(format!(
                "phi_x={phi_x} outside table range [{}, {}]",
                first.phi_x, last.phi_x
            )));
        }
        let k = self
            .points
            .partition_point(|p| p.phi_x <= phi_x)
            .clamp(1, self.points.len() - 1);
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        if phi_x == a.phi_x {
            return Ok(*a);
        }
        if phi_x == b.phi_x {
            return Ok(*b);
        }
        let s = (phi_x - a.phi_x) / (b.phi_x - a.phi_x);
        Ok(OperatingPoint {
            phi_x,
            delta: (a.delta.ln() * (1.0 - s) + b.delta.ln() * s).exp(),
            i_p: a.i_p * (1.0 - s) + b.i_p * s,
        })
    }

    /// Reads the `phi_x,delta_GHz,ip_uA` CSV format.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["phi_x", "delta_GHz", "ip_uA"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Config(format!(
                "operating-point table header must be `phi_x,delta_GHz,ip_uA`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (line, row) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
            let (phi_x, delta, i_p) =
                row.map_err(|e| Error::Config(format!("table row {}: {e}", line + 2)))?;
            points.push(OperatingPoint::new(phi_x, delta, i_p)?);
        }
        Self::new(points)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["phi_x", "delta_GHz", "ip_uA"])?;
        for p in &self.points {
            w.write_record([p.phi_x.to_string(), p.delta.to_string(), p.i_p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Time dependence of the diabatic bias seen by the propagators.
pub trait BiasProtocol: Sync {
    fn point(&self) -> &OperatingPoint;
    /// Total evolution time in ns.
    fn duration(&self) -> f64;
    /// ε(t)/h in GHz; `t` is assumed to lie in [0, duration].
    fn epsilon(&self, t: f64) -> f64;
    /// Largest |ε| reached during the protocol.
    fn max_abs_epsilon(&self) -> f64;
    /// ∫₀ᵗ ε(s) ds in GHz·ns (cycles).
    fn epsilon_integral(&self, t: f64) -> f64;

    fn hamiltonian(&self, t: f64) -> Hermitian2x2 {
        Hermitian2x2::qubit(self.epsilon(t), self.point().delta)
    }

    /// Instantaneous gap √(ε² + Δ²) in GHz.
    fn gap(&self, t: f64) -> f64 {
        self.epsilon(t).hypot(self.point().delta)
    }
}

/// Endpoint guard factors relative to Δ.
const GUARD_REJECT: f64 = 10.0;
const GUARD_WARN: f64 = 50.0;

/// A linear Φz ramp through the anticrossing. Flux values are offsets from
/// the symmetry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub point: OperatingPoint,
    pub phi_init: f64,
    pub phi_final: f64,
    /// Sweep duration in ns.
    pub t_lz: f64,
}

impl SweepSchedule {
    pub fn new(point: OperatingPoint, phi_init: f64, phi_final: f64, t_lz: f64) -> Result<Self> {
        Self::build(point, phi_init, phi_final, t_lz, true)
    }

    fn build(point: OperatingPoint, phi_init: f64, phi_final: f64, t_lz: f64, warn: bool) -> Result<Self> {
        if !(phi_init < 0.0 && phi_final > 0.0) {
            return Err(Error::invalid(format!(
                "sweep must cross the symmetry point (phi_init={phi_init}, phi_final={phi_final})"
            )));
        }
        if !(t_lz > 0.0) || !t_lz.is_finite() {
            return Err(Error::invalid(format!("t_lz must be positive, got {t_lz} ns")));
        }
        let s = SweepSchedule { point, phi_init, phi_final, t_lz };
        let guard = s.epsilon_unchecked(0.0).abs().min(s.epsilon_unchecked(t_lz).abs());
        if guard < GUARD_REJECT * point.delta {
            return Err(Error::invalid(format!(
                "sweep endpoints |ε|={guard:.4} GHz are closer than {GUARD_REJECT}Δ to the anticrossing"
            )));
        }
        if warn && guard < GUARD_WARN * point.delta {
            log::warn!(
                "sweep endpoints |ε|={guard:.4} GHz are within {GUARD_WARN}Δ (Δ={} GHz); LZ asymptotics are approximate",
                point.delta
            );
        }
        Ok(s)
    }

    /// Symmetric sweep over [−span/2, +span/2].
    pub fn symmetric(point: OperatingPoint, span: f64, t_lz: f64) -> Result<Self> {
        Self::new(point, -0.5 * span, 0.5 * span, t_lz)
    }

    /// Same endpoints, new duration. The endpoint guard is not re-reported.
    pub fn with_duration(&self, t_lz: f64) -> Result<Self> {
        Self::build(self.point, self.phi_init, self.phi_final, t_lz, false)
    }

    fn epsilon_unchecked(&self, t: f64) -> f64 {
        let phi = self.phi_init + (self.phi_final - self.phi_init) * (t / self.t_lz);
        persistent_current_energy(self.point.i_p, phi)
    }

    /// ε(t)/h in GHz for 0 ≤ t ≤ t_lz.
    pub fn epsilon_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_lz).contains(&t) {
            return Err(Error::domain(format!("t={t} ns outside [0, {}]", self.t_lz)));
        }
        Ok(self.epsilon_unchecked(t))
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<Hermitian2x2> {
        Ok(Hermitian2x2::qubit(self.epsilon_at(t)?, self.point.delta))
    }

    /// Total change of ε over the sweep, in GHz.
    pub fn epsilon_span(&self) -> f64 {
        persistent_current_energy(self.point.i_p, self.phi_final - self.phi_init)
    }

    /// v = dε/dt in GHz/ns.
    pub fn sweep_velocity(&self) -> f64 {
        self.epsilon_span() / self.t_lz
    }

    /// τ = Δ²/ħv = 2π·Δ²/v with Δ in GHz and v in GHz/ns.
    pub fn dimensionless_time(&self) -> f64 {
        2.0 * PI * self.point.delta * self.point.delta / self.sweep_velocity()
    }

    /// Time at which ε(t) = 0.
    pub fn crossing_time(&self) -> f64 {
        self.t_lz * (-self.phi_init) / (self.phi_final - self.phi_init)
    }
}

impl BiasProtocol for SweepSchedule {
    fn point(&self) -> &OperatingPoint {
        &self.point
    }

    fn duration(&self) -> f64 {
        self.t_lz
    }

    fn epsilon(&self, t: f64) -> f64 {
        self.epsilon_unchecked(t)
    }

    fn max_abs_epsilon(&self) -> f64 {
        self.epsilon_unchecked(0.0).abs().max(self.epsilon_unchecked(self.t_lz).abs())
    }

    fn epsilon_integral(&self, t: f64) -> f64 {
        let e0 = self.epsilon_unchecked(0.0);
        t * (e0 + 0.5 * self.sweep_velocity() * t)
    }
}

/// Constant bias held for a fixed time; used for thermalization checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticBias {
    pub point: OperatingPoint,
    /// ε/h in GHz.
    pub epsilon: f64,
    pub duration: f64,
}

impl BiasProtocol for StaticBias {
    fn point(&self) -> &OperatingPoint {
        &self.point
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn epsilon(&self, _t: f64) -> f64 {
        self.epsilon
    }

    fn max_abs_epsilon(&self) -> f64 {
        self.epsilon.abs()
    }

    fn epsilon_integral(&self, t: f64) -> f64 {
        self.epsilon * t
    }
}

/// Sweep duration giving a target τ for the given endpoints.
pub fn t_lz_for_tau(point: OperatingPoint, phi_init: f64, phi_final: f64, tau: f64) -> f64 {
    let span = persistent_current_energy(point.i_p, phi_final - phi_init);
    let velocity = 2.0 * PI * point.delta * point.delta / tau;
    span / velocity
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(delta: f64, i_p: f64) -> OperatingPoint {
        OperatingPoint::new(0.5, delta, i_p).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        let s = SweepSchedule::new(pt(0.05, 0.125), -0.005, 0.005, 100.0).unwrap();
        assert!((s.epsilon_at(0.0).unwrap() + 3.9009).abs() < 1e-4);
        assert!(s.epsilon_at(50.0).unwrap().abs() < 1e-15);
        let a = SweepSchedule::new(pt(0.05, 0.125), -3.1e-3, 6.9e-3, 80.0).unwrap();
        assert!((a.epsilon_at(80.0).unwrap() - 5.3833).abs() < 1e-4);
        assert!(matches!(s.epsilon_at(100.1), Err(Error::Domain(_))));
        assert!(s.epsilon_at(-1e-9).is_err());
    }

    #[test]
    fn velocity_and_tau_examples() {
        let s = SweepSchedule::new(pt(0.05, 0.125), -0.005, 0.005, 100.0).unwrap();
        let v = s.sweep_velocity();
        assert!((v - 0.078019).abs() < 1e-6);
        assert!((v * s.t_lz - (s.epsilon_at(100.0).unwrap() - s.epsilon_at(0.0).unwrap())).abs() < 1e-12);
        assert!((s.dimensionless_time() - 0.20133).abs() < 1e-5);
        let slow = s.with_duration(200.0).unwrap();
        assert!((slow.sweep_velocity() - 0.5 * v).abs() < 1e-15);
        assert!((slow.dimensionless_time() - 2.0 * s.dimensionless_time()).abs() < 1e-12);
        let flat = SweepSchedule::new(pt(0.0, 0.125), -0.005, 0.005, 100.0).unwrap();
        assert_eq!(flat.dimensionless_time(), 0.0);
    }

    #[test]
    fn t_lz_for_tau_inverts_tau() {
        let p = pt(0.03, 0.11);
        let t = t_lz_for_tau(p, -0.004, 0.006, 2.5);
        let s = SweepSchedule::new(p, -0.004, 0.006, t).unwrap();
        assert!((s.dimensionless_time() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn schedule_validation() {
        assert!(SweepSchedule::new(pt(0.05, 0.1), 0.001, 0.005, 10.0).is_err());
        assert!(SweepSchedule::new(pt(0.05, 0.1), -0.005, 0.005, 0.0).is_err());
        // |ε| endpoints ≈ 0.31 GHz < 10Δ = 0.5 GHz.
        assert!(SweepSchedule::new(pt(0.05, 0.1), -0.0005, 0.0005, 10.0).is_err());
        assert!(OperatingPoint::new(0.0, -1.0, 0.1).is_err());
        assert!(OperatingPoint::new(0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let h = Hermitian2x2::qubit(1.3, 0.0);
        assert_eq!(h.eigenvalues(), [-0.65, 0.65]);
        let s = SweepSchedule::new(pt(0.07, 0.12), -0.005, 0.005, 40.0).unwrap();
        let h0 = s.hamiltonian_at(20.0).unwrap();
        assert!((h0.matrix().get(0, 1).re + 0.035).abs() < 1e-15);
        for &t in &[0.0, 3.0, 17.5, 20.0, 39.0] {
            let e = s.hamiltonian_at(t).unwrap().eigenvalues();
            let eps = s.epsilon_at(t).unwrap();
            assert!(((e[1] - e[0]) - eps.hypot(0.07)).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_is_affine() {
        let s = SweepSchedule::new(pt(0.02, 0.11), -0.004, 0.007, 333.0).unwrap();
        for k in 1..50 {
            let t = k as f64 * 6.0;
            let d2 = s.epsilon_at(t + 1.0).unwrap() - 2.0 * s.epsilon_at(t).unwrap()
                + s.epsilon_at(t - 1.0).unwrap();
            assert!(d2.abs() < 1e-12);
        }
    }

    #[test]
    fn gap_minimum_at_crossing() {
        let s = SweepSchedule::new(pt(0.04, 0.11), -0.003, 0.007, 100.0).unwrap();
        let tc = s.crossing_time();
        assert!(s.epsilon_at(tc).unwrap().abs() < 1e-12);
        assert!((s.gap(tc) - 0.04).abs() < 1e-12);
        for k in 0..=200 {
            let t = k as f64 * 0.5;
            assert!(s.gap(t) >= 0.04 - 1e-15);
            if (t - tc).abs() > 1e-6 {
                assert!(s.gap(t) > 0.04);
            }
        }
    }

    #[test]
    fn interpolation_examples() {
        let table = OperatingPointTable::new(vec![
            OperatingPoint::new(0.40, 0.012, 0.129).unwrap(),
            OperatingPoint::new(0.50, 0.120, 0.104).unwrap(),
        ])
        .unwrap();
        let mid = table.interpolate(0.45).unwrap();
        assert!((mid.delta - 0.037947).abs() < 1e-6);
        assert!((mid.i_p - 0.1165).abs() < 1e-12);
        assert_eq!(table.interpolate(0.5).unwrap(), table.points()[1]);
        assert!(matches!(table.interpolate(0.51), Err(Error::Range(_))));
    }

    #[test]
    fn default_table_matches_quoted_ranges() {
        let t = OperatingPointTable::default_synthetic();
        let p = t.points();
        assert_eq!(p.len(), 8);
        assert!((p[0].delta - 0.012).abs() < 1e-15 && (p[7].delta - 0.120).abs() < 1e-12);
        assert!((p[0].i_p - 0.129).abs() < 1e-15 && (p[7].i_p - 0.104).abs() < 1e-12);
        for node in p {
            assert_eq!(t.interpolate(node.phi_x).unwrap(), *node);
        }
    }

    #[test]
    fn table_rejects_non_monotone_gap() {
        let r = OperatingPointTable::new(vec![
            OperatingPoint::new(0.40, 0.05, 0.12).unwrap(),
            OperatingPoint::new(0.50, 0.04, 0.11).unwrap(),
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let t = OperatingPointTable::default_synthetic();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"phi_x,delta_GHz,ip_uA\n"));
        assert_eq!(OperatingPointTable::from_reader(&buf[..]).unwrap(), t);
        assert!(OperatingPointTable::from_reader(&b"phi,delta,ip\n1,2,3\n"[..]).is_err());
    }
}
