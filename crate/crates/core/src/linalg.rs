//! Closed-form 2×2 complex linear algebra.
//!
//! Every operator in the model acts on a single qubit, so a fixed-size matrix
//! type with hand-written products beats a general dense backend by a wide
//! margin inside the integrator loops.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([
            [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
            [Complex64::new(c, 0.0), Complex64::new(d, 0.0)],
        ])
    }

    pub fn sigma_x() -> Self {
        Self::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Mat2::new(ZERO, -Complex64::i(), Complex64::i(), ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    /// σ+ = |0⟩⟨1| in the σz eigenbasis (σz|0⟩ = +|0⟩).
    pub fn sigma_plus() -> Self {
        Self::real(0.0, 1.0, 0.0, 0.0)
    }

    /// σ− = |1⟩⟨0|.
    pub fn sigma_minus() -> Self {
        Self::real(0.0, 0.0, 1.0, 0.0)
    }

    /// |a⟩⟨b| for two column vectors.
    pub fn outer(a: [Complex64; 2], b: [Complex64; 2]) -> Self {
        Mat2([
            [a[0] * b[0].conj(), a[0] * b[1].conj()],
            [a[1] * b[0].conj(), a[1] * b[1].conj()],
        ])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Mat2) -> Self {
        *self * *other + *other * *self
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// ⟨a|M|b⟩.
    pub fn element(&self, a: [Complex64; 2], b: [Complex64; 2]) -> Complex64 {
        let mb = self.apply(b);
        a[0].conj() * mb[0] + a[1].conj() * mb[1]
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = *self - self.dagger();
        d.max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = 0.5 * (self.0[0][1] + self.0[1][0].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Packs the four complex entries into eight reals (re, im, row-major).
    pub fn to_real_array(&self) -> [f64; 8] {
        let m = &self.0;
        [
            m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re,
            m[1][1].im,
        ]
    }

    pub fn from_real_array(a: &[f64; 8]) -> Self {
        Mat2([
            [Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3])],
            [Complex64::new(a[4], a[5]), Complex64::new(a[6], a[7])],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// A 2×2 Hermitian matrix, the form of every Hamiltonian in the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian2x2(Mat2);

impl Hermitian2x2 {
    /// Wraps `m` after symmetrizing away rounding-level anti-Hermitian parts.
    /// Rejects matrices that are not Hermitian to 1e-14 relative.
    pub fn new(m: Mat2) -> crate::Result<Self> {
        let scale = m.max_abs().max(1.0);
        if m.hermiticity_error() > 1e-14 * scale {
            return Err(crate::Error::invalid(format!(
                "matrix is not Hermitian (deviation {:.3e})",
                m.hermiticity_error()
            )));
        }
        Ok(Hermitian2x2((m + m.dagger()).scale_re(0.5)))
    }

    /// −(ε/2)σz − (Δ/2)σx.
    pub fn qubit(epsilon: f64, delta: f64) -> Self {
        Hermitian2x2(Mat2::real(-0.5 * epsilon, -0.5 * delta, -0.5 * delta, 0.5 * epsilon))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        self.0.hermitian_eigenvalues()
    }

    /// Orthonormal eigenvectors for the ascending eigenvalues, gauge-fixed so
    /// the first non-negligible component of each is real and positive.
    pub fn eigenvectors(&self) -> [[Complex64; 2]; 2] {
        let m = &self.0 .0;
        let half_split = 0.5 * (m[0][0].re - m[1][1].re);
        let b = m[0][1];
        let theta = b.norm().atan2(half_split);
        let phase = if b.norm() > 0.0 { b / b.norm() } else { ONE };
        let (s, c) = (0.5 * theta).sin_cos();
        // Upper: (cos θ/2, e^{-iφ} sin θ/2); lower: (−e^{iφ} sin θ/2, cos θ/2).
        let upper = [Complex64::new(c, 0.0), phase.conj() * s];
        let lower = [-phase * s, Complex64::new(c, 0.0)];
        [fix_gauge(lower), fix_gauge(upper)]
    }
}

/// Multiplies `v` by a global phase so its first non-negligible component is
/// real and positive.
pub fn fix_gauge(v: [Complex64; 2]) -> [Complex64; 2] {
    let pivot = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    let n = pivot.norm();
    if n == 0.0 {
        return v;
    }
    let rot = pivot.conj() / n;
    [v[0] * rot, v[1] * rot]
}
