//! Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
    /// (x0, h) when the nodes are equally spaced, for O(1) lookup.
    uniform: Option<(f64, f64)>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid(format!("interpolant needs ≥ 2 matching nodes, got {} and {}", n, y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("interpolation nodes must be strictly increasing with finite values"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for k in 1..n - 1 {
                let (d0, d1) = (delta[k - 1], delta[k]);
                if d0 * d1 > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        let span = x[n - 1] - x[0];
        let step = span / (n - 1) as f64;
        let uniform = h
            .iter()
            .all(|&hk| (hk - step).abs() <= 1e-9 * step)
            .then_some((x[0], step));
        Ok(Pchip { x, y, slopes, uniform })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    /// Interpolated value, or `None` outside the node range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let last = self.x.len() - 2;
        let k = match self.uniform {
            Some((x0, step)) => {
                let mut k = (((t - x0) / step) as usize).min(last);
                // Guard against rounding in the index estimate.
                while k > 0 && t < self.x[k] {
                    k -= 1;
                }
                while k < last && t > self.x[k + 1] {
                    k += 1;
                }
                k
            }
            None => (self.x.partition_point(|&v| v <= t).max(1) - 1).min(last),
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1])
    }
}

/// Shape-preserving three-point end slope.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_cubics_closely() {
        let x: Vec<f64> = (0..=200).map(|k| -1.0 + 0.01 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (-v * v * 3.0).exp()).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(p.eval(*xi).unwrap(), *yi);
        }
        for k in 0..199 {
            let t = -0.995 + 0.01 * k as f64;
            assert!((p.eval(t).unwrap() - (-t * t * 3.0).exp()).abs() < 2e-5);
        }
        assert!(p.eval(1.0001).is_none());
        assert!(p.eval(f64::NAN).is_none());
    }

    #[test]
    fn monotone_data_gives_monotone_interpolant() {
        let x = vec![0.0, 1.0, 1.5, 4.0, 4.1, 7.0];
        let y = vec![0.0, 0.0, 1.0, 1.1, 5.0, 5.0];
        let p = Pchip::new(x, y).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=700 {
            let v = p.eval(k as f64 * 0.01).unwrap();
            assert!(v >= prev - 1e-15);
            assert!((-1e-15..=5.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
