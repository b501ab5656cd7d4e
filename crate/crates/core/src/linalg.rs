//! Fixed-size 2x2 matrix arithmetic used by the paired compatibility updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    pub fn scaled_identity(s: f64) -> Self {
        Mat2::diag(s, s)
    }

    /// `v v^T`.
    pub fn outer(v: [f64; 2]) -> Self {
        Mat2([[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn add(&self, other: &Mat2) -> Self {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] += other.0[r][c];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat2) -> Self {
        let a = &self.0;
        let b = &other.0;
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

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if !det.is_finite() || det == 0.0 {
            return Err(Error::Numeric(format!("singular 2x2 matrix {:?}", self.0)));
        }
        Ok(Mat2([
            [self.0[1][1] / det, -self.0[0][1] / det],
            [-self.0[1][0] / det, self.0[0][0] / det],
        ]))
    }

    /// Replaces the off-diagonal pair with its average.
    pub fn symmetrized(&self) -> Self {
        let off = 0.5 * (self.0[0][1] + self.0[1][0]);
        Mat2([[self.0[0][0], off], [off, self.0[1][1]]])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol * (1.0 + self.0[0][1].abs())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn is_spd(&self) -> bool {
        self.is_finite() && self.is_symmetric(1e-9) && self.0[0][0] > 0.0 && self.det() > 0.0
    }

    /// Lower Cholesky factor `L` with `L L^T = self`.
    pub fn cholesky(&self) -> Result<Mat2> {
        let a = self.0[0][0];
        if !(a > 0.0) || !self.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite: {:?}",
                self.0
            )));
        }
        let l00 = a.sqrt();
        let l10 = self.0[1][0] / l00;
        let rem = self.0[1][1] - l10 * l10;
        if !(rem > 0.0) {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite: {:?}",
                self.0
            )));
        }
        Ok(Mat2([[l00, 0.0], [l10, rem.sqrt()]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trips() {
        let m = Mat2::new(2.0, 0.3, 0.3, 1.5);
        let p = m.mul(&m.inverse().unwrap());
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((p.get(r, c) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Mat2::new(4.0, 1.2, 1.2, 2.0);
        let l = m.cholesky().unwrap();
        let back = l.mul(&l.transpose());
        for r in 0..2 {
            for c in 0..2 {
                assert!((back.get(r, c) - m.get(r, c)).abs() < 1e-14);
            }
        }
        assert!(Mat2::new(1.0, 2.0, 2.0, 1.0).cholesky().is_err());
    }

    #[test]
    fn singular_inverse_is_an_error() {
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_err());
    }
}
