//! Pólya-Gamma random variates.
//!
//! `PG(1, c)` is drawn exactly with the alternating-series accept/reject
//! scheme for the Jacobi `J*` distribution (an exponential tail proposal
//! spliced onto a truncated inverse-Gaussian at `t = 0.64`). `PG(b, c)` for
//! integer `b` is the sum of `b` such draws; an optional moment-matched
//! Gaussian can replace the sum for large `b`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::dist::standard_normal;
use crate::error::{Error, Result};

/// Largest tilt magnitude used by the samplers.
pub const MAX_TILT: f64 = 1e4;

const TRUNC: f64 = 0.64;
const PI_SQ: f64 = PI * PI;

/// Shape `b` and tilt `c` of `PG(b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgParams {
    pub shape: u64,
    pub tilt: f64,
}

impl PgParams {
    pub fn new(shape: u64, tilt: f64) -> Result<Self> {
        if !tilt.is_finite() {
            return Err(Error::Numeric(format!("PG tilt must be finite, got {tilt}")));
        }
        Ok(PgParams { shape, tilt })
    }
}

/// Sampling strategy for `PG(b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PgSampler {
    /// Use a moment-matched Gaussian when `b` exceeds this value.
    /// `None` (the default) keeps every draw exact.
    pub gaussian_above: Option<u64>,
}

impl PgSampler {
    pub const EXACT: PgSampler = PgSampler {
        gaussian_above: None,
    };

    pub fn with_gaussian_above(threshold: u64) -> Self {
        PgSampler {
            gaussian_above: Some(threshold),
        }
    }

    /// Draws from `PG(shape, tilt)`. A zero shape returns the point mass at 0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, shape: u64, tilt: f64) -> f64 {
        if shape == 0 {
            return 0.0;
        }
        let c = tilt.abs().min(MAX_TILT);
        match self.gaussian_above {
            Some(threshold) if shape > threshold => {
                let params = PgParams { shape, tilt: c };
                let mean = pg_mean(params);
                let sd = pg_variance(params).sqrt();
                loop {
                    let x = mean + sd * standard_normal(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            _ => (0..shape).map(|_| sample_pg1(rng, c)).sum(),
        }
    }
}

/// Exact draw from `PG(b, c)`.
pub fn sample_pg<R: Rng + ?Sized>(rng: &mut R, params: PgParams) -> f64 {
    PgSampler::EXACT.sample(rng, params.shape, params.tilt)
}

/// `E[PG(b, c)] = b / (2c) tanh(c / 2)`, with limit `b / 4` at `c = 0`.
pub fn pg_mean(params: PgParams) -> f64 {
    let b = params.shape as f64;
    let c = params.tilt.abs();
    if c < 1e-4 {
        b * (0.25 - c * c / 48.0)
    } else {
        b / (2.0 * c) * (0.5 * c).tanh()
    }
}

/// `Var[PG(b, c)] = b / (4c^3) (sinh c - c) sech^2(c / 2)`, with limit
/// `b / 24` at `c = 0`.
pub fn pg_variance(params: PgParams) -> f64 {
    let b = params.shape as f64;
    let c = params.tilt.abs();
    if c < 1e-3 {
        b * (1.0 / 24.0 - c * c / 120.0)
    } else {
        // sinh(c) sech^2(c/2) = 2 tanh(c/2) avoids overflow for large c
        let th = (0.5 * c).tanh();
        b / (4.0 * c * c * c) * (2.0 * th - c * (1.0 - th * th))
    }
}

/// `ln Phi(x)` for the standard normal CDF, accurate far into the left tail.
fn ln_norm_cdf(x: f64) -> f64 {
    if x > -20.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series.
        let z2 = 1.0 / (x * x);
        let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2 * z2 * z2 * z2;
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Probability that the exponential (right) proposal is used for
/// `J*(1, z)`.
fn mass_texpon(z: f64) -> f64 {
    let t = TRUNC;
    let fz = PI_SQ / 8.0 + 0.5 * z * z;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + ln_norm_cdf(b);
    let xa = x0 + z + ln_norm_cdf(a);
    let qdivp = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + qdivp)
}

/// Inverse-Gaussian with mean `1/z`, shape 1, truncated to `(0, t)`.
fn rtigauss<R: Rng + ?Sized>(rng: &mut R, z: f64) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // mean beyond the truncation point: propose from the z = 0 case
        loop {
            let x = loop {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                if e1 * e1 <= 2.0 * e2 / t {
                    let d = 1.0 + e1 * t;
                    break t / (d * d);
                }
            };
            let alpha = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let y = standard_normal(rng);
            let mu_y = mu * y * y;
            let half_mu = 0.5 * mu;
            let mut x = mu + half_mu * mu_y - half_mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// n-th coefficient of the alternating series for the `J*` density.
#[inline]
fn series_coef(n: u32, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let h = n as f64 + 0.5;
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}

/// Exact `PG(1, c)` draw for `c >= 0`.
fn sample_pg1<R: Rng + ?Sized>(rng: &mut R, c: f64) -> f64 {
    // PG(1, c) = J*(1, c/2) / 4
    let z = 0.5 * c;
    let fz = PI_SQ / 8.0 + 0.5 * z * z;
    let p_exp = mass_texpon(z);
    loop {
        let x = if rng.random::<f64>() < p_exp {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / fz
        } else {
            rtigauss(rng, z)
        };
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0u32;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}
