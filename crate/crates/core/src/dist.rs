//! Random variate helpers and log densities shared by the simulator and the
//! Gibbs conditionals.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma as statrs_ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Mat2;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs_ln_gamma(x)
}

/// Draws an index with probability proportional to `weights`.
///
/// Weights must be non-negative with a positive, finite sum.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0 && total.is_finite(), "bad weights {weights:?}");
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (idx, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return idx;
            }
            u -= w;
            last = idx;
        }
    }
    last
}

/// Like [`sample_categorical`] with log-scale weights.
pub fn sample_log_categorical<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> usize {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max > f64::NEG_INFINITY);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    sample_categorical(rng, &w)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `N(mean, var)`, variance parameterisation.
#[inline]
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64) -> f64 {
    mean + var.sqrt() * standard_normal(rng)
}

pub fn sample_mvn2<R: Rng + ?Sized>(rng: &mut R, mean: [f64; 2], cov: &Mat2) -> Result<[f64; 2]> {
    let l = cov.cholesky()?;
    let z = [standard_normal(rng), standard_normal(rng)];
    let d = l.mul_vec(z);
    Ok([mean[0] + d[0], mean[1] + d[1]])
}

/// `log G` for `G ~ Gamma(shape, 1)`, stable for small shapes.
pub fn sample_log_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0)
            .expect("shape checked positive")
            .sample(rng);
        g.ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .expect("shape checked positive")
            .sample(rng);
        let u: f64 = rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = alpha.iter().map(|&a| sample_log_gamma(rng, a)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    w
}

/// Chi-square with `dof` degrees of freedom (any positive real).
fn sample_chi_square<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    let g: f64 = Gamma::new(0.5 * dof, 2.0)
        .expect("dof checked positive")
        .sample(rng);
    g
}

/// Inverse-Wishart draw for 2x2 matrices via the Bartlett decomposition of
/// the Wishart precision: `W = L A A^T L^T`, `L L^T = scale^{-1}`.
pub fn sample_inverse_wishart2<R: Rng + ?Sized>(rng: &mut R, dof: f64, scale: &Mat2) -> Result<Mat2> {
    if !(dof > 1.0) {
        return Err(Error::Parameter(format!(
            "inverse-Wishart dof must exceed 1, got {dof}"
        )));
    }
    let l = scale.inverse()?.symmetrized().cholesky()?;
    let a = Mat2::new(
        sample_chi_square(rng, dof).sqrt(),
        0.0,
        standard_normal(rng),
        sample_chi_square(rng, dof - 1.0).sqrt(),
    );
    let la = l.mul(&a);
    let precision = la.mul(&la.transpose());
    let sigma = precision.inverse()?.symmetrized();
    if !sigma.is_spd() {
        return Err(Error::Numeric(format!(
            "inverse-Wishart draw is not positive definite: {:?}",
            sigma.0
        )));
    }
    Ok(sigma)
}

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI * var).ln() + d * d / var)
}

pub fn mvn2_logpdf(x: [f64; 2], mean: [f64; 2], cov: &Mat2) -> Result<f64> {
    let inv = cov.inverse()?;
    let d = [x[0] - mean[0], x[1] - mean[1]];
    let m = inv.mul_vec(d);
    let quad = d[0] * m[0] + d[1] * m[1];
    Ok(-0.5 * (2.0 * (2.0 * PI).ln() + cov.det().ln() + quad))
}

/// Log density of a 2x2 inverse-Wishart.
pub fn inverse_wishart2_logpdf(sigma: &Mat2, dof: f64, scale: &Mat2) -> Result<f64> {
    let p = 2.0;
    let log_mv_gamma = 0.5 * PI.ln() + ln_gamma(0.5 * dof) + ln_gamma(0.5 * dof - 0.5);
    let inv = sigma.inverse()?;
    Ok(0.5 * dof * scale.det().ln()
        - 0.5 * dof * p * std::f64::consts::LN_2
        - log_mv_gamma
        - 0.5 * (dof + p + 1.0) * sigma.det().ln()
        - 0.5 * scale.mul(&inv).trace())
}
