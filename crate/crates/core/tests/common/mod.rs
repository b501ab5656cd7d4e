#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use fcmmsb_core::gibbs::{Mode, SamplerOptions, UpdateMask};
use fcmmsb_core::model::edge_loglik;
use fcmmsb_core::TemporalNetwork;

/// Total variation distance between two probability tables.
pub fn tv<K: Eq + Hash + Clone>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut keys: Vec<&K> = p.keys().collect();
    keys.extend(q.keys().filter(|k| !p.contains_key(k)));
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

pub fn empirical<K: Eq + Hash + Clone>(draws: &[K]) -> HashMap<K, f64> {
    let mut m = HashMap::new();
    for d in draws {
        *m.entry(d.clone()).or_insert(0.0) += 1.0;
    }
    let n = draws.len() as f64;
    m.values_mut().for_each(|v| *v /= n);
    m
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Standard error of the mean of a correlated series by batch means.
pub fn batch_se(xs: &[f64], n_batches: usize) -> f64 {
    let size = xs.len() / n_batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    mean_sd(&means).1 / (means.len() as f64).sqrt()
}

/// Posterior moments `(mean_x, sd_x, mean_y, sd_y)` of a 2-d log density by
/// midpoint quadrature on `[lo, hi]^2`.
pub fn quad2(logf: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64, f64, f64) {
    let h = (hi - lo) / n as f64;
    let pts: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let mut logs = Vec::with_capacity(n * n);
    for &x in &pts {
        for &y in &pts {
            logs.push(logf(x, y));
        }
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut sx, mut sxx, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, &x) in pts.iter().enumerate() {
        for (b, &y) in pts.iter().enumerate() {
            let w = (logs[a * n + b] - mx).exp();
            z += w;
            sx += w * x;
            sxx += w * x * x;
            sy += w * y;
            syy += w * y * y;
        }
    }
    let (ex, ey) = (sx / z, sy / z);
    (ex, (sxx / z - ex * ex).sqrt(), ey, (syy / z - ey * ey).sqrt())
}

pub fn normal_log(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (x - mean).powi(2) / var
}

/// Bernoulli-logit log likelihood of `n1` successes out of `n` at logit `y`.
pub fn binomial_logit(n: u64, n1: u64, y: f64) -> f64 {
    n1 as f64 * edge_loglik(1, y) + (n - n1) as f64 * edge_loglik(0, y)
}

/// Directed network without self loops holding the listed links.
pub fn directed_network(n: usize, t_slices: usize, links: &[(usize, usize, usize)]) -> TemporalNetwork {
    let mut net = TemporalNetwork::new(n, t_slices, true, false).unwrap();
    for &(t, i, j) in links {
        net.set_edge(t, i, j, true).unwrap();
    }
    net
}

/// Sampler options running only the given updates.
pub fn only(updates: UpdateMask) -> SamplerOptions {
    SamplerOptions {
        mode: Mode::Fc,
        updates,
        ..Default::default()
    }
}

pub fn mask(offdiag: bool, diag: bool, sigma: bool, groups: bool, chains: bool) -> UpdateMask {
    UpdateMask {
        offdiag,
        diag,
        sigma,
        groups,
        chains,
    }
}
