use crate::model::{logit_unchecked, sigmoid};

use super::state::SamplerState;

/// Smoothed membership estimate of entity `i` at slice `t` from its sender
/// counts: `(n_send + alpha) / sum(n_send + alpha)`.
pub fn theta_hat(state: &SamplerState, t: usize, i: usize) -> Vec<f64> {
    let alpha = &state.hyper().alpha;
    let c = state.counts();
    let raw: Vec<f64> = alpha
        .iter()
        .enumerate()
        .map(|(k, &a)| c.send(t, i, k) as f64 + a)
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Link probability for `(t, i, j)` under the current state:
/// `theta_i^T Bbar theta_j`, where `Bbar` holds the sigmoid of the logit each
/// group pair would take given the pair's current community relation.
pub fn predict_link(state: &SamplerState, t: usize, i: usize, j: usize) -> f64 {
    let ti = theta_hat(state, t, i);
    let tj = theta_hat(state, t, j);
    predict_with_thetas(state, t, i, j, &ti, &tj)
}

pub(crate) fn predict_with_thetas(
    state: &SamplerState,
    t: usize,
    i: usize,
    j: usize,
    ti: &[f64],
    tj: &[f64],
) -> f64 {
    let same = state.chain().same_community(t, i, j);
    let eps = state.hyper().epsilon;
    let compat = state.compat();
    let mut p = 0.0;
    for (l, &a) in ti.iter().enumerate() {
        for (k, &b) in tj.iter().enumerate() {
            p += a * b * sigmoid(logit_unchecked(same, l, k, compat, eps));
        }
    }
    p
}

/// Activeness `theta_i^T B 1` on the logit-scale compatibility matrix.
pub fn activeness(state: &SamplerState, t: usize, i: usize) -> f64 {
    let theta = theta_hat(state, t, i);
    let compat = state.compat();
    let k = state.n_groups();
    theta
        .iter()
        .enumerate()
        .map(|(l, &w)| w * (0..k).map(|m| compat.b(l, m)).sum::<f64>())
        .sum()
}

/// Link probabilities for every slot, laid out `(t, i, j)`; ineligible
/// diagonal slots are `NaN`.
pub fn predict_all(state: &SamplerState) -> Vec<f64> {
    let net = state.network();
    let (n, t_slices) = (net.n_entities(), net.n_slices());
    let mut out = vec![f64::NAN; t_slices * n * n];
    for t in 0..t_slices {
        let thetas: Vec<Vec<f64>> = (0..n).map(|i| theta_hat(state, t, i)).collect();
        for i in 0..n {
            for j in 0..n {
                if net.is_eligible(i, j) {
                    out[net.index(t, i, j)] =
                        predict_with_thetas(state, t, i, j, &thetas[i], &thetas[j]);
                }
            }
        }
    }
    out
}
