//! Full conditionals of the Gibbs sampler. Each function updates one block
//! of `SamplerState` in place and keeps the count caches coherent.

use crate::dist::{sample_categorical, sample_inverse_wishart2, sample_log_categorical, sample_mvn2, sample_normal};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{edge_loglik, logit_unchecked};
use crate::partition::EntityFrame;

use super::state::SamplerState;

/// Gaussian posterior of an off-diagonal pair given PG auxiliaries.
///
/// Returns `(mean, cov)` with `cov = (diag(omega) + prior_cov^-1)^-1` and
/// `mean = cov (kappa + prior_cov^-1 prior_mean)`.
pub fn pair_posterior(
    omega: [f64; 2],
    kappa: [f64; 2],
    prior_mean: [f64; 2],
    prior_cov: &Mat2,
) -> Result<([f64; 2], Mat2)> {
    let prior_prec = prior_cov.inverse()?;
    let prec = Mat2::diag(omega[0], omega[1]).add(&prior_prec);
    let cov = prec
        .inverse()
        .map_err(|e| Error::Numeric(format!("pair posterior precision is singular ({e}); check the inverse-Wishart hyperparameters")))?
        .symmetrized();
    let pm = prior_prec.mul_vec(prior_mean);
    let mean = cov.mul_vec([kappa[0] + pm[0], kappa[1] + pm[1]]);
    Ok((mean, cov))
}

/// Gaussian posterior `(mean, var)` of a scalar logit component with prior
/// `N(prior_mean, prior_var)` and PG-augmented terms `(omega, kappa, offset)`,
/// each contributing `exp(kappa psi - omega psi^2 / 2)` with
/// `psi = value + offset`.
pub fn scalar_posterior(prior_mean: f64, prior_var: f64, terms: &[(f64, f64, f64)]) -> (f64, f64) {
    let mut prec = 1.0 / prior_var;
    let mut lin = prior_mean / prior_var;
    for &(omega, kappa, offset) in terms {
        prec += omega;
        lin += kappa - omega * offset;
    }
    (lin / prec, 1.0 / prec)
}

#[inline]
fn kappa(n: u64, n1: u64) -> f64 {
    n1 as f64 - 0.5 * n as f64
}

/// Updates `(B[l][k], B[k][l])` and their PG auxiliaries, `l != k`.
pub fn sample_offdiag_pair(state: &mut SamplerState, l: usize, k: usize) -> Result<()> {
    if l == k || l >= state.n_groups() || k >= state.n_groups() {
        return Err(Error::Dimension(format!("({l}, {k}) is not an off-diagonal pair")));
    }
    let (a, b) = if l < k { (l, k) } else { (k, l) };
    let kk = state.n_groups();
    let (n_ab, n1_ab) = state.counts.within(a, b);
    let (n_ba, n1_ba) = state.counts.within(b, a);
    let pg = state.options().pg;
    let w_ab = pg.sample(&mut state.rng, n_ab, state.compat.b(a, b));
    let w_ba = pg.sample(&mut state.rng, n_ba, state.compat.b(b, a));
    state.pg_aux.offdiag[a * kk + b] = w_ab;
    state.pg_aux.offdiag[b * kk + a] = w_ba;
    let (mean, cov) = pair_posterior(
        [w_ab, w_ba],
        [kappa(n_ab, n1_ab), kappa(n_ba, n1_ba)],
        state.hyper().mu_kl,
        state.compat.sigma(a, b),
    )?;
    let draw = sample_mvn2(&mut state.rng, mean, &cov)?;
    state.compat.set_b(a, b, draw[0]);
    state.compat.set_b(b, a, draw[1]);
    Ok(())
}

/// Updates `B[k][k]` with `Q[k]` as a fixed offset on across-community
/// slots, then `Q[k]` with the new `B[k][k]` as offset.
pub fn sample_diag_and_adjust(state: &mut SamplerState, k: usize) -> Result<()> {
    if k >= state.n_groups() {
        return Err(Error::Dimension(format!("group {k} outside [0, {})", state.n_groups())));
    }
    let (n_w, n1_w) = state.counts.within(k, k);
    let (n_c, n1_c) = state.counts.cross(k);
    let pg = state.options().pg;
    let (mu_b, var_b, mu_q, var_q) = {
        let h = state.hyper();
        (h.mu_b, h.sigma_b, h.mu_q, h.sigma_q)
    };

    let b = state.compat.b(k, k);
    let q = state.compat.q(k);
    let w_w = pg.sample(&mut state.rng, n_w, b);
    let w_c = pg.sample(&mut state.rng, n_c, b + q);
    let (m, v) = scalar_posterior(
        mu_b,
        var_b,
        &[(w_w, kappa(n_w, n1_w), 0.0), (w_c, kappa(n_c, n1_c), q)],
    );
    let b = sample_normal(&mut state.rng, m, v);
    state.compat.set_b(k, k, b);

    let w_c = pg.sample(&mut state.rng, n_c, b + q);
    let (m, v) = scalar_posterior(mu_q, var_q, &[(w_c, kappa(n_c, n1_c), b)]);
    let q = sample_normal(&mut state.rng, m, v);
    state.compat.set_q(k, q);

    state.pg_aux.within[k] = w_w;
    state.pg_aux.cross[k] = w_c;
    if !(b.is_finite() && q.is_finite()) {
        return Err(Error::Numeric(format!("non-finite draw for group {k}: B={b}, Q={q}")));
    }
    Ok(())
}

/// Updates the covariance of the pair `(B[l][k], B[k][l])`.
pub fn sample_sigma_pair(state: &mut SamplerState, l: usize, k: usize) -> Result<()> {
    if l == k || l >= state.n_groups() || k >= state.n_groups() {
        return Err(Error::Dimension(format!("({l}, {k}) is not an off-diagonal pair")));
    }
    let (a, b) = if l < k { (l, k) } else { (k, l) };
    let mu = state.hyper().mu_kl;
    let d = [state.compat.b(a, b) - mu[0], state.compat.b(b, a) - mu[1]];
    let scale = state.hyper().iw_scale.add(&Mat2::outer(d)).symmetrized();
    let dof = state.hyper().iw_dof + 1.0;
    let sigma = sample_inverse_wishart2(&mut state.rng, dof, &scale)?;
    state.compat.set_sigma(a, b, sigma);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Send,
    Recv,
}

/// Unnormalised log probabilities of each group for one indicator, with
/// that indicator's own contribution already removed from the counts.
pub fn group_log_weights(state: &SamplerState, t: usize, i: usize, j: usize, dir: Direction) -> Vec<f64> {
    let net = state.network();
    let x = net.edge(t, i, j);
    let same = state.chain.same_community(t, i, j);
    let hyper = state.hyper();
    let (owner, other_group) = match dir {
        Direction::Send => (i, state.groups.recv(t, i, j)),
        Direction::Recv => (j, state.groups.send(t, i, j)),
    };
    (0..state.n_groups())
        .map(|g| {
            let y = match dir {
                Direction::Send => logit_unchecked(same, g, other_group, &state.compat, hyper.epsilon),
                Direction::Recv => logit_unchecked(same, other_group, g, &state.compat, hyper.epsilon),
            };
            let usage = state.counts.usage(t, owner, g) as f64;
            edge_loglik(x, y) + (usage + hyper.alpha[g]).ln()
        })
        .collect()
}

/// Resamples one group indicator of a modelled slot from its collapsed
/// conditional.
pub fn sample_group_indicator(state: &mut SamplerState, t: usize, i: usize, j: usize, dir: Direction) -> Result<usize> {
    if !state.network().is_modelled(t, i, j) {
        return Err(Error::Parameter(format!("slot ({t}, {i}, {j}) is not a likelihood slot")));
    }
    let x = state.network().edge(t, i, j);
    let idx = state.groups.index(t, i, j);
    let old_cell = state.slot_cell(t, i, j);
    state.counts.remove_cell(old_cell, x);
    match dir {
        Direction::Send => *state.counts.send_mut(t, i, state.groups.send[idx] as usize) -= 1,
        Direction::Recv => *state.counts.recv_mut(t, j, state.groups.recv[idx] as usize) -= 1,
    }
    let w = group_log_weights(state, t, i, j, dir);
    let g = sample_log_categorical(&mut state.rng, &w);
    match dir {
        Direction::Send => {
            state.groups.send[idx] = g as u32;
            *state.counts.send_mut(t, i, g) += 1;
        }
        Direction::Recv => {
            state.groups.recv[idx] = g as u32;
            *state.counts.recv_mut(t, j, g) += 1;
        }
    }
    let new_cell = state.slot_cell(t, i, j);
    state.counts.add_cell(new_cell, x);
    Ok(g)
}

/// Visits every likelihood slot touching entity `i` at slice `t` as
/// `(sender, receiver)`; the self loop, if modelled, is skipped.
fn for_each_partner_slot(state: &SamplerState, t: usize, i: usize, mut f: impl FnMut(usize, usize, usize)) {
    let net = state.network();
    for j in 0..net.n_entities() {
        if j == i {
            continue;
        }
        if net.is_modelled(t, i, j) {
            f(i, j, j);
        }
        if net.is_modelled(t, j, i) {
            f(j, i, j);
        }
    }
}

/// Log emission weight of entity `i` at slice `t` for every coarse state of
/// `frame` (existing communities, then "new").
pub fn emission_log_weights(state: &SamplerState, frame: &EntityFrame, t: usize) -> Vec<f64> {
    let n_states = frame.n_coarse(t) + 1;
    let coarse = state.chain.coarse(t);
    let mut state_of_label = vec![usize::MAX; coarse.n_blocks()];
    for (s, &l) in frame.coarse_labels(t).iter().enumerate() {
        state_of_label[l] = s;
    }
    let eps = state.hyper().epsilon;
    let mut base = 0.0;
    let mut delta = vec![0.0; n_states];
    for_each_partner_slot(state, t, frame.entity(), |s, r, partner| {
        let x = state.network().edge(t, s, r);
        let (l, k) = (state.groups.send(t, s, r), state.groups.recv(t, s, r));
        let ll_diff = edge_loglik(x, logit_unchecked(false, l, k, &state.compat, eps));
        let ll_same = edge_loglik(x, logit_unchecked(true, l, k, &state.compat, eps));
        base += ll_diff;
        delta[state_of_label[coarse.label(partner)]] += ll_same - ll_diff;
    });
    delta.iter().map(|d| base + d).collect()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numeric(format!("forward message has mass {s}")));
    }
    for x in v.iter_mut() {
        *x /= s;
    }
    Ok(())
}

fn exp_shifted(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logw.iter().map(|&l| (l - max).exp()).collect()
}

/// Redraws entity `i`'s whole community sequence (coarse and fine states)
/// by forward filtering, backward sampling.
pub fn sample_community_chain(state: &mut SamplerState, i: usize) -> Result<()> {
    let n = state.network().n_entities();
    if i >= n {
        return Err(Error::Dimension(format!("entity {i} outside [0, {n})")));
    }
    let (zeta, eta) = (state.hyper().zeta, state.hyper().eta);
    let t_slices = state.chain.n_slices();
    let frame = EntityFrame::new(&state.chain, i);

    // forward pass: alpha over coarse states, beta over fine states
    let mut alphas: Vec<Vec<f64>> = Vec::with_capacity(t_slices);
    let mut betas: Vec<Vec<f64>> = Vec::with_capacity(t_slices - 1);
    let emit0 = exp_shifted(&emission_log_weights(state, &frame, 0));
    let mut a0: Vec<f64> = frame.init_row(zeta).iter().zip(&emit0).map(|(p, e)| p * e).collect();
    normalize(&mut a0)?;
    alphas.push(a0);
    for t in 0..t_slices - 1 {
        let prev = &alphas[t];
        let mut beta = vec![0.0; frame.n_fine(t) + 1];
        for (c, &pc) in prev.iter().enumerate() {
            if pc == 0.0 {
                continue;
            }
            for (f, p) in frame.frag_row(t, c, zeta).iter().enumerate() {
                beta[f] += pc * p;
            }
        }
        normalize(&mut beta)?;
        let emit = exp_shifted(&emission_log_weights(state, &frame, t + 1));
        let mut alpha = vec![0.0; frame.n_coarse(t + 1) + 1];
        for (f, &pf) in beta.iter().enumerate() {
            if pf == 0.0 {
                continue;
            }
            for (c, p) in frame.coal_row(t, f, eta).iter().enumerate() {
                alpha[c] += pf * p;
            }
        }
        for (a, e) in alpha.iter_mut().zip(&emit) {
            *a *= e;
        }
        normalize(&mut alpha)?;
        betas.push(beta);
        alphas.push(alpha);
    }

    // backward sampling
    let mut coarse = vec![0usize; t_slices];
    let mut fine = vec![0usize; t_slices - 1];
    coarse[t_slices - 1] = sample_categorical(&mut state.rng, &alphas[t_slices - 1]);
    for t in (0..t_slices - 1).rev() {
        let w: Vec<f64> = betas[t]
            .iter()
            .enumerate()
            .map(|(f, &pf)| if pf == 0.0 { 0.0 } else { pf * frame.coal_row(t, f, eta)[coarse[t + 1]] })
            .collect();
        if !w.iter().any(|&v| v > 0.0) {
            return Err(Error::Numeric(format!("no fine state of entity {i} reaches its next community")));
        }
        fine[t] = sample_categorical(&mut state.rng, &w);
        let w: Vec<f64> = alphas[t]
            .iter()
            .enumerate()
            .map(|(c, &pc)| if pc == 0.0 { 0.0 } else { pc * frame.frag_row(t, c, zeta)[fine[t]] })
            .collect();
        if !w.iter().any(|&v| v > 0.0) {
            return Err(Error::Numeric(format!("no community of entity {i} fragments into its fine state")));
        }
        coarse[t] = sample_categorical(&mut state.rng, &w);
    }

    // swap the entity's slots between count cells
    let mut touched: Vec<(usize, usize, usize)> = Vec::new();
    for t in 0..t_slices {
        for_each_partner_slot(state, t, i, |s, r, _| touched.push((t, s, r)));
    }
    for &(t, s, r) in &touched {
        let cell = state.slot_cell(t, s, r);
        let x = state.network().edge(t, s, r);
        state.counts.remove_cell(cell, x);
    }
    frame.apply(&mut state.chain, &coarse, &fine);
    for &(t, s, r) in &touched {
        let cell = state.slot_cell(t, s, r);
        let x = state.network().edge(t, s, r);
        state.counts.add_cell(cell, x);
    }
    debug_assert!(state.chain.is_valid());
    Ok(())
}
