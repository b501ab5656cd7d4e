use crate::dist::{inverse_wishart2_logpdf, ln_gamma, mvn2_logpdf, normal_logpdf};
use crate::error::Result;
use crate::model::edge_loglik;
use crate::partition::chain_log_prior;

use super::conditionals::{
    sample_community_chain, sample_diag_and_adjust, sample_group_indicator, sample_offdiag_pair,
    sample_sigma_pair, Direction,
};
use super::state::{Mode, SamplerState};

/// One full Gibbs pass, in a fixed order:
///
/// 1. off-diagonal pairs `(B[l][k], B[k][l])`, `l < k`
/// 2. `B[k][k]` then `Q[k]`, per group
/// 3. pair covariances
/// 4. group indicators, row-major over likelihood slots, sender then receiver
/// 5. community chains, ascending entity index
pub fn gibbs_sweep(state: &mut SamplerState) -> Result<()> {
    let k = state.n_groups();
    let updates = state.options().effective_updates();
    if updates.offdiag {
        for l in 0..k {
            for m in (l + 1)..k {
                sample_offdiag_pair(state, l, m)?;
            }
        }
    }
    if updates.diag {
        for l in 0..k {
            sample_diag_and_adjust(state, l)?;
        }
    }
    if updates.sigma {
        for l in 0..k {
            for m in (l + 1)..k {
                sample_sigma_pair(state, l, m)?;
            }
        }
    }
    if updates.groups {
        let slots: Vec<_> = state.network().modelled_slots().collect();
        for (t, i, j) in slots {
            sample_group_indicator(state, t, i, j, Direction::Send)?;
            sample_group_indicator(state, t, i, j, Direction::Recv)?;
        }
    }
    if updates.chains {
        for i in 0..state.network().n_entities() {
            sample_community_chain(state, i)?;
        }
    }
    state.iteration += 1;
    Ok(())
}

/// Log likelihood of the modelled slots.
pub fn log_likelihood(state: &SamplerState) -> f64 {
    let net = state.network();
    net.modelled_slots()
        .map(|(t, i, j)| edge_loglik(net.edge(t, i, j), state.slot_logit(t, i, j)))
        .sum()
}

/// Log of the Dirichlet-multinomial marginal of the group indicators, with
/// each membership vector integrated out.
pub fn log_group_prior(state: &SamplerState) -> f64 {
    let alpha = &state.hyper().alpha;
    let a_sum: f64 = alpha.iter().sum();
    let c = state.counts();
    let mut lp = 0.0;
    for t in 0..state.network().n_slices() {
        for e in 0..state.network().n_entities() {
            let mut n = 0u32;
            let mut acc = 0.0;
            for (g, &a) in alpha.iter().enumerate() {
                let u = c.usage(t, e, g);
                if u > 0 {
                    acc += ln_gamma(a + u as f64) - ln_gamma(a);
                }
                n += u;
            }
            if n > 0 {
                lp += acc + ln_gamma(a_sum) - ln_gamma(a_sum + n as f64);
            }
        }
    }
    lp
}

/// Log prior density of `B`, `Q` and the pair covariances.
pub fn log_compat_prior(state: &SamplerState) -> Result<f64> {
    let h = state.hyper();
    let p = state.compat();
    let k = state.n_groups();
    let mut lp = 0.0;
    for l in 0..k {
        lp += normal_logpdf(p.b(l, l), h.mu_b, h.sigma_b);
        lp += normal_logpdf(p.q(l), h.mu_q, h.sigma_q);
        for m in (l + 1)..k {
            let sigma = p.sigma(l, m);
            lp += mvn2_logpdf([p.b(l, m), p.b(m, l)], h.mu_kl, sigma)?;
            lp += inverse_wishart2_logpdf(sigma, h.iw_dof, &h.iw_scale)?;
        }
    }
    Ok(lp)
}

/// Joint log density of the data and every sampled variable (memberships
/// integrated out). In vanilla mode the clamped chain contributes nothing.
pub fn log_joint(state: &SamplerState) -> Result<f64> {
    let chain = match state.options().mode {
        Mode::Fc => chain_log_prior(state.chain(), state.hyper().zeta, state.hyper().eta),
        Mode::Vanilla => 0.0,
    };
    Ok(log_likelihood(state) + chain + log_group_prior(state) + log_compat_prior(state)?)
}
