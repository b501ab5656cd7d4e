//! Brute-force enumeration on tiny instances.
//!
//! Everything here is computed independently of the samplers: partitions
//! are listed as restricted-growth strings, CRP probabilities use plain
//! products instead of log-gamma, and the likelihood is re-derived inline.
//! Only practical for a handful of entities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompatibilityParams, GroupAssignments, Hyperparams, TemporalNetwork};
use crate::partition::{Partition, PartitionChain};

/// Upper bound on enumerated configurations.
pub const MAX_CONFIGURATIONS: usize = 1 << 22;

/// All set partitions of `n` entities in canonical form.
pub fn set_partitions(n: usize) -> Vec<Partition> {
    fn rec(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix));
            return;
        }
        let next = if prefix.is_empty() { 0 } else { max + 1 };
        for l in 0..=next {
            prefix.push(l);
            rec(prefix, n, max.max(l), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(&mut Vec::with_capacity(n), n, 0, &mut out);
    out
}

fn refines(fine: &Partition, coarse: &Partition) -> bool {
    let n = fine.len();
    (0..n).all(|a| (0..n).all(|b| fine.label(a) != fine.label(b) || coarse.label(a) == coarse.label(b)))
}

/// Every valid chain of `t_slices` coarse partitions with their
/// intermediate fine partitions.
pub fn enumerate_chains(n: usize, t_slices: usize) -> Vec<PartitionChain> {
    let all = set_partitions(n);
    let mut partial: Vec<(Vec<Partition>, Vec<Partition>)> =
        all.iter().map(|p| (vec![p.clone()], Vec::new())).collect();
    for _ in 1..t_slices {
        let mut next = Vec::new();
        for (coarse, fine) in &partial {
            let last = coarse.last().unwrap();
            for f in all.iter().filter(|f| refines(f, last)) {
                for c in all.iter().filter(|c| refines(f, c)) {
                    let mut cc = coarse.clone();
                    let mut ff = fine.clone();
                    ff.push(f.clone());
                    cc.push(c.clone());
                    next.push((cc, ff));
                }
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(c, f)| PartitionChain::new(c, f).expect("enumerated chains are valid"))
        .collect()
}

/// Probability that a CRP with concentration `conc` produces the given
/// block sizes (in seating order irrelevant form).
pub fn crp_partition_probability(sizes: &[usize], conc: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let mut num = 1.0;
    for &s in sizes {
        num *= conc;
        for m in 1..s {
            num *= m as f64;
        }
    }
    let mut den = 1.0;
    for m in 0..n {
        den *= conc + m as f64;
    }
    num / den
}

fn block_sizes(p: &Partition) -> Vec<usize> {
    let mut sizes = vec![0; p.n_blocks()];
    for &l in p.labels() {
        sizes[l] += 1;
    }
    sizes
}

/// Prior probability of a chain: CRP at slice 0, per-block CRP
/// fragmentation, CRP coagulation over fine blocks.
pub fn chain_probability(chain: &PartitionChain, zeta: f64, eta: f64) -> f64 {
    let mut p = crp_partition_probability(&block_sizes(chain.coarse(0)), zeta);
    for t in 0..chain.n_slices() - 1 {
        let (coarse, fine, next) = (chain.coarse(t), chain.fine(t), chain.coarse(t + 1));
        for c in 0..coarse.n_blocks() {
            let members: Vec<usize> = (0..coarse.len()).filter(|&i| coarse.label(i) == c).collect();
            let sub = fine.restrict(&members);
            p *= crp_partition_probability(&block_sizes(&sub), zeta);
        }
        // one representative entity per fine block
        let reps: Vec<usize> = (0..fine.n_blocks())
            .map(|f| (0..fine.len()).find(|&i| fine.label(i) == f).unwrap())
            .collect();
        let merged = next.restrict(&reps);
        p *= crp_partition_probability(&block_sizes(&merged), eta);
    }
    p
}

/// Exact prior distribution over every chain.
pub fn chain_prior_table(n: usize, t_slices: usize, zeta: f64, eta: f64) -> Vec<(PartitionChain, f64)> {
    enumerate_chains(n, t_slices)
        .into_iter()
        .map(|c| {
            let p = chain_probability(&c, zeta, eta);
            (c, p)
        })
        .collect()
}

fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

fn logit(same: bool, l: usize, k: usize, compat: &CompatibilityParams, eps: f64) -> f64 {
    match (same, l == k) {
        (true, _) => compat.b(l, k),
        (false, true) => compat.b(k, k) + compat.q(k),
        (false, false) => eps,
    }
}

/// A tiny fixed-parameter problem: data, hyperparameters and clamped
/// compatibility parameters.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub network: TemporalNetwork,
    pub hyper: Hyperparams,
    pub compat: CompatibilityParams,
}

/// One configuration of the discrete latents with its posterior weight.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub chain: PartitionChain,
    pub groups: GroupAssignments,
    pub probability: f64,
}

fn slots(net: &TemporalNetwork) -> Vec<(usize, usize, usize)> {
    let n = net.n_entities();
    let mut v = Vec::new();
    for t in 0..net.n_slices() {
        for i in 0..n {
            for j in 0..n {
                if net.is_observed(t, i, j) && (net.directed() || i <= j) {
                    v.push((t, i, j));
                }
            }
        }
    }
    v
}

/// Rising-factorial form of the Dirichlet-multinomial probability of the
/// group usage counts of every (slice, entity).
fn group_probability(inst: &TinyInstance, groups: &GroupAssignments, slots: &[(usize, usize, usize)]) -> f64 {
    let (n, t_slices, k) = (inst.network.n_entities(), inst.network.n_slices(), inst.hyper.n_groups);
    let mut usage = vec![0usize; t_slices * n * k];
    for &(t, i, j) in slots {
        usage[(t * n + i) * k + groups.send(t, i, j)] += 1;
        usage[(t * n + j) * k + groups.recv(t, i, j)] += 1;
    }
    let a_sum: f64 = inst.hyper.alpha.iter().sum();
    let mut p = 1.0;
    for row in usage.chunks(k) {
        let total: usize = row.iter().sum();
        for (g, &c) in row.iter().enumerate() {
            for m in 0..c {
                p *= inst.hyper.alpha[g] + m as f64;
            }
        }
        for m in 0..total {
            p /= a_sum + m as f64;
        }
    }
    p
}

fn likelihood(inst: &TinyInstance, chain: &PartitionChain, groups: &GroupAssignments, slots: &[(usize, usize, usize)]) -> f64 {
    let mut p = 1.0;
    for &(t, i, j) in slots {
        let same = chain.coarse(t).label(i) == chain.coarse(t).label(j);
        let s = sigmoid(logit(same, groups.send(t, i, j), groups.recv(t, i, j), &inst.compat, inst.hyper.epsilon));
        p *= if inst.network.edge(t, i, j) == 1 { s } else { 1.0 - s };
    }
    p
}

/// Posterior over chains and group indicators with compatibility
/// parameters clamped. Either block can be fixed instead of enumerated.
pub fn enumerate_posterior(
    inst: &TinyInstance,
    fixed_chain: Option<&PartitionChain>,
    fixed_groups: Option<&GroupAssignments>,
) -> Result<Vec<Configuration>> {
    let net = &inst.network;
    let (n, t_slices, k) = (net.n_entities(), net.n_slices(), inst.hyper.n_groups);
    let slots = slots(net);
    let chains: Vec<(PartitionChain, f64)> = match fixed_chain {
        Some(c) => vec![(c.clone(), 1.0)],
        None => chain_prior_table(n, t_slices, inst.hyper.zeta, inst.hyper.eta),
    };
    let n_group_configs = match fixed_groups {
        Some(_) => 1usize,
        None => k
            .checked_pow(2 * slots.len() as u32)
            .filter(|&c| c <= MAX_CONFIGURATIONS)
            .ok_or_else(|| Error::Parameter("too many group configurations to enumerate".into()))?,
    };
    if chains.len().saturating_mul(n_group_configs) > MAX_CONFIGURATIONS {
        return Err(Error::Parameter("instance too large to enumerate".into()));
    }
    let mut out = Vec::new();
    let mut groups = fixed_groups
        .cloned()
        .unwrap_or_else(|| GroupAssignments::zeros(n, t_slices));
    for code in 0..n_group_configs {
        if fixed_groups.is_none() {
            let mut c = code;
            for &(t, i, j) in &slots {
                let idx = groups.index(t, i, j);
                groups.send[idx] = (c % k) as u32;
                c /= k;
                groups.recv[idx] = (c % k) as u32;
                c /= k;
            }
        }
        let pg = group_probability(inst, &groups, &slots);
        for (chain, pc) in &chains {
            let w = pc * pg * likelihood(inst, chain, &groups, &slots);
            out.push(Configuration {
                chain: chain.clone(),
                groups: groups.clone(),
                probability: w,
            });
        }
    }
    let total: f64 = out.iter().map(|c| c.probability).sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("enumerated posterior has no mass".into()));
    }
    for c in &mut out {
        c.probability /= total;
    }
    Ok(out)
}

/// Link prediction for one configuration (sender-count memberships).
pub fn predict_for(inst: &TinyInstance, config: &Configuration, t: usize, i: usize, j: usize) -> f64 {
    let net = &inst.network;
    let k = inst.hyper.n_groups;
    let theta = |e: usize| -> Vec<f64> {
        let mut c = inst.hyper.alpha.clone();
        for &(st, a, b) in &slots(net) {
            if st == t && a == e {
                c[config.groups.send(st, a, b)] += 1.0;
            }
        }
        let s: f64 = c.iter().sum();
        c.into_iter().map(|v| v / s).collect()
    };
    let (ti, tj) = (theta(i), theta(j));
    let same = config.chain.coarse(t).label(i) == config.chain.coarse(t).label(j);
    let mut p = 0.0;
    for l in 0..k {
        for m in 0..k {
            p += ti[l] * tj[m] * sigmoid(logit(same, l, m, &inst.compat, inst.hyper.epsilon));
        }
    }
    p
}

/// A chain with its exact probability, for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainProbability {
    pub coarse: Vec<Vec<usize>>,
    pub fine: Vec<Vec<usize>>,
    pub probability: f64,
}

pub fn chain_prior_report(n: usize, t_slices: usize, zeta: f64, eta: f64) -> Vec<ChainProbability> {
    chain_prior_table(n, t_slices, zeta, eta)
        .into_iter()
        .map(|(c, p)| ChainProbability {
            coarse: c.coarse_partitions().iter().map(|p| p.labels().to_vec()).collect(),
            fine: c.fine_partitions().iter().map(|p| p.labels().to_vec()).collect(),
            probability: p,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn crp_probabilities_sum_to_one() {
        for n in 1..=6 {
            let s: f64 = set_partitions(n)
                .iter()
                .map(|p| crp_partition_probability(&block_sizes(p), 0.7))
                .sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_table_is_normalised() {
        for (n, t) in [(1, 3), (3, 2), (4, 2), (3, 3)] {
            let s: f64 = chain_prior_table(n, t, 1.3, 0.6).iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} t={t}: {s}");
        }
    }
}
