//! Forward simulation from the model and the three-community benchmark.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{sample_categorical, sample_dirichlet};
use crate::error::{Error, Result};
use crate::gibbs::{sample_compat_prior, SamplerState};
use crate::model::{
    link_logit, sigmoid, CompatibilityParams, GroupAssignments, Hyperparams, LinkContext,
    MembershipState, TemporalNetwork,
};
use crate::partition::{sample_chain_prior, Partition, PartitionChain};

/// Every latent variable behind a simulated network.
#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub network: TemporalNetwork,
    pub chain: PartitionChain,
    pub membership: MembershipState,
    pub groups: GroupAssignments,
    pub compat: CompatibilityParams,
}

/// Draws a directed network and all its latents from the full generative
/// process.
pub fn generate_network<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    n: usize,
    t_slices: usize,
    rng: &mut R,
) -> Result<GeneratedNetwork> {
    hyper.validate()?;
    let compat = sample_compat_prior(hyper, rng)?;
    let chain = sample_chain_prior(n, t_slices, hyper.zeta, hyper.eta, rng)?;
    generate_from_latents(hyper, compat, chain, rng)
}

/// Simulates memberships, groups and links given compatibility parameters
/// and a community chain.
pub fn generate_from_latents<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    compat: CompatibilityParams,
    chain: PartitionChain,
    rng: &mut R,
) -> Result<GeneratedNetwork> {
    let (n, t_slices, k) = (chain.n_entities(), chain.n_slices(), hyper.n_groups);
    let mut theta = Vec::with_capacity(t_slices * n * k);
    for _ in 0..t_slices * n {
        theta.extend(sample_dirichlet(rng, &hyper.alpha));
    }
    let membership = MembershipState {
        n_entities: n,
        n_slices: t_slices,
        n_groups: k,
        theta,
    };
    let mut network = TemporalNetwork::new(n, t_slices, true, false)?;
    let mut groups = GroupAssignments::zeros(n, t_slices);
    for t in 0..t_slices {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let l = sample_categorical(rng, membership.row(t, i));
                let r = sample_categorical(rng, membership.row(t, j));
                let idx = groups.index(t, i, j);
                groups.send[idx] = l as u32;
                groups.recv[idx] = r as u32;
                let ctx = LinkContext {
                    same_community: chain.same_community(t, i, j),
                    send_group: l,
                    recv_group: r,
                };
                let p = sigmoid(link_logit(ctx, &compat, hyper.epsilon)?);
                network.set_edge(t, i, j, rng.random::<f64>() < p)?;
            }
        }
    }
    Ok(GeneratedNetwork {
        network,
        chain,
        membership,
        groups,
        compat,
    })
}

/// Redraws every likelihood slot of the state's network from the current
/// latents; held-out slots are left untouched.
pub fn resample_observations(state: &mut SamplerState) -> Result<()> {
    let mut net = state.network().clone();
    let slots: Vec<_> = net.modelled_slots().collect();
    for (t, i, j) in slots {
        let p = sigmoid(state.slot_logit(t, i, j));
        let x = state.rng_mut().random::<f64>() < p;
        net.set_edge(t, i, j, x)?;
    }
    state.set_network(net)
}

/// Settings of the three-community, two-group benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub n_entities: usize,
    /// Probability-scale compatibility on the group diagonal.
    pub high: f64,
    /// Probability-scale compatibility off the group diagonal.
    pub low: f64,
    /// Dirichlet weight of an entity's dominant group.
    pub major: f64,
    /// Dirichlet weight of the other group.
    pub minor: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_entities: 100,
            high: 0.9,
            low: 0.05,
            major: 0.8,
            minor: 0.2,
        }
    }
}

pub const BENCHMARK_COMMUNITIES: usize = 3;
pub const BENCHMARK_GROUPS: usize = 2;
pub const BENCHMARK_SLICES: usize = 2;

/// A benchmark network with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBenchmark {
    pub network: TemporalNetwork,
    /// Ground-truth community partition per slice.
    pub communities: Vec<Partition>,
    /// Dominant group per entity.
    pub groups: Vec<usize>,
    pub membership: MembershipState,
}

/// Block sizes of `n` entities split over the six community-group blocks,
/// as equal as possible with the larger blocks first.
pub fn benchmark_block_sizes(n: usize) -> Vec<usize> {
    let blocks = BENCHMARK_COMMUNITIES * BENCHMARK_GROUPS;
    (0..blocks).map(|b| n / blocks + usize::from(b < n % blocks)).collect()
}

/// Two-slice benchmark: three communities of two groups each. Slice 0 keeps
/// only within-community links; slice 1 also drops links between entities
/// of different dominant groups. Surviving pairs link with probability
/// `theta_i^T B theta_j` for the probability-scale `B = [[high, low], [low, high]]`.
pub fn generate_synthetic_benchmark<R: Rng + ?Sized>(
    config: &BenchmarkConfig,
    rng: &mut R,
) -> Result<SyntheticBenchmark> {
    let n = config.n_entities;
    if n < BENCHMARK_COMMUNITIES * BENCHMARK_GROUPS {
        return Err(Error::Parameter(format!(
            "benchmark needs at least 6 entities, got {n}"
        )));
    }
    for (name, v) in [("high", config.high), ("low", config.low)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("{name} must be a probability, got {v}")));
        }
    }
    if !(config.major > 0.0 && config.minor > 0.0) {
        return Err(Error::Parameter("Dirichlet weights must be positive".into()));
    }
    let mut community = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    for (b, &size) in benchmark_block_sizes(n).iter().enumerate() {
        community.extend(std::iter::repeat_n(b / BENCHMARK_GROUPS, size));
        group.extend(std::iter::repeat_n(b % BENCHMARK_GROUPS, size));
    }
    let b_sig = [[config.high, config.low], [config.low, config.high]];

    let t_slices = BENCHMARK_SLICES;
    let mut theta = Vec::with_capacity(t_slices * n * 2);
    for _ in 0..t_slices {
        for &g in &group {
            let alpha = if g == 0 {
                [config.major, config.minor]
            } else {
                [config.minor, config.major]
            };
            theta.extend(sample_dirichlet(rng, &alpha));
        }
    }
    let membership = MembershipState {
        n_entities: n,
        n_slices: t_slices,
        n_groups: 2,
        theta,
    };

    let mut network = TemporalNetwork::new(n, t_slices, true, false)?;
    for t in 0..t_slices {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if community[i] != community[j] || (t == 1 && group[i] != group[j]) {
                    continue;
                }
                let (ti, tj) = (membership.row(t, i), membership.row(t, j));
                let mut p = 0.0;
                for (l, row) in b_sig.iter().enumerate() {
                    for (k, &b) in row.iter().enumerate() {
                        p += ti[l] * b * tj[k];
                    }
                }
                if rng.random::<f64>() < p {
                    network.set_edge(t, i, j, true)?;
                }
            }
        }
    }
    let truth = Partition::from_labels(&community);
    Ok(SyntheticBenchmark {
        network,
        communities: vec![truth; t_slices],
        groups: group,
        membership,
    })
}
