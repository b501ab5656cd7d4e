mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use fcmmsb_core::gibbs::{
    gibbs_sweep, group_log_weights, log_joint, pair_posterior, predict_link, sample_community_chain,
    sample_group_indicator, scalar_posterior, Direction, SamplerOptions,
};
use fcmmsb_core::oracle::chain_prior_table;
use fcmmsb_core::sim::{generate_network, generate_synthetic_benchmark, BenchmarkConfig};
use fcmmsb_core::{
    run_inference, sigmoid, CompatibilityParams, GroupAssignments, Hyperparams, Mat2, Partition,
    PartitionChain, RunConfig, SamplerState, TemporalNetwork,
};

fn prior_state(n: usize, t: usize, k: usize, seed: u64) -> SamplerState {
    let hyper = Hyperparams::with_groups(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = generate_network(&hyper, n, t, &mut rng).unwrap();
    SamplerState::from_parts(g.network, hyper, g.chain, g.groups, g.compat, SamplerOptions::default(), seed).unwrap()
}

#[test]
fn pair_posterior_diagonal_algebra() {
    let (mean, cov) = pair_posterior([1.0, 1.0], [0.5, -0.5], [0.0, 0.0], &Mat2::scaled_identity(1.0)).unwrap();
    assert!((mean[0] - 0.25).abs() < 1e-15 && (mean[1] + 0.25).abs() < 1e-15);
    assert_eq!(cov, Mat2::scaled_identity(0.5));
}

#[test]
fn no_data_recovers_the_prior() {
    let sigma = Mat2::new(2.0, 0.3, 0.3, 1.0);
    let (mean, cov) = pair_posterior([0.0, 0.0], [0.0, 0.0], [0.4, -1.0], &sigma).unwrap();
    assert!((mean[0] - 0.4).abs() < 1e-12 && (mean[1] + 1.0).abs() < 1e-12);
    assert!((cov.get(0, 1) - 0.3).abs() < 1e-12 && (cov.get(0, 0) - 2.0).abs() < 1e-12);
    assert_eq!(scalar_posterior(1.5, 3.0, &[]), (1.5, 3.0));
}

#[test]
fn scalar_posterior_offset_shifts_the_data_term() {
    // one term with offset o is the same as a term on value + o
    let (m, v) = scalar_posterior(0.0, 2.0, &[(1.5, 0.5, 1.0)]);
    let prec = 0.5 + 1.5;
    assert!((v - 1.0 / prec).abs() < 1e-15);
    assert!((m - (0.5 - 1.5) / prec).abs() < 1e-15);
}

#[test]
fn symmetric_groups_are_uniform_without_evidence() {
    // one undirected slot: removing its sender indicator leaves entity 0 with
    // no usage, and B = 0 makes the link term the same for every group
    let net = TemporalNetwork::new(2, 1, false, false).unwrap();
    let hyper = Hyperparams::with_groups(3);
    let compat = CompatibilityParams::new(3, vec![0.0; 9], vec![0.0; 3], vec![Mat2::scaled_identity(1.0); 3]).unwrap();
    let mut st = SamplerState::from_parts(
        net,
        hyper,
        PartitionChain::constant(Partition::one_block(2), 1),
        GroupAssignments::zeros(2, 1),
        compat,
        SamplerOptions::default(),
        7,
    )
    .unwrap();
    let n = 30_000;
    let mut freq = [0.0; 3];
    for _ in 0..n {
        freq[sample_group_indicator(&mut st, 0, 0, 1, Direction::Send).unwrap()] += 1.0 / n as f64;
    }
    assert!(freq.iter().all(|f| (f - 1.0 / 3.0).abs() < 0.015), "{freq:?}");
}

#[test]
fn two_group_weights_match_direct_evaluation() {
    let net = directed_network(2, 1, &[(0, 0, 1)]);
    let mut hyper = Hyperparams::with_groups(2);
    hyper.alpha = vec![0.3, 1.1];
    let compat = CompatibilityParams::new(2, vec![1.2, -0.4, 0.3, -2.0], vec![0.0; 2], vec![Mat2::scaled_identity(1.0)]).unwrap();
    let mut groups = GroupAssignments::zeros(2, 1);
    // slot (0, 1): send 0, recv 1; slot (1, 0): send 1, recv 0
    let (a, b) = (groups.index(0, 0, 1), groups.index(0, 1, 0));
    groups.recv[a] = 1;
    groups.send[b] = 1;
    let st = SamplerState::from_parts(
        net,
        hyper,
        PartitionChain::constant(Partition::one_block(2), 1),
        groups,
        compat,
        SamplerOptions::default(),
        0,
    )
    .unwrap();
    // entity 0 usage: send 0 on (0, 1), recv 0 on (1, 0) -> [2, 0] before removal
    let w = group_log_weights(&st, 0, 0, 1, Direction::Send);
    let direct = |g: usize, usage: f64, alpha: f64| {
        let y = [1.2, -0.4, 0.3, -2.0][g * 2 + 1];
        (sigmoid(y)).ln() + (usage + alpha).ln()
    };
    assert!((w[0] - direct(0, 2.0, 0.3)).abs() < 1e-12);
    assert!((w[1] - direct(1, 0.0, 1.1)).abs() < 1e-12);
}

#[test]
fn single_entity_chain_is_singletons() {
    let net = TemporalNetwork::new(1, 3, true, false).unwrap();
    let hyper = Hyperparams::with_groups(2);
    let mut st = SamplerState::initialize(net, hyper, SamplerOptions::default(), 1).unwrap();
    for _ in 0..5 {
        sample_community_chain(&mut st, 0).unwrap();
        assert_eq!(st.chain(), &PartitionChain::constant(Partition::one_block(1), 3));
    }
}

#[test]
fn unobserved_entity_chain_follows_the_prior() {
    // no observed slots: the chain conditional is the prior conditional
    let mut net = TemporalNetwork::new(3, 2, true, false).unwrap();
    net.set_observed_mask(vec![false; 18]).unwrap();
    let hyper = Hyperparams::with_groups(1);
    let exact: HashMap<PartitionChain, f64> = chain_prior_table(3, 2, hyper.zeta, hyper.eta).into_iter().collect();
    let compat = CompatibilityParams::new(1, vec![0.0], vec![0.0], vec![]).unwrap();
    let chain = PartitionChain::constant(Partition::one_block(3), 2);
    let mut st = SamplerState::from_parts(net, hyper, chain, GroupAssignments::zeros(3, 2), compat, only(mask(false, false, false, false, true)), 2).unwrap();
    let mut draws = Vec::new();
    for _ in 0..30_000 {
        gibbs_sweep(&mut st).unwrap();
        draws.push(st.chain().clone());
    }
    let d = tv(&empirical(&draws), &exact);
    assert!(d < 0.03, "TV {d}");
}

#[test]
fn sweeps_keep_count_caches_and_refinement() {
    let mut st = prior_state(8, 3, 2, 4);
    for _ in 0..30 {
        gibbs_sweep(&mut st).unwrap();
        st.check_counts().unwrap();
        assert!(st.chain().is_valid());
        assert!(log_joint(&st).unwrap().is_finite());
    }
    assert_eq!(st.iteration(), 30);
}

#[test]
fn identical_seeds_give_identical_sweeps() {
    let mut a = prior_state(7, 2, 3, 9);
    let mut b = prior_state(7, 2, 3, 9);
    for _ in 0..10 {
        gibbs_sweep(&mut a).unwrap();
        gibbs_sweep(&mut b).unwrap();
    }
    assert_eq!(a.chain(), b.chain());
    assert_eq!(a.groups(), b.groups());
    assert_eq!(a.compat(), b.compat());
}

#[test]
fn single_group_same_community_prediction_is_sigmoid() {
    let net = directed_network(3, 1, &[(0, 0, 1)]);
    let compat = CompatibilityParams::new(1, vec![0.7], vec![-1.0], vec![]).unwrap();
    let st = SamplerState::from_parts(
        net,
        Hyperparams::with_groups(1),
        PartitionChain::constant(Partition::from_labels(&[0, 0, 1]), 1),
        GroupAssignments::zeros(3, 1),
        compat,
        SamplerOptions::default(),
        0,
    )
    .unwrap();
    assert!((predict_link(&st, 0, 0, 1) - sigmoid(0.7)).abs() < 1e-15);
    assert!((predict_link(&st, 0, 0, 2) - sigmoid(-0.3)).abs() < 1e-15);
}

#[test]
fn zero_iterations_retain_nothing() {
    let st = prior_state(5, 2, 2, 0);
    let fit = run_inference(st.network().clone(), st.hyper().clone(), RunConfig::new(0, 0)).unwrap();
    assert_eq!(fit.summary().n_retained, 0);
    assert!(fit.predictive_mean(0, 0, 1).is_none());
    assert!(fit.mode_partitions().is_none());
}

#[test]
fn benchmark_log_joint_trace_is_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bench = generate_synthetic_benchmark(&BenchmarkConfig { n_entities: 30, ..Default::default() }, &mut rng).unwrap();
    let fit = run_inference(bench.network, Hyperparams::with_groups(2), RunConfig::new(40, 1)).unwrap();
    assert_eq!(fit.summary().trace.len(), 41);
    assert!(fit.summary().trace.iter().all(|r| r.log_joint.is_finite()));
    assert_eq!(fit.summary().n_retained, 4);
}

#[test]
fn fixed_seed_runs_are_bit_identical() {
    let st = prior_state(6, 2, 2, 3);
    let run = || {
        let f = run_inference(st.network().clone(), st.hyper().clone(), RunConfig::new(60, 5)).unwrap();
        serde_json::to_string(f.summary()).unwrap()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prediction_ignores_community_labels(seed in any::<u64>(), sweeps in 0usize..4) {
        let mut st = prior_state(6, 2, 2, seed);
        for _ in 0..sweeps {
            gibbs_sweep(&mut st).unwrap();
        }
        let before: Vec<f64> = (0..2)
            .flat_map(|t| (0..6).flat_map(move |i| (0..6).filter(move |&j| j != i).map(move |j| (t, i, j))))
            .map(|(t, i, j)| predict_link(&st, t, i, j))
            .collect();
        prop_assert!(before.iter().all(|&p| p > 0.0 && p < 1.0));
        // reverse every label: same partitions, different label values
        let flip = |p: &Partition| {
            let k = p.n_blocks();
            let labels: Vec<usize> = p.labels().iter().map(|&l| k - 1 - l).collect();
            Partition::from_labels(&labels)
        };
        let c = st.chain();
        let relabelled = PartitionChain::new(
            c.coarse_partitions().iter().map(flip).collect(),
            c.fine_partitions().iter().map(flip).collect(),
        ).unwrap();
        st.set_chain(relabelled).unwrap();
        let after: Vec<f64> = (0..2)
            .flat_map(|t| (0..6).flat_map(move |i| (0..6).filter(move |&j| j != i).map(move |j| (t, i, j))))
            .map(|(t, i, j)| predict_link(&st, t, i, j))
            .collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn caches_match_recount_after_random_updates(seed in any::<u64>()) {
        let mut st = prior_state(5, 2, 3, seed);
        for _ in 0..3 {
            gibbs_sweep(&mut st).unwrap();
        }
        st.check_counts().unwrap();
        let c = st.counts();
        for l in 0..3 {
            for k in 0..3 {
                let (n, n1) = c.within(l, k);
                prop_assert!(n1 <= n);
            }
        }
        for t in 0..2 {
            for i in 0..5 {
                let sends: u32 = (0..3).map(|k| c.send(t, i, k)).sum();
                let out_slots = (0..5).filter(|&j| st.network().is_modelled(t, i, j)).count();
                prop_assert_eq!(sends as usize, out_slots);
            }
        }
    }
}
