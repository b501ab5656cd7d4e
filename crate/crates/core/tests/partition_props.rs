use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fcmmsb_core::partition::{
    chain_log_prior, chain_prior_logprob, coal_distribution, crp_log_eppf, frag_distribution,
    init_distribution, sample_chain_prior, EntityFrame,
};
use fcmmsb_core::{Partition, PartitionChain};

fn chain_strategy() -> impl Strategy<Value = (PartitionChain, f64, f64)> {
    (1usize..8, 1usize..5, 0.1f64..4.0, 0.1f64..4.0, any::<u64>()).prop_map(|(n, t, zeta, eta, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (sample_chain_prior(n, t, zeta, eta, &mut rng).unwrap(), zeta, eta)
    })
}

fn relabel(chain: &PartitionChain, perm: &[usize]) -> PartitionChain {
    let map = |p: &Partition| {
        let mut labels = vec![0; p.len()];
        for (i, &to) in perm.iter().enumerate() {
            labels[to] = p.label(i);
        }
        Partition::from_labels(&labels)
    };
    PartitionChain::new(
        chain.coarse_partitions().iter().map(map).collect(),
        chain.fine_partitions().iter().map(map).collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn sampled_chains_are_valid((chain, _, _) in chain_strategy()) {
        prop_assert!(chain.is_valid());
        for t in 0..chain.n_slices() - 1 {
            prop_assert!(chain.fine(t).refines(chain.coarse(t)));
            prop_assert!(chain.fine(t).refines(chain.coarse(t + 1)));
        }
    }

    #[test]
    fn entity_conditional_is_a_ratio_of_joints((chain, zeta, eta) in chain_strategy(), pick in any::<prop::sample::Index>()) {
        let n = chain.n_entities();
        prop_assume!(n >= 2);
        let i = pick.index(n);
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let lhs = chain_prior_logprob(&chain, i, zeta, eta).unwrap();
        let rhs = chain_log_prior(&chain, zeta, eta) - chain_log_prior(&chain.restrict(&others), zeta, eta);
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn joint_prior_is_exchangeable((chain, zeta, eta) in chain_strategy(), seed in any::<u64>()) {
        let n = chain.n_entities();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perm = rand::seq::index::sample(&mut rng, n, n).into_vec();
        let a = chain_log_prior(&chain, zeta, eta);
        let b = chain_log_prior(&relabel(&chain, &perm), zeta, eta);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn entity_rows_are_distributions((chain, zeta, eta) in chain_strategy(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(chain.n_entities());
        let frame = EntityFrame::new(&chain, i);
        let sum = |v: Vec<f64>| v.iter().sum::<f64>();
        prop_assert!((sum(frame.init_row(zeta)) - 1.0).abs() < 1e-12);
        for t in 0..chain.n_slices() - 1 {
            for c in 0..=frame.n_coarse(t) {
                prop_assert!((sum(frame.frag_row(t, c, zeta)) - 1.0).abs() < 1e-12);
            }
            for f in 0..=frame.n_fine(t) {
                prop_assert!((sum(frame.coal_row(t, f, eta)) - 1.0).abs() < 1e-12);
            }
        }
        let (coarse, fine) = frame.current_states(&chain);
        let lp = frame.sequence_logprob(&coarse, &fine, zeta, eta);
        prop_assert!((lp - chain_prior_logprob(&chain, i, zeta, eta).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn applying_current_states_is_identity((chain, _, _) in chain_strategy(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(chain.n_entities());
        let frame = EntityFrame::new(&chain, i);
        let (coarse, fine) = frame.current_states(&chain);
        let mut copy = chain.clone();
        frame.apply(&mut copy, &coarse, &fine);
        prop_assert_eq!(copy, chain);
    }

    #[test]
    fn init_matches_crp(sizes in prop::collection::vec(1usize..6, 0..5), zeta in 0.1f64..5.0) {
        let p = init_distribution(&sizes, zeta).unwrap();
        let total: usize = sizes.iter().sum();
        for (k, &s) in sizes.iter().enumerate() {
            prop_assert!((p[k] - s as f64 / (total as f64 + zeta)).abs() < 1e-15);
        }
        // seating ratio: EPPF with the entity at table k over EPPF without it
        for k in 0..=sizes.len() {
            let mut with = sizes.clone();
            if k == sizes.len() { with.push(1) } else { with[k] += 1 }
            let ratio = (crp_log_eppf(&with, zeta) - crp_log_eppf(&sizes, zeta)).exp();
            prop_assert!((ratio - p[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn frag_ignores_children_outside_the_parent() {
    let children = vec![vec![0, 1], vec![2], vec![3, 4]];
    let p = frag_distribution(&[0, 1, 2], &children, 1.0).unwrap();
    assert_eq!(p, vec![0.5, 0.25, 0.0, 0.25]);
    assert_eq!(frag_distribution(&[], &children, 1.0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn coal_keeps_an_existing_merge_and_seats_a_new_fine_community() {
    // fine communities 0 and 1 merged into coarse 0, fine 2 into coarse 1
    let assign = [Some(0), Some(0), Some(1)];
    assert_eq!(coal_distribution(&assign, 2, 2, 1.0).unwrap(), vec![0.0, 1.0, 0.0]);
    let fresh = [Some(0), Some(0), Some(1), None];
    let p = coal_distribution(&fresh, 2, 3, 1.0).unwrap();
    assert_eq!(p, vec![0.5, 0.25, 0.25]);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(init_distribution(&[2, 0], 1.0).is_err());
    assert!(init_distribution(&[2], 0.0).is_err());
    assert!(coal_distribution(&[Some(0)], 1, 3, 1.0).is_err());
    assert!(sample_chain_prior(0, 2, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}
