use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fcmmsb_core::gibbs::{checkpoint_from_str, checkpoint_to_string};
use fcmmsb_core::io::{
    format_temporal_edgelist, load_ground_truth, load_temporal_edgelist, parse_temporal_edgelist,
    save_ground_truth, save_temporal_edgelist, Config, GroundTruth, LoadOptions,
};
use fcmmsb_core::sim::{generate_synthetic_benchmark, BenchmarkConfig};
use fcmmsb_core::{Error, Hyperparams, Run, RunConfig, TemporalNetwork};

fn random_network(n: usize, t: usize, directed: bool, density: f64, seed: u64) -> TemporalNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = TemporalNetwork::new(n, t, directed, false).unwrap();
    for s in 0..t {
        for i in 0..n {
            for j in 0..n {
                if i != j && (directed || i < j) && rng.random::<f64>() < density {
                    net.set_edge(s, i, j, true).unwrap();
                }
            }
        }
    }
    net
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edgelist_text_round_trips(n in 1usize..9, t in 1usize..4, directed in any::<bool>(), density in 0.0f64..1.0, seed in any::<u64>()) {
        let net = random_network(n, t, directed, density, seed);
        let text = format_temporal_edgelist(&net);
        let loaded = parse_temporal_edgelist(&text, Path::new("mem"), &LoadOptions::default()).unwrap();
        prop_assert_eq!(loaded.network, net);
        prop_assert!(loaded.warnings.is_empty());
    }
}

#[test]
fn benchmark_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bench = generate_synthetic_benchmark(&BenchmarkConfig::default(), &mut rng).unwrap();
    let edges = dir.path().join("edges.txt");
    save_temporal_edgelist(&bench.network, &edges).unwrap();
    let loaded = load_temporal_edgelist(&edges, &LoadOptions::default()).unwrap();
    assert_eq!(loaded.network, bench.network);
    assert_eq!(loaded.entity_ids, (0..100).map(|i| i.to_string()).collect::<Vec<_>>());

    let truth = GroundTruth { communities: bench.communities.clone(), groups: bench.groups.clone() };
    let truth_path = dir.path().join("truth.json");
    save_ground_truth(&truth, &truth_path).unwrap();
    assert_eq!(load_ground_truth(&truth_path).unwrap(), truth);
}

#[test]
fn loader_examples() {
    let p = Path::new("mem");
    let declared = LoadOptions { n_entities: Some(3), n_slices: Some(1), directed: Some(true), ..Default::default() };
    let empty = parse_temporal_edgelist("", p, &declared).unwrap().network;
    assert!(empty.adjacency().iter().all(|&x| x == 0));
    assert_eq!((empty.n_entities(), empty.n_slices()), (3, 1));

    let one = parse_temporal_edgelist("0 1 2\n", p, &declared).unwrap().network;
    assert_eq!(one.adjacency().iter().filter(|&&x| x == 1).count(), 1);
    assert_eq!(one.edge(0, 1, 2), 1);

    let light = parse_temporal_edgelist("0 1 2 0.4\n", p, &declared).unwrap().network;
    assert_eq!(light.edge(0, 1, 2), 0);
}

#[test]
fn loader_errors_carry_line_numbers() {
    let p = Path::new("data.txt");
    let opts = LoadOptions { n_slices: Some(2), ..Default::default() };
    match parse_temporal_edgelist("0 1 2\n# note\n0 x\n", p, &opts) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(parse_temporal_edgelist("5 0 1\n", p, &opts).is_err());
}

#[test]
fn duplicates_keep_the_maximum_with_a_warning() {
    let opts = LoadOptions { binarize_threshold: 0.5, directed: Some(true), ..Default::default() };
    let loaded = parse_temporal_edgelist("0 a b 0.2\n0 a b 0.9\n0 b a 0.1\n", Path::new("mem"), &opts).unwrap();
    assert_eq!(loaded.network.edge(0, 0, 1), 1);
    assert_eq!(loaded.network.edge(0, 1, 0), 0);
    assert_eq!(loaded.warnings.len(), 1);
}

#[test]
fn config_round_trips_and_rejects_unknown_keys() {
    let config = Config { n_groups: 3, n_iters: 50, seeds: vec![4, 5], ..Config::default() };
    let text = config.to_toml_string().unwrap();
    assert_eq!(Config::from_toml_str(&text).unwrap(), config);
    assert_eq!(Config::from_toml_str("").unwrap(), Config::default());
    assert!(matches!(Config::from_toml_str("n_group = 2"), Err(Error::Config(_))));
    assert!(matches!(Config::from_toml_str("zeta = -1.0"), Err(Error::Config(_))));
    let h = Config::from_toml_str("n_groups = 3\nalpha = [0.1, 0.2, 0.3]").unwrap().hyperparams().unwrap();
    assert_eq!(h.alpha, vec![0.1, 0.2, 0.3]);
    assert_eq!(Config::default().hyperparams().unwrap(), Hyperparams::default());
}

#[test]
fn checkpoints_round_trip_and_reject_foreign_files() {
    let net = random_network(6, 2, true, 0.3, 1);
    let mut run = Run::new(net, Hyperparams::with_groups(2), RunConfig::new(20, 2)).unwrap();
    run.run_until(8).unwrap();
    let text = checkpoint_to_string(&run).unwrap();
    let back = checkpoint_from_str(&text).unwrap();
    assert_eq!(checkpoint_to_string(&back).unwrap(), text);
    let foreign = text.replace("fcmmsb-checkpoint", "something-else");
    assert!(checkpoint_from_str(&foreign).is_err());
    let future = text.replacen("\"version\":1", "\"version\":99", 1);
    assert!(checkpoint_from_str(&future).is_err());
}
