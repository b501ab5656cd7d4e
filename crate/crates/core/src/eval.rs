//! Held-out evaluation: splits, AUC, partition agreement, baselines and the
//! multi-seed harness.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{run_inference, Fit, Mode, RunConfig};
use crate::model::{Hyperparams, TemporalNetwork};
use crate::partition::Partition;

pub use crate::gibbs::activeness;

/// A `(t, i, j)` slot.
pub type Slot = (usize, usize, usize);

/// Slots that can be held out: observed, eligible, and for undirected
/// networks the `i < j` representative of each pair.
pub fn splittable_slots(network: &TemporalNetwork) -> Vec<Slot> {
    network.modelled_slots().collect()
}

/// Holds out a uniformly random `round(test_fraction * eligible)` of the
/// splittable slots, marking them unobserved (both orientations for
/// undirected networks). Returns the held-out slots in row-major order.
pub fn holdout_split<R: Rng + ?Sized>(
    network: &mut TemporalNetwork,
    test_fraction: f64,
    rng: &mut R,
) -> Result<Vec<Slot>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let eligible = splittable_slots(network);
    let n_test = (test_fraction * eligible.len() as f64).round() as usize;
    let mut picked = sample_indices(rng, eligible.len(), n_test).into_vec();
    picked.sort_unstable();
    let test: Vec<Slot> = picked.into_iter().map(|k| eligible[k]).collect();
    for &(t, i, j) in &test {
        network.set_observed(t, i, j, false)?;
    }
    Ok(test)
}

/// Area under the ROC curve by the Mann-Whitney statistic; ties count 1/2.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("score {s} is not a number")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tied runs
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = 0.5 * ((start + 1) + end) as f64;
        let pos_in_run = order[start..end].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += midrank * pos_in_run as f64;
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two partitions of the same entities.
///
/// When both partitions are trivial in the same way (both one block or both
/// all singletons) the index is 0/0; it is reported as 1.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "partitions of {} and {} entities",
            a.len(),
            b.len()
        )));
    }
    let (ka, kb) = (a.n_blocks(), b.n_blocks());
    let mut table = vec![0usize; ka * kb];
    for i in 0..a.len() {
        table[a.label(i) * kb + b.label(i)] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let sum_a: f64 = a.block_sizes().iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = b.block_sizes().iter().map(|&c| choose2(c)).sum();
    let total = choose2(a.len());
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Which links define a neighbourhood in a directed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    #[default]
    Union,
    Out,
    In,
}

fn is_neighbor(net: &TemporalNetwork, t: usize, a: usize, u: usize, mode: Neighborhood) -> bool {
    let out = net.is_observed(t, a, u) && net.edge(t, a, u) == 1;
    let inn = net.is_observed(t, u, a) && net.edge(t, u, a) == 1;
    match mode {
        Neighborhood::Union => out || inn,
        Neighborhood::Out => out,
        Neighborhood::In => inn,
    }
}

/// Number of entities linked to both `i` and `j` at slice `t` through
/// observed links.
pub fn common_neighbors_score(
    network: &TemporalNetwork,
    t: usize,
    i: usize,
    j: usize,
    mode: Neighborhood,
) -> usize {
    (0..network.n_entities())
        .filter(|&u| u != i && u != j)
        .filter(|&u| is_neighbor(network, t, i, u, mode) && is_neighbor(network, t, j, u, mode))
        .count()
}

/// The same run with every entity clamped to a single community: a plain
/// mixed-membership blockmodel.
pub fn vanilla_mmsb_mode(config: &RunConfig) -> RunConfig {
    RunConfig {
        mode: Mode::Vanilla,
        ..config.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Fcmmsb,
    Vanilla,
    CommonNeighbors,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Fcmmsb => "fcmmsb",
            ModelKind::Vanilla => "vanilla-mmsb",
            ModelKind::CommonNeighbors => "common-neighbors",
        }
    }
}

/// Settings of a multi-seed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub run: RunConfig,
    pub models: Vec<ModelKind>,
    pub neighborhood: Neighborhood,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seeds: (0..5).collect(),
            test_fraction: 0.2,
            run: RunConfig::new(400, 0),
            models: vec![ModelKind::Fcmmsb, ModelKind::Vanilla, ModelKind::CommonNeighbors],
            neighborhood: Neighborhood::Union,
        }
    }
}

/// AUCs of one model on one seed; `None` where a fold has a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub model: ModelKind,
    pub seed: u64,
    pub test_auc: Option<f64>,
    pub train_auc_per_slice: Vec<Option<f64>>,
    pub test_auc_per_slice: Vec<Option<f64>>,
    /// ARI of the posterior-mode partitions against ground truth, per slice.
    pub ari_per_slice: Option<Vec<f64>>,
    /// Posterior-mean activeness, `(t, i)`.
    pub activeness: Option<Vec<f64>>,
}

/// Mean and sample standard deviation over seeds with a defined value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<MeanSd> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd, n })
    }
}

impl std::fmt::Display for MeanSd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub test_auc: Option<MeanSd>,
    pub train_auc_per_slice: Vec<Option<MeanSd>>,
    pub test_auc_per_slice: Vec<Option<MeanSd>>,
    pub ari_per_slice: Option<Vec<Option<MeanSd>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub results: Vec<SeedResult>,
    pub summaries: Vec<ModelSummary>,
}

fn auc_or_none(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    match auc(scores, labels) {
        Ok(a) => Ok(Some(a)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scores per slot for one model on a masked network.
fn score_slots(
    model: ModelKind,
    masked: &TemporalNetwork,
    fit: Option<&Fit>,
    slots: &[Slot],
    neighborhood: Neighborhood,
) -> Vec<f64> {
    match model {
        ModelKind::CommonNeighbors => slots
            .iter()
            .map(|&(t, i, j)| common_neighbors_score(masked, t, i, j, neighborhood) as f64)
            .collect(),
        _ => {
            let fit = fit.expect("sampler models have a fit");
            slots
                .iter()
                .map(|&(t, i, j)| fit.predictive_mean(t, i, j).unwrap_or(0.5))
                .collect()
        }
    }
}

fn slice_aucs(
    truth: &TemporalNetwork,
    slots: &[Slot],
    scores: &[f64],
    n_slices: usize,
) -> Result<Vec<Option<f64>>> {
    (0..n_slices)
        .map(|t| {
            let (s, l): (Vec<f64>, Vec<bool>) = slots
                .iter()
                .zip(scores)
                .filter(|((st, _, _), _)| *st == t)
                .map(|(&(st, i, j), &sc)| (sc, truth.edge(st, i, j) == 1))
                .unzip();
            auc_or_none(&s, &l)
        })
        .collect()
}

/// Runs one model on one seed's split.
pub fn evaluate_seed(
    network: &TemporalNetwork,
    hyper: &Hyperparams,
    config: &EvalConfig,
    model: ModelKind,
    seed: u64,
    truth: Option<&[Partition]>,
) -> Result<SeedResult> {
    let mut masked = network.clone();
    let mut split_rng = ChaCha8Rng::seed_from_u64(seed);
    let test = holdout_split(&mut masked, config.test_fraction, &mut split_rng)?;
    let train: Vec<Slot> = masked.modelled_slots().collect();

    let fit = match model {
        ModelKind::CommonNeighbors => None,
        ModelKind::Fcmmsb | ModelKind::Vanilla => {
            let mut run = RunConfig {
                seed,
                ..config.run.clone()
            };
            if model == ModelKind::Vanilla {
                run = vanilla_mmsb_mode(&run);
            } else {
                run.mode = Mode::Fc;
            }
            Some(run_inference(masked.clone(), hyper.clone(), run)?)
        }
    };

    let t_slices = network.n_slices();
    let test_scores = score_slots(model, &masked, fit.as_ref(), &test, config.neighborhood);
    let train_scores = score_slots(model, &masked, fit.as_ref(), &train, config.neighborhood);
    let test_labels: Vec<bool> = test.iter().map(|&(t, i, j)| network.edge(t, i, j) == 1).collect();

    let ari_per_slice = match (model, truth, fit.as_ref().and_then(|f| f.mode_partitions())) {
        (ModelKind::Fcmmsb, Some(truth), Some(mode)) => Some(
            truth
                .iter()
                .zip(mode)
                .map(|(a, b)| adjusted_rand_index(a, b))
                .collect::<Result<Vec<f64>>>()?,
        ),
        _ => None,
    };
    let activeness = fit.as_ref().and_then(|f| {
        let n = network.n_entities();
        (0..t_slices * n)
            .map(|k| f.activeness_mean(k / n, k % n))
            .collect::<Option<Vec<f64>>>()
    });

    Ok(SeedResult {
        model,
        seed,
        test_auc: auc_or_none(&test_scores, &test_labels)?,
        train_auc_per_slice: slice_aucs(network, &train, &train_scores, t_slices)?,
        test_auc_per_slice: slice_aucs(network, &test, &test_scores, t_slices)?,
        ari_per_slice,
        activeness,
    })
}

fn summarize(model: ModelKind, results: &[SeedResult], t_slices: usize) -> ModelSummary {
    let rs: Vec<&SeedResult> = results.iter().filter(|r| r.model == model).collect();
    let per_slice = |get: &dyn Fn(&SeedResult) -> &Vec<Option<f64>>| -> Vec<Option<MeanSd>> {
        (0..t_slices)
            .map(|t| MeanSd::from_values(rs.iter().filter_map(|r| get(r)[t])))
            .collect()
    };
    let ari_per_slice = rs.iter().any(|r| r.ari_per_slice.is_some()).then(|| {
        (0..t_slices)
            .map(|t| {
                MeanSd::from_values(
                    rs.iter()
                        .filter_map(|r| r.ari_per_slice.as_ref().map(|a| a[t])),
                )
            })
            .collect()
    });
    ModelSummary {
        model,
        test_auc: MeanSd::from_values(rs.iter().filter_map(|r| r.test_auc)),
        train_auc_per_slice: per_slice(&|r| &r.train_auc_per_slice),
        test_auc_per_slice: per_slice(&|r| &r.test_auc_per_slice),
        ari_per_slice,
    }
}

/// Evaluates every configured model on every seed (in parallel) and
/// aggregates mean ± sd.
pub fn evaluate(
    network: &TemporalNetwork,
    hyper: &Hyperparams,
    config: &EvalConfig,
    truth: Option<&[Partition]>,
) -> Result<EvalReport> {
    if config.seeds.is_empty() {
        return Err(Error::Config("evaluation needs at least one seed".into()));
    }
    if let Some(truth) = truth {
        if truth.len() != network.n_slices()
            || truth.iter().any(|p| p.len() != network.n_entities())
        {
            return Err(Error::Dimension("ground truth does not match the network".into()));
        }
    }
    let jobs: Vec<(ModelKind, u64)> = config
        .models
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<SeedResult> = jobs
        .par_iter()
        .map(|&(m, s)| evaluate_seed(network, hyper, config, m, s, truth))
        .collect::<Result<Vec<_>>>()?;
    let summaries = config
        .models
        .iter()
        .map(|&m| summarize(m, &results, network.n_slices()))
        .collect();
    Ok(EvalReport {
        config: config.clone(),
        results,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &labels).unwrap(), 0.75);
        assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &labels).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ari_examples() {
        let a = Partition::singletons(4);
        let b = Partition::one_block(4);
        assert_eq!(adjusted_rand_index(&a, &b).unwrap(), 0.0);
        let p = Partition::from_labels(&[0, 0, 1, 1, 2]);
        let q = Partition::from_labels(&[2, 2, 0, 0, 1]);
        assert_eq!(adjusted_rand_index(&p, &q).unwrap(), 1.0);
    }

    #[test]
    fn common_neighbors_examples() {
        let mut net = TemporalNetwork::new(4, 1, false, false).unwrap();
        assert_eq!(common_neighbors_score(&net, 0, 0, 1, Neighborhood::Union), 0);
        net.set_edge(0, 0, 2, true).unwrap();
        net.set_edge(0, 2, 1, true).unwrap();
        assert_eq!(common_neighbors_score(&net, 0, 0, 1, Neighborhood::Union), 1);
        net.set_edge(0, 0, 3, true).unwrap();
        net.set_edge(0, 3, 1, true).unwrap();
        assert_eq!(common_neighbors_score(&net, 0, 0, 1, Neighborhood::Union), 2);
        net.set_observed(0, 3, 1, false).unwrap();
        assert_eq!(common_neighbors_score(&net, 0, 0, 1, Neighborhood::Union), 1);
    }
}
