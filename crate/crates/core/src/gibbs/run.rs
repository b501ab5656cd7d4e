use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hyperparams, TemporalNetwork};
use crate::partition::Partition;
use crate::pg::PgSampler;

use super::predict::{activeness, predict_all};
use super::state::{Mode, SamplerOptions, SamplerState, UpdateMask};
use super::sweep::{gibbs_sweep, log_joint, log_likelihood};

pub const DEFAULT_THIN: u64 = 5;

fn default_thin() -> u64 {
    DEFAULT_THIN
}

/// Length and bookkeeping of a sampler run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_iters: u64,
    /// Defaults to half of `n_iters`.
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Switch to a Gaussian PG approximation above this shape.
    #[serde(default)]
    pub pg_gaussian_above: Option<u64>,
    /// Recount sufficient statistics after every sweep (slow; for tests).
    #[serde(default)]
    pub check_counts: bool,
}

impl RunConfig {
    pub fn new(n_iters: u64, seed: u64) -> Self {
        RunConfig {
            n_iters,
            burn_in: None,
            thin: DEFAULT_THIN,
            seed,
            mode: Mode::Fc,
            pg_gaussian_above: None,
            check_counts: false,
        }
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.n_iters / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Parameter("thin must be at least 1".into()));
        }
        if self.burn_in() > self.n_iters {
            return Err(Error::Parameter(format!(
                "burn-in {} exceeds n_iters {}",
                self.burn_in(),
                self.n_iters
            )));
        }
        Ok(())
    }

    /// Whether the state after sweep `iteration` (1-based) is retained.
    pub fn retains(&self, iteration: u64) -> bool {
        let b = self.burn_in();
        iteration > b && (iteration - b) % self.thin == 0
    }

    pub fn sampler_options(&self) -> SamplerOptions {
        SamplerOptions {
            mode: self.mode,
            pg: PgSampler {
                gaussian_above: self.pg_gaussian_above,
            },
            updates: UpdateMask::ALL,
        }
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub log_joint: f64,
    pub log_likelihood: f64,
    pub communities: Vec<usize>,
    pub b_mean: f64,
    pub q_mean: f64,
    pub retained: bool,
}

/// The retained sample with the highest log joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub iteration: u64,
    pub log_joint: f64,
    pub coarse: Vec<Partition>,
}

/// Running sums over retained samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trace: Vec<TraceRecord>,
    pub n_retained: u64,
    /// `(t, i, j)` sums of predicted link probabilities; ineligible slots stay 0.
    pub prediction_sum: Vec<f64>,
    /// `(t, i)` sums of activeness.
    pub activeness_sum: Vec<f64>,
    pub b_sum: Vec<f64>,
    pub q_sum: Vec<f64>,
    pub mode: Option<ModeSample>,
}

/// A sampler run in progress or finished; also the checkpoint payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Run {
    config: RunConfig,
    state: SamplerState,
    summary: RunSummary,
}

/// A finished run.
pub type Fit = Run;

fn trace_record(state: &SamplerState, retained: bool) -> Result<TraceRecord> {
    let lj = log_joint(state)?;
    if !lj.is_finite() {
        return Err(Error::Numeric(format!(
            "log joint is {lj} at iteration {}",
            state.iteration()
        )));
    }
    let b = state.compat().b_matrix();
    let q = state.compat().q_vector();
    Ok(TraceRecord {
        iteration: state.iteration(),
        log_joint: lj,
        log_likelihood: log_likelihood(state),
        communities: state.chain().communities_per_slice(),
        b_mean: b.iter().sum::<f64>() / b.len() as f64,
        q_mean: q.iter().sum::<f64>() / q.len() as f64,
        retained,
    })
}

impl Run {
    pub fn new(network: TemporalNetwork, hyper: Hyperparams, config: RunConfig) -> Result<Self> {
        config.validate()?;
        let state = SamplerState::initialize(network, hyper, config.sampler_options(), config.seed)?;
        Run::from_state(state, config)
    }

    /// Starts a run from an explicit state (its options are replaced by the
    /// configuration's).
    pub fn from_state(mut state: SamplerState, config: RunConfig) -> Result<Self> {
        config.validate()?;
        state.set_options(config.sampler_options());
        let net = state.network();
        let (n, t_slices, k) = (net.n_entities(), net.n_slices(), state.n_groups());
        let summary = RunSummary {
            trace: vec![trace_record(&state, false)?],
            n_retained: 0,
            prediction_sum: vec![0.0; t_slices * n * n],
            activeness_sum: vec![0.0; t_slices * n],
            b_sum: vec![0.0; k * k],
            q_sum: vec![0.0; k],
            mode: None,
        };
        Ok(Run {
            config,
            state,
            summary,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }

    pub fn is_finished(&self) -> bool {
        self.state.iteration() >= self.config.n_iters
    }

    /// One sweep plus bookkeeping.
    pub fn step(&mut self) -> Result<()> {
        gibbs_sweep(&mut self.state)?;
        if self.config.check_counts {
            self.state.check_counts()?;
        }
        let it = self.state.iteration();
        let retained = self.config.retains(it);
        let record = trace_record(&self.state, retained)?;
        if retained {
            self.accumulate(&record);
        }
        self.summary.trace.push(record);
        Ok(())
    }

    fn accumulate(&mut self, record: &TraceRecord) {
        let s = &mut self.summary;
        s.n_retained += 1;
        for (acc, p) in s.prediction_sum.iter_mut().zip(predict_all(&self.state)) {
            if !p.is_nan() {
                *acc += p;
            }
        }
        let net = self.state.network();
        let n = net.n_entities();
        for t in 0..net.n_slices() {
            for i in 0..n {
                s.activeness_sum[t * n + i] += activeness(&self.state, t, i);
            }
        }
        for (acc, b) in s.b_sum.iter_mut().zip(self.state.compat().b_matrix()) {
            *acc += b;
        }
        for (acc, q) in s.q_sum.iter_mut().zip(self.state.compat().q_vector()) {
            *acc += q;
        }
        let better = s.mode.as_ref().is_none_or(|m| record.log_joint > m.log_joint);
        if better {
            s.mode = Some(ModeSample {
                iteration: record.iteration,
                log_joint: record.log_joint,
                coarse: self.state.chain().coarse_partitions().to_vec(),
            });
        }
    }

    /// Sweeps until `iteration` (capped at `n_iters`).
    pub fn run_until(&mut self, iteration: u64) -> Result<()> {
        let stop = iteration.min(self.config.n_iters);
        while self.state.iteration() < stop {
            self.step()?;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        self.run_until(self.config.n_iters)
    }

    /// Posterior predictive mean for one slot; `None` before any sample is
    /// retained.
    pub fn predictive_mean(&self, t: usize, i: usize, j: usize) -> Option<f64> {
        let n_ret = self.summary.n_retained;
        (n_ret > 0).then(|| {
            self.summary.prediction_sum[self.state.network().index(t, i, j)] / n_ret as f64
        })
    }

    /// All predictive means laid out `(t, i, j)`.
    pub fn predictive_means(&self) -> Option<Vec<f64>> {
        let n_ret = self.summary.n_retained as f64;
        (self.summary.n_retained > 0)
            .then(|| self.summary.prediction_sum.iter().map(|s| s / n_ret).collect())
    }

    pub fn activeness_mean(&self, t: usize, i: usize) -> Option<f64> {
        let n = self.state.network().n_entities();
        let n_ret = self.summary.n_retained;
        (n_ret > 0).then(|| self.summary.activeness_sum[t * n + i] / n_ret as f64)
    }

    pub fn b_mean(&self) -> Option<Vec<f64>> {
        let n_ret = self.summary.n_retained as f64;
        (self.summary.n_retained > 0).then(|| self.summary.b_sum.iter().map(|s| s / n_ret).collect())
    }

    pub fn q_mean(&self) -> Option<Vec<f64>> {
        let n_ret = self.summary.n_retained as f64;
        (self.summary.n_retained > 0).then(|| self.summary.q_sum.iter().map(|s| s / n_ret).collect())
    }

    /// Coarse partitions of the highest-scoring retained sample.
    pub fn mode_partitions(&self) -> Option<&[Partition]> {
        self.summary.mode.as_ref().map(|m| m.coarse.as_slice())
    }
}

/// Initializes and runs the sampler to completion.
pub fn run_inference(network: TemporalNetwork, hyper: Hyperparams, config: RunConfig) -> Result<Fit> {
    let mut run = Run::new(network, hyper, config)?;
    run.run_to_end()?;
    Ok(run)
}
