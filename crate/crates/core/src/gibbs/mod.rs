//! Posterior sampling by Gibbs sweeps with Pólya-Gamma augmentation.

mod checkpoint;
mod conditionals;
mod predict;
mod run;
mod state;
mod sweep;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use conditionals::{
    emission_log_weights, group_log_weights, pair_posterior, sample_community_chain,
    sample_diag_and_adjust, sample_group_indicator, sample_offdiag_pair, sample_sigma_pair,
    scalar_posterior, Direction,
};
pub use predict::{activeness, predict_all, predict_link, theta_hat};
pub use run::{run_inference, Fit, ModeSample, Run, RunConfig, RunSummary, TraceRecord, DEFAULT_THIN};
pub use state::{
    sample_compat_prior, CountCaches, Mode, PgAux, RngState, SamplerOptions, SamplerState, SlotCell,
    UpdateMask,
};
pub use sweep::{gibbs_sweep, log_compat_prior, log_group_prior, log_joint, log_likelihood};
