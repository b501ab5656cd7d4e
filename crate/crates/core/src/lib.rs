//! Fragmentation-coagulation mixed-membership stochastic blockmodel.
//!
//! Dynamic networks are modelled at two levels: every entity belongs to one
//! community per time slice, with communities evolving through a discrete
//! fragmentation-coagulation process, while each link endpoint draws a group
//! from the entity's mixed membership. Inference is a Gibbs sampler with
//! Pólya-Gamma augmentation for the logistic link.

pub mod dist;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod pg;
pub mod sim;

pub use error::{Error, Result};
pub use gibbs::{run_inference, Fit, Run, RunConfig, SamplerState};
pub use linalg::Mat2;
pub use model::{
    link_logit, link_probability, sigmoid, CompatibilityParams, GroupAssignments, Hyperparams,
    LinkContext, MembershipState, TemporalNetwork,
};
pub use partition::{Partition, PartitionChain};
pub use pg::{pg_mean, pg_variance, sample_pg, PgParams, PgSampler};
