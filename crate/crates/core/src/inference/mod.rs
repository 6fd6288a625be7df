//! Posterior kernels, the Metropolis-within-Gibbs sampler, and the MLE and
//! conjugate-prior baselines.

mod conjugate;
mod kernel;
mod mle;
mod mwg;
mod proposal;

pub use conjugate::{conjugate_sample, NiwHyperparams};
pub use kernel::{ConditionalTarget, PosteriorKernel};
pub use mle::{mle_estimate, MleEstimate};
pub use mwg::{mwg_sample, mwg_sample_target, mwg_sweep, Chain};
pub use proposal::{
    CandidateFamily, ProposalFamily, ProposalSet, ProposalSpec, ProposalTuning, VolatilityCandidate,
};
