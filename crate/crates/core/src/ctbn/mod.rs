//! Continuous-time Bayesian networks: model, forward simulation, rate
//! timelines and the per-node Gibbs update that resamples a whole node path
//! given its Markov blanket.

mod flatten;
mod gibbs;
mod model;
mod path;
mod prior;
mod timeline;

pub use flatten::{
    amalgamate_joint_stats, ctbn_sufficient_stats, ctbn_to_joint_path, flatten_ctbn,
    flatten_observations, joint_to_ctbn_path, CtbnStats,
};
pub use gibbs::{
    ctbn_gibbs_node_update, ctbn_gibbs_sweep, run_ctbn_chain_while, run_ctbn_chain_with, CtbnChainConfig,
    CtbnGibbsSampler, CtbnProblem, CtbnTraceRow, SweepOrder,
};
pub use model::{CtbnModel, CtbnNode, InitialSpec};
pub use path::{CtbnObservations, CtbnPath};
pub use prior::{sample_ctbn_prior, sample_ctbn_prior_from};
pub use timeline::{child_segment_loglik, node_rate_timeline, RateTimeline};
