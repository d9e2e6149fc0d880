//! Path samplers for a single Markov jump process: forward simulation, the
//! uniformized construction, virtual-jump resampling and the
//! auxiliary-variable Gibbs sampler over posterior paths.

mod chain;
mod gibbs;
mod prior;

pub use chain::{run_chain, run_chain_while, run_chain_with, ChainConfig, ChainOutput, TraceRow};
pub use gibbs::{gibbs_step, GibbsSampler, MjpProblem, StepInfo};
pub use prior::{
    augment, drop_virtual, merge_times, sample_prior_path, sample_uniformized_prior,
    sample_virtual_jumps, uniformized_log_density, virtual_jump_log_density,
};
