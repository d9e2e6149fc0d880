//! Domain types for Markov jump processes: generators, paths, kernels,
//! observations and the uniformization policy, plus the path density.

mod density;
mod distribution;
mod generator;
mod kernel;
mod observation;
mod path;
mod policy;

pub use density::{is_log_zero, log_zero, path_log_density, sufficient_stats};
pub(crate) use density::check_states;
pub use distribution::InitialDistribution;
pub use generator::{Generator, InRateIter, Layout, RateIter};
pub use kernel::{KernelLine, TransitionKernel};
pub use observation::{Observation, ObservationSet};
pub use path::{MjpPath, PiecewiseConstant, Segments, UniformizedPath};
pub use policy::UniformizationPolicy;

use crate::error::Result;
use crate::scalar::Scalar;

/// `B = I + A / omega`; see [`TransitionKernel::uniformized`].
pub fn build_kernel<T: Scalar>(generator: &Generator<T>, omega: T) -> Result<TransitionKernel<T>> {
    TransitionKernel::uniformized(generator, omega)
}

/// State of a path at time `t`.
pub fn state_at<T: Scalar, P: PiecewiseConstant<T>>(path: &P, t: T) -> Result<usize> {
    path.state_at(t)
}

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub start: T,
    pub end: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(start: T, end: T) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start > end {
            return Err(crate::Error::InvalidArgument(format!(
                "bad interval [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn length(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.start && t <= self.end
    }
}
