use crate::diagnostics::SufficientStats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::distribution::InitialDistribution;
use super::generator::Generator;
use super::path::{MjpPath, PiecewiseConstant};

/// Log of zero probability. Propagates through sums like any other value.
pub fn log_zero<T: Scalar>() -> T {
    T::neg_infinity()
}

pub fn is_log_zero<T: Scalar>(x: T) -> bool {
    x == T::neg_infinity()
}

pub(crate) fn check_states<T: Scalar>(n: usize, path: &impl PiecewiseConstant<T>) -> Result<()> {
    if let Some(&s) = path.states().iter().find(|&&s| s >= n) {
        return Err(Error::InvalidPath(format!("state {s} out of range for dimension {n}")));
    }
    Ok(())
}

/// Log density of an MJP path:
/// `log pi(s_0) + sum_i log q(s_{i-1} -> s_i) - sum_segments leave_rate(s) * length`.
///
/// A jump along a zero rate (or a zero initial probability) gives [`log_zero`].
pub fn path_log_density<T: Scalar>(
    generator: &Generator<T>,
    initial: &InitialDistribution<T>,
    path: &MjpPath<T>,
) -> Result<T> {
    check_states(generator.n(), path)?;
    if initial.n() != generator.n() {
        return Err(Error::InvalidArgument("initial distribution dimension mismatch".into()));
    }
    let mut lp = initial.prob(path.initial_state()).ln();
    lp += path_log_density_given_start(generator, path);
    Ok(lp)
}

/// Same as [`path_log_density`] without the initial-distribution term.
pub(crate) fn path_log_density_given_start<T: Scalar>(
    generator: &Generator<T>,
    path: &MjpPath<T>,
) -> T {
    let mut lp = T::zero();
    for w in path.states().windows(2) {
        lp += generator.rate(w[0], w[1]).ln();
    }
    for (a, b, s) in path.segments() {
        lp -= generator.leave_rate(s) * (b - a);
    }
    lp
}

/// Dwell time per state and count per ordered transition of a single path.
pub fn sufficient_stats<T: Scalar>(n: usize, path: &MjpPath<T>) -> Result<SufficientStats<T>> {
    check_states(n, path)?;
    let mut stats = SufficientStats::zeros(n);
    for (a, b, s) in path.segments() {
        stats.dwell[s] += b - a;
    }
    for w in path.states().windows(2) {
        stats.transitions[w[0] * n + w[1]] += T::one();
    }
    Ok(stats)
}
