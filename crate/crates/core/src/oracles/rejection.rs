use rand::Rng;

use crate::error::{Error, Result};
use crate::process::{Generator, Interval, MjpPath, PiecewiseConstant};
use crate::scalar::Scalar;

/// An accepted endpoint-conditioned path and how many draws were rejected
/// before it.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraw<T> {
    pub path: MjpPath<T>,
    pub rejections: usize,
}

/// Plain Gillespie simulation, written separately from the sampler's own
/// forward simulator so the two can check each other.
fn gillespie<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    start: usize,
    interval: Interval<T>,
    rng: &mut R,
) -> Result<MjpPath<T>> {
    let mut t = interval.start;
    let mut state = start;
    let mut times = Vec::new();
    let mut states = vec![start];
    loop {
        let rate = generator.leave_rate(state);
        if rate <= T::zero() {
            break;
        }
        let u: T = T::one() - T::unit(rng);
        t += -u.ln() / rate;
        if t >= interval.end {
            break;
        }
        let target = T::unit(rng) * rate;
        let mut acc = T::zero();
        let mut next = None;
        let mut last = state;
        for (j, q) in generator.out_rates(state) {
            acc += q;
            last = j;
            if target < acc {
                next = Some(j);
                break;
            }
        }
        state = next.unwrap_or(last);
        times.push(t);
        states.push(state);
    }
    MjpPath::new(interval.start, interval.end, times, states)
}

/// Forward-simulates from `s_start` until a path ends in `s_end`.
///
/// Fails with [`Error::AttemptsExhausted`] after `max_attempts` draws, which
/// signals an unreachable or very unlikely endpoint.
pub fn rejection_sample_endpoint<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    s_start: usize,
    s_end: usize,
    interval: Interval<T>,
    max_attempts: usize,
    rng: &mut R,
) -> Result<RejectionDraw<T>> {
    let n = generator.n();
    if s_start >= n || s_end >= n {
        return Err(Error::InvalidArgument(format!(
            "endpoints ({s_start}, {s_end}) out of range for {n} states"
        )));
    }
    for rejections in 0..max_attempts {
        let path = gillespie(generator, s_start, interval, rng)?;
        if path.final_state() == s_end {
            return Ok(RejectionDraw { path, rejections });
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
        what: format!("no path from {s_start} ended in {s_end}"),
    })
}
