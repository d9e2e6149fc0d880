use rand::Rng;

use crate::error::{Error, Result};
use crate::process::{
    check_states, Generator, InitialDistribution, Interval, MjpPath, PiecewiseConstant,
    TransitionKernel, UniformizedPath,
};
use crate::scalar::{categorical, exponential, poisson_count, sorted_uniforms, Scalar};

/// Forward simulation of an MJP on `interval`: initial state from `initial`,
/// exponential holding times at the current leave rate, next state
/// proportional to the off-diagonal rates. Absorbing states hold forever.
pub fn sample_prior_path<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    initial: &InitialDistribution<T>,
    interval: Interval<T>,
    rng: &mut R,
) -> MjpPath<T> {
    assert_eq!(generator.n(), initial.n(), "initial distribution dimension");
    let state = initial.sample(rng);
    simulate_from(generator, state, interval, rng)
}

pub(crate) fn simulate_from<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    mut state: usize,
    interval: Interval<T>,
    rng: &mut R,
) -> MjpPath<T> {
    let mut t = interval.start;
    let mut times = Vec::new();
    let mut states = vec![state];
    loop {
        let next_t = t + exponential(generator.leave_rate(state), rng);
        if !(next_t < interval.end) || next_t <= t {
            break;
        }
        t = next_t;
        state = categorical(generator.out_rates(state), rng).expect("positive leave rate");
        times.push(t);
        states.push(state);
    }
    MjpPath::from_parts_unchecked(interval.start, interval.end, times, states)
}

fn check_strict<T: Scalar>(start: T, times: &[T]) -> Result<()> {
    let mut prev = start;
    for &t in times {
        if t <= prev {
            return Err(Error::TimeCollision(t.as_f64()));
        }
        prev = t;
    }
    Ok(())
}

/// Uniformized forward simulation: grid times from a homogeneous
/// Poisson(`omega`) process, states from the chain `B = I + A / omega`.
pub fn sample_uniformized_prior<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    initial: &InitialDistribution<T>,
    interval: Interval<T>,
    omega: T,
    rng: &mut R,
) -> Result<UniformizedPath<T>> {
    let kernel = TransitionKernel::uniformized(generator, omega)?;
    let count = poisson_count(omega * interval.length(), rng);
    let times = sorted_uniforms(count, interval.start, interval.end, rng);
    check_strict(interval.start, &times)?;
    let mut states = Vec::with_capacity(count + 1);
    let mut s = initial.sample(rng);
    states.push(s);
    for _ in 0..count {
        s = categorical(kernel.row(s), rng).expect("stochastic kernel row");
        states.push(s);
    }
    UniformizedPath::new(interval.start, interval.end, times, states, omega)
}

/// Removes virtual jumps from a uniformized path.
pub fn drop_virtual<T: Scalar>(path: &UniformizedPath<T>) -> MjpPath<T> {
    path.to_mjp_path()
}

/// Virtual jump times given an MJP path: a Poisson process whose intensity on
/// each constant piece is `omega - leave_rate(state)`.
pub fn sample_virtual_jumps<T: Scalar, R: Rng + ?Sized>(
    generator: &Generator<T>,
    path: &MjpPath<T>,
    omega: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    check_omega(generator, omega)?;
    let mut out = Vec::new();
    for (a, b, s) in path.segments() {
        let intensity = (omega - generator.leave_rate(s)).max(T::zero());
        let count = poisson_count(intensity * (b - a), rng);
        out.extend(sorted_uniforms(count, a, b, rng));
    }
    Ok(out)
}

pub(crate) fn check_omega<T: Scalar>(generator: &Generator<T>, omega: T) -> Result<()> {
    let max = generator.max_leave_rate();
    if !omega.is_finite() || omega < max {
        return Err(Error::InvalidPolicy(format!(
            "uniformization rate {omega} is below the maximum leave rate {max}"
        )));
    }
    Ok(())
}

/// Merges two sorted time sets; exact duplicates (or a time at the interval
/// start) are rejected.
pub fn merge_times<T: Scalar>(start: T, a: &[T], b: &[T]) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] < b[j]);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    check_strict(start, &out)?;
    Ok(out)
}

/// The uniformized representation `(V, W)` of a path plus virtual times.
pub fn augment<T: Scalar>(
    path: &MjpPath<T>,
    virtual_times: &[T],
    omega: T,
) -> Result<UniformizedPath<T>> {
    let grid = merge_times(path.t_start(), path.jump_times(), virtual_times)?;
    let mut states = Vec::with_capacity(grid.len() + 1);
    states.push(path.initial_state());
    for &t in &grid {
        states.push(path.state_at(t)?);
    }
    UniformizedPath::new(path.t_start(), path.t_end(), grid, states, omega)
}

/// Log density of an ordered set of virtual times given the path:
/// `sum_i u_i log r_i - integral of r(t) dt` with `r = omega - leave_rate(state)`.
pub fn virtual_jump_log_density<T: Scalar>(
    generator: &Generator<T>,
    path: &MjpPath<T>,
    virtual_times: &[T],
    omega: T,
) -> Result<T> {
    check_omega(generator, omega)?;
    check_states(generator.n(), path)?;
    let mut lp = T::zero();
    let mut k = 0;
    for (a, b, s) in path.segments() {
        let r = omega - generator.leave_rate(s);
        lp -= r * (b - a);
        while k < virtual_times.len() && virtual_times[k] < b {
            if virtual_times[k] < a {
                return Err(Error::InvalidArgument("virtual times must be sorted".into()));
            }
            lp += r.ln();
            k += 1;
        }
    }
    if k != virtual_times.len() {
        return Err(Error::InvalidArgument("virtual time beyond the interval".into()));
    }
    Ok(lp)
}

/// Log density of a uniformized path: the ordered Poisson(`omega`) grid term
/// `|W| log omega - omega * length` plus the chain term
/// `log pi(v_0) + sum_i log B(v_{i-1}, v_i)`.
pub fn uniformized_log_density<T: Scalar>(
    generator: &Generator<T>,
    initial: &InitialDistribution<T>,
    path: &UniformizedPath<T>,
) -> Result<T> {
    check_states(generator.n(), path)?;
    let omega = path.omega();
    let kernel = TransitionKernel::uniformized(generator, omega)?;
    let mut lp = T::from_count(path.times().len()) * omega.ln() - omega * path.duration();
    lp += initial.prob(path.initial_state()).ln();
    for w in path.states().windows(2) {
        lp += kernel.entry(w[0], w[1]).ln();
    }
    Ok(lp)
}
