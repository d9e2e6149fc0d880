use rand::Rng;

use crate::process::{Interval, MjpPath};
use crate::scalar::{categorical, exponential, Scalar};

use super::model::CtbnModel;
use super::path::CtbnPath;

/// Forward simulation of a CTBN.
///
/// Competing-exponential form of the node race: the time to the next jump is
/// exponential in the sum of all nodes' current leave rates, the jumping node
/// is chosen proportionally to its leave rate, and its destination
/// proportionally to its off-diagonal rates. After a jump only the jumping
/// node and its children change rate.
pub fn sample_ctbn_prior<T: Scalar, R: Rng + ?Sized>(
    model: &CtbnModel<T>,
    interval: Interval<T>,
    rng: &mut R,
) -> CtbnPath<T> {
    let initial = model.sample_initial(rng);
    sample_ctbn_prior_from(model, initial, interval, rng)
}

/// Forward simulation from a given joint initial state.
pub fn sample_ctbn_prior_from<T: Scalar, R: Rng + ?Sized>(
    model: &CtbnModel<T>,
    mut state: Vec<usize>,
    interval: Interval<T>,
    rng: &mut R,
) -> CtbnPath<T> {
    let m = model.m();
    assert_eq!(state.len(), m, "one initial state per node");
    let mut times: Vec<Vec<T>> = vec![Vec::new(); m];
    let mut states: Vec<Vec<usize>> = state.iter().map(|&s| vec![s]).collect();
    let mut leave: Vec<T> = (0..m)
        .map(|k| model.generator_at(k, &state).leave_rate(state[k]))
        .collect();
    let mut t = interval.start;
    loop {
        let total: T = leave.iter().copied().sum();
        let next = t + exponential(total, rng);
        if !(next < interval.end) || next <= t {
            break;
        }
        t = next;
        let k = categorical(leave.iter().copied().enumerate(), rng).expect("positive total rate");
        let to = categorical(model.generator_at(k, &state).out_rates(state[k]), rng)
            .expect("positive leave rate");
        state[k] = to;
        times[k].push(t);
        states[k].push(to);
        leave[k] = model.generator_at(k, &state).leave_rate(to);
        for &c in model.children(k) {
            leave[c] = model.generator_at(c, &state).leave_rate(state[c]);
        }
    }
    let paths = times
        .into_iter()
        .zip(states)
        .map(|(tk, sk)| MjpPath::from_parts_unchecked(interval.start, interval.end, tk, sk))
        .collect();
    CtbnPath::from_parts_unchecked(paths)
}
