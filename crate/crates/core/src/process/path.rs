use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A right-continuous, piecewise-constant trajectory on `[t_start, t_end]`.
///
/// `states()[0]` holds on `[t_start, times()[0])` and `states()[i]` on
/// `[times()[i-1], times()[i])`; the final state holds through `t_end`.
pub trait PiecewiseConstant<T: Scalar> {
    fn t_start(&self) -> T;
    fn t_end(&self) -> T;
    fn times(&self) -> &[T];
    fn states(&self) -> &[usize];

    /// State at time `t`; a jump time belongs to the segment it starts.
    fn state_at(&self, t: T) -> Result<usize> {
        if !(t >= self.t_start() && t <= self.t_end()) {
            return Err(Error::OutOfDomain {
                time: t.as_f64(),
                start: self.t_start().as_f64(),
                end: self.t_end().as_f64(),
            });
        }
        let idx = self.times().partition_point(|&ti| ti <= t);
        Ok(self.states()[idx])
    }

    fn initial_state(&self) -> usize {
        self.states()[0]
    }

    fn final_state(&self) -> usize {
        *self.states().last().expect("paths hold at least one state")
    }

    /// `(start, end, state)` for each constant piece, in time order.
    fn segments(&self) -> Segments<'_, T> {
        Segments {
            t_start: self.t_start(),
            t_end: self.t_end(),
            times: self.times(),
            states: self.states(),
            idx: 0,
        }
    }

    fn duration(&self) -> T {
        self.t_end() - self.t_start()
    }
}

pub struct Segments<'a, T> {
    t_start: T,
    t_end: T,
    times: &'a [T],
    states: &'a [usize],
    idx: usize,
}

impl<T: Scalar> Iterator for Segments<'_, T> {
    type Item = (T, T, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.idx;
        if i >= self.states.len() {
            return None;
        }
        self.idx += 1;
        let a = if i == 0 { self.t_start } else { self.times[i - 1] };
        let b = if i < self.times.len() { self.times[i] } else { self.t_end };
        Some((a, b, self.states[i]))
    }
}

fn check_layout<T: Scalar>(t_start: T, t_end: T, times: &[T], states: &[usize]) -> Result<()> {
    if !t_start.is_finite() || !t_end.is_finite() || t_start > t_end {
        return Err(Error::InvalidPath(format!("bad interval [{t_start}, {t_end}]")));
    }
    if states.len() != times.len() + 1 {
        return Err(Error::InvalidPath(format!(
            "{} times need {} states, got {}",
            times.len(),
            times.len() + 1,
            states.len()
        )));
    }
    let mut prev = t_start;
    for &t in times {
        if !(t > prev) {
            return Err(Error::InvalidPath(format!(
                "time {t} does not strictly follow {prev}"
            )));
        }
        prev = t;
    }
    if let Some(&last) = times.last() {
        if !(last < t_end) {
            return Err(Error::InvalidPath(format!("time {last} is not before t_end = {t_end}")));
        }
    }
    Ok(())
}

/// Markov jump process path `(S, T)`: no self-transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MjpPath<T> {
    t_start: T,
    t_end: T,
    jump_times: Vec<T>,
    states: Vec<usize>,
}

impl<T: Scalar> MjpPath<T> {
    pub fn new(t_start: T, t_end: T, jump_times: Vec<T>, states: Vec<usize>) -> Result<Self> {
        check_layout(t_start, t_end, &jump_times, &states)?;
        if let Some(w) = states.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!(
                "state {} repeats across jump {}",
                states[w],
                w + 1
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            jump_times,
            states,
        })
    }

    pub fn constant(t_start: T, t_end: T, state: usize) -> Result<Self> {
        Self::new(t_start, t_end, Vec::new(), vec![state])
    }

    pub(crate) fn from_parts_unchecked(
        t_start: T,
        t_end: T,
        jump_times: Vec<T>,
        states: Vec<usize>,
    ) -> Self {
        debug_assert!(Self::new(t_start, t_end, jump_times.clone(), states.clone()).is_ok());
        Self {
            t_start,
            t_end,
            jump_times,
            states,
        }
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }

    pub fn num_jumps(&self) -> usize {
        self.jump_times.len()
    }

    pub fn max_state(&self) -> usize {
        self.states.iter().copied().max().unwrap_or(0)
    }
}

impl<T: Scalar> PiecewiseConstant<T> for MjpPath<T> {
    fn t_start(&self) -> T {
        self.t_start
    }
    fn t_end(&self) -> T {
        self.t_end
    }
    fn times(&self) -> &[T] {
        &self.jump_times
    }
    fn states(&self) -> &[usize] {
        &self.states
    }
}

/// Uniformized path `(V, W)`: Poisson grid times with states that may repeat
/// (virtual jumps), plus the uniformization rate used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedPath<T> {
    t_start: T,
    t_end: T,
    times: Vec<T>,
    states: Vec<usize>,
    omega: T,
}

impl<T: Scalar> UniformizedPath<T> {
    pub fn new(t_start: T, t_end: T, times: Vec<T>, states: Vec<usize>, omega: T) -> Result<Self> {
        check_layout(t_start, t_end, &times, &states)?;
        if !omega.is_finite() || omega < T::zero() {
            return Err(Error::InvalidPath(format!("uniformization rate {omega} is invalid")));
        }
        Ok(Self {
            t_start,
            t_end,
            times,
            states,
            omega,
        })
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    /// Grid times whose state repeats the previous one.
    pub fn virtual_times(&self) -> Vec<T> {
        self.times
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.states[i + 1] == self.states[i])
            .map(|(_, &t)| t)
            .collect()
    }

    /// Drops every virtual jump, leaving the underlying MJP path.
    pub fn to_mjp_path(&self) -> MjpPath<T> {
        let mut times = Vec::new();
        let mut states = vec![self.states[0]];
        for (i, &t) in self.times.iter().enumerate() {
            let s = self.states[i + 1];
            if s != *states.last().expect("nonempty") {
                times.push(t);
                states.push(s);
            }
        }
        MjpPath::from_parts_unchecked(self.t_start, self.t_end, times, states)
    }
}

impl<T: Scalar> PiecewiseConstant<T> for UniformizedPath<T> {
    fn t_start(&self) -> T {
        self.t_start
    }
    fn t_end(&self) -> T {
        self.t_end
    }
    fn times(&self) -> &[T] {
        &self.times
    }
    fn states(&self) -> &[usize] {
        &self.states
    }
}
