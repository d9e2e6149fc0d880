use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A single timestamped observation, stored as its likelihood vector
/// `p(x | state)` over all states.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub time: T,
    likelihood: Vec<T>,
}

impl<T: Scalar> Observation<T> {
    pub fn likelihood(&self) -> &[T] {
        &self.likelihood
    }
}

/// Noisy observations of the process at discrete times.
///
/// The likelihood model is applied at construction ([`ObservationSet::from_model`]),
/// so downstream code only sees per-state likelihood vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet<T> {
    n: usize,
    items: Vec<Observation<T>>,
}

impl<T: Scalar> ObservationSet<T> {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            items: Vec::new(),
        }
    }

    /// Builds from `(time, likelihood vector)` pairs. Items are stably sorted by time.
    pub fn new(n: usize, items: Vec<(T, Vec<T>)>) -> Result<Self> {
        let mut obs = Vec::with_capacity(items.len());
        for (k, (time, likelihood)) in items.into_iter().enumerate() {
            if !time.is_finite() {
                return Err(Error::InvalidObservations(format!("observation {k} has time {time}")));
            }
            if likelihood.len() != n {
                return Err(Error::InvalidObservations(format!(
                    "observation {k} has {} likelihood entries, expected {n}",
                    likelihood.len()
                )));
            }
            if likelihood.iter().any(|&l| !l.is_finite() || l < T::zero()) {
                return Err(Error::InvalidObservations(format!(
                    "observation {k} has a negative or non-finite likelihood"
                )));
            }
            if !likelihood.iter().any(|&l| l > T::zero()) {
                return Err(Error::InvalidObservations(format!(
                    "observation {k} at t = {time} is impossible under every state"
                )));
            }
            obs.push(Observation { time, likelihood });
        }
        obs.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
        Ok(Self { n, items: obs })
    }

    /// Applies a likelihood model `(state, payload) -> p(payload | state)`.
    pub fn from_model<P, I, F>(n: usize, items: I, model: F) -> Result<Self>
    where
        I: IntoIterator<Item = (T, P)>,
        F: Fn(usize, &P) -> T,
    {
        let items = items
            .into_iter()
            .map(|(t, p)| (t, (0..n).map(|s| model(s, &p)).collect()))
            .collect();
        Self::new(n, items)
    }

    /// Noiseless observations of the exact state.
    pub fn exact<I>(n: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, usize)>,
    {
        let items: Vec<(T, usize)> = items.into_iter().collect();
        if let Some(&(_, s)) = items.iter().find(|&&(_, s)| s >= n) {
            return Err(Error::InvalidObservations(format!("observed state {s} out of range {n}")));
        }
        Self::from_model(n, items, |s, &x| if s == x { T::one() } else { T::zero() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation<T>> {
        self.items.iter()
    }

    pub fn times(&self) -> Vec<T> {
        self.items.iter().map(|o| o.time).collect()
    }

    pub(crate) fn check_within(&self, t_start: T, t_end: T) -> Result<()> {
        if let Some(o) = self.items.iter().find(|o| o.time < t_start || o.time > t_end) {
            return Err(Error::InvalidObservations(format!(
                "observation at t = {} lies outside [{t_start}, {t_end}]",
                o.time
            )));
        }
        Ok(())
    }

    /// Per-slot likelihoods on the grid `t_start < g_1 < ... < g_k < t_end`.
    ///
    /// Slot `i` covers `[g_i, g_{i+1})` (with `g_0 = t_start`); an observation at
    /// exactly `t_end` falls into the last slot. Returns a row-major
    /// `(k + 1) x n` matrix of products of observation likelihoods; slots
    /// without observations are all ones.
    pub fn slot_likelihoods(&self, grid: &[T]) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::one(); (grid.len() + 1) * n];
        for o in &self.items {
            let slot = grid.partition_point(|&g| g <= o.time);
            for (dst, &l) in out[slot * n..(slot + 1) * n].iter_mut().zip(&o.likelihood) {
                *dst *= l;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_impossible_payloads() {
        let r = ObservationSet::new(2, vec![(0.5, vec![0.0, 0.0])]);
        assert!(matches!(r, Err(Error::InvalidObservations(_))));
        assert!(ObservationSet::new(2, vec![(0.5, vec![1.0])]).is_err());
        assert!(ObservationSet::new(2, vec![(0.5, vec![-1.0, 1.0])]).is_err());
        assert!(ObservationSet::<f64>::exact(2, [(0.1, 2)]).is_err());
    }

    #[test]
    fn sorted_and_binned_half_open() {
        let obs = ObservationSet::exact(2, [(1.0, 1), (0.3, 0), (0.0, 0)]).unwrap();
        assert_eq!(obs.times(), vec![0.0, 0.3, 1.0]);
        // grid at 0.3: obs at 0.3 belongs to slot 1, obs at t_end to the last slot.
        let l = obs.slot_likelihoods(&[0.3]);
        assert_eq!(l, vec![1.0, 0.0, 0.0, 0.0]);
        let l = obs.slot_likelihoods(&[0.2, 0.5]);
        assert_eq!(l, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn model_closure() {
        let obs = ObservationSet::from_model(3, [(0.5, 1usize)], |s, &x| {
            if s == x {
                0.8
            } else {
                0.1
            }
        })
        .unwrap();
        assert_eq!(obs.iter().next().unwrap().likelihood(), &[0.1, 0.8, 0.1]);
    }
}
