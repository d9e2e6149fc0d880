use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{categorical, Scalar};

/// Distribution over the state at the start of the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution<T> {
    weights: Vec<T>,
}

impl<T: Scalar> InitialDistribution<T> {
    /// Weights must be nonnegative and sum to one.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < T::zero()) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn normalized(mut weights: Vec<T>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < T::zero()) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidDistribution("weights have zero total mass".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalized(vec![T::one(); n])
    }

    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(Error::InvalidDistribution(format!("state {state} out of range {n}")));
        }
        let mut w = vec![T::zero(); n];
        w[state] = T::one();
        Ok(Self { weights: w })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn prob(&self, state: usize) -> T {
        self.weights[state]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        categorical(self.weights.iter().copied().enumerate(), rng)
            .expect("normalized distribution has positive mass")
    }
}
