//! Forward filtering-backward sampling for a finite-horizon discrete HMM with
//! per-step transition kernels and per-slot likelihood vectors.
//!
//! Forward messages are normalized at every slot and the log normalizers are
//! accumulated separately, so horizons of many thousands of slots do not
//! underflow. Cost is one kernel application per step: `O(n^2)` for dense
//! kernels, `O(nnz)` for sparse ones.

use rand::Rng;

use crate::error::{Error, Result};
use crate::process::TransitionKernel;
use crate::scalar::{categorical, Scalar};

/// Chain over `L` slots: an initial distribution, `L - 1` kernels (kernel `i`
/// moves slot `i` to slot `i + 1`) and `L` likelihood vectors.
#[derive(Debug, Clone)]
pub struct HmmProblem<'a, T> {
    n: usize,
    initial: &'a [T],
    kernels: Vec<&'a TransitionKernel<T>>,
    likelihoods: Vec<T>,
}

impl<'a, T: Scalar> HmmProblem<'a, T> {
    /// `likelihoods` is row-major `L x n`, where `L = kernels.len() + 1`.
    pub fn new(
        initial: &'a [T],
        kernels: Vec<&'a TransitionKernel<T>>,
        likelihoods: Vec<T>,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::InvalidArgument("HMM needs at least one state".into()));
        }
        let horizon = kernels.len() + 1;
        if likelihoods.len() != horizon * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} likelihood entries for {horizon} slots, got {}",
                horizon * n,
                likelihoods.len()
            )));
        }
        if let Some(i) = kernels.iter().position(|k| k.n() != n) {
            return Err(Error::InvalidArgument(format!("kernel {i} has the wrong dimension")));
        }
        if likelihoods.iter().any(|&l| !l.is_finite() || l < T::zero()) {
            return Err(Error::InvalidArgument("likelihoods must be finite and nonnegative".into()));
        }
        for (step, slot) in likelihoods.chunks_exact(n).enumerate() {
            if !slot.iter().any(|&l| l > T::zero()) {
                return Err(Error::InconsistentEvidence { step });
            }
        }
        Ok(Self {
            n,
            initial,
            kernels,
            likelihoods,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.kernels.len() + 1
    }

    pub fn likelihood(&self, slot: usize) -> &[T] {
        &self.likelihoods[slot * self.n..(slot + 1) * self.n]
    }

    pub fn kernel(&self, step: usize) -> &TransitionKernel<T> {
        self.kernels[step]
    }
}

/// Normalized filtered distributions, one per slot.
#[derive(Debug, Clone)]
pub struct ForwardMessages<T> {
    n: usize,
    messages: Vec<T>,
    /// Log probability of all likelihood terms under the chain.
    pub log_evidence: T,
}

impl<T: Scalar> ForwardMessages<T> {
    pub fn message(&self, slot: usize) -> &[T] {
        &self.messages[slot * self.n..(slot + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.messages.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

/// Filtered distribution at each slot given likelihood terms up to and
/// including that slot. Fails with [`Error::InconsistentEvidence`] at the
/// first slot (0-based) whose unnormalized message has no mass.
pub fn forward_filter<T: Scalar>(p: &HmmProblem<'_, T>) -> Result<ForwardMessages<T>> {
    let n = p.n;
    let horizon = p.horizon();
    let mut messages = vec![T::zero(); horizon * n];
    let mut log_evidence = T::zero();

    let mut normalize = |slot: usize, msg: &mut [T]| -> Result<()> {
        let z: T = msg.iter().copied().sum();
        if !(z > T::zero()) || !z.is_finite() {
            return Err(Error::InconsistentEvidence { step: slot });
        }
        let inv = T::one() / z;
        msg.iter_mut().for_each(|m| *m *= inv);
        log_evidence += z.ln();
        Ok(())
    };

    {
        let first = &mut messages[..n];
        for ((m, &pi), &l) in first.iter_mut().zip(p.initial).zip(p.likelihood(0)) {
            *m = pi * l;
        }
        normalize(0, first)?;
    }
    for step in 1..horizon {
        let (done, rest) = messages.split_at_mut(step * n);
        let prev = &done[(step - 1) * n..];
        let cur = &mut rest[..n];
        p.kernels[step - 1].propagate(prev, cur);
        for (m, &l) in cur.iter_mut().zip(p.likelihood(step)) {
            *m = (*m * l).max(T::zero());
        }
        normalize(step, cur)?;
    }
    Ok(ForwardMessages {
        n,
        messages,
        log_evidence,
    })
}

/// Draws a state sequence from the exact posterior of the chain, one uniform
/// per slot, walking backwards from the last slot.
pub fn backward_sample<T: Scalar, R: Rng + ?Sized>(
    p: &HmmProblem<'_, T>,
    messages: &ForwardMessages<T>,
    rng: &mut R,
) -> Vec<usize> {
    let horizon = p.horizon();
    debug_assert_eq!(messages.len(), horizon);
    let mut states = vec![0usize; horizon];
    let last = messages.message(horizon - 1);
    states[horizon - 1] = categorical(last.iter().copied().enumerate(), rng)
        .expect("forward filter produced a normalized final message");
    for slot in (0..horizon - 1).rev() {
        let msg = messages.message(slot);
        let next = states[slot + 1];
        let weights = p.kernels[slot].column(next).map(|(s, b)| (s, msg[s] * b));
        states[slot] = categorical(weights, rng)
            .expect("backward step has positive mass whenever forward filtering succeeded");
    }
    states
}

/// Forward filter then backward sample.
pub fn sample_posterior<T: Scalar, R: Rng + ?Sized>(
    p: &HmmProblem<'_, T>,
    rng: &mut R,
) -> Result<(Vec<usize>, T)> {
    let msgs = forward_filter(p)?;
    let states = backward_sample(p, &msgs, rng);
    Ok((states, msgs.log_evidence))
}
