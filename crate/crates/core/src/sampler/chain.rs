use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::process::MjpPath;
use crate::scalar::Scalar;

use super::gibbs::{observation_consistent_path, GibbsSampler, MjpProblem, StepInfo};
use super::prior::sample_prior_path;

/// Settings for [`run_chain_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    /// Total Gibbs steps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Restarts allowed when the prior-drawn starting path cannot explain the
    /// observations.
    pub init_attempts: usize,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize) -> Result<Self> {
        if iterations <= burn_in {
            return Err(Error::InvalidArgument(format!(
                "iterations ({iterations}) must exceed burn-in ({burn_in})"
            )));
        }
        Ok(Self {
            iterations,
            burn_in,
            init_attempts: 10,
        })
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burn_in
    }
}

/// One line of `trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub grid_size: usize,
    pub log_evidence: f64,
    /// Seconds since the chain started.
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput<T> {
    pub samples: Vec<MjpPath<T>>,
    pub trace: Vec<TraceRow>,
}

/// Runs the Gibbs sampler and keeps every post-burn-in path.
pub fn run_chain<T: Scalar, R: Rng + ?Sized>(
    problem: &MjpProblem<T>,
    iterations: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<ChainOutput<T>> {
    let config = ChainConfig::new(iterations, burn_in)?;
    let mut samples = Vec::with_capacity(config.retained());
    let trace = run_chain_with(problem, &config, rng, |_, path| samples.push(path.clone()))?;
    Ok(ChainOutput { samples, trace })
}

/// Streaming form of [`run_chain`]: `on_sample(iteration, path)` sees each
/// retained path. Returns the per-iteration trace.
///
/// The chain starts from a prior draw that ignores the observations. If the
/// first step finds the observations inexplicable on that grid, it restarts
/// from an observation-consistent path, up to `init_attempts` times, each on
/// a denser grid; if all fail the last inconsistency error is returned.
pub fn run_chain_with<T, R, F>(
    problem: &MjpProblem<T>,
    config: &ChainConfig,
    rng: &mut R,
    mut on_sample: F,
) -> Result<Vec<TraceRow>>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(usize, &MjpPath<T>),
{
    run_chain_while(problem, config, rng, |it, path| {
        on_sample(it, path);
        true
    })
}

/// Like [`run_chain_with`], but stops early once `on_sample` returns `false`.
pub fn run_chain_while<T, R, F>(
    problem: &MjpProblem<T>,
    config: &ChainConfig,
    rng: &mut R,
    mut on_sample: F,
) -> Result<Vec<TraceRow>>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(usize, &MjpPath<T>) -> bool,
{
    if config.iterations <= config.burn_in {
        return Err(Error::InvalidArgument("iterations must exceed burn-in".into()));
    }
    let sampler = GibbsSampler::new(problem)?;
    let start = Instant::now();
    let mut trace = Vec::with_capacity(config.iterations);

    let prior = sample_prior_path(&problem.generator, &problem.initial, problem.interval, rng);
    let (mut path, first) = first_step(&sampler, prior, config.init_attempts, rng)?;
    record(&mut trace, 0, first, start);
    if config.burn_in == 0 && !on_sample(0, &path) {
        return Ok(trace);
    }

    for it in 1..config.iterations {
        let (next, info) = sampler.step(&path, rng)?;
        path = next;
        record(&mut trace, it, info, start);
        if it >= config.burn_in && !on_sample(it, &path) {
            break;
        }
    }
    Ok(trace)
}

fn first_step<T: Scalar, R: Rng + ?Sized>(
    sampler: &GibbsSampler<'_, T>,
    prior: MjpPath<T>,
    attempts: usize,
    rng: &mut R,
) -> Result<(MjpPath<T>, StepInfo<T>)> {
    let mut last = match sampler.step(&prior, rng) {
        Err(e @ Error::InconsistentEvidence { .. }) => e,
        other => return other,
    };
    for attempt in 1..=attempts {
        let start = observation_consistent_path(sampler.problem(), sampler.omega(), attempt as u32, rng);
        match start {
            Ok(path) => return sampler.step(&path, rng),
            Err(e @ Error::InconsistentEvidence { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn record<T: Scalar>(trace: &mut Vec<TraceRow>, iteration: usize, info: StepInfo<T>, start: Instant) {
    trace.push(TraceRow {
        iteration,
        grid_size: info.grid_size,
        log_evidence: info.log_evidence.as_f64(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    });
}
