use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ctbn::{
    run_ctbn_chain_with, CtbnChainConfig, CtbnModel, CtbnNode, CtbnObservations, CtbnPath,
    CtbnProblem, InitialSpec,
};
use crate::error::{Error, Result};
use crate::process::{Generator, InitialDistribution, Interval, Layout, PiecewiseConstant};
use crate::scalar::categorical;

use super::SamplerSettings;

/// Predator-prey CTBN with populations truncated to `0..=cap`.
///
/// Prey `x` is born at rate `alpha x` and eaten at rate `beta x y`; predators
/// `y` are born at rate `delta x y` and die at rate `gamma y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotkaVolterraSpec {
    pub cap: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Length of the interval `[0, interval]`.
    pub interval: f64,
    pub initial_prey: usize,
    pub initial_predator: usize,
    /// Times of the noisy observations; the state at `t = 0` is always
    /// observed exactly.
    pub observation_times: Vec<f64>,
    /// Spacing of the posterior band grid.
    #[serde(default = "default_band_step")]
    pub band_step: f64,
}

fn default_band_step() -> f64 {
    5.0
}

impl LotkaVolterraSpec {
    /// Desk-scale preset: 30 individuals per species over `[0, 600]`, with
    /// noisy observations every 50 time units until `t = 300`.
    pub fn desk() -> Self {
        Self {
            cap: 30,
            alpha: 5e-4,
            beta: 1e-4,
            gamma: 5e-4,
            delta: 1e-4,
            interval: 600.0,
            initial_prey: 15,
            initial_predator: 10,
            observation_times: (1..=6).map(|i| 50.0 * i as f64).collect(),
            band_step: 5.0,
        }
    }

    /// Larger preset: 200 individuals over `[0, 3000]`, noisy observations
    /// every 100 time units until `t = 1500`.
    pub fn full() -> Self {
        Self {
            cap: 200,
            interval: 3000.0,
            initial_prey: 60,
            initial_predator: 40,
            observation_times: (1..=15).map(|i| 100.0 * i as f64).collect(),
            band_step: 20.0,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.alpha, self.beta, self.gamma, self.delta];
        if self.cap < 1 {
            return Err(Error::Config("cap must be at least 1".into()));
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("rates must be finite and nonnegative".into()));
        }
        if !(self.interval > 0.0) || !self.interval.is_finite() {
            return Err(Error::Config("interval must be positive".into()));
        }
        if self.initial_prey > self.cap || self.initial_predator > self.cap {
            return Err(Error::Config("initial populations exceed the cap".into()));
        }
        if self.observation_times.iter().any(|&t| !(t >= 0.0 && t <= self.interval)) {
            return Err(Error::Config("observation times must lie in the interval".into()));
        }
        if !(self.band_step > 0.0) {
            return Err(Error::Config("band_step must be positive".into()));
        }
        Ok(())
    }

    /// End of the observed region: the last observation time.
    pub fn observed_until(&self) -> f64 {
        self.observation_times.iter().copied().fold(0.0, f64::max)
    }
}

/// Two-node cyclic CTBN: node 0 is prey (parent: predator), node 1 is
/// predator (parent: prey). Generators are tridiagonal and stored sparse;
/// moves that would leave `0..=cap` get rate zero.
pub fn build_lotka_volterra(spec: &LotkaVolterraSpec) -> Result<CtbnModel<f64>> {
    let n = spec.cap + 1;
    let birth_death = |up: &dyn Fn(usize) -> f64, down: &dyn Fn(usize) -> f64| {
        let mut rates = Vec::with_capacity(2 * n);
        for s in 0..n {
            if s < spec.cap {
                rates.push((s, s + 1, up(s)));
            }
            if s > 0 {
                rates.push((s, s - 1, down(s)));
            }
        }
        Generator::from_rates(n, rates, Layout::Sparse)
    };
    let prey = (0..n)
        .map(|y| {
            birth_death(
                &|x| spec.alpha * x as f64,
                &|x| spec.beta * x as f64 * y as f64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let predator = (0..n)
        .map(|x| {
            birth_death(
                &|y| spec.delta * x as f64 * y as f64,
                &|y| spec.gamma * y as f64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let uniform = InitialDistribution::uniform(n)?;
    CtbnModel::new(
        vec![
            CtbnNode::new("prey", n, vec![1], prey),
            CtbnNode::new("predator", n, vec![0], predator),
        ],
        InitialSpec::Product(vec![uniform.clone(), uniform]),
    )
}

fn noise_weight(x_obs: usize, s: usize) -> f64 {
    let d = x_obs.abs_diff(s) as i32;
    1.0 / (2f64.powi(d) + 1e-6)
}

/// `p(x_obs | s)`: proportional to `1 / (2^|x_obs - s| + 1e-6)`, normalized
/// over `x_obs` in `0..=cap`.
pub fn lv_noise_likelihood(x_obs: usize, s: usize, cap: usize) -> f64 {
    let z: f64 = (0..=cap).map(|x| noise_weight(x, s)).sum();
    noise_weight(x_obs, s) / z
}

/// Likelihood vector over all states for one noisy count, scaled to sum to
/// one.
pub fn lv_likelihood_vector(x_obs: usize, cap: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=cap).map(|s| lv_noise_likelihood(x_obs, s, cap)).collect();
    let z: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= z);
    v
}

/// Draws a noisy count given the true state.
pub fn lv_sample_noise<R: Rng + ?Sized>(s: usize, cap: usize, rng: &mut R) -> usize {
    categorical((0..=cap).map(|x| (x, noise_weight(x, s))), rng).expect("positive weights")
}

/// Truth path, observations and model for one run.
#[derive(Debug, Clone)]
pub struct LvDataset {
    pub model: CtbnModel<f64>,
    pub truth: CtbnPath<f64>,
    pub observations: CtbnObservations<f64>,
    /// `(time, prey count, predator count)` as observed.
    pub observed: Vec<(f64, usize, usize)>,
}

/// Simulates a truth path from the fixed initial populations and observes it:
/// exactly at `t = 0`, through the noise model at each observation time.
pub fn simulate_lv_dataset<R: Rng + ?Sized>(spec: &LotkaVolterraSpec, rng: &mut R) -> Result<LvDataset> {
    spec.validate()?;
    let model = build_lotka_volterra(spec)?;
    let interval = Interval::new(0.0, spec.interval)?;
    let truth = crate::ctbn::sample_ctbn_prior_from(
        &model,
        vec![spec.initial_prey, spec.initial_predator],
        interval,
        rng,
    );
    let n = spec.cap + 1;
    let exact = |s: usize| {
        let mut v = vec![0.0; n];
        v[s] = 1.0;
        v
    };
    let mut items = vec![
        (0, 0.0, exact(spec.initial_prey)),
        (1, 0.0, exact(spec.initial_predator)),
    ];
    let mut observed = vec![(0.0, spec.initial_prey, spec.initial_predator)];
    for &t in &spec.observation_times {
        let states = truth.states_at(t)?;
        let xo = lv_sample_noise(states[0], spec.cap, rng);
        let yo = lv_sample_noise(states[1], spec.cap, rng);
        items.push((0, t, lv_likelihood_vector(xo, spec.cap)));
        items.push((1, t, lv_likelihood_vector(yo, spec.cap)));
        observed.push((t, xo, yo));
    }
    let observations = CtbnObservations::new(&model, items)?;
    Ok(LvDataset {
        model,
        truth,
        observations,
        observed,
    })
}

/// Posterior mean and 5%/95% quantiles of both populations on a time grid,
/// with the truth alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub time: f64,
    pub prey_true: usize,
    pub prey_mean: f64,
    pub prey_q05: f64,
    pub prey_q95: f64,
    pub predator_true: usize,
    pub predator_mean: f64,
    pub predator_q05: f64,
    pub predator_q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LvSummary {
    pub samples: usize,
    pub observed_until: f64,
    pub observed_points: usize,
    pub prey_coverage: f64,
    pub predator_coverage: f64,
    /// Fraction of all (population, grid time) pairs in the observed region
    /// whose true value lies in the 90% band.
    pub coverage: f64,
}

#[derive(Debug, Clone)]
pub struct LvOutcome {
    pub dataset: LvDataset,
    pub band: Vec<BandRow>,
    pub summary: LvSummary,
}

/// Linear-interpolated sample quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Simulates data, runs the CTBN Gibbs sampler and summarizes the posterior
/// on the band grid.
pub fn run_lv_experiment<R: Rng + ?Sized>(
    spec: &LotkaVolterraSpec,
    settings: &SamplerSettings,
    rng: &mut R,
) -> Result<LvOutcome> {
    settings.validate()?;
    let dataset = simulate_lv_dataset(spec, rng)?;
    let problem = CtbnProblem::new(
        dataset.model.clone(),
        Interval::new(0.0, spec.interval)?,
        dataset.observations.clone(),
        settings.policy()?,
    )?;
    let steps = (spec.interval / spec.band_step).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * spec.band_step).min(spec.interval)).collect();

    let mut draws: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; grid.len()];
    let config = CtbnChainConfig::new(settings.iterations, settings.burn_in)?;
    run_ctbn_chain_with(&problem, &config, rng, |_, path| {
        for (slot, &t) in grid.iter().enumerate() {
            for (node, d) in draws[slot].iter_mut().enumerate() {
                d.push(path.node(node).state_at(t).expect("grid inside interval") as f64);
            }
        }
    })?;

    let until = spec.observed_until();
    let (mut inside, mut points) = ([0usize; 2], 0usize);
    let mut band = Vec::with_capacity(grid.len());
    for (slot, &t) in grid.iter().enumerate() {
        let truth = dataset.truth.states_at(t)?;
        let mut stats = [(0.0, 0.0, 0.0); 2];
        for node in 0..2 {
            let d = &mut draws[slot][node];
            d.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let (lo, hi) = (quantile(d, 0.05), quantile(d, 0.95));
            stats[node] = (mean, lo, hi);
            if t <= until {
                let x = truth[node] as f64;
                if x >= lo && x <= hi {
                    inside[node] += 1;
                }
            }
        }
        if t <= until {
            points += 1;
        }
        band.push(BandRow {
            time: t,
            prey_true: truth[0],
            prey_mean: stats[0].0,
            prey_q05: stats[0].1,
            prey_q95: stats[0].2,
            predator_true: truth[1],
            predator_mean: stats[1].0,
            predator_q05: stats[1].1,
            predator_q95: stats[1].2,
        });
    }
    let frac = |k: usize| if points == 0 { f64::NAN } else { k as f64 / points as f64 };
    let summary = LvSummary {
        samples: settings.iterations - settings.burn_in,
        observed_until: until,
        observed_points: points,
        prey_coverage: frac(inside[0]),
        predator_coverage: frac(inside[1]),
        coverage: if points == 0 {
            f64::NAN
        } else {
            (inside[0] + inside[1]) as f64 / (2 * points) as f64
        },
    };
    Ok(LvOutcome {
        dataset,
        band,
        summary,
    })
}
