use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctbn::{
    amalgamate_joint_stats, ctbn_sufficient_stats, flatten_ctbn, flatten_observations,
    run_ctbn_chain_with, sample_ctbn_prior, CtbnChainConfig, CtbnModel, CtbnNode,
    CtbnObservations, CtbnPath, CtbnProblem, CtbnStats, InitialSpec,
};
use crate::diagnostics::relative_error_of;
use crate::error::{Error, Result};
use crate::oracles::exact_sufficient_stats;
use crate::process::{Generator, InitialDistribution, Interval, Layout};
use crate::sampler::MjpProblem;

use super::lotka_volterra::quantile;
use super::{stream_rng, SamplerSettings};

/// Chain-structured CTBN: node 0 has no parents, node `k` has parent `k - 1`.
///
/// Rates come from a ChaCha8 generator seeded with `seed`. Nodes are filled
/// in order; within a node, parent configurations in order; within a
/// configuration, source states `i` in order and then destinations `j != i`
/// in order, each off-diagonal rate drawn uniformly from `[0.5, 2)`. The
/// initial distribution is uniform on every node.
pub fn build_chain_ctbn(m: usize, n: usize, seed: u64) -> Result<CtbnModel<f64>> {
    if m < 1 || n < 2 {
        return Err(Error::Config(format!(
            "chain CTBN needs at least one node and two states, got m = {m}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(m);
    for k in 0..m {
        let configs = if k == 0 { 1 } else { n };
        let generators = (0..configs)
            .map(|_| random_dense_generator(n, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let parents = if k == 0 { vec![] } else { vec![k - 1] };
        nodes.push(CtbnNode::new(format!("x{k}"), n, parents, generators));
    }
    let uniform = InitialDistribution::uniform(n)?;
    CtbnModel::new(nodes, InitialSpec::Product(vec![uniform; m]))
}

pub(crate) fn random_dense_generator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Generator<f64>> {
    let mut rates = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rates.push((i, j, 0.5 + 1.5 * rng.random::<f64>()));
            }
        }
    }
    Generator::from_rates(n, rates, Layout::Dense)
}

/// Error-vs-samples study on a chain CTBN observed exactly at both ends of
/// the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainStudySpec {
    pub nodes: usize,
    pub states: usize,
    /// Seed of the rate tables; independent of the sampler seed.
    pub model_seed: u64,
    pub interval: f64,
    pub chains: usize,
    /// Retained-sample counts at which the error is measured.
    pub sample_counts: Vec<usize>,
    /// Integration steps of the exact statistics.
    pub resolution: usize,
}

impl Default for ChainStudySpec {
    fn default() -> Self {
        Self {
            nodes: 3,
            states: 3,
            model_seed: 1,
            interval: 20.0,
            chains: 50,
            sample_counts: vec![100, 300, 1000, 3000],
            resolution: 20_000,
        }
    }
}

impl ChainStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 1 || self.states < 2 {
            return Err(Error::Config("need nodes >= 1 and states >= 2".into()));
        }
        if !(self.interval > 0.0) || !self.interval.is_finite() {
            return Err(Error::Config("interval must be positive".into()));
        }
        if self.chains == 0 || self.resolution == 0 {
            return Err(Error::Config("chains and resolution must be positive".into()));
        }
        if self.sample_counts.is_empty()
            || self.sample_counts[0] == 0
            || self.sample_counts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config("sample_counts must be positive and increasing".into()));
        }
        Ok(())
    }

    pub fn max_samples(&self) -> usize {
        *self.sample_counts.last().expect("validated")
    }
}

/// Data for a chain study: the model, the simulated truth and its endpoint
/// observations.
#[derive(Debug, Clone)]
pub struct ChainDataset {
    pub model: CtbnModel<f64>,
    pub truth: CtbnPath<f64>,
    pub observations: CtbnObservations<f64>,
}

pub fn simulate_chain_dataset<R: Rng + ?Sized>(spec: &ChainStudySpec, rng: &mut R) -> Result<ChainDataset> {
    spec.validate()?;
    let model = build_chain_ctbn(spec.nodes, spec.states, spec.model_seed)?;
    let interval = Interval::new(0.0, spec.interval)?;
    let truth = sample_ctbn_prior(&model, interval, rng);
    let mut items = Vec::with_capacity(2 * spec.nodes);
    for t in [0.0, spec.interval] {
        for (k, &s) in truth.states_at(t)?.iter().enumerate() {
            let mut v = vec![0.0; spec.states];
            v[s] = 1.0;
            items.push((k, t, v));
        }
    }
    let observations = CtbnObservations::new(&model, items)?;
    Ok(ChainDataset {
        model,
        truth,
        observations,
    })
}

/// Exact posterior conditional statistics of a CTBN problem, computed on the
/// flattened joint process and amalgamated back to the nodes.
pub fn exact_ctbn_stats(problem: &CtbnProblem<f64>, resolution: usize) -> Result<CtbnStats<f64>> {
    let (generator, initial) = flatten_ctbn(&problem.model, Layout::Dense)?;
    let observations = flatten_observations(&problem.model, &problem.observations)?;
    let joint = MjpProblem::new(generator, initial, problem.interval, observations, problem.policy)?;
    let stats = exact_sufficient_stats(&joint, resolution)?;
    amalgamate_joint_stats(&problem.model, &stats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub samples: usize,
    pub median_are: f64,
    pub q25_are: f64,
    pub q75_are: f64,
    pub chains: usize,
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub dataset: ChainDataset,
    pub truth_stats: CtbnStats<f64>,
    pub rows: Vec<ChainRow>,
    /// `are[chain][level]`.
    pub are: Vec<Vec<f64>>,
    /// Statistics with zero true value, left out of the error.
    pub excluded: Vec<String>,
}

impl ChainOutcome {
    /// True when each median is strictly below the one before it.
    pub fn median_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median_are < w[0].median_are)
    }
}

/// Runs independent chains and records, for each chain, the average
/// relative error of its running mean statistics at every sample count.
///
/// Chains run in parallel; chain `c` uses stream `c + 1` of the sampler
/// seed, stream 0 simulates the data.
pub fn run_chain_experiment(spec: &ChainStudySpec, settings: &SamplerSettings) -> Result<ChainOutcome> {
    spec.validate()?;
    settings.validate()?;
    let mut data_rng = stream_rng(settings.seed, 0);
    let dataset = simulate_chain_dataset(spec, &mut data_rng)?;
    let problem = CtbnProblem::new(
        dataset.model.clone(),
        Interval::new(0.0, spec.interval)?,
        dataset.observations.clone(),
        settings.policy()?,
    )?;
    let truth_stats = exact_ctbn_stats(&problem, spec.resolution)?;
    let truth = truth_stats.to_vec();
    let names = truth_stats.names();

    let config = CtbnChainConfig::new(settings.burn_in + spec.max_samples(), settings.burn_in)?;
    let are = (0..spec.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(settings.seed, c as u64 + 1);
            let mut sum = CtbnStats::zeros(&problem.model);
            let mut seen = 0usize;
            let mut next = 0usize;
            let mut out = Vec::with_capacity(spec.sample_counts.len());
            let mut failure = None;
            run_ctbn_chain_with(&problem, &config, &mut rng, |_, path| {
                sum.add_assign(&ctbn_sufficient_stats(&problem.model, path));
                seen += 1;
                if next < spec.sample_counts.len() && seen == spec.sample_counts[next] {
                    let mean: Vec<f64> = sum.to_vec().iter().map(|v| v / seen as f64).collect();
                    match relative_error_of(&mean, &truth) {
                        Ok(e) => out.push(e.value),
                        Err(e) => failure = Some(e),
                    }
                    next += 1;
                }
            })?;
            match failure {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let rows = spec
        .sample_counts
        .iter()
        .enumerate()
        .map(|(level, &samples)| {
            let mut v: Vec<f64> = are.iter().map(|chain| chain[level]).collect();
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite error"));
            ChainRow {
                samples,
                median_are: quantile(&v, 0.5),
                q25_are: quantile(&v, 0.25),
                q75_are: quantile(&v, 0.75),
                chains: v.len(),
            }
        })
        .collect();
    let excluded = truth
        .iter()
        .zip(&names)
        .filter(|(&t, _)| t == 0.0)
        .map(|(_, name)| name.clone())
        .collect();
    Ok(ChainOutcome {
        dataset,
        truth_stats,
        rows,
        are,
        excluded,
    })
}
