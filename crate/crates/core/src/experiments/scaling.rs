use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctbn::{run_ctbn_chain_while, CtbnChainConfig, CtbnProblem};
use crate::diagnostics::{effective_sample_size, ScalarTrace};
use crate::error::{Error, Result};
use crate::io::LayoutName;
use crate::process::{
    Generator, InitialDistribution, Interval, Layout, ObservationSet, PiecewiseConstant,
};
use crate::sampler::{run_chain_while, ChainConfig, MjpProblem};

use super::chain::{simulate_chain_dataset, ChainStudySpec};
use super::{stream_rng, SamplerSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingAxis {
    /// Single-node MJP with `level` states.
    States,
    /// Chain CTBN with `level` nodes.
    ChainLength,
    /// Chain CTBN on `[0, level]`.
    Interval,
}

/// One scaling study along a single axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub axis: ScalingAxis,
    pub levels: Vec<f64>,
    /// Kernel storage for the states axis.
    #[serde(default = "default_layout")]
    pub layout: LayoutName,
    /// States per node on the CTBN axes.
    #[serde(default = "default_states")]
    pub states: usize,
    /// Nodes on the interval axis.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Interval length on the states and chain-length axes.
    #[serde(default = "default_interval")]
    pub interval: f64,
    #[serde(default = "default_target_ess")]
    pub target_ess: f64,
    /// Iterations always run past burn-in, so the timing median is stable.
    #[serde(default = "default_min_iterations")]
    pub min_iterations: usize,
    /// Iteration budget per level, burn-in included.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub model_seed: u64,
}

fn default_layout() -> LayoutName {
    LayoutName::Dense
}
fn default_states() -> usize {
    5
}
fn default_nodes() -> usize {
    5
}
fn default_interval() -> f64 {
    20.0
}
fn default_target_ess() -> f64 {
    100.0
}
fn default_min_iterations() -> usize {
    100
}
fn default_max_iterations() -> usize {
    3000
}

impl ScalingSpec {
    fn base(axis: ScalingAxis, levels: Vec<f64>) -> Self {
        Self {
            axis,
            levels,
            layout: default_layout(),
            states: default_states(),
            nodes: default_nodes(),
            interval: default_interval(),
            target_ess: default_target_ess(),
            min_iterations: default_min_iterations(),
            max_iterations: default_max_iterations(),
            model_seed: 0,
        }
    }

    /// Dense single-node MJP, `n` in {64, 128, 256, 512}.
    pub fn states_dense() -> Self {
        Self {
            interval: 50.0,
            ..Self::base(ScalingAxis::States, vec![64.0, 128.0, 256.0, 512.0])
        }
    }

    /// Tridiagonal birth-death MJP with sparse kernels, `n` in
    /// {500, 1000, 2000, 4000}.
    pub fn states_sparse() -> Self {
        Self {
            layout: LayoutName::Sparse,
            interval: 50.0,
            ..Self::base(ScalingAxis::States, vec![500.0, 1000.0, 2000.0, 4000.0])
        }
    }

    /// Chain CTBN of 5-state nodes, `m` in {4, 8, 16, 32}.
    pub fn chain_length() -> Self {
        Self::base(ScalingAxis::ChainLength, vec![4.0, 8.0, 16.0, 32.0])
    }

    /// 5-node, 5-state chain CTBN over intervals of length {10, 20, 40, 80}.
    pub fn interval_axis() -> Self {
        Self::base(ScalingAxis::Interval, vec![10.0, 20.0, 40.0, 80.0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("levels must be nonempty".into()));
        }
        if self.levels.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Config("levels must be positive".into()));
        }
        let integral = matches!(self.axis, ScalingAxis::States | ScalingAxis::ChainLength);
        if integral && self.levels.iter().any(|&l| l.fract() != 0.0) {
            return Err(Error::Config("levels on this axis must be integers".into()));
        }
        if self.axis == ScalingAxis::States && self.levels.iter().any(|&l| l < 2.0) {
            return Err(Error::Config("states levels must be at least 2".into()));
        }
        if self.states < 2 || self.nodes < 1 {
            return Err(Error::Config("need states >= 2 and nodes >= 1".into()));
        }
        if !(self.interval > 0.0) || !self.interval.is_finite() {
            return Err(Error::Config("interval must be positive".into()));
        }
        if !(self.target_ess > 0.0) {
            return Err(Error::Config("target_ess must be positive".into()));
        }
        if self.min_iterations < 10 || self.max_iterations < self.min_iterations {
            return Err(Error::Config(
                "need min_iterations >= 10 and max_iterations >= min_iterations".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub level: f64,
    /// Iterations run, burn-in included.
    pub iterations: usize,
    pub seconds: f64,
    /// Median wall-clock time of one post-burn-in iteration.
    pub time_per_iteration: f64,
    pub mean_grid: f64,
    pub ess: f64,
    pub reached_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingOutcome {
    pub axis: ScalingAxis,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log time per iteration against log level.
    pub slope: f64,
}

/// Random generator for the states axis, rescaled so that the largest leave
/// rate is 1. Dense: every off-diagonal rate drawn from `[0.5, 2)`. Sparse:
/// birth-death moves only.
pub fn scaling_generator<R: Rng + ?Sized>(n: usize, layout: Layout, rng: &mut R) -> Result<Generator<f64>> {
    let mut rates = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let neighbour = i.abs_diff(j) == 1;
            if i != j && (layout == Layout::Dense || neighbour) {
                rates.push((i, j, 0.5 + 1.5 * rng.random::<f64>()));
            }
        }
    }
    let mut leave = vec![0.0; n];
    for &(i, _, r) in &rates {
        leave[i] += r;
    }
    let max = leave.iter().copied().fold(0.0, f64::max);
    Generator::from_rates(n, rates.into_iter().map(|(i, j, r)| (i, j, r / max)), layout)
}

/// Per-level timing and ESS along one axis.
///
/// Each level runs one chain until the ESS of a dwell statistic reaches
/// `target_ess` (checked every 25 iterations once `min_iterations` are done)
/// or the budget runs out. The statistic is the dwell time in the observed
/// state on the states axis and node 0's dwell in state 0 on the CTBN axes.
/// Levels run one after another so timings do not compete.
pub fn run_scaling_study(spec: &ScalingSpec, settings: &SamplerSettings) -> Result<ScalingOutcome> {
    spec.validate()?;
    settings.validate()?;
    if settings.burn_in >= spec.max_iterations {
        return Err(Error::Config("burn_in must be below max_iterations".into()));
    }
    let mut rows = Vec::with_capacity(spec.levels.len());
    for (index, &level) in spec.levels.iter().enumerate() {
        let mut rng = stream_rng(settings.seed, index as u64);
        let row = match spec.axis {
            ScalingAxis::States => states_level(spec, settings, level as usize, &mut rng)?,
            ScalingAxis::ChainLength => {
                ctbn_level(spec, settings, level as usize, spec.interval, level, &mut rng)?
            }
            ScalingAxis::Interval => ctbn_level(spec, settings, spec.nodes, level, level, &mut rng)?,
        };
        rows.push(row);
    }
    let slope = log_log_slope(
        &rows.iter().map(|r| r.level).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.time_per_iteration).collect::<Vec<_>>(),
    );
    Ok(ScalingOutcome {
        axis: spec.axis,
        rows,
        slope,
    })
}

/// Stopping rule shared by both chain kinds: returns `false` to stop.
struct EssStop<'a> {
    spec: &'a ScalingSpec,
    values: Vec<f64>,
    ess: f64,
}

impl EssStop<'_> {
    fn push(&mut self, value: f64) -> bool {
        self.values.push(value);
        let k = self.values.len();
        if k < self.spec.min_iterations || k % 25 != 0 {
            return true;
        }
        self.refresh();
        self.ess < self.spec.target_ess
    }

    fn refresh(&mut self) {
        self.ess = ScalarTrace::new(self.values.clone())
            .and_then(|t| effective_sample_size(&t))
            .map(|e| e.value)
            .unwrap_or(0.0);
    }
}

fn states_level(
    spec: &ScalingSpec,
    settings: &SamplerSettings,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ScalingRow> {
    let layout = Layout::from(spec.layout);
    let mut model_rng = ChaCha8Rng::seed_from_u64(spec.model_seed);
    model_rng.set_stream(n as u64);
    let generator = scaling_generator(n, layout, &mut model_rng)?;
    let observed = n / 2;
    let observations = ObservationSet::exact(n, [(0.0, observed), (spec.interval, observed)])?;
    let problem = MjpProblem::new(
        generator,
        InitialDistribution::uniform(n)?,
        Interval::new(0.0, spec.interval)?,
        observations,
        settings.policy()?,
    )?;
    let config = ChainConfig::new(spec.max_iterations, settings.burn_in)?;
    let mut stop = EssStop {
        spec,
        values: Vec::new(),
        ess: 0.0,
    };
    let trace = run_chain_while(&problem, &config, rng, |_, path| {
        let dwell = path
            .segments()
            .filter(|&(_, _, s)| s == observed)
            .map(|(a, b, _)| b - a)
            .sum();
        stop.push(dwell)
    })?;
    stop.refresh();
    let times: Vec<f64> = trace.iter().map(|r| r.elapsed_secs).collect();
    let grids: Vec<usize> = trace.iter().map(|r| r.grid_size).collect();
    Ok(summarize(spec, settings, n as f64, &times, &grids, stop.ess))
}

fn ctbn_level(
    spec: &ScalingSpec,
    settings: &SamplerSettings,
    m: usize,
    interval: f64,
    level: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ScalingRow> {
    let data_spec = ChainStudySpec {
        nodes: m,
        states: spec.states,
        model_seed: spec.model_seed,
        interval,
        ..ChainStudySpec::default()
    };
    let dataset = simulate_chain_dataset(&data_spec, rng)?;
    let problem = CtbnProblem::new(
        dataset.model,
        Interval::new(0.0, interval)?,
        dataset.observations,
        settings.policy()?,
    )?;
    let config = CtbnChainConfig::new(spec.max_iterations, settings.burn_in)?;
    let mut stop = EssStop {
        spec,
        values: Vec::new(),
        ess: 0.0,
    };
    let trace = run_ctbn_chain_while(&problem, &config, rng, |_, path| {
        let dwell = path
            .node(0)
            .segments()
            .filter(|&(_, _, s)| s == 0)
            .map(|(a, b, _)| b - a)
            .sum();
        stop.push(dwell)
    })?;
    stop.refresh();
    let times: Vec<f64> = trace.iter().map(|r| r.elapsed_secs).collect();
    let grids: Vec<usize> = trace.iter().map(|r| r.grid_size).collect();
    Ok(summarize(spec, settings, level, &times, &grids, stop.ess))
}

fn summarize(
    spec: &ScalingSpec,
    settings: &SamplerSettings,
    level: f64,
    elapsed: &[f64],
    grids: &[usize],
    ess: f64,
) -> ScalingRow {
    let mut per: Vec<f64> = elapsed
        .windows(2)
        .skip(settings.burn_in)
        .map(|w| w[1] - w[0])
        .collect();
    per.sort_by(|a, b| a.partial_cmp(b).expect("finite time"));
    let time_per_iteration = super::lotka_volterra::quantile(&per, 0.5);
    ScalingRow {
        level,
        iterations: elapsed.len(),
        seconds: elapsed.last().copied().unwrap_or(0.0),
        time_per_iteration,
        mean_grid: grids.iter().sum::<usize>() as f64 / grids.len().max(1) as f64,
        ess,
        reached_target: ess >= spec.target_ess,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert_relative_eq!(log_log_slope(&x, &y), 1.7, epsilon = 1e-12);
    }

    #[test]
    fn scaling_generator_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for layout in [Layout::Dense, Layout::Sparse] {
            let g = scaling_generator(20, layout, &mut rng).unwrap();
            assert_relative_eq!(g.max_leave_rate(), 1.0, epsilon = 1e-12);
            if layout == Layout::Sparse {
                assert_eq!(g.nnz(), 2 * 19);
            }
        }
    }

    #[test]
    fn presets_validate() {
        for spec in [
            ScalingSpec::states_dense(),
            ScalingSpec::states_sparse(),
            ScalingSpec::chain_length(),
            ScalingSpec::interval_axis(),
        ] {
            spec.validate().unwrap();
        }
        let mut bad = ScalingSpec::chain_length();
        bad.levels = vec![2.5];
        assert!(bad.validate().is_err());
        bad.levels.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tiny_study_runs_on_every_axis() {
        let settings = SamplerSettings {
            burn_in: 5,
            ..SamplerSettings::default()
        };
        for mut spec in [
            ScalingSpec::states_dense(),
            ScalingSpec::chain_length(),
            ScalingSpec::interval_axis(),
        ] {
            spec.levels = match spec.axis {
                ScalingAxis::States => vec![4.0, 8.0],
                ScalingAxis::ChainLength => vec![2.0, 3.0],
                ScalingAxis::Interval => vec![1.0, 2.0],
            };
            spec.states = 3;
            spec.nodes = 2;
            spec.interval = 2.0;
            spec.min_iterations = 20;
            spec.max_iterations = 60;
            let out = run_scaling_study(&spec, &settings).unwrap();
            assert_eq!(out.rows.len(), 2);
            assert!(out.slope.is_finite());
            assert!(out.rows.iter().all(|r| r.iterations <= 60 && r.time_per_iteration > 0.0));
        }
    }
}
