//! Experiment harness: the predator-prey CTBN, error-vs-samples on chain
//! CTBNs and the scaling studies, plus the JSON config and output files
//! shared by the command line.

mod chain;
mod lotka_volterra;
mod scaling;

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ctbn_model_json, write_ctbn_observations_csv, write_json, SampleWriter};
use crate::process::UniformizationPolicy;

pub use chain::{
    build_chain_ctbn, exact_ctbn_stats, run_chain_experiment, simulate_chain_dataset, ChainDataset,
    ChainOutcome, ChainRow, ChainStudySpec,
};
pub use lotka_volterra::{
    build_lotka_volterra, lv_likelihood_vector, lv_noise_likelihood, lv_sample_noise,
    run_lv_experiment, simulate_lv_dataset, BandRow, LotkaVolterraSpec, LvDataset, LvOutcome,
    LvSummary,
};
pub use scaling::{
    log_log_slope, run_scaling_study, scaling_generator, ScalingAxis, ScalingOutcome, ScalingRow,
    ScalingSpec,
};

/// Sampler settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    /// Total iterations (sweeps for CTBNs), burn-in included. The chain study
    /// ignores it and runs `burn_in` plus its largest sample count.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub omega_multiplier: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            iterations: 1100,
            burn_in: 100,
            seed: 0,
            omega_multiplier: 2.0,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        self.policy().map(|_| ())
    }

    pub fn policy(&self) -> Result<UniformizationPolicy<f64>> {
        UniformizationPolicy::new(self.omega_multiplier).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Independent RNG stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Lv,
    Chain,
    Scaling,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lv => "lv",
            Self::Chain => "chain",
            Self::Scaling => "scaling",
        }
    }
}

/// Experiment config file. Only the section matching `experiment` may be
/// present; a missing section means the default preset (the desk-scale
/// predator-prey spec, the 3-node chain study, or the dense states axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lv: Option<LotkaVolterraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainStudySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            sampler: SamplerSettings::default(),
            lv: None,
            chain: None,
            scaling: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Fills in the default section for the chosen experiment.
    pub fn resolved(mut self) -> Self {
        match self.experiment {
            ExperimentKind::Lv => {
                self.lv.get_or_insert_with(LotkaVolterraSpec::desk);
            }
            ExperimentKind::Chain => {
                self.chain.get_or_insert_with(ChainStudySpec::default);
            }
            ExperimentKind::Scaling => {
                self.scaling.get_or_insert_with(ScalingSpec::states_dense);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let present = [
            (ExperimentKind::Lv, self.lv.is_some()),
            (ExperimentKind::Chain, self.chain.is_some()),
            (ExperimentKind::Scaling, self.scaling.is_some()),
        ];
        if let Some((kind, _)) = present.iter().find(|(k, p)| *p && *k != self.experiment) {
            return Err(Error::Config(format!(
                "section `{}` does not belong to a `{}` experiment",
                kind.name(),
                self.experiment.name()
            )));
        }
        if self.experiment != ExperimentKind::Chain {
            self.sampler.validate()?;
        } else {
            self.sampler.policy()?;
        }
        if let Some(s) = &self.lv {
            s.validate()?;
        }
        if let Some(s) = &self.chain {
            s.validate()?;
        }
        if let Some(s) = &self.scaling {
            s.validate()?;
        }
        Ok(())
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

/// Runs the configured experiment and writes its files to `out`:
/// `results.csv`, `diagnostics.json` and `manifest.json` always,
/// `posterior_band.csv` for the predator-prey run, and the inputs needed to
/// reproduce the data (`model.json`, `observations.csv`, `truth.csv`) where
/// the experiment simulates any.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let config = config.clone().resolved();
    fs::create_dir_all(out)?;
    let settings = config.sampler;
    let mut outputs = vec!["results.csv".to_string(), "diagnostics.json".to_string()];
    match config.experiment {
        ExperimentKind::Lv => {
            let spec = config.lv.as_ref().expect("resolved");
            let mut rng = stream_rng(settings.seed, 0);
            let outcome = run_lv_experiment(spec, &settings, &mut rng)?;
            write_rows(&out.join("results.csv"), [&outcome.summary])?;
            write_rows(&out.join("posterior_band.csv"), &outcome.band)?;
            write_json(&out.join("diagnostics.json"), &outcome.summary)?;
            write_inputs(out, &outcome.dataset.model, &outcome.dataset.observations, &outcome.dataset.truth)?;
            outputs.push("posterior_band.csv".into());
        }
        ExperimentKind::Chain => {
            let spec = config.chain.as_ref().expect("resolved");
            let outcome = run_chain_experiment(spec, &settings)?;
            write_rows(&out.join("results.csv"), &outcome.rows)?;
            let names = outcome.truth_stats.names();
            let diagnostics = serde_json::json!({
                "median_decreasing": outcome.median_decreasing(),
                "sample_counts": spec.sample_counts,
                "are_per_chain": outcome.are,
                "excluded_from_are": outcome.excluded,
                "truth": names.iter().zip(outcome.truth_stats.to_vec())
                    .map(|(n, v)| serde_json::json!({"name": n, "value": v}))
                    .collect::<Vec<_>>(),
            });
            write_json(&out.join("diagnostics.json"), &diagnostics)?;
            write_inputs(out, &outcome.dataset.model, &outcome.dataset.observations, &outcome.dataset.truth)?;
        }
        ExperimentKind::Scaling => {
            let spec = config.scaling.as_ref().expect("resolved");
            let outcome = run_scaling_study(spec, &settings)?;
            let rows: Vec<ScalingCsvRow> = outcome
                .rows
                .iter()
                .map(|r| ScalingCsvRow {
                    axis: outcome.axis,
                    level: r.level,
                    iterations: r.iterations,
                    seconds: r.seconds,
                    time_per_iteration: r.time_per_iteration,
                    mean_grid: r.mean_grid,
                    ess: r.ess,
                    reached_target: r.reached_target,
                    slope: outcome.slope,
                })
                .collect();
            write_rows(&out.join("results.csv"), &rows)?;
            write_json(&out.join("diagnostics.json"), &outcome)?;
        }
    }
    if !matches!(config.experiment, ExperimentKind::Scaling) {
        outputs.extend(["model.json", "observations.csv", "truth.csv"].map(String::from));
    }
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        experiment: config.experiment,
        seed: settings.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        outputs,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// A scaling row with its axis and the axis's fitted slope repeated.
#[derive(Serialize)]
struct ScalingCsvRow {
    axis: ScalingAxis,
    level: f64,
    iterations: usize,
    seconds: f64,
    time_per_iteration: f64,
    mean_grid: f64,
    ess: f64,
    reached_target: bool,
    slope: f64,
}

fn write_rows<'a, I, R>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a R>,
    R: Serialize + 'a,
{
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_inputs(
    out: &Path,
    model: &crate::ctbn::CtbnModel<f64>,
    observations: &crate::ctbn::CtbnObservations<f64>,
    truth: &crate::ctbn::CtbnPath<f64>,
) -> Result<()> {
    fs::write(out.join("model.json"), ctbn_model_json(model)?)?;
    write_ctbn_observations_csv(&out.join("observations.csv"), observations, model.m())?;
    let mut w = SampleWriter::create(&out.join("truth.csv"))?;
    for (k, p) in truth.paths().iter().enumerate() {
        w.write(0, k, p)?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "chain"}"#).unwrap();
        assert_eq!(c.sampler, SamplerSettings::default());
        let r = c.resolved();
        assert_eq!(r.chain, Some(ChainStudySpec::default()));
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), r);
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(ExperimentConfig::from_json(r#"{"experiment": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "lv", "extra": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"experiment": "lv", "sampler": {"omega_multiplier": 1.0}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"experiment": "lv", "sampler": {"iterations": 10, "burn_in": 10}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"experiment": "lv", "chain": {"nodes": 2}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"experiment": "scaling", "scaling": {"axis": "states", "levels": []}}"#
        )
        .is_err());
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = stream_rng(5, 0).random();
        let b: u64 = stream_rng(5, 1).random();
        let c: u64 = stream_rng(5, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
