
use std::fs;

use jumpgibbs::ctbn::sample_ctbn_prior_from;
use jumpgibbs::experiments::{
    build_chain_ctbn, build_lotka_volterra, lv_noise_likelihood, run_experiment, run_lv_experiment,
    stream_rng, ChainStudySpec, ExperimentConfig, ExperimentKind, LotkaVolterraSpec, SamplerSettings,
    ScalingAxis, ScalingSpec,
};
use jumpgibbs::io::ctbn_model_json;
use jumpgibbs::process::{Interval, Layout};

fn tiny_lv() -> LotkaVolterraSpec {
    LotkaVolterraSpec {
        cap: 10,
        alpha: 0.05,
        beta: 0.005,
        gamma: 0.05,
        delta: 0.005,
        interval: 60.0,
        initial_prey: 5,
        initial_predator: 4,
        observation_times: vec![10.0, 20.0, 30.0],
        band_step: 5.0,
    }
}

#[test]
fn chain_model_json_is_deterministic() {
    let a = ctbn_model_json(&build_chain_ctbn(3, 3, 17).unwrap()).unwrap();
    let b = ctbn_model_json(&build_chain_ctbn(3, 3, 17).unwrap()).unwrap();
    let c = ctbn_model_json(&build_chain_ctbn(3, 3, 18).unwrap()).unwrap();
    assert_eq!(a.as_bytes(), b.as_bytes());
    assert_ne!(a, c);
}

#[test]
fn lotka_volterra_model_shape() {
    let spec = LotkaVolterraSpec::desk();
    let model = build_lotka_volterra(&spec).unwrap();
    assert_eq!(model.m(), 2);
    assert_eq!(model.parents(0), &[1]);
    assert_eq!(model.parents(1), &[0]);
    for k in 0..2 {
        assert_eq!(model.states(k), 31);
        for u in 0..model.num_configs(k) {
            let g = model.generator(k, u);
            assert_eq!(g.layout(), Layout::Sparse);
            assert_eq!(g.leave_rate(30) - g.rate(30, 29), 0.0, "no move above the cap");
        }
    }
    let ratio = lv_noise_likelihood(10, 10, 30) / lv_noise_likelihood(13, 10, 30);
    assert!((ratio - (8.0 + 1e-6) / (1.0 + 1e-6)).abs() < 1e-9);
}

#[test]
fn lotka_volterra_smoke() {
    let settings = SamplerSettings { iterations: 300, burn_in: 50, seed: 3, omega_multiplier: 2.0 };
    let out = run_lv_experiment(&tiny_lv(), &settings, &mut stream_rng(3, 0)).unwrap();
    assert_eq!(out.band.len(), 13);
    assert_eq!(out.summary.samples, 250);
    for row in &out.band {
        assert!(row.prey_q05 <= row.prey_mean && row.prey_mean <= row.prey_q95);
        assert!(row.predator_q05 <= row.predator_mean && row.predator_mean <= row.predator_q95);
    }
    assert_eq!(out.band[0].prey_mean, 5.0);
    assert_eq!(out.band[0].predator_mean, 4.0);
}

#[test]
fn without_observations_the_posterior_is_the_prior() {
    let spec = LotkaVolterraSpec { observation_times: vec![], ..tiny_lv() };
    let settings = SamplerSettings { iterations: 20_000, burn_in: 500, seed: 8, omega_multiplier: 2.0 };
    let out = run_lv_experiment(&spec, &settings, &mut stream_rng(8, 0)).unwrap();

    let model = build_lotka_volterra(&spec).unwrap();
    let interval = Interval::new(0.0, spec.interval).unwrap();
    let mut rng = stream_rng(8, 1);
    let draws = 20_000;
    let mut sums = vec![[0.0f64; 4]; out.band.len()];
    for _ in 0..draws {
        let p = sample_ctbn_prior_from(&model, vec![5, 4], interval, &mut rng);
        for (acc, row) in sums.iter_mut().zip(&out.band) {
            let s = p.states_at(row.time).unwrap();
            acc[0] += s[0] as f64;
            acc[1] += (s[0] * s[0]) as f64;
            acc[2] += s[1] as f64;
            acc[3] += (s[1] * s[1]) as f64;
        }
    }
    let mut worst = 0.0f64;
    for (acc, row) in sums.iter().zip(&out.band).skip(1) {
        let n = draws as f64;
        for (m, sq, post) in [(acc[0], acc[1], row.prey_mean), (acc[2], acc[3], row.predator_mean)] {
            let mean = m / n;
            let sd = (sq / n - mean * mean).sqrt();
            worst = worst.max((post - mean).abs() / sd);
        }
    }
    assert!(worst < 0.1, "largest mean gap {worst} prior standard deviations");
}

fn chain_config(seed: u64) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(ExperimentKind::Chain);
    config.sampler.seed = seed;
    config.sampler.burn_in = 10;
    config.chain = Some(ChainStudySpec {
        nodes: 2,
        states: 2,
        interval: 3.0,
        chains: 4,
        sample_counts: vec![20, 60],
        resolution: 1000,
        ..ChainStudySpec::default()
    });
    config
}

fn read_all(dir: &std::path::Path, names: &[String]) -> Vec<Vec<u8>> {
    names.iter().map(|n| fs::read(dir.join(n)).unwrap()).collect()
}

#[test]
fn chain_experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let manifest = run_experiment(&chain_config(5), &a).unwrap();
    run_experiment(&chain_config(5), &b).unwrap();
    run_experiment(&chain_config(6), &c).unwrap();
    for name in ["results.csv", "diagnostics.json", "manifest.json", "model.json", "observations.csv", "truth.csv"] {
        assert!(manifest.outputs.iter().any(|o| o == name), "{name}");
    }
    assert_eq!(read_all(&a, &manifest.outputs), read_all(&b, &manifest.outputs));
    assert_ne!(fs::read(a.join("results.csv")).unwrap(), fs::read(c.join("results.csv")).unwrap());

    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    assert!(results.starts_with("samples,median_are,q25_are,q75_are,chains\n"));
    assert_eq!(results.lines().count(), 3);
    let echoed: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(echoed["seed"], 5);
    assert_eq!(echoed["config"]["chain"]["nodes"], 2);
}

#[test]
fn lv_experiment_outputs_are_reproducible() {
    let mut config = ExperimentConfig::new(ExperimentKind::Lv);
    config.sampler = SamplerSettings { iterations: 200, burn_in: 20, seed: 9, omega_multiplier: 2.0 };
    config.lv = Some(tiny_lv());
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let manifest = run_experiment(&config, &a).unwrap();
    run_experiment(&config, &b).unwrap();
    assert!(manifest.outputs.iter().any(|o| o == "posterior_band.csv"));
    assert_eq!(read_all(&a, &manifest.outputs), read_all(&b, &manifest.outputs));
    let band = fs::read_to_string(a.join("posterior_band.csv")).unwrap();
    assert_eq!(band.lines().count(), 14);
}

#[test]
fn scaling_experiment_writes_its_table() {
    let mut config = ExperimentConfig::new(ExperimentKind::Scaling);
    config.sampler.burn_in = 5;
    config.scaling = Some(ScalingSpec {
        axis: ScalingAxis::ChainLength,
        levels: vec![2.0, 4.0],
        interval: 2.0,
        states: 2,
        min_iterations: 30,
        max_iterations: 60,
        target_ess: 10.0,
        ..ScalingSpec::chain_length()
    });
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_experiment(&config, dir.path()).unwrap();
    assert!(!manifest.outputs.iter().any(|o| o == "model.json"));
    let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(results.starts_with("axis,level,iterations,seconds,time_per_iteration,mean_grid,ess,reached_target,slope\n"));
    assert_eq!(results.lines().count(), 3);
}

#[test]
fn configs_with_foreign_sections_are_rejected() {
    let err = ExperimentConfig::from_json(r#"{"experiment": "lv", "chain": {}}"#).unwrap_err();
    assert!(matches!(err, jumpgibbs::Error::Config(_)));
    let err = ExperimentConfig::from_json(r#"{"experiment": "lv", "sampler": {"iterations": 10, "burn_in": 10}}"#).unwrap_err();
    assert!(matches!(err, jumpgibbs::Error::Config(_)));
}
