mod common;

use common::*;
use jumpgibbs::experiments::stream_rng;
use jumpgibbs::process::{
    sufficient_stats, InitialDistribution, Interval, MjpPath, ObservationSet, PiecewiseConstant,
    UniformizationPolicy,
};
use jumpgibbs::sampler::{
    drop_virtual, run_chain, sample_prior_path, sample_uniformized_prior, sample_virtual_jumps,
    ChainConfig, GibbsSampler, MjpProblem,
};
use jumpgibbs::Error;

fn flat_stats(path: &MjpPath<f64>) -> Vec<f64> {
    let s = sufficient_stats(3, path).unwrap();
    let mut v = s.dwell.clone();
    v.extend(s.transitions.iter().copied());
    v
}

#[test]
fn dropping_virtual_jumps_recovers_the_prior() {
    let g = three_state();
    let pi = pi3();
    let interval = Interval::new(0.0, 3.0).unwrap();
    let mut rng = stream_rng(11, 0);
    let draws = 20_000;
    let (mut direct, mut unif) = (Vec::new(), Vec::new());
    let (mut direct_jumps, mut unif_jumps) = (Vec::new(), Vec::new());
    for _ in 0..draws {
        let p = sample_prior_path(&g, &pi, interval, &mut rng);
        direct.push(sufficient_stats(3, &p).unwrap().dwell[0]);
        direct_jumps.push(p.num_jumps() as f64);
        let u = sample_uniformized_prior(&g, &pi, interval, 2.0 * g.max_leave_rate(), &mut rng).unwrap();
        let q = drop_virtual(&u);
        unif.push(sufficient_stats(3, &q).unwrap().dwell[0]);
        unif_jumps.push(q.num_jumps() as f64);
    }
    let d = ks_statistic(&direct, &unif);
    assert!(d < ks_critical(draws, draws), "dwell KS {d}");
    let d = ks_statistic(&direct_jumps, &unif_jumps);
    assert!(d < ks_critical(draws, draws), "jump-count KS {d}");
}

#[test]
fn alternating_chain_jump_count_is_poisson() {
    let g = two_state(1.0, 1.0);
    let pi = InitialDistribution::uniform(2).unwrap();
    let interval = Interval::new(0.0, 10.0).unwrap();
    let mut rng = stream_rng(12, 0);
    let counts: Vec<f64> = (0..10_000)
        .map(|_| sample_prior_path(&g, &pi, interval, &mut rng).num_jumps() as f64)
        .collect();
    let se = (10.0f64 / 10_000.0).sqrt();
    assert!((mean(&counts) - 10.0).abs() < 3.0 * se);
}

#[test]
fn virtual_jump_count_on_a_constant_path() {
    let g = two_state(1.0, 1.0);
    let path = MjpPath::constant(0.0, 10.0, 0).unwrap();
    let mut rng = stream_rng(13, 0);
    let counts: Vec<f64> = (0..10_000)
        .map(|_| sample_virtual_jumps(&g, &path, 2.0, &mut rng).unwrap().len() as f64)
        .collect();
    assert!((mean(&counts) - 10.0).abs() < 3.0 * (10.0f64 / 10_000.0).sqrt());
}

fn problem_with(observations: ObservationSet<f64>) -> MjpProblem<f64> {
    MjpProblem::new(
        three_state(),
        pi3(),
        Interval::new(0.0, 2.0).unwrap(),
        observations,
        UniformizationPolicy::default(),
    )
    .unwrap()
}

/// Runs `steps` Gibbs steps from a fixed start and collects flat statistics.
fn gibbs_stats(problem: &MjpProblem<f64>, steps: usize, seed: u64) -> Vec<Vec<f64>> {
    let sampler = GibbsSampler::new(problem).unwrap();
    let mut rng = stream_rng(seed, 0);
    let mut path = MjpPath::new(0.0, 2.0, vec![0.5, 1.5], vec![2, 1, 0]).unwrap();
    let mut out = vec![Vec::with_capacity(steps); 12];
    for _ in 0..steps {
        path = sampler.step(&path, &mut rng).unwrap().0;
        for (o, v) in out.iter_mut().zip(flat_stats(&path)) {
            o.push(v);
        }
    }
    out
}

fn prior_stats(draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let g = three_state();
    let pi = pi3();
    let interval = Interval::new(0.0, 2.0).unwrap();
    let mut rng = stream_rng(seed, 0);
    let mut out = vec![Vec::with_capacity(draws); 12];
    for _ in 0..draws {
        let p = sample_prior_path(&g, &pi, interval, &mut rng);
        for (o, v) in out.iter_mut().zip(flat_stats(&p)) {
            o.push(v);
        }
    }
    out
}

fn assert_same_means(a: &[Vec<f64>], b: &[Vec<f64>]) {
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        let z = z_score(x, y);
        assert!(z.abs() < 3.0, "statistic {j}: z = {z}");
    }
}

#[test]
fn empty_evidence_chain_matches_the_prior() {
    let chain = gibbs_stats(&problem_with(ObservationSet::empty(3)), 10_000, 21);
    assert_same_means(&chain, &prior_stats(10_000, 22));
}

#[test]
fn uninformative_likelihoods_match_the_prior() {
    let flat = ObservationSet::new(3, vec![(0.3, vec![1.0; 3]), (1.0, vec![1.0; 3]), (2.0, vec![1.0; 3])]).unwrap();
    let chain = gibbs_stats(&problem_with(flat), 10_000, 23);
    assert_same_means(&chain, &prior_stats(10_000, 24));
}

#[test]
fn one_retained_sample_when_iterations_exceed_burn_in_by_one() {
    let problem = problem_with(ObservationSet::exact(3, [(1.0, 1)]).unwrap());
    let mut rng = stream_rng(31, 0);
    let out = run_chain(&problem, 6, 5, &mut rng).unwrap();
    assert_eq!(out.samples.len(), 1);
    assert_eq!(out.trace.len(), 6);
    assert_eq!(out.samples[0].state_at(1.0).unwrap(), 1);
    assert!(ChainConfig::new(5, 5).is_err());
}

#[test]
fn chains_are_reproducible_from_the_seed() {
    let problem = problem_with(ObservationSet::exact(3, [(0.0, 0), (2.0, 2)]).unwrap());
    let run = |seed| run_chain(&problem, 50, 10, &mut stream_rng(seed, 0)).unwrap().samples;
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn samples_respect_exact_observations() {
    let problem = problem_with(ObservationSet::exact(3, [(0.0, 0), (0.7, 1), (2.0, 2)]).unwrap());
    let out = run_chain(&problem, 300, 0, &mut stream_rng(41, 0)).unwrap();
    for p in &out.samples {
        assert_eq!(p.state_at(0.0).unwrap(), 0);
        assert_eq!(p.state_at(0.7).unwrap(), 1);
        assert_eq!(p.state_at(2.0).unwrap(), 2);
    }
}

#[test]
fn impossible_observations_are_reported() {
    // State 1 can never be left, but the data end in state 0.
    let g = jumpgibbs::process::Generator::from_rates(2, [(0, 1, 1.0)], jumpgibbs::process::Layout::Dense).unwrap();
    let problem = MjpProblem::new(
        g,
        InitialDistribution::uniform(2).unwrap(),
        Interval::new(0.0, 1.0).unwrap(),
        ObservationSet::exact(2, [(0.2, 1), (0.9, 0)]).unwrap(),
        UniformizationPolicy::default(),
    )
    .unwrap();
    let err = run_chain(&problem, 10, 0, &mut stream_rng(51, 0)).unwrap_err();
    assert!(matches!(err, Error::InconsistentEvidence { .. }), "{err}");
}
