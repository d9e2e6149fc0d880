#![allow(dead_code)]

use jumpgibbs::diagnostics::{effective_sample_size, ScalarTrace};
use jumpgibbs::process::{Generator, InitialDistribution, Layout};

pub fn three_state() -> Generator<f64> {
    Generator::from_dense(
        &[
            vec![-1.5, 1.0, 0.5],
            vec![0.7, -2.0, 1.3],
            vec![0.4, 0.8, -1.2],
        ],
        Layout::Dense,
    )
    .unwrap()
}

pub fn two_state(a: f64, b: f64) -> Generator<f64> {
    Generator::from_rates(2, [(0, 1, a), (1, 0, b)], Layout::Dense).unwrap()
}

pub fn pi3() -> InitialDistribution<f64> {
    InitialDistribution::new(vec![0.5, 0.3, 0.2]).unwrap()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Mean and its standard error, using the effective sample size of `x`.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let trace = ScalarTrace::new(x.to_vec()).unwrap();
    let ess = effective_sample_size(&trace).unwrap().value;
    (trace.mean(), (trace.variance() / ess).sqrt())
}

/// Two-sample z-score with ESS-based standard errors.
pub fn z_score(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_se(a);
    let (mb, sb) = mean_se(b);
    let se = (sa * sa + sb * sb).sqrt();
    if se == 0.0 {
        if ma == mb { 0.0 } else { f64::INFINITY }
    } else {
        (ma - mb) / se
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS critical value at level 0.001.
pub fn ks_critical(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.95 * ((na + nb) / (na * nb)).sqrt()
}

pub fn histogram(states: &[usize], n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    for &s in states {
        h[s] += 1.0;
    }
    let total = states.len() as f64;
    h.iter_mut().for_each(|v| *v /= total);
    h
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
