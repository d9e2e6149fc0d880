use std::collections::HashMap;

use crate::diagnostics::SufficientStats;
use crate::error::{Error, Result};
use crate::process::Generator;
use crate::sampler::MjpProblem;
use crate::scalar::Scalar;

use super::expm::{transition_matrix, SquareMatrix};

/// Smoothed state distributions at a set of query times.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior<T> {
    n: usize,
    times: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> GridPosterior<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Distribution over states at `times()[i]`.
    pub fn marginal(&self, i: usize) -> &[T] {
        &self.probs[i * self.n..(i + 1) * self.n]
    }
}

/// `exp(A w)` for the widths met on a grid, keyed so that widths equal up to
/// rounding share one matrix.
struct ExpmCache<'g, T> {
    generator: &'g Generator<T>,
    unit: T,
    cache: HashMap<i64, SquareMatrix<T>>,
}

impl<'g, T: Scalar> ExpmCache<'g, T> {
    fn new(generator: &'g Generator<T>, unit: T) -> Self {
        Self {
            generator,
            unit,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, width: T) -> Result<&SquareMatrix<T>> {
        let key = (width / self.unit * T::lit(1e12)).round().to_i64().unwrap_or(i64::MAX);
        if !self.cache.contains_key(&key) {
            let m = transition_matrix(self.generator, width)?;
            self.cache.insert(key, m);
        }
        Ok(&self.cache[&key])
    }
}

fn normalize<T: Scalar>(v: &mut [T]) -> Option<T> {
    let z: T = v.iter().copied().sum();
    if !(z > T::zero()) || !z.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= z);
    Some(z)
}

/// Forward-backward on an arbitrary sorted time grid that contains
/// `t_start` and every observation time.
struct Smoothed<T> {
    times: Vec<T>,
    /// Likelihood of the observations at each grid time.
    lik: Vec<Vec<T>>,
    /// Filtered: data up to and including `times[i]`.
    alpha: Vec<Vec<T>>,
    /// Data strictly after `times[i]`, up to scale.
    beta: Vec<Vec<T>>,
}

impl<T: Scalar> Smoothed<T> {
    fn run(problem: &MjpProblem<T>, mut times: Vec<T>, cache: &mut ExpmCache<'_, T>) -> Result<Self> {
        let n = problem.n();
        times.push(problem.interval.start);
        times.extend(problem.observations.times());
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        times.dedup();

        let mut lik = vec![vec![T::one(); n]; times.len()];
        for o in problem.observations.iter() {
            let i = times
                .binary_search_by(|t| t.partial_cmp(&o.time).expect("finite"))
                .expect("observation times are on the grid");
            for (l, &x) in lik[i].iter_mut().zip(o.likelihood()) {
                *l *= x;
            }
        }

        let mut alpha = Vec::with_capacity(times.len());
        let mut a: Vec<T> = problem
            .initial
            .weights()
            .iter()
            .zip(&lik[0])
            .map(|(&p, &l)| p * l)
            .collect();
        normalize(&mut a).ok_or(Error::InconsistentEvidence { step: 0 })?;
        alpha.push(a);
        for i in 1..times.len() {
            let p = cache.get(times[i] - times[i - 1])?;
            let mut a = p.left_apply(&alpha[i - 1]);
            for (x, &l) in a.iter_mut().zip(&lik[i]) {
                *x = (*x * l).max(T::zero());
            }
            normalize(&mut a).ok_or(Error::InconsistentEvidence { step: i })?;
            alpha.push(a);
        }

        let len = times.len();
        let mut beta = vec![vec![T::one(); n]; len];
        for i in (0..len - 1).rev() {
            let p = cache.get(times[i + 1] - times[i])?;
            let weighted: Vec<T> = beta[i + 1].iter().zip(&lik[i + 1]).map(|(&b, &l)| b * l).collect();
            let mut b = p.right_apply(&weighted);
            b.iter_mut().for_each(|x| *x = x.max(T::zero()));
            normalize(&mut b).ok_or(Error::InconsistentEvidence { step: i + 1 })?;
            beta[i] = b;
        }
        Ok(Self {
            times,
            lik,
            alpha,
            beta,
        })
    }

    fn marginal(&self, i: usize) -> Vec<T> {
        let mut m: Vec<T> = self.alpha[i].iter().zip(&self.beta[i]).map(|(&a, &b)| a * b).collect();
        normalize(&mut m).expect("consistent evidence has positive smoothed mass");
        m
    }
}

fn check_times<T: Scalar>(problem: &MjpProblem<T>, times: &[T]) -> Result<()> {
    if let Some(&t) = times.iter().find(|&&t| !problem.interval.contains(t)) {
        return Err(Error::OutOfDomain {
            time: t.as_f64(),
            start: problem.interval.start.as_f64(),
            end: problem.interval.end.as_f64(),
        });
    }
    Ok(())
}

/// Exact smoothed marginals at each query time, by forward-backward with
/// matrix-exponential transition probabilities over the union of query and
/// observation times. Results follow the order of `query`.
pub fn exact_posterior_marginals<T: Scalar>(
    problem: &MjpProblem<T>,
    query: &[T],
) -> Result<GridPosterior<T>> {
    check_times(problem, query)?;
    let mut cache = ExpmCache::new(&problem.generator, problem.interval.length());
    let sm = Smoothed::run(problem, query.to_vec(), &mut cache)?;
    let n = problem.n();
    let mut probs = Vec::with_capacity(query.len() * n);
    for &t in query {
        let i = sm
            .times
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite"))
            .expect("query times are on the grid");
        probs.extend(sm.marginal(i));
    }
    Ok(GridPosterior {
        n,
        times: query.to_vec(),
        probs,
    })
}

/// Posterior expected dwell times and transition counts by numerical
/// integration on a grid of `resolution` equal steps (plus the observation
/// times).
///
/// Dwell times integrate the smoothed marginals by the trapezoidal rule
/// (error `O(h^2)`). Transition counts integrate the intensity
/// `alpha_t(i) q_ij beta_t(j) / Z` by the midpoint rule on each step.
pub fn exact_sufficient_stats<T: Scalar>(
    problem: &MjpProblem<T>,
    resolution: usize,
) -> Result<SufficientStats<T>> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let n = problem.n();
    let (a, b) = (problem.interval.start, problem.interval.end);
    let h = (b - a) / T::from_count(resolution);
    let grid: Vec<T> = (0..=resolution)
        .map(|i| if i == resolution { b } else { a + h * T::from_count(i) })
        .collect();
    let mut cache = ExpmCache::new(&problem.generator, h);
    let sm = Smoothed::run(problem, grid, &mut cache)?;

    let mut stats = SufficientStats::zeros(n);
    let marginals: Vec<Vec<T>> = (0..sm.times.len()).map(|i| sm.marginal(i)).collect();
    let half = T::lit(0.5);
    let gen = &problem.generator;
    for i in 0..sm.times.len() - 1 {
        let w = sm.times[i + 1] - sm.times[i];
        for s in 0..n {
            stats.dwell[s] += (marginals[i][s] + marginals[i + 1][s]) * half * w;
        }
        let p = cache.get(w * half)?;
        let mut alpha = p.left_apply(&sm.alpha[i]);
        normalize(&mut alpha).expect("filtered mass stays positive");
        let weighted: Vec<T> = sm.beta[i + 1].iter().zip(&sm.lik[i + 1]).map(|(&x, &l)| x * l).collect();
        let beta = p.right_apply(&weighted);
        let z: T = alpha.iter().zip(&beta).map(|(&x, &y)| x * y).sum();
        for from in 0..n {
            if alpha[from] == T::zero() {
                continue;
            }
            for (to, q) in gen.out_rates(from) {
                stats.transitions[from * n + to] += w * alpha[from] * q * beta[to] / z;
            }
        }
    }
    Ok(stats)
}
