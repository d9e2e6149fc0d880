//! MCMC output analysis: sufficient-statistic aggregation, effective sample
//! size and the average relative error against known expectations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-state dwell times and per-ordered-pair transition counts.
///
/// Counts are stored as scalars so the same type holds single-path integers
/// and posterior expectations. `transitions` is row-major `n x n`, source
/// state first; the diagonal is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats<T> {
    pub n: usize,
    pub dwell: Vec<T>,
    pub transitions: Vec<T>,
}

impl<T: Scalar> SufficientStats<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            dwell: vec![T::zero(); n],
            transitions: vec![T::zero(); n * n],
        }
    }

    pub fn transition(&self, from: usize, to: usize) -> T {
        self.transitions[from * self.n + to]
    }

    pub fn total_dwell(&self) -> T {
        self.dwell.iter().copied().sum()
    }

    pub fn total_transitions(&self) -> T {
        self.transitions.iter().copied().sum()
    }

    /// Flat statistic vector: dwell times, then off-diagonal counts row-major.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = self.dwell.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    v.push(self.transition(i, j));
                }
            }
        }
        v
    }

    /// Names matching [`SufficientStats::to_vec`], e.g. `dwell[2]`, `count[0->1]`.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.n).map(|i| format!("dwell[{i}]")).collect();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    v.push(format!("count[{i}->{j}]"));
                }
            }
        }
        v
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, &b) in self.dwell.iter_mut().zip(&other.dwell) {
            *a += b;
        }
        for (a, &b) in self.transitions.iter_mut().zip(&other.transitions) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: T) {
        self.dwell.iter_mut().for_each(|x| *x *= c);
        self.transitions.iter_mut().for_each(|x| *x *= c);
    }
}

/// Ordered sequence of values, one per retained MCMC sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrace<T>(Vec<T>);

impl<T: Scalar> ScalarTrace<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty trace".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> T {
        self.0.iter().copied().sum::<T>() / T::from_count(self.0.len())
    }

    /// Sample variance (denominator `N - 1`; zero for a single value).
    pub fn variance(&self) -> T {
        let n = self.0.len();
        if n < 2 {
            return T::zero();
        }
        let m = self.mean();
        let ss: T = self.0.iter().map(|&x| (x - m) * (x - m)).sum();
        ss / T::from_count(n - 1)
    }
}

/// Average relative error together with the statistics that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeError<T> {
    pub value: T,
    /// Indices (into the flat statistic vector) whose true value is zero.
    pub excluded: Vec<usize>,
}

/// `sum_j |est_j - truth_j| / truth_j` over statistics with nonzero truth.
pub fn average_relative_error<T: Scalar>(
    estimates: &SufficientStats<T>,
    truth: &SufficientStats<T>,
) -> Result<RelativeError<T>> {
    if estimates.n != truth.n {
        return Err(Error::InvalidArgument("statistic shapes differ".into()));
    }
    relative_error_of(&estimates.to_vec(), &truth.to_vec())
}

/// Same as [`average_relative_error`] on flat statistic vectors.
pub fn relative_error_of<T: Scalar>(estimates: &[T], truth: &[T]) -> Result<RelativeError<T>> {
    if estimates.len() != truth.len() {
        return Err(Error::InvalidArgument("statistic shapes differ".into()));
    }
    let mut value = T::zero();
    let mut excluded = Vec::new();
    for (j, (&e, &t)) in estimates.iter().zip(truth).enumerate() {
        if t == T::zero() {
            excluded.push(j);
            continue;
        }
        value += (e - t).abs() / t.abs();
    }
    if excluded.len() == truth.len() {
        return Err(Error::UndefinedMetric("every true statistic is zero".into()));
    }
    Ok(RelativeError { value, excluded })
}

/// Effective sample size estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess<T> {
    pub value: T,
    /// Set when the trace has zero variance; `value` is then the trace length.
    pub constant: bool,
}

/// ESS = N / (1 + 2 sum_k rho_k), with the autocorrelation sum truncated by
/// Geyer's initial monotone positive sequence. Clamped to `(0, N]`.
pub fn effective_sample_size<T: Scalar>(trace: &ScalarTrace<T>) -> Result<Ess<T>> {
    let x = trace.values();
    let n = x.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!("ESS needs at least 10 values, got {n}")));
    }
    let nt = T::from_count(n);
    let mean = trace.mean();
    let centered: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let autocov = |lag: usize| -> T {
        let s: T = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(&a, &b)| a * b)
            .sum();
        s / nt
    };
    let c0 = autocov(0);
    if !(c0 > T::zero()) {
        return Ok(Ess {
            value: nt,
            constant: true,
        });
    }

    let mut sum = T::zero();
    let mut prev = T::infinity();
    let mut m = 0;
    while 2 * m + 1 < n {
        let rho_even = if m == 0 { T::one() } else { autocov(2 * m) / c0 };
        let rho_odd = autocov(2 * m + 1) / c0;
        let pair = rho_even + rho_odd;
        if pair <= T::zero() {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let tau = -T::one() + T::lit(2.0) * sum;
    let ess = if tau > T::zero() { nt / tau } else { nt };
    Ok(Ess {
        value: ess.min(nt).max(T::min_positive_value()),
        constant: false,
    })
}

/// Elementwise mean of a set of statistics plus one trace per flat statistic.
#[derive(Debug, Clone)]
pub struct Aggregate<T> {
    pub mean: SufficientStats<T>,
    pub traces: Vec<ScalarTrace<T>>,
}

pub fn aggregate_stats<T: Scalar>(samples: &[SufficientStats<T>]) -> Result<Aggregate<T>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no samples to aggregate".into()))?;
    let n = first.n;
    if samples.iter().any(|s| s.n != n) {
        return Err(Error::InvalidArgument("samples have different dimensions".into()));
    }
    let mut mean = SufficientStats::zeros(n);
    for s in samples {
        mean.add_assign(s);
    }
    mean.scale(T::one() / T::from_count(samples.len()));

    let flat: Vec<Vec<T>> = samples.iter().map(|s| s.to_vec()).collect();
    let width = flat[0].len();
    let traces = (0..width)
        .map(|j| ScalarTrace(flat.iter().map(|v| v[j]).collect()))
        .collect();
    Ok(Aggregate { mean, traces })
}

/// One row of `diagnostics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub name: String,
    pub mean: f64,
    pub ess: Option<f64>,
    pub constant_trace: bool,
    pub truth: Option<f64>,
    pub relative_error: Option<f64>,
}

/// Contents of `diagnostics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub samples: usize,
    pub statistics: Vec<StatisticSummary>,
    pub average_relative_error: Option<f64>,
    pub excluded_from_are: Vec<String>,
}

/// Summarizes named flat statistic samples, optionally against a truth vector.
pub fn diagnostics_report<T: Scalar>(
    names: &[String],
    samples: &[Vec<T>],
    truth: Option<&[T]>,
) -> Result<DiagnosticsReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let width = names.len();
    if samples.iter().any(|s| s.len() != width) || truth.is_some_and(|t| t.len() != width) {
        return Err(Error::InvalidArgument("statistic widths differ".into()));
    }
    let mut statistics = Vec::with_capacity(width);
    for (j, name) in names.iter().enumerate() {
        let trace = ScalarTrace(samples.iter().map(|s| s[j]).collect());
        let mean = trace.mean();
        let ess = effective_sample_size(&trace).ok();
        let t = truth.map(|t| t[j]);
        statistics.push(StatisticSummary {
            name: name.clone(),
            mean: mean.as_f64(),
            ess: ess.map(|e| e.value.as_f64()),
            constant_trace: ess.is_some_and(|e| e.constant),
            truth: t.map(|v| v.as_f64()),
            relative_error: t
                .filter(|&v| v != T::zero())
                .map(|v| ((mean - v).abs() / v.abs()).as_f64()),
        });
    }
    let (are, excluded) = match truth {
        Some(t) => {
            let means: Vec<T> = statistics.iter().map(|s| T::lit(s.mean)).collect();
            let r = relative_error_of(&means, t)?;
            (
                Some(r.value.as_f64()),
                r.excluded.iter().map(|&j| names[j].clone()).collect(),
            )
        }
        None => (None, Vec::new()),
    };
    Ok(DiagnosticsReport {
        samples: samples.len(),
        statistics,
        average_relative_error: are,
        excluded_from_are: excluded,
    })
}
