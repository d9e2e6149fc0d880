use rand::Rng;

use crate::error::{Error, Result};
use crate::ffbs::{sample_posterior, HmmProblem};
use crate::process::{
    check_states, Generator, InitialDistribution, Interval, MjpPath, ObservationSet,
    PiecewiseConstant, TransitionKernel, UniformizationPolicy, UniformizedPath,
};
use crate::scalar::{poisson_count, sorted_uniforms, Scalar};

use super::prior::{merge_times, sample_virtual_jumps};

/// Posterior path inference problem for a single MJP.
#[derive(Debug, Clone)]
pub struct MjpProblem<T> {
    pub generator: Generator<T>,
    pub initial: InitialDistribution<T>,
    pub interval: Interval<T>,
    pub observations: ObservationSet<T>,
    pub policy: UniformizationPolicy<T>,
}

impl<T: Scalar> MjpProblem<T> {
    pub fn new(
        generator: Generator<T>,
        initial: InitialDistribution<T>,
        interval: Interval<T>,
        observations: ObservationSet<T>,
        policy: UniformizationPolicy<T>,
    ) -> Result<Self> {
        let n = generator.n();
        if initial.n() != n || observations.n() != n {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: generator {n}, initial {}, observations {}",
                initial.n(),
                observations.n()
            )));
        }
        if !(interval.start < interval.end) {
            return Err(Error::InvalidArgument("interval must have positive length".into()));
        }
        observations.check_within(interval.start, interval.end)?;
        Ok(Self {
            generator,
            initial,
            interval,
            observations,
            policy,
        })
    }

    pub fn n(&self) -> usize {
        self.generator.n()
    }

    pub fn omega(&self) -> T {
        self.policy.omega(&self.generator)
    }
}

/// Per-iteration bookkeeping from one Gibbs step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    /// `|W|`, the number of grid times (real plus virtual jumps).
    pub grid_size: usize,
    /// Log probability of the observations under the grid chain.
    pub log_evidence: T,
}

/// Auxiliary-variable Gibbs sampler over MJP paths.
///
/// One step draws virtual jumps given the current path, runs FFBS over the
/// merged grid with the uniformized kernel and observation likelihoods, and
/// drops the virtual jumps from the result. The new path depends on the old
/// one only through the grid times.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'p, T> {
    problem: &'p MjpProblem<T>,
    omega: T,
    kernel: TransitionKernel<T>,
}

impl<'p, T: Scalar> GibbsSampler<'p, T> {
    pub fn new(problem: &'p MjpProblem<T>) -> Result<Self> {
        let omega = problem.omega();
        let kernel = TransitionKernel::uniformized(&problem.generator, omega)?;
        Ok(Self {
            problem,
            omega,
            kernel,
        })
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn problem(&self) -> &'p MjpProblem<T> {
        self.problem
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        current: &MjpPath<T>,
        rng: &mut R,
    ) -> Result<(MjpPath<T>, StepInfo<T>)> {
        let p = self.problem;
        if current.t_start() != p.interval.start || current.t_end() != p.interval.end {
            return Err(Error::InvalidPath("path interval differs from the problem's".into()));
        }
        check_states(p.n(), current)?;
        let virtual_times = sample_virtual_jumps(&p.generator, current, self.omega, rng)?;
        let grid = merge_times(p.interval.start, current.jump_times(), &virtual_times)?;
        resample_on_grid(p, &self.kernel, self.omega, grid, rng)
    }
}

/// FFBS over a fixed grid with the given kernel.
fn resample_on_grid<T: Scalar, R: Rng + ?Sized>(
    p: &MjpProblem<T>,
    kernel: &TransitionKernel<T>,
    omega: T,
    grid: Vec<T>,
    rng: &mut R,
) -> Result<(MjpPath<T>, StepInfo<T>)> {
    let likelihoods = p.observations.slot_likelihoods(&grid);
    let kernels = vec![kernel; grid.len()];
    let hmm = HmmProblem::new(p.initial.weights(), kernels, likelihoods)?;
    let (states, log_evidence) = sample_posterior(&hmm, rng)?;
    let grid_size = grid.len();
    let upath = UniformizedPath::new(p.interval.start, p.interval.end, grid, states, omega)?;
    Ok((
        upath.to_mjp_path(),
        StepInfo {
            grid_size,
            log_evidence,
        },
    ))
}

/// One Gibbs transition; see [`GibbsSampler`].
pub fn gibbs_step<T: Scalar, R: Rng + ?Sized>(
    problem: &MjpProblem<T>,
    current: &MjpPath<T>,
    rng: &mut R,
) -> Result<MjpPath<T>> {
    Ok(GibbsSampler::new(problem)?.step(current, rng)?.0)
}

/// A path consistent with the observations, used to restart a chain whose
/// prior-drawn starting path admits no grid explanation of the data.
///
/// Draws a dense uniformized grid at `omega * 2^attempt`, adds every interior
/// observation time as a grid point, and samples states by FFBS.
pub(crate) fn observation_consistent_path<T: Scalar, R: Rng + ?Sized>(
    p: &MjpProblem<T>,
    omega: T,
    attempt: u32,
    rng: &mut R,
) -> Result<MjpPath<T>> {
    let dense_omega = omega * T::lit(2f64.powi(attempt as i32));
    let dense_omega = if dense_omega > T::zero() {
        dense_omega
    } else {
        T::one()
    };
    let kernel = TransitionKernel::uniformized(&p.generator, dense_omega)?;
    let count = poisson_count(dense_omega * p.interval.length(), rng);
    let mut grid = sorted_uniforms(count, p.interval.start, p.interval.end, rng);
    grid.extend(
        p.observations
            .iter()
            .map(|o| o.time)
            .filter(|&t| t > p.interval.start && t < p.interval.end),
    );
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    if grid.first().is_some_and(|&t| t <= p.interval.start) {
        grid.remove(0);
    }
    Ok(resample_on_grid(p, &kernel, dense_omega, grid, rng)?.0)
}
