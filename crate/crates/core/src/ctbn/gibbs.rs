use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ffbs::{sample_posterior, HmmProblem};
use crate::process::{
    Interval, MjpPath, ObservationSet, PiecewiseConstant, TransitionKernel, UniformizationPolicy,
};
use crate::scalar::{categorical, poisson_count, sorted_uniforms, Scalar};

use super::model::{CtbnModel, InitialSpec};
use super::path::{CtbnObservations, CtbnPath};
use super::prior::sample_ctbn_prior_from;
use super::timeline::{node_rate_timeline, ChildTable};

/// Posterior path inference problem for a CTBN.
#[derive(Debug, Clone)]
pub struct CtbnProblem<T> {
    pub model: CtbnModel<T>,
    pub interval: Interval<T>,
    pub observations: CtbnObservations<T>,
    pub policy: UniformizationPolicy<T>,
}

impl<T: Scalar> CtbnProblem<T> {
    pub fn new(
        model: CtbnModel<T>,
        interval: Interval<T>,
        observations: CtbnObservations<T>,
        policy: UniformizationPolicy<T>,
    ) -> Result<Self> {
        if !(interval.start < interval.end) {
            return Err(Error::InvalidArgument("interval must have positive length".into()));
        }
        if (0..model.m()).any(|k| observations.node(k).n() != model.states(k)) {
            return Err(Error::InvalidObservations(
                "observation sets do not match the model's nodes".into(),
            ));
        }
        observations.check_within(interval)?;
        Ok(Self {
            model,
            interval,
            observations,
            policy,
        })
    }
}

/// Node visiting order within a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SweepOrder {
    /// Nodes `0, 1, ..., m - 1`.
    #[default]
    Ascending,
    /// A fresh uniformly random permutation every sweep.
    RandomPermutation,
}

/// Uniformized kernels and rates for every (node, parent configuration).
#[derive(Debug, Clone)]
struct NodeKernels<T> {
    omegas: Vec<T>,
    kernels: Vec<TransitionKernel<T>>,
    identity: TransitionKernel<T>,
}

impl<T: Scalar> NodeKernels<T> {
    fn build(model: &CtbnModel<T>, k: usize, policy: &UniformizationPolicy<T>) -> Result<Self> {
        let mut omegas = Vec::with_capacity(model.num_configs(k));
        let mut kernels = Vec::with_capacity(model.num_configs(k));
        for gen in &model.node(k).generators {
            let omega = policy.omega(gen);
            kernels.push(TransitionKernel::uniformized(gen, omega)?);
            omegas.push(omega);
        }
        Ok(Self {
            omegas,
            kernels,
            identity: TransitionKernel::identity(model.states(k)),
        })
    }
}

fn node_error(k: usize, e: Error) -> Error {
    match e {
        Error::InconsistentEvidence { step } => Error::InconsistentNodeEvidence { node: k, slot: step },
        other => other,
    }
}

/// Resamples node `k`'s path given everything else. Returns the new node
/// path and the grid size used.
fn resample_node<T: Scalar, R: Rng + ?Sized>(
    model: &CtbnModel<T>,
    path: &CtbnPath<T>,
    k: usize,
    observations: &ObservationSet<T>,
    kern: &NodeKernels<T>,
    rng: &mut R,
) -> Result<(MjpPath<T>, usize)> {
    let n = model.states(k);
    let own = path.node(k);
    let timeline = node_rate_timeline(model, path, k);

    // Virtual jumps on the refinement of the node's own pieces and the
    // timeline segments, each at rate omega(segment) - leave(state).
    let mut virtuals = Vec::new();
    let mut pieces = own.segments().peekable();
    let mut segments = timeline.segments().peekable();
    let mut t = path.t_start();
    while let (Some(&(_, pe, x)), Some(&(_, se, seg))) = (pieces.peek(), segments.peek()) {
        let until = if pe < se { pe } else { se };
        let rate = kern.omegas[timeline.config(seg)] - timeline.generator(seg).leave_rate(x);
        if rate > T::zero() && until > t {
            let count = poisson_count(rate * (until - t), rng);
            virtuals.extend(sorted_uniforms(count, t, until, rng));
        }
        t = until;
        if pe <= se {
            pieces.next();
        }
        if se <= pe {
            segments.next();
        }
    }

    // Grid T u U u P; `true` marks a parent-change time.
    let mut grid: Vec<(T, bool)> = own
        .jump_times()
        .iter()
        .chain(&virtuals)
        .map(|&t| (t, false))
        .chain(timeline.parent_change_times().iter().map(|&t| (t, true)))
        .collect();
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    let mut prev = path.t_start();
    for &(t, _) in &grid {
        if t <= prev {
            return Err(Error::TimeCollision(t.as_f64()));
        }
        prev = t;
    }
    let times: Vec<T> = grid.iter().map(|g| g.0).collect();

    let mut kernels = Vec::with_capacity(grid.len());
    let mut seg = 0;
    for &(t, parent_change) in &grid {
        while seg + 1 < timeline.len() && timeline.breakpoints()[seg + 1] <= t {
            seg += 1;
        }
        kernels.push(if parent_change {
            &kern.identity
        } else {
            &kern.kernels[timeline.config(seg)]
        });
    }

    let mut likelihoods = observations.slot_likelihoods(&times);
    let mut child = vec![T::zero(); likelihoods.len()];
    ChildTable::build(model, path, k).add_slot_logliks(&times, &mut child);
    for (slot, (lik, ll)) in likelihoods
        .chunks_exact_mut(n)
        .zip(child.chunks_exact(n))
        .enumerate()
    {
        let max = ll.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return Err(Error::InconsistentNodeEvidence { node: k, slot });
        }
        for (l, &c) in lik.iter_mut().zip(ll) {
            *l *= (c - max).exp();
        }
    }

    let mut initial = model.initial_conditional(k, &path.initial_states());
    let z: T = initial.iter().copied().sum();
    if !(z > T::zero()) {
        return Err(Error::InconsistentNodeEvidence { node: k, slot: 0 });
    }
    initial.iter_mut().for_each(|w| *w /= z);

    let hmm = HmmProblem::new(&initial, kernels, likelihoods).map_err(|e| node_error(k, e))?;
    let (states, _) = sample_posterior(&hmm, rng).map_err(|e| node_error(k, e))?;

    let mut jump_times = Vec::new();
    let mut path_states = vec![states[0]];
    for (i, &(t, parent_change)) in grid.iter().enumerate() {
        let s = states[i + 1];
        assert!(
            !parent_change || s == states[i],
            "node {k} changed state at a parent-change time"
        );
        if s != states[i] {
            jump_times.push(t);
            path_states.push(s);
        }
    }
    let new_path = MjpPath::from_parts_unchecked(path.t_start(), path.t_end(), jump_times, path_states);
    Ok((new_path, grid.len()))
}

/// Gibbs sampler over CTBN paths: each node's whole path is resampled given
/// its Markov blanket.
#[derive(Debug, Clone)]
pub struct CtbnGibbsSampler<'p, T> {
    problem: &'p CtbnProblem<T>,
    kernels: Vec<NodeKernels<T>>,
    order: SweepOrder,
}

impl<'p, T: Scalar> CtbnGibbsSampler<'p, T> {
    pub fn new(problem: &'p CtbnProblem<T>) -> Result<Self> {
        let kernels = (0..problem.model.m())
            .map(|k| NodeKernels::build(&problem.model, k, &problem.policy))
            .collect::<Result<_>>()?;
        Ok(Self {
            problem,
            kernels,
            order: SweepOrder::default(),
        })
    }

    pub fn with_order(mut self, order: SweepOrder) -> Self {
        self.order = order;
        self
    }

    pub fn problem(&self) -> &'p CtbnProblem<T> {
        self.problem
    }

    /// Resamples node `k` in place; returns the grid size.
    pub fn update_node<R: Rng + ?Sized>(
        &self,
        path: &mut CtbnPath<T>,
        k: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let p = self.problem;
        let (new, size) = resample_node(&p.model, path, k, p.observations.node(k), &self.kernels[k], rng)?;
        // Jumps of nodes outside the parents and children coincide with
        // probability zero; checking them all would make a sweep quadratic.
        let model = &p.model;
        path.replace_checking(k, new, model.parents(k).iter().chain(model.children(k)).copied())?;
        Ok(size)
    }

    /// One sweep over all nodes; returns the summed grid size.
    pub fn sweep<R: Rng + ?Sized>(&self, path: &mut CtbnPath<T>, rng: &mut R) -> Result<usize> {
        let m = self.problem.model.m();
        let mut order: Vec<usize> = (0..m).collect();
        if self.order == SweepOrder::RandomPermutation {
            order.shuffle(rng);
        }
        let mut total = 0;
        for k in order {
            total += self.update_node(path, k, rng)?;
        }
        Ok(total)
    }
}

fn check_inputs<T: Scalar>(model: &CtbnModel<T>, path: &CtbnPath<T>) -> Result<()> {
    path.check_model(model)
}

/// Resamples node `k`'s path given the rest of `path` and the node's own
/// observations.
pub fn ctbn_gibbs_node_update<T: Scalar, R: Rng + ?Sized>(
    model: &CtbnModel<T>,
    path: &CtbnPath<T>,
    k: usize,
    observations: &ObservationSet<T>,
    policy: &UniformizationPolicy<T>,
    rng: &mut R,
) -> Result<CtbnPath<T>> {
    check_inputs(model, path)?;
    if k >= model.m() || observations.n() != model.states(k) {
        return Err(Error::InvalidArgument(format!("bad node {k} or observation dimension")));
    }
    observations.check_within(path.t_start(), path.t_end())?;
    let kern = NodeKernels::build(model, k, policy)?;
    let (new, _) = resample_node(model, path, k, observations, &kern, rng)?;
    let mut out = path.clone();
    out.replace(k, new)?;
    Ok(out)
}

/// One ascending-order sweep of [`ctbn_gibbs_node_update`] over all nodes.
pub fn ctbn_gibbs_sweep<T: Scalar, R: Rng + ?Sized>(
    model: &CtbnModel<T>,
    path: &CtbnPath<T>,
    observations: &CtbnObservations<T>,
    policy: &UniformizationPolicy<T>,
    rng: &mut R,
) -> Result<CtbnPath<T>> {
    check_inputs(model, path)?;
    let problem = CtbnProblem::new(model.clone(), path.interval(), observations.clone(), *policy)?;
    let sampler = CtbnGibbsSampler::new(&problem)?;
    let mut out = path.clone();
    sampler.sweep(&mut out, rng)?;
    Ok(out)
}

/// Settings for [`run_ctbn_chain_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtbnChainConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub init_attempts: usize,
    pub order: SweepOrder,
}

impl CtbnChainConfig {
    pub fn new(sweeps: usize, burn_in: usize) -> Result<Self> {
        if sweeps <= burn_in {
            return Err(Error::InvalidArgument(format!(
                "sweeps ({sweeps}) must exceed burn-in ({burn_in})"
            )));
        }
        Ok(Self {
            sweeps,
            burn_in,
            init_attempts: 10,
            order: SweepOrder::Ascending,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtbnTraceRow {
    pub sweep: usize,
    pub grid_size: usize,
    pub elapsed_secs: f64,
}

/// Initial joint state weighted by observations taken exactly at `t_start`.
fn informed_initial<T: Scalar, R: Rng + ?Sized>(problem: &CtbnProblem<T>, rng: &mut R) -> Vec<usize> {
    let model = &problem.model;
    let t0 = problem.interval.start;
    let at_start = |k: usize, s: usize| {
        problem
            .observations
            .node(k)
            .iter()
            .filter(|o| o.time == t0)
            .fold(T::one(), |acc, o| acc * o.likelihood()[s])
    };
    let draw = match model.initial() {
        InitialSpec::Product(marginals) => marginals
            .iter()
            .enumerate()
            .map(|(k, d)| {
                categorical((0..d.n()).map(|s| (s, d.prob(s) * at_start(k, s))), rng)
            })
            .collect::<Option<Vec<_>>>(),
        InitialSpec::Joint(table) => categorical(
            table.iter().enumerate().map(|(idx, &w)| {
                let states = model.joint_states(idx);
                let lik = states.iter().enumerate().fold(T::one(), |acc, (k, &s)| acc * at_start(k, s));
                (idx, w * lik)
            }),
            rng,
        )
        .map(|idx| model.joint_states(idx)),
    };
    draw.unwrap_or_else(|| model.sample_initial(rng))
}

/// Runs sweeps from a prior draw and hands each post-burn-in path to
/// `on_sample(sweep, path)`.
///
/// The starting path is forward-simulated from an initial state that agrees
/// with any observations at `t_start`. If the first sweep cannot explain the
/// observations from it, a fresh start is drawn, up to `init_attempts` times;
/// after that the inconsistency error is returned.
pub fn run_ctbn_chain_with<T, R, F>(
    problem: &CtbnProblem<T>,
    config: &CtbnChainConfig,
    rng: &mut R,
    mut on_sample: F,
) -> Result<Vec<CtbnTraceRow>>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(usize, &CtbnPath<T>),
{
    run_ctbn_chain_while(problem, config, rng, |sweep, path| {
        on_sample(sweep, path);
        true
    })
}

/// Like [`run_ctbn_chain_with`], but stops early once `on_sample` returns
/// `false`.
pub fn run_ctbn_chain_while<T, R, F>(
    problem: &CtbnProblem<T>,
    config: &CtbnChainConfig,
    rng: &mut R,
    mut on_sample: F,
) -> Result<Vec<CtbnTraceRow>>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(usize, &CtbnPath<T>) -> bool,
{
    if config.sweeps <= config.burn_in {
        return Err(Error::InvalidArgument("sweeps must exceed burn-in".into()));
    }
    let sampler = CtbnGibbsSampler::new(problem)?.with_order(config.order);
    let start = Instant::now();
    let mut trace = Vec::with_capacity(config.sweeps);

    let mut attempt = 0;
    let (mut path, grid_size) = loop {
        let initial = informed_initial(problem, rng);
        let mut path = sample_ctbn_prior_from(&problem.model, initial, problem.interval, rng);
        match sampler.sweep(&mut path, rng) {
            Ok(size) => break (path, size),
            Err(Error::InconsistentNodeEvidence { .. }) if attempt < config.init_attempts => {
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let push = |trace: &mut Vec<CtbnTraceRow>, sweep, grid_size| {
        trace.push(CtbnTraceRow {
            sweep,
            grid_size,
            elapsed_secs: start.elapsed().as_secs_f64(),
        })
    };
    push(&mut trace, 0, grid_size);
    if config.burn_in == 0 && !on_sample(0, &path) {
        return Ok(trace);
    }
    for sweep in 1..config.sweeps {
        let size = sampler.sweep(&mut path, rng)?;
        push(&mut trace, sweep, size);
        if sweep >= config.burn_in && !on_sample(sweep, &path) {
            break;
        }
    }
    Ok(trace)
}
