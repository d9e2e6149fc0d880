use crate::error::{Error, Result};
use crate::process::{log_zero, Generator, PiecewiseConstant};
use crate::scalar::Scalar;

use super::model::CtbnModel;
use super::path::CtbnPath;

/// Piecewise-constant conditional generator of one node given its parents'
/// paths. Segment `i` spans `[breakpoints[i], breakpoints[i + 1])`, the last
/// one running to `t_end`; every breakpoint after the first is a parent jump.
#[derive(Debug, Clone)]
pub struct RateTimeline<'m, T> {
    t_end: T,
    breakpoints: Vec<T>,
    configs: Vec<usize>,
    generators: Vec<&'m Generator<T>>,
}

impl<'m, T: Scalar> RateTimeline<'m, T> {
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// The parent-change times: every breakpoint after `t_start`.
    pub fn parent_change_times(&self) -> &[T] {
        &self.breakpoints[1..]
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn config(&self, segment: usize) -> usize {
        self.configs[segment]
    }

    pub fn generator(&self, segment: usize) -> &'m Generator<T> {
        self.generators[segment]
    }

    /// Segment holding time `t` (half-open on the right).
    pub fn segment_of(&self, t: T) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).max(1) - 1
    }

    /// `(start, end, segment index)` for each segment.
    pub fn segments(&self) -> impl Iterator<Item = (T, T, usize)> + '_ {
        (0..self.len()).map(move |i| {
            let b = self.breakpoints.get(i + 1).copied().unwrap_or(self.t_end);
            (self.breakpoints[i], b, i)
        })
    }
}

/// Sorted union of the jump times of `nodes`.
fn merged_jumps<T: Scalar>(path: &CtbnPath<T>, nodes: impl Iterator<Item = usize>) -> Vec<T> {
    let mut times: Vec<T> = nodes
        .flat_map(|p| path.node(p).jump_times().iter().copied())
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times
}

/// Rate timeline of node `k` under the recorded paths of its parents.
pub fn node_rate_timeline<'m, T: Scalar>(
    model: &'m CtbnModel<T>,
    path: &CtbnPath<T>,
    k: usize,
) -> RateTimeline<'m, T> {
    let parents = model.parents(k);
    let mut breakpoints = vec![path.t_start()];
    breakpoints.extend(merged_jumps(path, parents.iter().copied()));
    let configs: Vec<usize> = breakpoints
        .iter()
        .map(|&t| {
            model.config_index(k, |p| path.node(p).state_at(t).expect("breakpoint inside interval"))
        })
        .collect();
    let generators = configs.iter().map(|&c| model.generator(k, c)).collect();
    RateTimeline {
        t_end: path.t_end(),
        breakpoints,
        configs,
        generators,
    }
}

fn ln_rate<T: Scalar>(rate: T) -> T {
    if rate > T::zero() {
        rate.ln()
    } else {
        log_zero()
    }
}

/// Log-likelihood of all children of `k` on `[a, b)` if `k` were held in state
/// `s` there, with every other path as recorded.
///
/// Each child contributes the log rate of its own jumps in `[a, b)` and the
/// survival term `-leave * duration` on each piece where its state and all
/// of its parents are constant. No initial-distribution term is included.
pub fn child_segment_loglik<T: Scalar>(
    model: &CtbnModel<T>,
    path: &CtbnPath<T>,
    k: usize,
    s: usize,
    a: T,
    b: T,
) -> Result<T> {
    if !(a >= path.t_start() && a <= b && b <= path.t_end()) {
        return Err(Error::OutOfDomain {
            time: if a < path.t_start() { a.as_f64() } else { b.as_f64() },
            start: path.t_start().as_f64(),
            end: path.t_end().as_f64(),
        });
    }
    if s >= model.states(k) {
        return Err(Error::InvalidArgument(format!("node {k} has no state {s}")));
    }
    let mut total = T::zero();
    for &c in model.children(k) {
        let state_of = |t: T| {
            move |p: usize| {
                if p == k {
                    s
                } else {
                    path.node(p).state_at(t).expect("time inside interval")
                }
            }
        };
        let child = path.node(c);
        let others = model.parents(c).iter().copied().filter(|&p| p != k);
        let mut cuts = vec![a];
        cuts.extend(
            merged_jumps(path, others.chain(std::iter::once(c)))
                .into_iter()
                .filter(|&t| t > a && t < b),
        );
        cuts.push(b);
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if v <= u {
                continue;
            }
            let gen = model.generator(c, model.config_index(c, state_of(u)));
            total -= gen.leave_rate(child.state_at(u)?) * (v - u);
        }
        let times = child.jump_times();
        let lo = times.partition_point(|&t| t < a);
        let hi = times.partition_point(|&t| t < b);
        for j in lo..hi {
            let t = times[j];
            let (from, to) = (child.states()[j], child.states()[j + 1]);
            let gen = model.generator(c, model.config_index(c, state_of(t)));
            total += ln_rate(gen.rate(from, to));
        }
    }
    Ok(total)
}

/// Children log-likelihood for every candidate state of one node, laid out so
/// that whole grids of slots can be scored in a single pass.
///
/// Elementary pieces are cut at every child jump and every jump of a child's
/// other parents; on each piece the summed children leave rate is stored per
/// candidate state. Child jumps are stored as point events with their log
/// rate per candidate state.
pub(crate) struct ChildTable<T> {
    n: usize,
    childless: bool,
    t_end: T,
    starts: Vec<T>,
    survival: Vec<T>,
    event_times: Vec<T>,
    event_logs: Vec<T>,
}

impl<T: Scalar> ChildTable<T> {
    pub(crate) fn build(model: &CtbnModel<T>, path: &CtbnPath<T>, k: usize) -> Self {
        let n = model.states(k);
        let children = model.children(k);
        let t0 = path.t_start();
        let mut cut_nodes: Vec<usize> = children
            .iter()
            .flat_map(|&c| model.parents(c).iter().copied().chain(std::iter::once(c)))
            .filter(|&p| p != k)
            .collect();
        cut_nodes.sort_unstable();
        cut_nodes.dedup();
        let mut starts = vec![t0];
        if !children.is_empty() {
            starts.extend(merged_jumps(path, cut_nodes.iter().copied()));
        }

        let mut joint = path.initial_states();
        let mut survival = vec![T::zero(); starts.len() * n];
        let mut event_times = Vec::new();
        let mut event_logs = Vec::new();
        for (piece, &u) in starts.iter().enumerate() {
            for &p in &cut_nodes {
                joint[p] = path.node(p).state_at(u).expect("time inside interval");
            }
            let row = &mut survival[piece * n..(piece + 1) * n];
            for (s, slot) in row.iter_mut().enumerate() {
                joint[k] = s;
                *slot = children
                    .iter()
                    .map(|&c| model.generator_at(c, &joint).leave_rate(joint[c]))
                    .sum();
            }
            if piece == 0 {
                continue;
            }
            // A piece start is the jump of exactly one node; record it when
            // that node is a child of k.
            for &c in children {
                let child = path.node(c);
                if let Ok(j) = child
                    .jump_times()
                    .binary_search_by(|x| x.partial_cmp(&u).expect("finite"))
                {
                    let (from, to) = (child.states()[j], child.states()[j + 1]);
                    joint[c] = from;
                    event_times.push(u);
                    for s in 0..n {
                        joint[k] = s;
                        event_logs.push(ln_rate(model.generator_at(c, &joint).rate(from, to)));
                    }
                    joint[c] = to;
                    break;
                }
            }
        }
        Self {
            n,
            childless: children.is_empty(),
            t_end: path.t_end(),
            starts,
            survival,
            event_times,
            event_logs,
        }
    }

    /// Adds each slot's children log-likelihood to `out` (row-major
    /// `(grid.len() + 1) x n`), where slot `i` spans `[grid[i-1], grid[i])`.
    pub(crate) fn add_slot_logliks(&self, grid: &[T], out: &mut [T]) {
        let n = self.n;
        debug_assert_eq!(out.len(), (grid.len() + 1) * n);
        if self.childless {
            return;
        }
        let slot_end = |i: usize| grid.get(i).copied().unwrap_or(self.t_end);
        let piece_end = |j: usize| self.starts.get(j + 1).copied().unwrap_or(self.t_end);
        let (mut slot, mut piece) = (0usize, 0usize);
        let mut t = self.starts[0];
        while slot <= grid.len() && piece < self.starts.len() {
            let (se, pe) = (slot_end(slot), piece_end(piece));
            let until = if se < pe { se } else { pe };
            let dt = until - t;
            if dt > T::zero() {
                let surv = &self.survival[piece * n..(piece + 1) * n];
                for (o, &r) in out[slot * n..(slot + 1) * n].iter_mut().zip(surv) {
                    *o -= r * dt;
                }
            }
            t = until;
            if se <= pe {
                slot += 1;
            }
            if pe <= se {
                piece += 1;
            }
        }
        for (e, &te) in self.event_times.iter().enumerate() {
            let slot = grid.partition_point(|&g| g <= te);
            let logs = &self.event_logs[e * n..(e + 1) * n];
            for (o, &l) in out[slot * n..(slot + 1) * n].iter_mut().zip(logs) {
                *o += l;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::{CtbnNode, InitialSpec};
    use crate::process::{InitialDistribution, Layout, MjpPath};
    use approx::assert_abs_diff_eq;

    fn flip(r01: f64, r10: f64) -> Generator<f64> {
        Generator::from_rates(2, [(0, 1, r01), (1, 0, r10)], Layout::Dense).unwrap()
    }

    /// a -> c <- b, c has two parents.
    fn vee() -> CtbnModel<f64> {
        let a = CtbnNode::root("a", flip(1.0, 2.0));
        let b = CtbnNode::root("b", flip(0.5, 0.7));
        let gens = vec![flip(1.0, 1.5), flip(2.0, 0.25), flip(3.0, 0.5), flip(0.1, 4.0)];
        let c = CtbnNode::new("c", 2, vec![0, 1], gens);
        let init = InitialSpec::Product(vec![InitialDistribution::uniform(2).unwrap(); 3]);
        CtbnModel::new(vec![a, b, c], init).unwrap()
    }

    fn vee_path() -> CtbnPath<f64> {
        CtbnPath::new(vec![
            MjpPath::new(0.0, 4.0, vec![1.0, 3.0], vec![0, 1, 0]).unwrap(),
            MjpPath::new(0.0, 4.0, vec![2.0], vec![1, 0]).unwrap(),
            MjpPath::new(0.0, 4.0, vec![0.5, 1.5, 2.5], vec![0, 1, 0, 1]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn timeline_lookups() {
        let model = vee();
        let path = vee_path();
        let tl = node_rate_timeline(&model, &path, 2);
        assert_eq!(tl.breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(tl.parent_change_times(), &[1.0, 2.0, 3.0]);
        // (a, b): (0,1) (1,1) (1,0) (0,0) -> configs a + 2b
        let configs: Vec<usize> = (0..tl.len()).map(|i| tl.config(i)).collect();
        assert_eq!(configs, vec![2, 3, 1, 0]);
        assert_eq!(tl.segment_of(0.0), 0);
        assert_eq!(tl.segment_of(2.0), 2);
        assert_eq!(tl.segment_of(4.0), 3);
        let root = node_rate_timeline(&model, &path, 0);
        assert_eq!(root.len(), 1);
        // dense-grid check against direct evaluation
        for i in 0..400 {
            let t = i as f64 * 0.01;
            let j = path.states_at(t).unwrap();
            let direct = model.config_index(2, |p| j[p]);
            assert_eq!(tl.config(tl.segment_of(t)), direct, "t = {t}");
        }
    }

    #[test]
    fn no_children_and_pure_survival() {
        let model = vee();
        let path = vee_path();
        assert_eq!(child_segment_loglik(&model, &path, 2, 1, 0.0, 4.0).unwrap(), 0.0);
        // On [3.0, 4.0) node c sits in 1, b in 0; a := s.
        for s in 0..2 {
            let gen = model.generator(2, s);
            let expect = -gen.leave_rate(1) * 1.0;
            let got = child_segment_loglik(&model, &path, 0, s, 3.0, 4.0).unwrap();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn impossible_child_jump_is_log_zero() {
        let a = CtbnNode::root("a", flip(1.0, 1.0));
        // child frozen when parent is 0
        let c = CtbnNode::new("c", 2, vec![0], vec![Generator::zero(2, Layout::Dense).unwrap(), flip(1.0, 1.0)]);
        let init = InitialSpec::Product(vec![InitialDistribution::uniform(2).unwrap(); 2]);
        let model = CtbnModel::new(vec![a, c], init).unwrap();
        let path = CtbnPath::new(vec![
            MjpPath::constant(0.0, 1.0, 0).unwrap(),
            MjpPath::new(0.0, 1.0, vec![0.5], vec![0, 1]).unwrap(),
        ])
        .unwrap();
        let l0 = child_segment_loglik(&model, &path, 0, 0, 0.0, 1.0).unwrap();
        let l1 = child_segment_loglik(&model, &path, 0, 1, 0.0, 1.0).unwrap();
        assert!(l0 == f64::NEG_INFINITY);
        assert!(l1.is_finite());
    }

    #[test]
    fn additive_over_splits() {
        let model = vee();
        let path = vee_path();
        for k in [0, 1] {
            for s in 0..2 {
                for &(a, b, c) in &[(0.0, 1.0, 4.0), (0.2, 1.5, 3.7), (0.5, 2.0, 2.5), (1.2, 1.2, 3.0)] {
                    let whole = child_segment_loglik(&model, &path, k, s, a, c).unwrap();
                    let left = child_segment_loglik(&model, &path, k, s, a, b).unwrap();
                    let right = child_segment_loglik(&model, &path, k, s, b, c).unwrap();
                    assert_abs_diff_eq!(whole, left + right, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let model = vee();
        let path = vee_path();
        let grid = [0.3, 0.5, 1.0, 1.7, 2.0, 2.2, 3.0, 3.9];
        for k in 0..3 {
            let n = model.states(k);
            let table = ChildTable::build(&model, &path, k);
            let mut out = vec![0.0; (grid.len() + 1) * n];
            table.add_slot_logliks(&grid, &mut out);
            for slot in 0..=grid.len() {
                let a = if slot == 0 { 0.0 } else { grid[slot - 1] };
                let b = grid.get(slot).copied().unwrap_or(4.0);
                for s in 0..n {
                    let direct = child_segment_loglik(&model, &path, k, s, a, b).unwrap();
                    assert_abs_diff_eq!(out[slot * n + s], direct, epsilon = 1e-12);
                }
            }
        }
    }
}
