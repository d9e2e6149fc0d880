//! Amalgamation: a CTBN viewed as one MJP over its joint state space.
//!
//! Joint states are mixed-radix with node 0 least significant, the same
//! encoding as [`CtbnModel::joint_index`]. A joint transition changes exactly
//! one node, at the rate that node's conditional generator assigns.

use crate::diagnostics::SufficientStats;
use crate::error::{Error, Result};
use crate::process::{
    Generator, InitialDistribution, Layout, MjpPath, ObservationSet, PiecewiseConstant,
};
use crate::scalar::Scalar;

use super::model::CtbnModel;
use super::path::{CtbnObservations, CtbnPath};

/// Joint generator and initial distribution of `model`.
pub fn flatten_ctbn<T: Scalar>(
    model: &CtbnModel<T>,
    layout: Layout,
) -> Result<(Generator<T>, InitialDistribution<T>)> {
    let size = model.joint_size();
    let mut rates = Vec::new();
    for idx in 0..size {
        let joint = model.joint_states(idx);
        let mut radix = 1;
        for k in 0..model.m() {
            let gen = model.generator_at(k, &joint);
            for (to, q) in gen.out_rates(joint[k]) {
                let target = idx + to * radix - joint[k] * radix;
                rates.push((idx, target, q));
            }
            radix *= model.states(k);
        }
    }
    let generator = Generator::from_rates(size, rates, layout)?;
    let initial = InitialDistribution::new(model.joint_initial())?;
    Ok((generator, initial))
}

/// Lifts per-node observations to likelihood vectors over joint states.
pub fn flatten_observations<T: Scalar>(
    model: &CtbnModel<T>,
    observations: &CtbnObservations<T>,
) -> Result<ObservationSet<T>> {
    let size = model.joint_size();
    let mut items = Vec::with_capacity(observations.len());
    for k in 0..model.m() {
        for o in observations.node(k).iter() {
            let lik = (0..size)
                .map(|idx| o.likelihood()[model.joint_states(idx)[k]])
                .collect();
            items.push((o.time, lik));
        }
    }
    ObservationSet::new(size, items)
}

/// The joint-state path traced by a CTBN path.
pub fn ctbn_to_joint_path<T: Scalar>(model: &CtbnModel<T>, path: &CtbnPath<T>) -> MjpPath<T> {
    let mut events: Vec<(T, usize, usize)> = (0..path.m())
        .flat_map(|k| {
            let p = path.node(k);
            p.jump_times()
                .iter()
                .enumerate()
                .map(move |(i, &t)| (t, k, p.states()[i + 1]))
        })
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    let mut joint = path.initial_states();
    let mut states = vec![model.joint_index(&joint)];
    let mut times = Vec::with_capacity(events.len());
    for (t, k, s) in events {
        joint[k] = s;
        times.push(t);
        states.push(model.joint_index(&joint));
    }
    MjpPath::from_parts_unchecked(path.t_start(), path.t_end(), times, states)
}

/// Splits a joint-state path into per-node paths. Every joint jump must
/// change exactly one node.
pub fn joint_to_ctbn_path<T: Scalar>(model: &CtbnModel<T>, path: &MjpPath<T>) -> Result<CtbnPath<T>> {
    if path.max_state() >= model.joint_size() {
        return Err(Error::InvalidPath("joint state out of range".into()));
    }
    let mut joint = model.joint_states(path.initial_state());
    let mut times: Vec<Vec<T>> = vec![Vec::new(); model.m()];
    let mut states: Vec<Vec<usize>> = joint.iter().map(|&s| vec![s]).collect();
    for (i, &t) in path.jump_times().iter().enumerate() {
        let next = model.joint_states(path.states()[i + 1]);
        let changed: Vec<usize> = (0..model.m()).filter(|&k| next[k] != joint[k]).collect();
        if changed.len() != 1 {
            return Err(Error::InvalidPath(format!(
                "joint jump at {t} changes {} nodes",
                changed.len()
            )));
        }
        let k = changed[0];
        times[k].push(t);
        states[k].push(next[k]);
        joint = next;
    }
    let paths = times
        .into_iter()
        .zip(states)
        .map(|(t, s)| MjpPath::new(path.t_start(), path.t_end(), t, s))
        .collect::<Result<Vec<_>>>()?;
    CtbnPath::new(paths)
}

/// Conditional sufficient statistics of a CTBN: for each node and parent
/// configuration, dwell time per state and transition counts per state pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnStats<T> {
    /// Indexed by node, then parent configuration.
    pub nodes: Vec<Vec<SufficientStats<T>>>,
}

impl<T: Scalar> CtbnStats<T> {
    pub fn zeros(model: &CtbnModel<T>) -> Self {
        Self {
            nodes: (0..model.m())
                .map(|k| vec![SufficientStats::zeros(model.states(k)); model.num_configs(k)])
                .collect(),
        }
    }

    /// Flat statistic vector, node by node and configuration by
    /// configuration, each block as [`SufficientStats::to_vec`].
    pub fn to_vec(&self) -> Vec<T> {
        self.nodes.iter().flatten().flat_map(|s| s.to_vec()).collect()
    }

    /// Names matching [`CtbnStats::to_vec`], e.g. `node1|u2:dwell[0]`.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, configs) in self.nodes.iter().enumerate() {
            for (u, s) in configs.iter().enumerate() {
                out.extend(s.names().into_iter().map(|name| format!("node{k}|u{u}:{name}")));
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.nodes.iter_mut().flatten().zip(other.nodes.iter().flatten()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, c: T) {
        self.nodes.iter_mut().flatten().for_each(|s| s.scale(c));
    }

    /// Dwell time of node `k` per state, summed over configurations.
    pub fn node_dwell(&self, k: usize) -> Vec<T> {
        let n = self.nodes[k][0].n;
        let mut out = vec![T::zero(); n];
        for s in &self.nodes[k] {
            for (o, &d) in out.iter_mut().zip(&s.dwell) {
                *o += d;
            }
        }
        out
    }
}

/// Conditional sufficient statistics of a single CTBN path.
pub fn ctbn_sufficient_stats<T: Scalar>(model: &CtbnModel<T>, path: &CtbnPath<T>) -> CtbnStats<T> {
    let joint_path = ctbn_to_joint_path(model, path);
    let mut joint = SufficientStats::zeros(model.joint_size());
    for (a, b, s) in joint_path.segments() {
        joint.dwell[s] += b - a;
    }
    let st = joint_path.states();
    for w in st.windows(2) {
        joint.transitions[w[0] * joint.n + w[1]] += T::one();
    }
    amalgamate_joint_stats(model, &joint).expect("joint path changes one node per jump")
}

/// Maps joint-state statistics onto per-node conditional statistics.
/// Transitions that change more than one node must carry zero weight.
pub fn amalgamate_joint_stats<T: Scalar>(
    model: &CtbnModel<T>,
    joint: &SufficientStats<T>,
) -> Result<CtbnStats<T>> {
    let size = model.joint_size();
    if joint.n != size {
        return Err(Error::InvalidArgument(format!(
            "joint statistics have {} states, model has {size}",
            joint.n
        )));
    }
    let mut out = CtbnStats::zeros(model);
    let decoded: Vec<Vec<usize>> = (0..size).map(|i| model.joint_states(i)).collect();
    for (i, x) in decoded.iter().enumerate() {
        for k in 0..model.m() {
            let u = model.config_index(k, |p| x[p]);
            out.nodes[k][u].dwell[x[k]] += joint.dwell[i];
        }
        for (j, y) in decoded.iter().enumerate() {
            let c = joint.transition(i, j);
            if i == j || c == T::zero() {
                continue;
            }
            let changed: Vec<usize> = (0..model.m()).filter(|&k| x[k] != y[k]).collect();
            if changed.len() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "joint transition {i}->{j} changes {} nodes",
                    changed.len()
                )));
            }
            let k = changed[0];
            let u = model.config_index(k, |p| x[p]);
            let s = &mut out.nodes[k][u];
            s.transitions[x[k] * s.n + y[k]] += c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::{CtbnNode, InitialSpec};

    fn two_node() -> CtbnModel<f64> {
        let g = |a: f64, b: f64| Generator::from_rates(2, [(0, 1, a), (1, 0, b)], Layout::Dense).unwrap();
        let n0 = CtbnNode::root("a", g(1.0, 2.0));
        let n1 = CtbnNode::new("b", 2, vec![0], vec![g(0.5, 3.0), g(4.0, 0.25)]);
        let init = InitialSpec::Product(vec![
            InitialDistribution::new(vec![0.25, 0.75]).unwrap(),
            InitialDistribution::uniform(2).unwrap(),
        ]);
        CtbnModel::new(vec![n0, n1], init).unwrap()
    }

    #[test]
    fn joint_generator_entries() {
        let model = two_node();
        let (gen, init) = flatten_ctbn(&model, Layout::Dense).unwrap();
        // joint index = a + 2 b
        assert_eq!(gen.rate(0, 1), 1.0); // a: 0 -> 1, b = 0
        assert_eq!(gen.rate(0, 2), 0.5); // b: 0 -> 1 given a = 0
        assert_eq!(gen.rate(1, 3), 4.0); // b: 0 -> 1 given a = 1
        assert_eq!(gen.rate(3, 1), 0.25);
        assert_eq!(gen.rate(0, 3), 0.0);
        assert_eq!(init.weights(), &[0.125, 0.375, 0.125, 0.375]);
    }

    #[test]
    fn path_round_trip_and_stats() {
        let model = two_node();
        let path = CtbnPath::new(vec![
            MjpPath::new(0.0, 3.0, vec![1.0, 2.0], vec![0, 1, 0]).unwrap(),
            MjpPath::new(0.0, 3.0, vec![1.5], vec![1, 0]).unwrap(),
        ])
        .unwrap();
        let joint = ctbn_to_joint_path(&model, &path);
        assert_eq!(joint.states(), &[2, 3, 1, 0]);
        assert_eq!(joint_to_ctbn_path(&model, &joint).unwrap(), path);

        let stats = ctbn_sufficient_stats(&model, &path);
        // node 0 has one configuration
        assert_eq!(stats.nodes[0][0].dwell, vec![2.0, 1.0]);
        assert_eq!(stats.nodes[0][0].transition(0, 1), 1.0);
        // node 1 given a = 1 (config 1): in state 1 on [1, 1.5), then 0 on [1.5, 2)
        assert_eq!(stats.nodes[1][1].dwell, vec![0.5, 0.5]);
        assert_eq!(stats.nodes[1][1].transition(1, 0), 1.0);
        assert_eq!(stats.nodes[1][0].dwell, vec![1.0, 1.0]);
        assert_eq!(stats.node_dwell(1), vec![1.5, 1.5]);
        assert_eq!(stats.to_vec().len(), stats.names().len());
    }

    #[test]
    fn rejects_double_changes() {
        let model = two_node();
        let bad = MjpPath::new(0.0, 1.0, vec![0.5], vec![0, 3]).unwrap();
        assert!(joint_to_ctbn_path(&model, &bad).is_err());
    }
}
