use rand::Rng;

use crate::error::{Error, Result};
use crate::process::{Generator, InitialDistribution};
use crate::scalar::{categorical, Scalar};

/// One node of a CTBN: its state count, parents and one generator per joint
/// parent configuration.
///
/// Configurations are mixed-radix over `parents` in the listed order, first
/// parent least significant: with parents `[p, q]`, the configuration of
/// states `(x_p, x_q)` is `x_p + n_p * x_q`.
#[derive(Debug, Clone)]
pub struct CtbnNode<T> {
    pub name: String,
    pub states: usize,
    pub parents: Vec<usize>,
    pub generators: Vec<Generator<T>>,
}

impl<T: Scalar> CtbnNode<T> {
    pub fn new(
        name: impl Into<String>,
        states: usize,
        parents: Vec<usize>,
        generators: Vec<Generator<T>>,
    ) -> Self {
        Self {
            name: name.into(),
            states,
            parents,
            generators,
        }
    }

    /// A node without parents.
    pub fn root(name: impl Into<String>, generator: Generator<T>) -> Self {
        let states = generator.n();
        Self::new(name, states, Vec::new(), vec![generator])
    }
}

/// Distribution of the network's state at `t_start`.
#[derive(Debug, Clone)]
pub enum InitialSpec<T> {
    /// Independent per-node marginals.
    Product(Vec<InitialDistribution<T>>),
    /// Explicit table over joint states, mixed-radix with node 0 least
    /// significant.
    Joint(Vec<T>),
}

/// Continuous-time Bayesian network: a directed graph over nodes (cycles
/// allowed) with conditional generators per parent configuration.
#[derive(Debug, Clone)]
pub struct CtbnModel<T> {
    nodes: Vec<CtbnNode<T>>,
    children: Vec<Vec<usize>>,
    initial: InitialSpec<T>,
}

impl<T: Scalar> CtbnModel<T> {
    pub fn new(nodes: Vec<CtbnNode<T>>, initial: InitialSpec<T>) -> Result<Self> {
        let m = nodes.len();
        if m == 0 {
            return Err(Error::InvalidModel("a CTBN needs at least one node".into()));
        }
        let mut children = vec![Vec::new(); m];
        for (k, node) in nodes.iter().enumerate() {
            if node.states == 0 {
                return Err(Error::InvalidModel(format!("node {k} has no states")));
            }
            let mut seen = vec![false; m];
            let mut configs = 1usize;
            for &p in &node.parents {
                if p >= m || p == k || seen[p] {
                    return Err(Error::InvalidModel(format!(
                        "node {k} has an invalid or repeated parent {p}"
                    )));
                }
                seen[p] = true;
                children[p].push(k);
                configs = configs
                    .checked_mul(nodes[p].states)
                    .ok_or_else(|| Error::InvalidModel(format!("node {k}: too many configurations")))?;
            }
            if node.generators.len() != configs {
                return Err(Error::InvalidModel(format!(
                    "node {k} needs {configs} generators, got {}",
                    node.generators.len()
                )));
            }
            if let Some(c) = node.generators.iter().position(|g| g.n() != node.states) {
                return Err(Error::InvalidModel(format!(
                    "node {k}, configuration {c}: generator dimension differs from {}",
                    node.states
                )));
            }
        }
        match &initial {
            InitialSpec::Product(marginals) => {
                if marginals.len() != m
                    || marginals.iter().zip(&nodes).any(|(d, node)| d.n() != node.states)
                {
                    return Err(Error::InvalidModel(
                        "product initial distribution does not match the nodes".into(),
                    ));
                }
            }
            InitialSpec::Joint(table) => {
                let size = nodes.iter().map(|n| n.states).product::<usize>();
                if table.len() != size {
                    return Err(Error::InvalidModel(format!(
                        "joint initial table needs {size} entries, got {}",
                        table.len()
                    )));
                }
                // Reuses the validation of a single distribution.
                InitialDistribution::new(table.clone())
                    .map_err(|e| Error::InvalidModel(format!("joint initial table: {e}")))?;
            }
        }
        Ok(Self {
            nodes,
            children,
            initial,
        })
    }

    /// Number of nodes.
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[CtbnNode<T>] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &CtbnNode<T> {
        &self.nodes[k]
    }

    pub fn states(&self, k: usize) -> usize {
        self.nodes[k].states
    }

    pub fn parents(&self, k: usize) -> &[usize] {
        &self.nodes[k].parents
    }

    /// Nodes that list `k` as a parent, ascending.
    pub fn children(&self, k: usize) -> &[usize] {
        &self.children[k]
    }

    pub fn initial(&self) -> &InitialSpec<T> {
        &self.initial
    }

    pub fn num_configs(&self, k: usize) -> usize {
        self.nodes[k].generators.len()
    }

    /// Mixed-radix configuration of `k`'s parents, reading each parent's
    /// state through `state_of`.
    pub fn config_index(&self, k: usize, state_of: impl Fn(usize) -> usize) -> usize {
        let mut idx = 0;
        let mut radix = 1;
        for &p in &self.nodes[k].parents {
            idx += state_of(p) * radix;
            radix *= self.nodes[p].states;
        }
        idx
    }

    /// Inverse of [`CtbnModel::config_index`]: parent states in `parents` order.
    pub fn config_states(&self, k: usize, mut config: usize) -> Vec<usize> {
        self.nodes[k]
            .parents
            .iter()
            .map(|&p| {
                let s = config % self.nodes[p].states;
                config /= self.nodes[p].states;
                s
            })
            .collect()
    }

    pub fn generator(&self, k: usize, config: usize) -> &Generator<T> {
        &self.nodes[k].generators[config]
    }

    /// Generator of node `k` when the network is in `joint`.
    pub fn generator_at(&self, k: usize, joint: &[usize]) -> &Generator<T> {
        self.generator(k, self.config_index(k, |p| joint[p]))
    }

    /// Number of joint states.
    pub fn joint_size(&self) -> usize {
        self.nodes.iter().map(|n| n.states).product()
    }

    /// Mixed-radix joint index, node 0 least significant.
    pub fn joint_index(&self, states: &[usize]) -> usize {
        let mut idx = 0;
        let mut radix = 1;
        for (node, &s) in self.nodes.iter().zip(states) {
            idx += s * radix;
            radix *= node.states;
        }
        idx
    }

    pub fn joint_states(&self, mut index: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|node| {
                let s = index % node.states;
                index /= node.states;
                s
            })
            .collect()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match &self.initial {
            InitialSpec::Product(marginals) => marginals.iter().map(|d| d.sample(rng)).collect(),
            InitialSpec::Joint(table) => {
                let idx = categorical(table.iter().copied().enumerate(), rng)
                    .expect("validated joint table");
                self.joint_states(idx)
            }
        }
    }

    /// Unnormalized weights over node `k`'s initial state given the other
    /// nodes' initial states in `joint` (entry `k` is ignored).
    pub fn initial_conditional(&self, k: usize, joint: &[usize]) -> Vec<T> {
        match &self.initial {
            InitialSpec::Product(marginals) => marginals[k].weights().to_vec(),
            InitialSpec::Joint(table) => {
                let mut probe = joint.to_vec();
                (0..self.nodes[k].states)
                    .map(|s| {
                        probe[k] = s;
                        table[self.joint_index(&probe)]
                    })
                    .collect()
            }
        }
    }

    /// Initial distribution over joint states.
    pub fn joint_initial(&self) -> Vec<T> {
        match &self.initial {
            InitialSpec::Joint(table) => table.clone(),
            InitialSpec::Product(marginals) => (0..self.joint_size())
                .map(|idx| {
                    self.joint_states(idx)
                        .iter()
                        .zip(marginals)
                        .fold(T::one(), |acc, (&s, d)| acc * d.prob(s))
                })
                .collect(),
        }
    }
}
