use crate::error::{Error, Result};
use crate::process::{Interval, MjpPath, ObservationSet, PiecewiseConstant};
use crate::scalar::Scalar;

use super::model::CtbnModel;

/// One MJP path per node over a common interval, with no two nodes jumping
/// at the same instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnPath<T> {
    paths: Vec<MjpPath<T>>,
}

impl<T: Scalar> CtbnPath<T> {
    pub fn new(paths: Vec<MjpPath<T>>) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidPath("a CTBN path needs at least one node".into()))?;
        let (a, b) = (first.t_start(), first.t_end());
        if paths.iter().any(|p| p.t_start() != a || p.t_end() != b) {
            return Err(Error::InvalidPath("node paths cover different intervals".into()));
        }
        let mut all: Vec<T> = paths.iter().flat_map(|p| p.jump_times().iter().copied()).collect();
        all.sort_by(|x, y| x.partial_cmp(y).expect("finite times"));
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!(
                "two nodes jump at the same time {}",
                w[0]
            )));
        }
        Ok(Self { paths })
    }

    pub(crate) fn from_parts_unchecked(paths: Vec<MjpPath<T>>) -> Self {
        debug_assert!(Self::new(paths.clone()).is_ok());
        Self { paths }
    }

    pub fn m(&self) -> usize {
        self.paths.len()
    }

    pub fn node(&self, k: usize) -> &MjpPath<T> {
        &self.paths[k]
    }

    pub fn paths(&self) -> &[MjpPath<T>] {
        &self.paths
    }

    pub fn into_paths(self) -> Vec<MjpPath<T>> {
        self.paths
    }

    pub fn t_start(&self) -> T {
        self.paths[0].t_start()
    }

    pub fn t_end(&self) -> T {
        self.paths[0].t_end()
    }

    pub fn interval(&self) -> Interval<T> {
        Interval {
            start: self.t_start(),
            end: self.t_end(),
        }
    }

    /// Joint state at time `t`.
    pub fn states_at(&self, t: T) -> Result<Vec<usize>> {
        self.paths.iter().map(|p| p.state_at(t)).collect()
    }

    pub fn initial_states(&self) -> Vec<usize> {
        self.paths.iter().map(|p| p.initial_state()).collect()
    }

    /// Replaces node `k`'s path, checking the interval and that no new jump
    /// coincides with another node's.
    pub fn replace(&mut self, k: usize, path: MjpPath<T>) -> Result<()> {
        let m = self.m();
        self.replace_checking(k, path, 0..m)
    }

    /// [`CtbnPath::replace`] with the collision check limited to `against`.
    pub(crate) fn replace_checking(
        &mut self,
        k: usize,
        path: MjpPath<T>,
        against: impl IntoIterator<Item = usize>,
    ) -> Result<()> {
        if path.t_start() != self.t_start() || path.t_end() != self.t_end() {
            return Err(Error::InvalidPath("replacement covers a different interval".into()));
        }
        for j in against {
            if j == k {
                continue;
            }
            let theirs = self.paths[j].jump_times();
            if let Some(&t) = path
                .jump_times()
                .iter()
                .find(|&&t| theirs.binary_search_by(|x| x.partial_cmp(&t).expect("finite")).is_ok())
            {
                return Err(Error::TimeCollision(t.as_f64()));
            }
        }
        self.paths[k] = path;
        Ok(())
    }

    /// Checks node count and state ranges against `model`.
    pub fn check_model(&self, model: &CtbnModel<T>) -> Result<()> {
        if self.m() != model.m() {
            return Err(Error::InvalidPath(format!(
                "path has {} nodes, model has {}",
                self.m(),
                model.m()
            )));
        }
        for (k, p) in self.paths.iter().enumerate() {
            if p.max_state() >= model.states(k) {
                return Err(Error::InvalidPath(format!(
                    "node {k} visits state {} of {}",
                    p.max_state(),
                    model.states(k)
                )));
            }
        }
        Ok(())
    }
}

/// Per-node observation sets; each observation concerns a single node.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnObservations<T> {
    per_node: Vec<ObservationSet<T>>,
}

impl<T: Scalar> CtbnObservations<T> {
    pub fn empty(model: &CtbnModel<T>) -> Self {
        Self {
            per_node: (0..model.m()).map(|k| ObservationSet::empty(model.states(k))).collect(),
        }
    }

    /// Builds from `(node, time, likelihood vector)` items.
    pub fn new(model: &CtbnModel<T>, items: Vec<(usize, T, Vec<T>)>) -> Result<Self> {
        let mut grouped: Vec<Vec<(T, Vec<T>)>> = vec![Vec::new(); model.m()];
        for (node, t, lik) in items {
            if node >= model.m() {
                return Err(Error::InvalidObservations(format!("unknown node {node}")));
            }
            grouped[node].push((t, lik));
        }
        let per_node = grouped
            .into_iter()
            .enumerate()
            .map(|(k, items)| ObservationSet::new(model.states(k), items))
            .collect::<Result<_>>()?;
        Ok(Self { per_node })
    }

    pub fn from_sets(model: &CtbnModel<T>, per_node: Vec<ObservationSet<T>>) -> Result<Self> {
        if per_node.len() != model.m()
            || per_node.iter().enumerate().any(|(k, o)| o.n() != model.states(k))
        {
            return Err(Error::InvalidObservations(
                "observation sets do not match the model's nodes".into(),
            ));
        }
        Ok(Self { per_node })
    }

    pub fn node(&self, k: usize) -> &ObservationSet<T> {
        &self.per_node[k]
    }

    pub fn len(&self) -> usize {
        self.per_node.iter().map(|o| o.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check_within(&self, interval: Interval<T>) -> Result<()> {
        self.per_node
            .iter()
            .try_for_each(|o| o.check_within(interval.start, interval.end))
    }
}
