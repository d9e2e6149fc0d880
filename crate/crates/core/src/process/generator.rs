use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Storage layout of a [`Generator`] or [`TransitionKernel`](super::TransitionKernel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    #[default]
    Dense,
    /// Per-row `(neighbor, rate)` lists, plus the transposed lists for column access.
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage<T> {
    /// Row-major `n * n`; the diagonal slot holds `-leave_rate`.
    Dense(Vec<T>),
    Sparse {
        out: Vec<Vec<(usize, T)>>,
        inc: Vec<Vec<(usize, T)>>,
    },
}

/// Rate matrix of a Markov jump process.
///
/// Rows index the source state: `rate(i, j)` is the rate of jumping from `i`
/// to `j`. (A column-source convention stores the transpose.) The diagonal is
/// always derived, `entry(i, i) == -leave_rate(i)`, so every row sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    n: usize,
    leave: Vec<T>,
    storage: Storage<T>,
}

impl<T: Scalar> Generator<T> {
    /// Builds a generator from `(from, to, rate)` triplets. Omitted pairs are
    /// zero, zero rates are dropped, self-loops and duplicates are rejected.
    pub fn from_rates<I>(n: usize, rates: I, layout: Layout) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        if n == 0 {
            return Err(Error::InvalidGenerator("dimension must be positive".into()));
        }
        let mut out: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, q) in rates {
            if i >= n || j >= n {
                return Err(Error::InvalidGenerator(format!(
                    "rate ({i}, {j}) out of range for dimension {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGenerator(format!(
                    "diagonal entry ({i}, {i}) must not be given; it is derived"
                )));
            }
            if !q.is_finite() || q < T::zero() {
                return Err(Error::InvalidGenerator(format!(
                    "rate ({i}, {j}) = {q} must be finite and nonnegative"
                )));
            }
            if out[i].iter().any(|&(k, _)| k == j) {
                return Err(Error::InvalidGenerator(format!("duplicate rate ({i}, {j})")));
            }
            if q > T::zero() {
                out[i].push((j, q));
            }
        }
        for row in &mut out {
            row.sort_by_key(|&(j, _)| j);
        }
        Self::from_rows(n, out, layout)
    }

    /// Builds a generator from a full square matrix. The diagonal may be zero
    /// or already consistent with the off-diagonals; anything else is an error.
    pub fn from_dense(rows: &[Vec<T>], layout: Layout) -> Result<Self> {
        let n = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGenerator(format!(
                    "row {i} has length {} but the matrix has {n} rows",
                    row.len()
                )));
            }
            for (j, &q) in row.iter().enumerate() {
                if i != j {
                    triplets.push((i, j, q));
                }
            }
        }
        let g = Self::from_rates(n, triplets, layout)?;
        for (i, row) in rows.iter().enumerate() {
            let d = row[i];
            let expected = -g.leave[i];
            let tol = T::sum_tolerance() * (T::one() + g.leave[i]);
            if d != T::zero() && (d - expected).abs() > tol {
                return Err(Error::InvalidGenerator(format!(
                    "diagonal entry {i} is {d}, expected {expected}"
                )));
            }
        }
        Ok(g)
    }

    /// The all-zero generator: every state is absorbing.
    pub fn zero(n: usize, layout: Layout) -> Result<Self> {
        Self::from_rates(n, std::iter::empty(), layout)
    }

    fn from_rows(n: usize, out: Vec<Vec<(usize, T)>>, layout: Layout) -> Result<Self> {
        let leave: Vec<T> = out
            .iter()
            .map(|row| row.iter().map(|&(_, q)| q).sum())
            .collect();
        if let Some(i) = leave.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidGenerator(format!("leave rate of state {i} is not finite")));
        }
        let storage = match layout {
            Layout::Dense => {
                let mut m = vec![T::zero(); n * n];
                for (i, row) in out.iter().enumerate() {
                    m[i * n + i] = -leave[i];
                    for &(j, q) in row {
                        m[i * n + j] = q;
                    }
                }
                Storage::Dense(m)
            }
            Layout::Sparse => {
                let mut inc: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
                for (i, row) in out.iter().enumerate() {
                    for &(j, q) in row {
                        inc[j].push((i, q));
                    }
                }
                Storage::Sparse { out, inc }
            }
        };
        Ok(Self { n, leave, storage })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> Layout {
        match self.storage {
            Storage::Dense(_) => Layout::Dense,
            Storage::Sparse { .. } => Layout::Sparse,
        }
    }

    pub fn is_sparse(&self) -> bool {
        self.layout() == Layout::Sparse
    }

    /// Off-diagonal rate `q(i -> j)`; zero on the diagonal.
    pub fn rate(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::zero();
        }
        match &self.storage {
            Storage::Dense(m) => m[i * self.n + j],
            Storage::Sparse { out, .. } => out[i]
                .binary_search_by_key(&j, |&(k, _)| k)
                .map(|idx| out[i][idx].1)
                .unwrap_or_else(|_| T::zero()),
        }
    }

    /// Matrix entry including the derived diagonal.
    pub fn entry(&self, i: usize, j: usize) -> T {
        if i == j {
            -self.leave[i]
        } else {
            self.rate(i, j)
        }
    }

    pub fn leave_rate(&self, i: usize) -> T {
        self.leave[i]
    }

    pub fn leave_rates(&self) -> &[T] {
        &self.leave
    }

    pub fn max_leave_rate(&self) -> T {
        self.leave.iter().copied().fold(T::zero(), T::max)
    }

    /// Positive off-diagonal rates out of state `i`, in ascending target order.
    pub fn out_rates(&self, i: usize) -> RateIter<'_, T> {
        match &self.storage {
            Storage::Dense(m) => RateIter::Dense {
                row: &m[i * self.n..(i + 1) * self.n],
                skip: i,
                pos: 0,
            },
            Storage::Sparse { out, .. } => RateIter::Sparse(out[i].iter()),
        }
    }

    /// Positive off-diagonal rates into state `j`, in ascending source order.
    pub fn in_rates(&self, j: usize) -> InRateIter<'_, T> {
        match &self.storage {
            Storage::Dense(m) => InRateIter::Dense {
                m,
                n: self.n,
                col: j,
                pos: 0,
            },
            Storage::Sparse { inc, .. } => InRateIter::Sparse(inc[j].iter()),
        }
    }

    /// Number of positive off-diagonal rates.
    pub fn nnz(&self) -> usize {
        (0..self.n).map(|i| self.out_rates(i).count()).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        (0..self.n)
            .flat_map(|i| self.out_rates(i).map(move |(j, q)| (i, j, q)))
            .collect()
    }

    pub fn with_layout(&self, layout: Layout) -> Self {
        if layout == self.layout() {
            return self.clone();
        }
        let rows = (0..self.n).map(|i| self.out_rates(i).collect()).collect();
        Self::from_rows(self.n, rows, layout).expect("already validated")
    }

    /// Dense row-major copy including the diagonal.
    pub fn to_dense_matrix(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.n * self.n];
        for i in 0..self.n {
            m[i * self.n + i] = -self.leave[i];
            for (j, q) in self.out_rates(i) {
                m[i * self.n + j] = q;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub enum RateIter<'a, T> {
    Dense { row: &'a [T], skip: usize, pos: usize },
    Sparse(std::slice::Iter<'a, (usize, T)>),
}

impl<T: Scalar> Iterator for RateIter<'_, T> {
    type Item = (usize, T);

    fn next(&mut self) -> Option<(usize, T)> {
        match self {
            RateIter::Dense { row, skip, pos } => {
                while *pos < row.len() {
                    let j = *pos;
                    *pos += 1;
                    if j != *skip && row[j] > T::zero() {
                        return Some((j, row[j]));
                    }
                }
                None
            }
            RateIter::Sparse(it) => it.next().copied(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum InRateIter<'a, T> {
    Dense { m: &'a [T], n: usize, col: usize, pos: usize },
    Sparse(std::slice::Iter<'a, (usize, T)>),
}

impl<T: Scalar> Iterator for InRateIter<'_, T> {
    type Item = (usize, T);

    fn next(&mut self) -> Option<(usize, T)> {
        match self {
            InRateIter::Dense { m, n, col, pos } => {
                while *pos < *n {
                    let i = *pos;
                    *pos += 1;
                    let q = m[i * *n + *col];
                    if i != *col && q > T::zero() {
                        return Some((i, q));
                    }
                }
                None
            }
            InRateIter::Sparse(it) => it.next().copied(),
        }
    }
}
