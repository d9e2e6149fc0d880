use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::generator::{Generator, Layout};

#[derive(Debug, Clone, PartialEq)]
enum KernelStorage<T> {
    Identity,
    /// Row-major `n * n`.
    Dense(Vec<T>),
    /// Nonzero entries (diagonal included) by row and by column.
    Sparse {
        rows: Vec<Vec<(usize, T)>>,
        cols: Vec<Vec<(usize, T)>>,
    },
}

/// Row-stochastic one-step transition matrix `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<T> {
    n: usize,
    storage: KernelStorage<T>,
}

impl<T: Scalar> TransitionKernel<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            storage: KernelStorage::Identity,
        }
    }

    /// Validates a dense row-stochastic matrix.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!("kernel row {i} has wrong length")));
            }
            if row.iter().any(|&b| !b.is_finite() || b < T::zero()) {
                return Err(Error::InvalidArgument(format!("kernel row {i} has a negative entry")));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > T::sum_tolerance() {
                return Err(Error::InvalidArgument(format!("kernel row {i} sums to {s}")));
            }
            m.extend_from_slice(row);
        }
        Ok(Self {
            n,
            storage: KernelStorage::Dense(m),
        })
    }

    /// `B = I + A / omega`. Sparse generators give sparse kernels.
    ///
    /// `omega` must dominate every leave rate. A zero `omega` is accepted only
    /// for the zero generator and yields the identity.
    pub fn uniformized(generator: &Generator<T>, omega: T) -> Result<Self> {
        let n = generator.n();
        let max_leave = generator.max_leave_rate();
        if !omega.is_finite() || omega < max_leave {
            return Err(Error::InvalidPolicy(format!(
                "uniformization rate {omega} is below the maximum leave rate {max_leave}"
            )));
        }
        if omega == T::zero() {
            return Ok(Self::identity(n));
        }
        let inv = T::one() / omega;
        let diag = |i: usize| (T::one() - generator.leave_rate(i) * inv).max(T::zero());
        let storage = match generator.layout() {
            Layout::Dense => {
                let mut m = vec![T::zero(); n * n];
                for i in 0..n {
                    m[i * n + i] = diag(i);
                    for (j, q) in generator.out_rates(i) {
                        m[i * n + j] = q * inv;
                    }
                }
                KernelStorage::Dense(m)
            }
            Layout::Sparse => {
                let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
                let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
                for i in 0..n {
                    let mut row: Vec<(usize, T)> = generator
                        .out_rates(i)
                        .map(|(j, q)| (j, q * inv))
                        .collect();
                    let d = diag(i);
                    if d > T::zero() {
                        row.push((i, d));
                    }
                    row.sort_by_key(|&(j, _)| j);
                    for &(j, b) in &row {
                        cols[j].push((i, b));
                    }
                    rows.push(row);
                }
                KernelStorage::Sparse { rows, cols }
            }
        };
        Ok(Self { n, storage })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.storage, KernelStorage::Identity)
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        match &self.storage {
            KernelStorage::Identity => {
                if i == j {
                    T::one()
                } else {
                    T::zero()
                }
            }
            KernelStorage::Dense(m) => m[i * self.n + j],
            KernelStorage::Sparse { rows, .. } => rows[i]
                .binary_search_by_key(&j, |&(k, _)| k)
                .map(|idx| rows[i][idx].1)
                .unwrap_or_else(|_| T::zero()),
        }
    }

    /// `out[j] = sum_i msg[i] * B(i, j)`.
    pub fn propagate(&self, msg: &[T], out: &mut [T]) {
        let n = self.n;
        debug_assert_eq!(msg.len(), n);
        debug_assert_eq!(out.len(), n);
        match &self.storage {
            KernelStorage::Identity => out.copy_from_slice(msg),
            KernelStorage::Dense(m) => {
                out.iter_mut().for_each(|o| *o = T::zero());
                for (i, &mi) in msg.iter().enumerate() {
                    if mi == T::zero() {
                        continue;
                    }
                    let row = &m[i * n..(i + 1) * n];
                    for (o, &b) in out.iter_mut().zip(row) {
                        *o += mi * b;
                    }
                }
            }
            KernelStorage::Sparse { rows, .. } => {
                out.iter_mut().for_each(|o| *o = T::zero());
                for (i, &mi) in msg.iter().enumerate() {
                    if mi == T::zero() {
                        continue;
                    }
                    for &(j, b) in &rows[i] {
                        out[j] += mi * b;
                    }
                }
            }
        }
    }

    /// Nonzero `(i, B(i, j))` for a fixed destination `j`.
    pub fn column(&self, j: usize) -> KernelLine<'_, T> {
        match &self.storage {
            KernelStorage::Identity => KernelLine::Single(Some((j, T::one()))),
            KernelStorage::Dense(m) => KernelLine::Strided {
                data: m,
                start: j,
                stride: self.n,
                count: self.n,
                pos: 0,
            },
            KernelStorage::Sparse { cols, .. } => KernelLine::List(cols[j].iter()),
        }
    }

    /// Nonzero `(j, B(i, j))` for a fixed source `i`.
    pub fn row(&self, i: usize) -> KernelLine<'_, T> {
        match &self.storage {
            KernelStorage::Identity => KernelLine::Single(Some((i, T::one()))),
            KernelStorage::Dense(m) => KernelLine::Strided {
                data: m,
                start: i * self.n,
                stride: 1,
                count: self.n,
                pos: 0,
            },
            KernelStorage::Sparse { rows, .. } => KernelLine::List(rows[i].iter()),
        }
    }
}

#[derive(Clone)]
pub enum KernelLine<'a, T> {
    Single(Option<(usize, T)>),
    Strided {
        data: &'a [T],
        start: usize,
        stride: usize,
        count: usize,
        pos: usize,
    },
    List(std::slice::Iter<'a, (usize, T)>),
}

impl<T: Scalar> Iterator for KernelLine<'_, T> {
    type Item = (usize, T);

    fn next(&mut self) -> Option<(usize, T)> {
        match self {
            KernelLine::Single(x) => x.take(),
            KernelLine::Strided {
                data,
                start,
                stride,
                count,
                pos,
            } => {
                while *pos < *count {
                    let k = *pos;
                    *pos += 1;
                    let v = data[*start + k * *stride];
                    if v > T::zero() {
                        return Some((k, v));
                    }
                }
                None
            }
            KernelLine::List(it) => it.next().copied(),
        }
    }
}
