use crate::error::{Error, Result};
use crate::process::Generator;
use crate::scalar::Scalar;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n, "dimension mismatch");
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Self { n, data: out }
    }

    /// Row vector times matrix: `v M`.
    pub fn left_apply(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    /// Matrix times column vector: `M v`.
    pub fn right_apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&m, &x)| m * x).sum())
            .collect()
    }

    fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

/// Transition probabilities `exp(A t)` (row = source state).
///
/// Scaling and squaring: `A t` is halved until its infinity norm is at most
/// one half, exponentiated by a Taylor series run to machine precision, then
/// squared back up.
pub fn transition_matrix<T: Scalar>(generator: &Generator<T>, t: T) -> Result<SquareMatrix<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::OutOfDomain {
            time: t.as_f64(),
            start: 0.0,
            end: f64::INFINITY,
        });
    }
    let n = generator.n();
    let scaled = SquareMatrix {
        n,
        data: generator.to_dense_matrix().into_iter().map(|x| x * t).collect(),
    };
    let norm = scaled.norm_inf();
    let mut squarings = 0u32;
    let mut factor = T::one();
    while norm * factor > T::lit(0.5) {
        factor = factor * T::lit(0.5);
        squarings += 1;
    }
    let x = SquareMatrix {
        n,
        data: scaled.data.iter().map(|&v| v * factor).collect(),
    };

    let mut result = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&x);
        let inv = T::one() / T::from_count(k);
        term.data.iter_mut().for_each(|v| *v *= inv);
        for (r, &v) in result.data.iter_mut().zip(&term.data) {
            *r += v;
        }
        if term.norm_inf() <= T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}
