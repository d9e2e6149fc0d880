//! Floating-point scalar abstraction.
//!
//! Every numeric routine in the crate is written against [`Scalar`], so the
//! same code runs in `f64` (the default everywhere in the CLI and the
//! experiments) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Uniform draw on `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance used when validating sums that should be exactly one
    /// or zero. `1e-12` in `f64`; scaled up for coarser types.
    fn sum_tolerance() -> Self {
        let eps_based = Self::epsilon() * Self::lit(1024.0);
        Self::lit(1e-12).max(eps_based)
    }
}

impl Scalar for f64 {
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

impl Scalar for f32 {
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

/// Exponential draw with the given rate via inversion. `rate == 0` yields
/// `+inf` (absorbing).
pub(crate) fn exponential<T: Scalar, R: Rng + ?Sized>(rate: T, rng: &mut R) -> T {
    if rate <= T::zero() {
        return T::infinity();
    }
    // 1 - U lies in (0, 1], so the log is finite.
    let u = T::one() - T::unit(rng);
    -u.ln() / rate
}

/// Poisson count with the given mean.
pub(crate) fn poisson_count<T: Scalar, R: Rng + ?Sized>(mean: T, rng: &mut R) -> usize {
    use rand_distr::{Distribution, Poisson};
    let mean = mean.as_f64();
    if !(mean > 0.0) {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    let k: f64 = dist.sample(rng);
    k as usize
}

/// `count` sorted uniform positions on `[a, b)`.
pub(crate) fn sorted_uniforms<T: Scalar, R: Rng + ?Sized>(
    count: usize,
    a: T,
    b: T,
    rng: &mut R,
) -> Vec<T> {
    let width = b - a;
    let mut v: Vec<T> = (0..count).map(|_| a + width * T::unit(rng)).collect();
    v.sort_by(|x, y| x.partial_cmp(y).expect("finite times"));
    v
}

/// Inverse-CDF categorical draw over `(index, weight)` pairs with a single
/// uniform. Returns `None` when the total mass is not positive.
pub(crate) fn categorical<T, R, I>(weights: I, rng: &mut R) -> Option<usize>
where
    T: Scalar,
    R: Rng + ?Sized,
    I: Iterator<Item = (usize, T)> + Clone,
{
    let total: T = weights.clone().map(|(_, w)| w.max(T::zero())).sum();
    if !(total > T::zero()) {
        return None;
    }
    let target = T::unit(rng) * total;
    let mut acc = T::zero();
    let mut last = None;
    for (i, w) in weights {
        let w = w.max(T::zero());
        if w <= T::zero() {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    // Roundoff can leave `target` marginally above the running sum.
    last
}
