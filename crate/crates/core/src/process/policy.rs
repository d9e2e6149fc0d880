use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::generator::Generator;

/// Chooses the uniformization rate as `multiplier * max_i leave_rate(i)`.
///
/// The multiplier must exceed one: with `omega` equal to the largest leave
/// rate the virtual-jump intensity vanishes in that state and the sampler can
/// get stuck on its current jump times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformizationPolicy<T> {
    multiplier: T,
}

impl<T: Scalar> UniformizationPolicy<T> {
    pub fn new(multiplier: T) -> Result<Self> {
        if !multiplier.is_finite() || multiplier <= T::one() {
            return Err(Error::InvalidPolicy(format!(
                "multiplier must be finite and > 1, got {multiplier}"
            )));
        }
        Ok(Self { multiplier })
    }

    pub fn multiplier(&self) -> T {
        self.multiplier
    }

    pub fn omega(&self, generator: &Generator<T>) -> T {
        self.multiplier * generator.max_leave_rate()
    }
}

impl<T: Scalar> Default for UniformizationPolicy<T> {
    fn default() -> Self {
        Self {
            multiplier: T::lit(2.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::Layout;

    #[test]
    fn multiplier_must_exceed_one() {
        assert!(UniformizationPolicy::new(1.0).is_err());
        assert!(UniformizationPolicy::new(0.5).is_err());
        assert!(UniformizationPolicy::new(f64::INFINITY).is_err());
        assert!(UniformizationPolicy::new(1.0001).is_ok());
        assert_eq!(UniformizationPolicy::<f64>::default().multiplier(), 2.0);
    }

    #[test]
    fn omega_is_twice_max_leave_by_default() {
        let g = Generator::from_rates(2, [(0, 1, 1.0), (1, 0, 3.0)], Layout::Dense).unwrap();
        assert_eq!(UniformizationPolicy::default().omega(&g), 6.0);
    }
}
