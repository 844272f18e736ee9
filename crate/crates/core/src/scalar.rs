//! Scalar abstraction for the order-statistic and moment computations.
//!
//! The estimators only need ring operations, absolute values, ordering and
//! exact conversion from `f64`, so they run unchanged over `f32`, `f64` and
//! arbitrary-precision rationals. The rational instantiation gives exact
//! arithmetic for identity checks that floating point can only approximate.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Numeric type accepted by the estimators.
pub trait Scalar:
    Clone + PartialOrd + Debug + Send + Sync + Num + Signed + FromPrimitive + ToPrimitive
{
    /// Sum of the items. Floating-point implementations use compensated
    /// (Neumaier) summation; exact types sum exactly.
    fn sum_of<I: IntoIterator<Item = Self>>(items: I) -> Self;

    /// Exact conversion from an `f64` literal. Panics on non-finite input for
    /// exact types.
    fn from_real(x: f64) -> Self;

    /// Lossy conversion back to `f64`.
    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `false` for NaN-like values that break the total order.
    fn is_comparable(&self) -> bool {
        self.partial_cmp(self).is_some()
    }

    /// Integer power `self^r`.
    fn powu(&self, r: u32) -> Self {
        num_traits::pow(self.clone(), r as usize)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn sum_of<I: IntoIterator<Item = Self>>(items: I) -> Self {
                let mut sum: $t = 0.0;
                let mut comp: $t = 0.0;
                for x in items {
                    let t = sum + x;
                    if sum.abs() >= x.abs() {
                        comp += (sum - t) + x;
                    } else {
                        comp += (x - t) + sum;
                    }
                    sum = t;
                }
                sum + comp
            }

            fn from_real(x: f64) -> Self {
                x as $t
            }

            fn powu(&self, r: u32) -> Self {
                match r {
                    0 => 1.0,
                    1 => *self,
                    2 => self * self,
                    _ => self.powi(r as i32),
                }
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn sum_of<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items
            .into_iter()
            .fold(BigRational::from_integer(BigInt::from(0)), |acc, x| acc + x)
    }

    fn from_real(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value required for exact conversion")
    }
}

/// Neumaier-compensated sum over an `f64` iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    <f64 as Scalar>::sum_of(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1.0e16, 1.0, -1.0e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn rational_conversion_is_exact() {
        let x = 0.1f64;
        let q = BigRational::from_real(x);
        assert_eq!(q.to_real(), x);
        // 0.1 is not exactly 1/10 in binary
        assert_ne!(q, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn integer_powers_agree() {
        assert_eq!(3.0f64.powu(3), 27.0);
        assert_eq!(
            BigRational::from_real(1.5).powu(2),
            BigRational::new(9.into(), 4.into())
        );
        assert_eq!(2.0f32.powu(0), 1.0);
    }
}
