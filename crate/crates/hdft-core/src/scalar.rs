//! Coefficient rings for the symbolic lanes.
//!
//! Everything downstream of the mode algebra is generic over a commutative
//! ring of coefficients. The exact backend is `Rat` (`Ratio<i128>`); the
//! numeric backends are the IEEE floats and their complex extensions, which
//! run the identical code paths with rounding. `EXACT` records which kind a
//! backend is, so shared tests know whether `==` or a tolerance applies.

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{One, Zero};

/// Minimal commutative-ring interface for series and polynomial coefficients.
///
/// `Zero`/`One` bring in addition and multiplication; subtraction and negation
/// are required separately. `from_ratio` embeds the rationals, which is the
/// only scalar constructor the generic code ever needs: integer scaling is
/// `from_ratio(n, 1)` and the exponential series divides by `from_ratio(1, n)`
/// one factor at a time.
pub trait RingScalar:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Zero
    + One
    + std::ops::Neg<Output = Self>
    + std::ops::Sub<Output = Self>
{
    /// Whether arithmetic in this ring is exact (`true`) or rounded (`false`).
    const EXACT: bool;

    /// Embed the rational `num / den`. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Embed an `i128` rational, rounding when the ring is inexact.
    fn from_rat(r: Ratio<i128>) -> Self;

    /// Product of two borrowed scalars. The default clones both operands;
    /// rings with heap-backed representations override it to build the
    /// product without copying the inputs first.
    fn mul_refs(a: &Self, b: &Self) -> Self {
        a.clone() * b.clone()
    }
}

impl RingScalar for Ratio<i128> {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(i128::from(num), i128::from(den))
    }

    fn from_rat(r: Ratio<i128>) -> Self {
        r
    }
}

macro_rules! impl_ring_scalar_float {
    ($($f:ty),*) => {$(
        impl RingScalar for $f {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: i64) -> Self {
                assert!(den != 0, "zero denominator");
                num as $f / den as $f
            }

            fn from_rat(r: Ratio<i128>) -> Self {
                *r.numer() as $f / *r.denom() as $f
            }
        }

        impl RingScalar for Complex<$f> {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: i64) -> Self {
                Complex::new(<$f as RingScalar>::from_ratio(num, den), 0.0)
            }

            fn from_rat(r: Ratio<i128>) -> Self {
                Complex::new(<$f as RingScalar>::from_rat(r), 0.0)
            }
        }
    )*};
}

impl_ring_scalar_float!(f32, f64);

/// Rounds an exact rational to `f64`. Shared by the numeric lanes when a
/// symbolic result is evaluated at a concrete point.
pub fn rat_to_f64(r: Ratio<i128>) -> f64 {
    f64::from_rat(r)
}

#[cfg(test)]
#[allow(clippy::assertions_on_constants)]
mod tests {
    use super::*;
    use crate::Rat;

    #[test]
    fn rational_embedding_is_reduced() {
        let r = Rat::from_ratio(6, -4);
        assert_eq!(r, Ratio::new(-3, 2));
        assert!(Rat::EXACT);
    }

    #[test]
    fn float_embedding_rounds() {
        assert_eq!(f64::from_ratio(1, 4), 0.25);
        assert_eq!(f64::from_rat(Ratio::new(1, 3)), 1.0 / 3.0);
        assert!(!f64::EXACT);
    }

    #[test]
    fn complex_embedding_is_real() {
        let c = Complex::<f64>::from_ratio(-7, 2);
        assert_eq!(c, Complex::new(-3.5, 0.0));
    }

    #[test]
    #[should_panic(expected = "zero denominator")]
    fn zero_denominator_panics() {
        let _ = f64::from_ratio(1, 0);
    }
}
