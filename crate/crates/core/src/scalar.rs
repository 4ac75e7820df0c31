//! Exact scalar fields the engine can run over.
//!
//! Every kernel in the crate is generic over [`Scalar`]. The production
//! instance is [`BigRational`]; fixed-width rationals are provided so tests
//! can run the same algorithms through a second arithmetic and compare.
//! Floating point types deliberately do not implement the trait: all rank
//! and kernel decisions rely on exact zero tests.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{NumAssignRef, NumRef, Signed, ToPrimitive, Zero};

/// An exact field element.
pub trait Scalar:
    NumRef + NumAssignRef + Signed + Clone + Eq + Hash + Debug + Display + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;

    /// `n / d`; panics when `d == 0`.
    fn from_frac(n: i64, d: i64) -> Self;

    /// Bit size of numerator plus denominator, used to choose cheap pivots.
    fn height(&self) -> u64;

    /// Greatest common divisor in the sense of rationals:
    /// `gcd(a/b, c/d) = gcd(a, c) / lcm(b, d)`, always non-negative.
    fn rational_gcd(&self, other: &Self) -> Self;

    fn to_big_rational(&self) -> BigRational;

    /// Converts back from a big rational, failing when the value does not fit.
    fn from_big_rational(v: &BigRational) -> Option<Self>;
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_frac(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn height(&self) -> u64 {
        self.numer().bits() + self.denom().bits()
    }

    fn rational_gcd(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.abs();
        }
        if other.is_zero() {
            return self.abs();
        }
        BigRational::new(
            self.numer().gcd(other.numer()),
            self.denom().lcm(other.denom()),
        )
    }

    fn to_big_rational(&self) -> BigRational {
        self.clone()
    }

    fn from_big_rational(v: &BigRational) -> Option<Self> {
        Some(v.clone())
    }
}

macro_rules! fixed_ratio_scalar {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            fn from_int(v: i64) -> Self {
                Ratio::from_integer(v as $int)
            }

            fn from_frac(n: i64, d: i64) -> Self {
                Ratio::new(n as $int, d as $int)
            }

            fn height(&self) -> u64 {
                let bits = |v: $int| (<$int>::BITS - v.unsigned_abs().leading_zeros()) as u64;
                bits(*self.numer()) + bits(*self.denom())
            }

            fn rational_gcd(&self, other: &Self) -> Self {
                if self.is_zero() {
                    return other.abs();
                }
                if other.is_zero() {
                    return self.abs();
                }
                Ratio::new(
                    self.numer().gcd(other.numer()),
                    self.denom().lcm(other.denom()),
                )
            }

            fn to_big_rational(&self) -> BigRational {
                BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
            }

            fn from_big_rational(v: &BigRational) -> Option<Self> {
                let n = v.numer().to_i128()?;
                let d = v.denom().to_i128()?;
                Some(Ratio::new(<$int>::try_from(n).ok()?, <$int>::try_from(d).ok()?))
            }
        }
    };
}

fixed_ratio_scalar!(i64);
fixed_ratio_scalar!(i128);

/// Parses `"p"` or `"p/q"` into a scalar.
pub fn parse_scalar<T: Scalar>(text: &str) -> Option<T> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            BigRational::new(n, d)
        }
        None => BigRational::from_integer(text.parse().ok()?),
    };
    T::from_big_rational(&value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_rational_reduces_to_lowest_terms() {
        let a = BigRational::from_frac(6, -4);
        assert_eq!(a.numer(), &BigInt::from(-3));
        assert_eq!(a.denom(), &BigInt::from(2));
        let b = BigRational::from_frac(1, 6) + BigRational::from_frac(1, 3);
        assert_eq!(b, BigRational::from_frac(1, 2));
    }

    #[test]
    fn rational_gcd_matches_definition() {
        let a = BigRational::from_frac(4, 3);
        let b = BigRational::from_frac(6, 5);
        assert_eq!(a.rational_gcd(&b), BigRational::from_frac(2, 15));
        let c = Ratio::<i64>::from_frac(4, 3);
        let d = Ratio::<i64>::from_frac(6, 5);
        assert_eq!(c.rational_gcd(&d), Ratio::new(2, 15));
    }

    #[test]
    fn parse_accepts_fractions() {
        assert_eq!(parse_scalar::<BigRational>("-3/6"), Some(BigRational::from_frac(-1, 2)));
        assert_eq!(parse_scalar::<BigRational>("7"), Some(BigRational::from_int(7)));
        assert_eq!(parse_scalar::<BigRational>("1/0"), None);
        assert_eq!(parse_scalar::<Ratio<i64>>("2/4"), Some(Ratio::new(1, 2)));
    }

    #[test]
    fn height_grows_with_size() {
        assert!(BigRational::from_frac(1, 2).height() < BigRational::from_frac(1000, 999).height());
    }
}
