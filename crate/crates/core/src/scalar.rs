//! Exact scalar abstraction used by profiles, tails and q-power values.
//!
//! Only exact field types implement [`ExactScalar`]: every identity in this
//! crate is an equality of rationals, so floating point types are left out.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt::Debug;

pub trait ExactScalar:
    Clone + Debug + PartialEq + PartialOrd + num_traits::Num + Signed + Send + Sync + 'static
{
    /// `num / den`; panics on a zero denominator.
    fn from_i128_ratio(num: i128, den: i128) -> Self;

    /// Returns `None` when the value does not fit the representation.
    fn from_bigint_ratio(num: &BigInt, den: &BigInt) -> Option<Self>;

    /// Reduced numerator and positive denominator.
    fn to_bigint_ratio(&self) -> (BigInt, BigInt);

    fn from_i64(n: i64) -> Self {
        Self::from_i128_ratio(n as i128, 1)
    }

    /// `base^exp` for a possibly negative exponent.
    fn powi(base: &Self, exp: i64) -> Self {
        let mut acc = Self::one();
        let b = if exp < 0 { Self::one() / base.clone() } else { base.clone() };
        for _ in 0..exp.unsigned_abs() {
            acc = acc * b.clone();
        }
        acc
    }

    fn num_den_strings(&self) -> (String, String) {
        let (n, d) = self.to_bigint_ratio();
        (n.to_string(), d.to_string())
    }
}

impl ExactScalar for BigRational {
    fn from_i128_ratio(num: i128, den: i128) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_bigint_ratio(num: &BigInt, den: &BigInt) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(num.clone(), den.clone()))
    }

    fn to_bigint_ratio(&self) -> (BigInt, BigInt) {
        (self.numer().clone(), self.denom().clone())
    }
}

impl ExactScalar for Ratio<i128> {
    fn from_i128_ratio(num: i128, den: i128) -> Self {
        Ratio::new(num, den)
    }

    fn from_bigint_ratio(num: &BigInt, den: &BigInt) -> Option<Self> {
        let n = num.to_i128()?;
        let d = den.to_i128()?;
        if d == 0 {
            return None;
        }
        Some(Ratio::new(n, d))
    }

    fn to_bigint_ratio(&self) -> (BigInt, BigInt) {
        (BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
}

/// Parses `num` and `den` decimal strings into any exact scalar.
pub fn parse_ratio<S: ExactScalar>(num: &str, den: &str) -> Option<S> {
    let n: BigInt = num.trim().parse().ok()?;
    let d: BigInt = den.trim().parse().ok()?;
    S::from_bigint_ratio(&n, &d)
}
