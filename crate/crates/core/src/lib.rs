//! Twisted orbital character values for theta-regular stable classes of
//! `GSp_4` over a `p`-adic field with odd residue characteristic, computed
//! from exact local volume profiles of quaternary quadratic forms.

pub mod character;
pub mod classes;
pub mod error;
pub mod localfield;
pub mod quadforms;
pub mod volumes;
pub mod scalar;
pub mod series;
pub mod suite;

pub use error::{Error, Result};
pub use scalar::ExactScalar;

/// Arbitrary precision rationals, the default scalar.
pub type Rational = num_rational::BigRational;
/// Fixed width rationals for small primes and short profiles.
pub type RationalI128 = num_rational::Ratio<i128>;
