//! Shell series `sum_n w_n q^(-n m)`, their geometric tails and the value of
//! the continuation at `m = -2` (`s = 0`) and `m = 0` (`s = 1`).
//!
//! Volume profiles enter with weights `w_n = (-1)^n v_n`; character-sum
//! profiles already carry the character and enter with `w_n = I_n`.

use crate::error::{Error, Result};
use crate::localfield::{CharDescriptor, PrimeContext};
use crate::scalar::ExactScalar;
use crate::volumes::{shell_counts, shell_counts_for_pivots, EnumOptions, Poly2, Profile, ProfileKind};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Div, Mul, Neg};

/// Evaluation point: `m = 2(s - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SPoint {
    S0,
    S1,
}

impl SPoint {
    pub fn m(&self) -> i64 {
        match self {
            SPoint::S0 => -2,
            SPoint::S1 => 0,
        }
    }

    pub fn s(&self) -> i64 {
        match self {
            SPoint::S0 => 0,
            SPoint::S1 => 1,
        }
    }
}

/// Raw entries `e_n = coeff * (sign / q)^n` for `n >= n0`, or `e_n = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailModel<S> {
    pub n0: u32,
    pub coeff: S,
    pub sign: i8,
    pub zero: bool,
}

impl<S: ExactScalar> TailModel<S> {
    pub fn entry(&self, q: u64, n: u32) -> S {
        if self.zero {
            return S::zero();
        }
        let r = S::from_i128_ratio(self.sign as i128, q as i128);
        self.coeff.clone() * S::powi(&r, n as i64)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let (num, den) = self.coeff.num_den_strings();
        serde_json::json!({"n0": self.n0, "zero": self.zero, "sign": self.sign, "coeff": {"num": num, "den": den}})
    }
}

fn weight_sign(kind: ProfileKind, n: u32) -> i64 {
    match kind {
        ProfileKind::Volume if n % 2 == 1 => -1,
        _ => 1,
    }
}

/// Least `n0` after which the computed entries are exactly geometric with
/// ratio `+-1/q` (two ratios needed) or identically zero (two zeros needed).
pub fn fit_tail<S: ExactScalar>(profile: &Profile<S>) -> Result<TailModel<S>> {
    let q = profile.q;
    let e = &profile.entries;
    let nm = profile.n_max as usize;
    let signs: &[i8] = match profile.kind {
        ProfileKind::Volume => &[1],
        ProfileKind::CharSum => &[1, -1],
    };
    for n0 in 0..nm {
        if e[n0..].iter().all(|x| x.is_zero()) {
            return Ok(TailModel { n0: n0 as u32, coeff: S::zero(), sign: 1, zero: true });
        }
        if n0 + 2 > nm || e[n0].is_zero() {
            continue;
        }
        for &sign in signs {
            let r = S::from_i128_ratio(sign as i128, q as i128);
            if (n0..nm).all(|n| e[n + 1] == e[n].clone() * r.clone()) {
                let coeff = e[n0].clone() / S::powi(&r, n0 as i64);
                return Ok(TailModel { n0: n0 as u32, coeff, sign, zero: false });
            }
        }
    }
    Err(Error::NoGeometricTail)
}

/// `sum_{n <= up_to} w_n q^(-n m)` over the computed entries.
pub fn partial_sum<S: ExactScalar>(profile: &Profile<S>, m: i64, up_to: u32) -> S {
    let qm = S::powi(&S::from_i64(profile.q as i64), -m);
    let top = up_to.min(profile.n_max);
    (0..=top).fold(S::zero(), |acc, n| {
        acc + S::from_i64(weight_sign(profile.kind, n)) * profile.entries[n as usize].clone() * S::powi(&qm, n as i64)
    })
}

/// Head plus the closed form of the geometric tail, continued to any `m`
/// where `1 - r q^(-m) != 0`.
pub fn eval_at_m<S: ExactScalar>(profile: &Profile<S>, tail: &TailModel<S>, m: i64) -> Result<S> {
    let head = if tail.n0 == 0 { S::zero() } else { partial_sum(profile, m, tail.n0 - 1) };
    if tail.zero {
        return Ok(head);
    }
    let q = profile.q as i128;
    let omega = weight_sign(profile.kind, 1);
    let x = S::from_i128_ratio(omega as i128 * tail.sign as i128, q) * S::powi(&S::from_i128_ratio(q, 1), -m);
    let den = S::one() - x.clone();
    if den.is_zero() {
        return Err(Error::Pole(m));
    }
    Ok(head + tail.coeff.clone() * S::powi(&x, tail.n0 as i64) / den)
}

pub fn eval_at_s0<S: ExactScalar>(profile: &Profile<S>, tail: &TailModel<S>) -> Result<S> {
    eval_at_m(profile, tail, SPoint::S0.m())
}

/// Fits the tail and evaluates.
pub fn continue_to<S: ExactScalar>(profile: &Profile<S>, at: SPoint) -> Result<(TailModel<S>, S)> {
    let tail = fit_tail(profile)?;
    let v = eval_at_m(profile, &tail, at.m())?;
    Ok((tail, v))
}

/// `coeff * q^(half_exponent / 2)` with `half_exponent` in `{0, -1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QPowerValue<S> {
    pub q: u64,
    pub coeff: S,
    pub half_exponent: i64,
}

impl<S: ExactScalar> QPowerValue<S> {
    pub fn new(q: u64, coeff: S, half_exponent: i64) -> Self {
        if coeff.is_zero() {
            return QPowerValue { q, coeff, half_exponent: 0 };
        }
        let shift = if half_exponent.rem_euclid(2) == 0 { half_exponent / 2 } else { (half_exponent + 1) / 2 };
        let coeff = coeff * S::powi(&S::from_i64(q as i64), shift);
        QPowerValue { q, coeff, half_exponent: half_exponent - 2 * shift }
    }

    pub fn rational(q: u64, coeff: S) -> Self {
        QPowerValue::new(q, coeff, 0)
    }

    pub fn zero(q: u64) -> Self {
        QPowerValue::new(q, S::zero(), 0)
    }

    /// `q^(-v/2)`, the absolute value of an element of valuation `v`
    /// measured through a quadratic extension norm.
    pub fn abs_of_half_valuation(q: u64, v: i64) -> Self {
        QPowerValue::new(q, S::one(), -v)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn as_rational(&self) -> Option<S> {
        (self.half_exponent == 0).then(|| self.coeff.clone())
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Pole(0));
        }
        Ok(self.clone() / other.clone())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let (num, den) = self.coeff.num_den_strings();
        serde_json::json!({"num": num, "den": den, "half_exponent": self.half_exponent})
    }
}

impl<S: ExactScalar> Mul for QPowerValue<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        assert_eq!(self.q, o.q);
        QPowerValue::new(self.q, self.coeff * o.coeff, self.half_exponent + o.half_exponent)
    }
}

impl<S: ExactScalar> Div for QPowerValue<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        assert_eq!(self.q, o.q);
        QPowerValue::new(self.q, self.coeff / o.coeff, self.half_exponent - o.half_exponent)
    }
}

impl<S: ExactScalar> Neg for QPowerValue<S> {
    type Output = Self;
    fn neg(self) -> Self {
        QPowerValue { coeff: -self.coeff, ..self }
    }
}

impl<S: ExactScalar> fmt::Display for QPowerValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.coeff.num_den_strings();
        let c = if d == "1" { n } else { format!("{n}/{d}") };
        match self.half_exponent {
            0 => write!(f, "{c}"),
            k => write!(f, "{c}*q^({k}/2)"),
        }
    }
}

/// The constant `T^Y phi_0 (v_0)`.
pub fn normalization_constant<S: ExactScalar>(y: &CharDescriptor, ctx: &PrimeContext, at: SPoint) -> QPowerValue<S> {
    let q = ctx.q();
    let qi = S::from_i128_ratio(1, q as i128);
    if y.ramified() {
        let sign = y.chi_from_parts(0, ctx.legendre_int(-1).expect("unit"), ctx);
        return QPowerValue::new(q, S::from_i64(sign as i64) * qi, -1);
    }
    let s = at.s();
    // (1 + q^(-2(s+1))) / (1 + q^(1-2s))
    let num = S::one() + S::powi(&qi, 2 * (s + 1));
    let den = S::one() + S::powi(&qi, 2 * s - 1);
    QPowerValue::rational(q, num / den)
}

/// The unramified constant recomputed from the shell series of the linear
/// form `x` on `V^0`.
pub fn normalization_from_linear_form<S: ExactScalar>(ctx: &PrimeContext, at: SPoint, n_max: u32) -> Result<S> {
    let poly = Poly2::coordinate(0, ctx.p(), n_max + 1);
    let profile: Profile<S> = shell_counts(&poly, n_max, EnumOptions::default())?.volumes();
    Ok(continue_to(&profile, at)?.1)
}

/// `1 + q^-1 - q^(-2s) - q^(-2s-1)`.
pub fn anisotropic_value<S: ExactScalar>(q: u64, at: SPoint) -> S {
    let qi = S::from_i128_ratio(1, q as i128);
    let s = at.s();
    S::one() + qi.clone() - S::powi(&qi, 2 * s) - S::powi(&qi, 2 * s + 1)
}

/// Per-pivot contributions of `x^2 - u y^2 - pi z^2 + u pi t^2` to the
/// series at `at`, in pivot order `x, y, z, t`.
pub fn anisotropic_decomposition<S: ExactScalar>(ctx: &PrimeContext, at: SPoint, opts: EnumOptions) -> Result<Vec<S>> {
    let form = crate::quadforms::canonical_form(crate::quadforms::FormShapeId::I_ANISO, ctx, 5)?;
    let poly = Poly2::from_form(&form, 4)?;
    (0..4)
        .map(|pivot| {
            let prof: Profile<S> = shell_counts_for_pivots(&poly, &[pivot], 3, opts)?.volumes();
            Ok(continue_to(&prof, at)?.1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volumes::{closed_form_table, LemmaId};
    use crate::Rational;

    fn r(a: i128, b: i128) -> Rational {
        Rational::from_i128_ratio(a, b)
    }

    #[test]
    fn tail_of_i3() {
        let t: Profile<Rational> = closed_form_table(LemmaId::I3, 3, 4);
        let tail = fit_tail(&t).unwrap();
        assert_eq!(tail.n0, 1);
        assert_eq!(tail.coeff, r(2, 3) * r(16, 9));
    }

    #[test]
    fn zero_profile() {
        let z = Profile::new(ProfileKind::Volume, 5, vec![Rational::from_i64(0); 3]);
        let tail = fit_tail(&z).unwrap();
        assert!(tail.zero && tail.n0 == 0);
        assert_eq!(eval_at_s0(&z, &tail).unwrap(), r(0, 1));
    }

    #[test]
    fn too_short_profile() {
        let t: Profile<Rational> = closed_form_table(LemmaId::I2, 3, 4);
        assert_eq!(fit_tail(&t), Err(Error::NoGeometricTail));
    }

    #[test]
    fn qpower_normalizes() {
        let a = QPowerValue::new(3, r(1, 1), -3);
        assert_eq!(a.half_exponent, -1);
        assert_eq!(a.coeff, r(1, 3));
        let b = a.clone() * a;
        assert_eq!(b, QPowerValue::rational(3, r(1, 27)));
    }
}
