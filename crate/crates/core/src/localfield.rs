//! Residue rings `R / p^N R` for odd `p`, square classes and quadratic characters.
//!
//! A [`ResidueElement`] is the finite-precision stand-in for an element of the
//! ring of integers `R` of a `p`-adic field with uniformizer `pi = p`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// Largest prime accepted by [`PrimeContext::new`].
pub const MAX_PRIME: u64 = 997;

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut f = 3;
    while f * f <= p {
        if p % f == 0 {
            return false;
        }
        f += 2;
    }
    true
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// `p^n`, panicking on overflow of `u64`.
pub fn prime_power(p: u64, n: u32) -> u64 {
    p.checked_pow(n).expect("p^N overflows u64; lower the precision")
}

/// Legendre symbol of an integer modulo an odd prime.
pub fn legendre_int(e: i128, p: u64) -> Result<i8> {
    let r = e.rem_euclid(p as i128) as u64;
    if r == 0 {
        return Err(Error::NotAUnit);
    }
    Ok(if pow_mod(r, (p - 1) / 2, p) == 1 { 1 } else { -1 })
}

/// Smallest positive non-square unit residue modulo `p`.
pub fn find_nonsquare_unit(p: u64) -> Result<u64> {
    if !is_odd_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    Ok((2..p)
        .find(|&e| legendre_int(e as i128, p) == Ok(-1))
        .expect("an odd prime has non-squares"))
}

/// Smallest positive `d` with `d^2 + 1` a non-square; exists when `p = 3 mod 4`.
pub fn find_d(p: u64) -> Result<u64> {
    if !is_odd_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if p % 4 == 1 {
        return Err(Error::MinusOneIsSquare(p));
    }
    Ok((1..p)
        .find(|&d| legendre_int((d * d + 1) as i128, p) == Ok(-1))
        .expect("such d exists when -1 is a non-square"))
}

/// Fixed data attached to an odd prime: `q`, the non-square `u` and, when
/// `-1` is a non-square, the unit `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeContext {
    p: u64,
    u: u64,
    d: Option<u64>,
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self> {
        if !is_odd_prime(p) || p > MAX_PRIME {
            return Err(Error::InvalidPrime(p));
        }
        let u = find_nonsquare_unit(p)?;
        let d = find_d(p).ok();
        Ok(PrimeContext { p, u, d })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Residue field size; equal to `p` here.
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn u(&self) -> u64 {
        self.u
    }

    pub fn d(&self) -> Option<u64> {
        self.d
    }

    pub fn minus_one_is_square(&self) -> bool {
        self.p % 4 == 1
    }

    pub fn elem(&self, value: i128, precision: u32) -> ResidueElement {
        ResidueElement::new(value, self.p, precision)
    }

    pub fn legendre_int(&self, e: i128) -> Result<i8> {
        legendre_int(e, self.p)
    }

    /// Integer representative of a square class: `1, u, p, u*p`.
    pub fn class_rep(&self, c: SquareClass) -> i128 {
        let (p, u) = (self.p as i128, self.u as i128);
        match c {
            SquareClass::One => 1,
            SquareClass::U => u,
            SquareClass::Pi => p,
            SquareClass::UPi => u * p,
        }
    }
}

/// An integer modulo `p^precision`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ResidueElement {
    value: u64,
    p: u64,
    precision: u32,
}

impl ResidueElement {
    pub fn new(value: i128, p: u64, precision: u32) -> Self {
        assert!(precision >= 1, "precision must be at least 1");
        let m = prime_power(p, precision) as i128;
        ResidueElement { value: value.rem_euclid(m) as u64, p, precision }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> u64 {
        prime_power(self.p, self.precision)
    }

    /// Representative in `(-m/2, m/2]`.
    pub fn signed_value(&self) -> i128 {
        let m = self.modulus() as i128;
        let v = self.value as i128;
        if 2 * v > m {
            v - m
        } else {
            v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn is_unit(&self) -> bool {
        self.value % self.p != 0
    }

    /// Reduction to a lower precision.
    pub fn reduce(&self, precision: u32) -> Self {
        let n = precision.min(self.precision);
        ResidueElement::new(self.value as i128, self.p, n)
    }

    fn common(&self, other: &Self) -> (u32, u64) {
        assert_eq!(self.p, other.p, "residues over different primes");
        let n = self.precision.min(other.precision);
        (n, prime_power(self.p, n))
    }

    pub fn valuation(&self) -> Result<u32> {
        if self.value == 0 {
            return Err(Error::ZeroAtPrecision { precision: self.precision });
        }
        let mut v = self.value;
        let mut k = 0;
        while v % self.p == 0 {
            v /= self.p;
            k += 1;
        }
        Ok(k)
    }

    /// `x / p^val(x)`, known modulo `p^(N - val(x))`.
    pub fn unit_part(&self) -> Result<Self> {
        let k = self.valuation()?;
        self.div_p_power(k)
    }

    /// Exact division by `p^k`; the result has precision `N - k`.
    pub fn div_p_power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Ok(*self);
        }
        if k >= self.precision {
            return Err(Error::InsufficientPrecision { needed: k + 1, have: self.precision });
        }
        let pk = prime_power(self.p, k);
        if self.value % pk != 0 {
            return Err(Error::NotAUnit);
        }
        Ok(ResidueElement::new((self.value / pk) as i128, self.p, self.precision - k))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = ResidueElement::new(1, self.p, self.precision);
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b;
            }
            b = b * b;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let m = self.modulus() as i128;
        let (mut r0, mut r1) = (m, self.value as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let qt = r0 / r1;
            (r0, r1) = (r1, r0 - qt * r1);
            (t0, t1) = (t1, t0 - qt * t1);
        }
        Ok(ResidueElement::new(t0, self.p, self.precision))
    }
}

impl fmt::Display for ResidueElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.value, self.p, self.precision)
    }
}

impl Add for ResidueElement {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (n, m) = self.common(&o);
        let v = (self.value % m + o.value % m) % m;
        ResidueElement { value: v, p: self.p, precision: n }
    }
}

impl Sub for ResidueElement {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (n, m) = self.common(&o);
        let v = (self.value % m + m - o.value % m) % m;
        ResidueElement { value: v, p: self.p, precision: n }
    }
}

impl Mul for ResidueElement {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (n, m) = self.common(&o);
        let v = ((self.value as u128 * o.value as u128) % m as u128) as u64;
        ResidueElement { value: v, p: self.p, precision: n }
    }
}

impl Neg for ResidueElement {
    type Output = Self;
    fn neg(self) -> Self {
        let m = self.modulus();
        ResidueElement { value: (m - self.value) % m, p: self.p, precision: self.precision }
    }
}

pub fn valuation(x: &ResidueElement) -> Result<u32> {
    x.valuation()
}

/// `+1` iff `e mod p` is a non-zero square.
pub fn legendre(e: &ResidueElement, ctx: &PrimeContext) -> Result<i8> {
    legendre_int(e.value() as i128, ctx.p())
}

/// Square classes of `F^x`, represented by `{1, u, pi, u*pi}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SquareClass {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "upi")]
    UPi,
}

impl SquareClass {
    pub const ALL: [SquareClass; 4] = [SquareClass::One, SquareClass::U, SquareClass::Pi, SquareClass::UPi];

    pub fn from_parts(odd_valuation: bool, unit_square: bool) -> Self {
        match (odd_valuation, unit_square) {
            (false, true) => SquareClass::One,
            (false, false) => SquareClass::U,
            (true, true) => SquareClass::Pi,
            (true, false) => SquareClass::UPi,
        }
    }

    pub fn odd_valuation(&self) -> bool {
        matches!(self, SquareClass::Pi | SquareClass::UPi)
    }

    pub fn unit_is_square(&self) -> bool {
        matches!(self, SquareClass::One | SquareClass::Pi)
    }

    pub fn is_ramified(&self) -> bool {
        self.odd_valuation()
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SquareClass::One => "1",
            SquareClass::U => "u",
            SquareClass::Pi => "pi",
            SquareClass::UPi => "upi",
        }
    }
}

impl Mul for SquareClass {
    type Output = SquareClass;
    fn mul(self, o: SquareClass) -> SquareClass {
        SquareClass::from_parts(
            self.odd_valuation() ^ o.odd_valuation(),
            self.unit_is_square() == o.unit_is_square(),
        )
    }
}

impl FromStr for SquareClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(SquareClass::One),
            "u" => Ok(SquareClass::U),
            "pi" | "π" => Ok(SquareClass::Pi),
            "upi" | "uπ" | "u*pi" => Ok(SquareClass::UPi),
            other => Err(Error::Parse(format!("unknown square class `{other}`"))),
        }
    }
}

impl fmt::Display for SquareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

pub fn square_class(x: &ResidueElement, ctx: &PrimeContext) -> Result<SquareClass> {
    let k = x.valuation()?;
    let w = x.unit_part()?;
    Ok(SquareClass::from_parts(k % 2 == 1, legendre(&w, ctx)? == 1))
}

/// The quadratic character of `Y = F(sqrt D)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharDescriptor {
    d_class: SquareClass,
}

impl CharDescriptor {
    pub fn new(d_class: SquareClass) -> Result<Self> {
        if d_class == SquareClass::One {
            return Err(Error::TrivialCharacter);
        }
        Ok(CharDescriptor { d_class })
    }

    pub fn unramified() -> Self {
        CharDescriptor { d_class: SquareClass::U }
    }

    pub fn d_class(&self) -> SquareClass {
        self.d_class
    }

    pub fn ramified(&self) -> bool {
        self.d_class.is_ramified()
    }

    /// `chi_Y(pi)`, pinned by `chi_Y(-D) = 1` in the ramified case.
    pub fn chi_pi(&self, ctx: &PrimeContext) -> i8 {
        match self.d_class {
            SquareClass::Pi => legendre_int(-1, ctx.p()).unwrap(),
            SquareClass::UPi => legendre_int(-(ctx.u() as i128), ctx.p()).unwrap(),
            _ => -1,
        }
    }

    /// Character value from a valuation and the Legendre symbol of the unit part.
    pub fn chi_from_parts(&self, valuation: i64, unit_legendre: i8, ctx: &PrimeContext) -> i8 {
        let odd = valuation.rem_euclid(2) == 1;
        if !self.ramified() {
            return if odd { -1 } else { 1 };
        }
        let pi_part = if odd { self.chi_pi(ctx) } else { 1 };
        unit_legendre * pi_part
    }

    pub fn chi_class(&self, c: SquareClass, ctx: &PrimeContext) -> i8 {
        let leg = if c.unit_is_square() { 1 } else { -1 };
        self.chi_from_parts(c.odd_valuation() as i64, leg, ctx)
    }

    pub fn tag(&self) -> &'static str {
        self.d_class.tag()
    }
}

impl FromStr for CharDescriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CharDescriptor::new(s.parse()?)
    }
}

pub fn chi_eval(y: &CharDescriptor, x: &ResidueElement, ctx: &PrimeContext) -> Result<i8> {
    let k = x.valuation()?;
    if !y.ramified() {
        return Ok(if k % 2 == 1 { -1 } else { 1 });
    }
    if x.precision() < k + 1 {
        return Err(Error::InsufficientPrecision { needed: k + 1, have: x.precision() });
    }
    let leg = legendre(&x.unit_part()?, ctx)?;
    Ok(y.chi_from_parts(k as i64, leg, ctx))
}

/// Hilbert symbol `(a, b)` for odd `p`, from valuations and unit parts.
pub fn hilbert_symbol(a: &ResidueElement, b: &ResidueElement, ctx: &PrimeContext) -> Result<i8> {
    let (va, vb) = (a.valuation()? as i64, b.valuation()? as i64);
    let (la, lb) = (legendre(&a.unit_part()?, ctx)?, legendre(&b.unit_part()?, ctx)?);
    Ok(hilbert_from_parts(va, la, vb, lb, ctx.p()))
}

pub(crate) fn hilbert_from_parts(va: i64, la: i8, vb: i64, lb: i8, p: u64) -> i8 {
    let eps = ((p - 1) / 2) as i64;
    let mut s: i8 = if (va * vb * eps).rem_euclid(2) == 1 { -1 } else { 1 };
    if vb.rem_euclid(2) == 1 {
        s *= la;
    }
    if va.rem_euclid(2) == 1 {
        s *= lb;
    }
    s
}
