//! Shell volumes `vol(V_n^0)` and character sums `I_n` of quaternary forms.
//!
//! The projective space of primitive vectors is covered by pivot cells: for
//! pivot `i` the coordinates before `i` lie in `pR`, coordinate `i` is `1`
//! and the rest are free. The total measure is `1 + 1/q + 1/q^2 + 1/q^3`.
//!
//! Three enumerators produce the same integer counts:
//! * [`Enumerator::Flat`] visits every residue vector modulo `p^L`;
//! * [`Enumerator::Pruned`] refines digit by digit and stops as soon as the
//!   valuation is certified;
//! * [`Enumerator::Hensel`] additionally settles a cell at once when the
//!   gradient in a free direction has valuation `e` below the cell level `k`,
//!   because then `Q` is `Q(v) + p^(k+e) * (Haar variable)` on that cell.

use crate::error::{Error, Result};
use crate::localfield::{prime_power, CharDescriptor, PrimeContext, ResidueElement};
use crate::quadforms::QuadForm4;
use crate::scalar::ExactScalar;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A polynomial `v^T G v + l . v` with coefficients modulo `p^level`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly2 {
    p: u64,
    level: u32,
    g: [[i128; 4]; 4],
    l: [i128; 4],
}

impl Poly2 {
    pub fn from_form(q: &QuadForm4, level: u32) -> Result<Self> {
        if q.precision() < level {
            return Err(Error::PrecisionTooLow { needed: level, have: q.precision() });
        }
        let g = std::array::from_fn(|i| std::array::from_fn(|j| q.gram[i][j].reduce(level).value() as i128));
        Ok(Poly2 { p: q.p(), level, g, l: [0; 4] })
    }

    /// The linear form `v_index`.
    pub fn coordinate(index: usize, p: u64, level: u32) -> Self {
        let mut l = [0; 4];
        l[index] = 1;
        Poly2 { p, level, g: [[0; 4]; 4], l }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    fn modulus(&self) -> i128 {
        prime_power(self.p, self.level) as i128
    }

    fn eval(&self, v: &[i128; 4]) -> i128 {
        let m = self.modulus();
        let mut s = 0i128;
        for i in 0..4 {
            let mut row = self.l[i];
            for j in 0..4 {
                row = (row + self.g[i][j] * v[j]) % m;
            }
            s = (s + row * v[i]) % m;
        }
        s.rem_euclid(m)
    }

    fn eval_quadratic(&self, w: &[i128; 4]) -> i128 {
        let m = self.modulus();
        let mut s = 0i128;
        for i in 0..4 {
            for j in 0..4 {
                s = (s + self.g[i][j] * w[i] % m * w[j]) % m;
            }
        }
        s.rem_euclid(m)
    }

    fn gradient(&self, v: &[i128; 4]) -> [i128; 4] {
        let m = self.modulus();
        std::array::from_fn(|i| {
            let mut s = self.l[i];
            for j in 0..4 {
                s = (s + 2 * self.g[i][j] * v[j]) % m;
            }
            s.rem_euclid(m)
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enumerator {
    Flat,
    Pruned,
    #[default]
    Hensel,
}

impl FromStr for Enumerator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Enumerator::Flat),
            "pruned" => Ok(Enumerator::Pruned),
            "hensel" => Ok(Enumerator::Hensel),
            other => Err(Error::Parse(format!("unknown enumerator `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    pub method: Enumerator,
    pub threads: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { method: Enumerator::Hensel, threads: 1 }
    }
}

impl EnumOptions {
    pub fn with_method(method: Enumerator) -> Self {
        EnumOptions { method, threads: 1 }
    }
}

/// Cell counts at scale `p^(-3 * level)`, split by the Legendre symbol of
/// the unit part of `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellCounts {
    pub p: u64,
    pub level: u32,
    pub plus: Vec<u128>,
    pub minus: Vec<u128>,
}

impl ShellCounts {
    fn zero(p: u64, level: u32, n_max: u32) -> Self {
        let len = n_max as usize + 1;
        ShellCounts { p, level, plus: vec![0; len], minus: vec![0; len] }
    }

    fn absorb(&mut self, other: &ShellCounts) {
        for n in 0..self.plus.len() {
            self.plus[n] += other.plus[n];
            self.minus[n] += other.minus[n];
        }
    }

    pub fn n_max(&self) -> u32 {
        self.plus.len() as u32 - 1
    }

    fn scale<S: ExactScalar>(&self, count: i128) -> S {
        let den = BigInt::from(self.p).pow(3 * self.level);
        S::from_bigint_ratio(&BigInt::from(count), &den).expect("scale denominator fits")
    }

    pub fn volumes<S: ExactScalar>(&self) -> Profile<S> {
        let entries = (0..self.plus.len()).map(|n| self.scale((self.plus[n] + self.minus[n]) as i128)).collect();
        Profile { kind: ProfileKind::Volume, q: self.p, n_max: self.n_max(), entries }
    }

    /// `I_n = chi_Y(pi)^n * (plus_n - minus_n)` for ramified `Y`, `(-1)^n v_n` otherwise.
    pub fn char_sums<S: ExactScalar>(&self, y: &CharDescriptor, ctx: &PrimeContext) -> Profile<S> {
        let entries = (0..self.plus.len())
            .map(|n| {
                let sign = y.chi_from_parts(n as i64, 1, ctx) as i128;
                let (a, b) = (self.plus[n] as i128, self.minus[n] as i128);
                self.scale(if y.ramified() { sign * (a - b) } else { sign * (a + b) })
            })
            .collect();
        Profile { kind: ProfileKind::CharSum, q: self.p, n_max: self.n_max(), entries }
    }
}

fn legendre_table(p: u64) -> Vec<i8> {
    let mut t = vec![-1i8; p as usize];
    t[0] = 0;
    for x in 1..p {
        t[((x * x) % p) as usize] = 1;
    }
    t
}

struct Walker<'a> {
    poly: &'a Poly2,
    p: i128,
    level: u32,
    modulus: i128,
    hensel: bool,
    pw: Vec<i128>,
    legendre: Vec<i8>,
    free: [usize; 3],
    digits: Vec<[i128; 4]>,
    quad_digits: Vec<i128>,
    out: ShellCounts,
}

impl<'a> Walker<'a> {
    fn new(poly: &'a Poly2, pivot: usize, n_max: u32, hensel: bool) -> Self {
        let p = poly.p as i128;
        let level = poly.level;
        let pw: Vec<i128> = (0..=2 * level).map(|k| p.pow(k)).collect();
        let free: Vec<usize> = (0..4).filter(|&i| i != pivot).collect();
        let free = [free[0], free[1], free[2]];
        let mut digits = Vec::with_capacity((p * p * p) as usize);
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    let mut w = [0; 4];
                    w[free[0]] = a;
                    w[free[1]] = b;
                    w[free[2]] = c;
                    digits.push(w);
                }
            }
        }
        let quad_digits = digits.iter().map(|w| poly.eval_quadratic(w)).collect();
        Walker {
            poly,
            p,
            level,
            modulus: pw[level as usize],
            hensel,
            pw,
            legendre: legendre_table(poly.p),
            free,
            digits,
            quad_digits,
            out: ShellCounts::zero(poly.p, level, n_max),
        }
    }

    fn val(&self, x: i128) -> Option<u32> {
        if x == 0 {
            return None;
        }
        let mut x = x;
        let mut k = 0;
        while x % self.p == 0 {
            x /= self.p;
            k += 1;
        }
        Some(k)
    }

    fn record(&mut self, c: i128, n: u32, weight: u128) {
        if n > self.out.n_max() {
            return;
        }
        let unit = (c / self.pw[n as usize]) % self.p;
        if self.legendre[unit as usize] > 0 {
            self.out.plus[n as usize] += weight;
        } else {
            self.out.minus[n as usize] += weight;
        }
    }

    fn record_haar(&mut self, from: u32, weight: u128) {
        let p = self.p as u128;
        for n in from..=self.out.n_max() {
            let share = weight / p.pow(n - from + 1) * (p - 1) / 2;
            self.out.plus[n as usize] += share;
            self.out.minus[n as usize] += share;
        }
    }

    /// Cell of level `k` around `v`, with `c = Q(v) mod p^level`.
    fn visit(&mut self, v: [i128; 4], k: u32, c: i128) {
        let weight = (self.p as u128).pow(3 * (self.level - k));
        let vc = self.val(c);
        if let Some(n) = vc {
            if n < k {
                self.record(c, n, weight);
                return;
            }
        }
        let grad = self.poly.gradient(&v);
        if self.hensel {
            let e = self.free.iter().filter_map(|&f| self.val(grad[f])).min();
            if let Some(e) = e.filter(|&e| e < k) {
                let t = k + e;
                match vc {
                    Some(n) if n < t => self.record(c, n, weight),
                    _ => self.record_haar(t, weight),
                }
                return;
            }
        }
        if k == self.level {
            return;
        }
        let m = self.modulus;
        let pk = self.pw[k as usize];
        let p2k = if 2 * k >= self.level { 0 } else { self.pw[2 * k as usize] };
        for idx in 0..self.digits.len() {
            let w = self.digits[idx];
            let lin: i128 = self.free.iter().map(|&f| grad[f] * w[f]).sum::<i128>() % m;
            let child_c = (c + pk * lin % m + p2k * self.quad_digits[idx] % m) % m;
            let mut child = v;
            for &f in &self.free {
                child[f] += pk * w[f];
            }
            self.visit(child, k + 1, child_c);
        }
    }
}

fn level_one_cells(poly: &Poly2, pivots: &[usize]) -> Vec<(usize, [i128; 4])> {
    let p = poly.p as i128;
    let mut cells = Vec::new();
    for &pivot in pivots {
        let after: Vec<usize> = (pivot + 1..4).collect();
        let count = p.pow(after.len() as u32);
        for idx in 0..count {
            let mut v = [0i128; 4];
            v[pivot] = 1;
            let mut r = idx;
            for &f in &after {
                v[f] = r % p;
                r /= p;
            }
            cells.push((pivot, v));
        }
    }
    cells
}

fn count_recursive(poly: &Poly2, pivots: &[usize], n_max: u32, hensel: bool, threads: usize) -> ShellCounts {
    let cells = level_one_cells(poly, pivots);
    let threads = threads.max(1).min(cells.len().max(1));
    let run = |shard: usize| -> ShellCounts {
        let mut total = ShellCounts::zero(poly.p, poly.level, n_max);
        for pivot in 0..4 {
            let mut walker: Option<Walker> = None;
            for (i, (pv, v)) in cells.iter().enumerate() {
                if *pv != pivot || i % threads != shard {
                    continue;
                }
                let w = walker.get_or_insert_with(|| Walker::new(poly, pivot, n_max, hensel));
                w.visit(*v, 1, poly.eval(v));
            }
            if let Some(w) = walker {
                total.absorb(&w.out);
            }
        }
        total
    };
    collect_shards(threads, poly, n_max, run)
}

fn collect_shards<F>(threads: usize, poly: &Poly2, n_max: u32, run: F) -> ShellCounts
where
    F: Fn(usize) -> ShellCounts + Sync,
{
    let mut total = ShellCounts::zero(poly.p, poly.level, n_max);
    if threads == 1 {
        total.absorb(&run(0));
        return total;
    }
    let parts: Vec<ShellCounts> = std::thread::scope(|s| {
        let run = &run;
        let handles: Vec<_> = (0..threads).map(|i| s.spawn(move || run(i))).collect();
        handles.into_iter().map(|h| h.join().expect("enumeration shard panicked")).collect()
    });
    for part in &parts {
        total.absorb(part);
    }
    total
}

fn count_flat(poly: &Poly2, pivots: &[usize], n_max: u32, threads: usize) -> ShellCounts {
    let p = poly.p as i128;
    let level = poly.level;
    let m = poly.modulus();
    let legendre = legendre_table(poly.p);
    let val = |x: i128| -> Option<u32> {
        if x == 0 {
            return None;
        }
        let mut x = x;
        let mut k = 0;
        while x % p == 0 {
            x /= p;
            k += 1;
        }
        Some(k)
    };
    let run = |shard: usize| -> ShellCounts {
        let mut out = ShellCounts::zero(poly.p, level, n_max);
        for &pivot in pivots {
            let free: Vec<usize> = (0..4).filter(|&i| i != pivot).collect();
            let ranges: Vec<(i128, i128)> =
                free.iter().map(|&f| if f < pivot { (p, m / p) } else { (1, m) }).collect();
            let total: i128 = ranges.iter().map(|r| r.1).product();
            let mut idx = shard as i128;
            while idx < total {
                let mut v = [0i128; 4];
                v[pivot] = 1;
                let mut r = idx;
                for (j, &f) in free.iter().enumerate() {
                    v[f] = (r % ranges[j].1) * ranges[j].0;
                    r /= ranges[j].1;
                }
                let c = poly.eval(&v);
                if let Some(n) = val(c) {
                    if n <= n_max {
                        let unit = (c / p.pow(n)) % p;
                        if legendre[unit as usize] > 0 {
                            out.plus[n as usize] += 1;
                        } else {
                            out.minus[n as usize] += 1;
                        }
                    }
                }
                idx += threads as i128;
            }
        }
        out
    };
    collect_shards(threads.max(1), poly, n_max, run)
}

/// Counts of the pivot cells listed in `pivots`.
pub fn shell_counts_for_pivots(poly: &Poly2, pivots: &[usize], n_max: u32, opts: EnumOptions) -> Result<ShellCounts> {
    if poly.level < n_max + 1 {
        return Err(Error::PrecisionTooLow { needed: n_max + 1, have: poly.level });
    }
    Ok(match opts.method {
        Enumerator::Flat => count_flat(poly, pivots, n_max, opts.threads),
        Enumerator::Pruned => count_recursive(poly, pivots, n_max, false, opts.threads),
        Enumerator::Hensel => count_recursive(poly, pivots, n_max, true, opts.threads),
    })
}

pub fn shell_counts(poly: &Poly2, n_max: u32, opts: EnumOptions) -> Result<ShellCounts> {
    shell_counts_for_pivots(poly, &[0, 1, 2, 3], n_max, opts)
}

fn form_counts(q: &QuadForm4, n_max: u32, opts: EnumOptions) -> Result<ShellCounts> {
    if q.precision() < n_max + 2 {
        return Err(Error::PrecisionTooLow { needed: n_max + 2, have: q.precision() });
    }
    shell_counts(&Poly2::from_form(q, n_max + 1)?, n_max, opts)
}

pub fn vol_profile<S: ExactScalar>(q: &QuadForm4, n_max: u32, opts: EnumOptions) -> Result<Profile<S>> {
    Ok(form_counts(q, n_max, opts)?.volumes())
}

pub fn char_profile<S: ExactScalar>(
    q: &QuadForm4,
    y: &CharDescriptor,
    n_max: u32,
    ctx: &PrimeContext,
    opts: EnumOptions,
) -> Result<Profile<S>> {
    Ok(form_counts(q, n_max, opts)?.char_sums(y, ctx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Volume,
    CharSum,
}

/// Exact entries indexed by shell `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile<S> {
    pub kind: ProfileKind,
    pub q: u64,
    pub n_max: u32,
    pub entries: Vec<S>,
}

pub type VolumeProfile<S = crate::Rational> = Profile<S>;
pub type CharSumProfile<S = crate::Rational> = Profile<S>;

#[derive(Serialize, Deserialize)]
struct EntryJson {
    n: u32,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    q: u64,
    n_max: u32,
    #[serde(default = "default_kind", skip_serializing_if = "is_volume")]
    kind: ProfileKind,
    entries: Vec<EntryJson>,
}

fn default_kind() -> ProfileKind {
    ProfileKind::Volume
}

fn is_volume(k: &ProfileKind) -> bool {
    *k == ProfileKind::Volume
}

impl<S: ExactScalar> Profile<S> {
    pub fn new(kind: ProfileKind, q: u64, entries: Vec<S>) -> Self {
        assert!(!entries.is_empty());
        Profile { kind, q, n_max: entries.len() as u32 - 1, entries }
    }

    pub fn truncated(&self, n_max: u32) -> Self {
        let entries = self.entries[..=(n_max as usize).min(self.entries.len() - 1)].to_vec();
        Profile::new(self.kind, self.q, entries)
    }

    pub fn scaled(&self, c: &S) -> Self {
        Profile { entries: self.entries.iter().map(|e| e.clone() * c.clone()).collect(), ..self.clone() }
    }

    pub fn total(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, e| a + e.clone())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = ProfileJson {
            q: self.q,
            n_max: self.n_max,
            kind: self.kind,
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(n, e)| {
                    let (num, den) = e.num_den_strings();
                    EntryJson { n: n as u32, num, den }
                })
                .collect(),
        };
        serde_json::to_value(j).expect("profile serializes")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ProfileJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut entries = vec![S::zero(); j.entries.len()];
        for e in &j.entries {
            let slot = entries.get_mut(e.n as usize).ok_or_else(|| Error::Parse(format!("entry n={} out of range", e.n)))?;
            *slot = crate::scalar::parse_ratio(&e.num, &e.den).ok_or_else(|| Error::Parse("bad rational".into()))?;
        }
        if entries.len() != j.n_max as usize + 1 {
            return Err(Error::Parse("entry count does not match n_max".into()));
        }
        Ok(Profile { kind: j.kind, q: j.q, n_max: j.n_max, entries })
    }
}

impl<S: ExactScalar> fmt::Display for Profile<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, e) in self.entries.iter().enumerate() {
            let (a, b) = e.num_den_strings();
            writeln!(f, "{n:>3}  {a}/{b}")?;
        }
        Ok(())
    }
}

/// Closed-form shell tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaId {
    I1,
    I2,
    I3,
    II1,
    II2,
    II3,
    II4,
    II5,
    IV2,
    /// Anisotropic type I shapes.
    Aniso,
    /// Character sums for `x^2 - y^2 + u t^2 - u pi z^2` with `Y = F(sqrt pi)`.
    A1Pi,
    /// Same form with `Y = F(sqrt(u pi))`.
    A1UPi,
}

impl LemmaId {
    pub const VOLUME_TABLES: [LemmaId; 10] = [
        LemmaId::I1,
        LemmaId::I2,
        LemmaId::I3,
        LemmaId::II1,
        LemmaId::II2,
        LemmaId::II3,
        LemmaId::II4,
        LemmaId::II5,
        LemmaId::IV2,
        LemmaId::Aniso,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LemmaId::I1 => "I.1",
            LemmaId::I2 => "I.2",
            LemmaId::I3 => "I.3",
            LemmaId::II1 => "II.1",
            LemmaId::II2 => "II.2",
            LemmaId::II3 => "II.3",
            LemmaId::II4 => "II.4",
            LemmaId::II5 => "II.5",
            LemmaId::IV2 => "IV.2",
            LemmaId::Aniso => "I.aniso",
            LemmaId::A1Pi => "A.1.pi",
            LemmaId::A1UPi => "A.1.upi",
        }
    }

    pub fn is_char_table(&self) -> bool {
        matches!(self, LemmaId::A1Pi | LemmaId::A1UPi)
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = LemmaId::VOLUME_TABLES.iter().chain([LemmaId::A1Pi, LemmaId::A1UPi].iter());
        all.copied().find(|l| l.name() == s.trim()).ok_or_else(|| Error::UnknownLemma(s.to_string()))
    }
}

/// Entry `n` of a closed-form table at residue field size `q`.
pub fn closed_form_profile<S: ExactScalar>(lemma: LemmaId, q: u64, n: u32) -> S {
    let r = |a: i128, b: i128| S::from_i128_ratio(a, b);
    let one = S::one();
    let qi = S::from_i128_ratio(1, q as i128);
    let q_n = |k: u32| S::powi(&qi, k as i64);
    let two = r(2, 1);
    let m1 = one.clone() - qi.clone();
    let p1 = one.clone() + qi.clone();
    let qq = qi.clone() * qi.clone();
    let qqq = qq.clone() * qi.clone();
    match (lemma, n) {
        (LemmaId::I1, 0) => m1,
        (LemmaId::I1, 1) => qi.clone() * m1 * (two + qi),
        (LemmaId::I1, n) => two * q_n(n) * m1 * p1,
        (LemmaId::I2, 0) => one,
        (LemmaId::I2, 1) => qi * m1,
        (LemmaId::I2, 2) => qq.clone() * (two - qi - r(2, 1) * qq),
        (LemmaId::I2, n) => two * q_n(n) * m1 * p1,
        (LemmaId::I3, 0) => one - qq,
        (LemmaId::I3, n) => q_n(n) * m1 * (one + r(2, 1) * qi + qq),
        (LemmaId::II1, 0) => m1,
        (LemmaId::II1, 1) => two * qi - qq + qqq,
        (LemmaId::II1, n) => two * q_n(n) * m1,
        (LemmaId::II2, 0) => p1,
        (LemmaId::II2, 1) => qq * m1,
        (LemmaId::II2, n) => two * q_n(n + 1) * m1,
        (LemmaId::II3 | LemmaId::II4 | LemmaId::II5, 0) => one,
        (LemmaId::II3 | LemmaId::II4 | LemmaId::II5, 1) => qi,
        (LemmaId::II3 | LemmaId::II4 | LemmaId::II5, n) => q_n(n) * (one - qq),
        (LemmaId::IV2, 0) => one + qq,
        (LemmaId::IV2, n) => q_n(n) * m1 * (one + qq),
        (LemmaId::Aniso, 0) => p1,
        (LemmaId::Aniso, 1) => qq * p1,
        (LemmaId::Aniso, _) => S::zero(),
        (LemmaId::A1Pi, 0) | (LemmaId::A1UPi, 0) => -qi,
        (LemmaId::A1Pi, 1) => -qqq,
        (LemmaId::A1UPi, 1) => qqq,
        (LemmaId::A1Pi | LemmaId::A1UPi, _) => S::zero(),
    }
}

pub fn closed_form_table<S: ExactScalar>(lemma: LemmaId, q: u64, n_max: u32) -> Profile<S> {
    let kind = if lemma.is_char_table() { ProfileKind::CharSum } else { ProfileKind::Volume };
    Profile::new(kind, q, (0..=n_max).map(|n| closed_form_profile(lemma, q, n)).collect())
}

/// `int_{|c^2 - x^2| = q^-n} chi(c^2 - x^2) dx` over `x in R`, by counting
/// `x mod p^(n+2)`; without a character this is the measure of the set.
pub fn shell_integral<S: ExactScalar>(
    c: &ResidueElement,
    n: u32,
    y: Option<&CharDescriptor>,
    ctx: &PrimeContext,
) -> Result<S> {
    if !c.is_unit() {
        return Err(Error::NotAUnit);
    }
    if n == 0 {
        return Err(Error::Unsupported("shell integral needs n >= 1".into()));
    }
    let level = n + 2;
    let m = prime_power(ctx.p(), level) as i128;
    let cc = c.reduce(level).value() as i128;
    let c2 = cc * cc % m;
    let mut acc: i128 = 0;
    for x in 0..m {
        let e = ResidueElement::new(c2 - x * x % m, ctx.p(), level);
        if e.is_zero() || e.valuation()? != n {
            continue;
        }
        acc += match y {
            None => 1,
            Some(y) => crate::localfield::chi_eval(y, &e, ctx)? as i128,
        };
    }
    Ok(S::from_i128_ratio(acc, m))
}

pub fn shell_integral_closed<S: ExactScalar>(q: u64, n: u32, y: Option<&CharDescriptor>) -> S {
    match y {
        Some(y) if y.ramified() => S::zero(),
        _ => {
            let qi = S::from_i128_ratio(1, q as i128);
            S::from_i64(2) * S::powi(&qi, n as i64) * (S::one() - qi)
        }
    }
}
