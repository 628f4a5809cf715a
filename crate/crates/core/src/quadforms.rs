//! Quaternary quadratic forms over `R / p^N R`: the shape catalog, Jordan
//! invariants, isotropy and equivalence checks.
//!
//! Variables are always ordered `(x, y, z, t)`. A form is stored through its
//! symmetric Gram matrix, so `Q(v) = v^T G v` and a cross term `c*x*y` puts
//! `c/2` in two entries.

use crate::error::{Error, Result};
use crate::localfield::{hilbert_from_parts, legendre_int, prime_power, PrimeContext, ResidueElement, SquareClass};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub type Mat4 = [[ResidueElement; 4]; 4];

pub fn mat_from_ints(m: &[[i128; 4]; 4], p: u64, precision: u32) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| ResidueElement::new(m[i][j], p, precision)))
}

pub fn identity(p: u64, precision: u32) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| ResidueElement::new((i == j) as i128, p, precision)))
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = a[i][0] * b[0][j];
            for k in 1..4 {
                acc = acc + a[i][k] * b[k][j];
            }
            acc
        })
    })
}

pub fn transpose(a: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

/// Determinant by cofactor expansion.
pub fn det(a: &Mat4) -> ResidueElement {
    fn det3(a: &Mat4, rows: [usize; 3], cols: [usize; 3]) -> ResidueElement {
        let e = |i: usize, j: usize| a[rows[i]][cols[j]];
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    }
    let mut acc = a[0][0] - a[0][0];
    for j in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
        let minor = det3(a, [1, 2, 3], [cols[0], cols[1], cols[2]]);
        let term = a[0][j] * minor;
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// A quaternary form `pi^scale_valuation * unit_prefactor * (v^T gram v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadForm4 {
    pub gram: Mat4,
    pub unit_prefactor: ResidueElement,
    pub scale_valuation: u32,
    pub label: String,
}

impl QuadForm4 {
    pub fn from_gram(gram: Mat4, label: impl Into<String>) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::Parse("Gram matrix is not symmetric".into()));
                }
            }
        }
        let one = ResidueElement::new(1, gram[0][0].p(), gram[0][0].precision());
        Ok(QuadForm4 { gram, unit_prefactor: one, scale_valuation: 0, label: label.into() })
    }

    /// Builds the form `sum diag[i] v_i^2 + sum cross (i, j, c) c v_i v_j`.
    pub fn from_poly(
        diag: [i128; 4],
        cross: &[(usize, usize, i128)],
        p: u64,
        precision: u32,
        label: impl Into<String>,
    ) -> Self {
        let half = ResidueElement::new(2, p, precision).inverse().expect("p is odd");
        let mut g = mat_from_ints(&[[0; 4]; 4], p, precision);
        for i in 0..4 {
            g[i][i] = ResidueElement::new(diag[i], p, precision);
        }
        for &(i, j, c) in cross {
            assert!(i != j);
            let h = ResidueElement::new(c, p, precision) * half;
            g[i][j] = g[i][j] + h;
            g[j][i] = g[j][i] + h;
        }
        QuadForm4::from_gram(g, label).expect("symmetric by construction")
    }

    pub fn diagonal(d: [i128; 4], p: u64, precision: u32, label: impl Into<String>) -> Self {
        QuadForm4::from_poly(d, &[], p, precision, label)
    }

    pub fn p(&self) -> u64 {
        self.gram[0][0].p()
    }

    pub fn precision(&self) -> u32 {
        self.gram[0][0].precision()
    }

    /// `v^T gram v` (prefactor not applied).
    pub fn eval(&self, v: [i128; 4]) -> ResidueElement {
        let (p, n) = (self.p(), self.precision());
        let vv: [ResidueElement; 4] = std::array::from_fn(|i| ResidueElement::new(v[i], p, n));
        let mut acc = ResidueElement::new(0, p, n);
        for i in 0..4 {
            for j in 0..4 {
                acc = acc + self.gram[i][j] * vv[i] * vv[j];
            }
        }
        acc
    }

    /// The Gram matrix with the prefactor multiplied back in.
    pub fn full_gram(&self) -> Mat4 {
        let (p, n) = (self.p(), self.precision());
        let pk = ResidueElement::new(prime_power(p, self.scale_valuation) as i128, p, n);
        let c = self.unit_prefactor.reduce(n) * pk;
        std::array::from_fn(|i| std::array::from_fn(|j| self.gram[i][j] * c))
    }

    /// Signed integer Gram entries.
    pub fn int_gram(&self) -> [[i128; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.gram[i][j].signed_value()))
    }

    pub fn scaled(&self, c: &ResidueElement) -> Self {
        let g = std::array::from_fn(|i| std::array::from_fn(|j| self.gram[i][j] * *c));
        QuadForm4 { gram: g, ..self.clone() }
    }

    /// `M^T G M`, the form `v -> Q(M v)`.
    pub fn transformed(&self, m: &Mat4) -> Self {
        let g = mat_mul(&transpose(m), &mat_mul(&self.gram, m));
        QuadForm4 { gram: g, ..self.clone() }
    }

    /// Content `pi^k * w` where `w` is the unit part of the first Gram entry
    /// (row-major) of minimal valuation.
    pub fn content(&self) -> Result<(u32, ResidueElement)> {
        let mut best: Option<(u32, ResidueElement)> = None;
        for i in 0..4 {
            for j in 0..4 {
                if let Ok(v) = self.gram[i][j].valuation() {
                    if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                        best = Some((v, self.gram[i][j].unit_part()?));
                    }
                }
            }
        }
        best.ok_or(Error::PrecisionTooLow { needed: self.precision() + 1, have: self.precision() })
    }

    /// Divides out the content; the result is primitive and the content is
    /// recorded in `unit_prefactor` and `scale_valuation`.
    pub fn normalized(&self) -> Result<Self> {
        let (k, w) = self.content()?;
        let winv = w.inverse()?;
        let n = self.precision() - k;
        let mut g = self.gram;
        for row in g.iter_mut() {
            for e in row.iter_mut() {
                *e = e.div_p_power(k)?.reduce(n) * winv.reduce(n);
            }
        }
        let pre = (self.unit_prefactor.reduce(n) * w.reduce(n)).reduce(n);
        Ok(QuadForm4 {
            gram: g,
            unit_prefactor: pre,
            scale_valuation: self.scale_valuation + k,
            label: self.label.clone(),
        })
    }

    /// Diagonal entries of an `R`-diagonalization.
    pub fn diagonalize(&self) -> Result<[ResidueElement; 4]> {
        let (p, n) = (self.p(), self.precision());
        let m = prime_power(p, n) as i128;
        let md = |x: i128| x.rem_euclid(m);
        let val = |x: i128| -> Option<u32> {
            if md(x) == 0 {
                return None;
            }
            let mut x = md(x);
            let mut k = 0;
            while x % p as i128 == 0 {
                x /= p as i128;
                k += 1;
            }
            Some(k)
        };
        let mut g: [[i128; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| self.gram[i][j].value() as i128));
        let mut active = [true; 4];
        let mut out = [ResidueElement::new(0, p, n); 4];
        for slot in 0..4 {
            let mut best: Option<(u32, usize, usize)> = None;
            for i in 0..4 {
                for j in 0..4 {
                    if !active[i] || !active[j] {
                        continue;
                    }
                    if let Some(v) = val(g[i][j]) {
                        let better = match best {
                            None => true,
                            Some((bv, bi, bj)) => v < bv || (v == bv && i == j && bi != bj),
                        };
                        if better {
                            best = Some((v, i, j));
                        }
                    }
                }
            }
            let (v, i, j) = best.ok_or(Error::PrecisionTooLow { needed: n + 1, have: n })?;
            if i != j {
                // e_i <- e_i + e_j makes the (i, i) entry reach valuation v.
                for l in 0..4 {
                    g[i][l] = md(g[i][l] + g[j][l]);
                }
                for l in 0..4 {
                    g[l][i] = md(g[l][i] + g[l][j]);
                }
            }
            let piv = md(g[i][i]);
            let pv = prime_power(p, v) as i128;
            let unit = ResidueElement::new(piv / pv, p, n - v);
            let winv = unit.inverse()?.value() as i128;
            let mut f = [0i128; 4];
            for k in 0..4 {
                if k != i && active[k] {
                    f[k] = md((md(g[i][k]) / pv) * winv);
                }
            }
            for k in 0..4 {
                for l in 0..4 {
                    if k != i && l != i && active[k] && active[l] {
                        g[k][l] = md(g[k][l] - f[k] * md(g[i][l]));
                    }
                }
            }
            for k in 0..4 {
                if k != i {
                    g[i][k] = 0;
                    g[k][i] = 0;
                }
            }
            active[i] = false;
            out[slot] = ResidueElement::new(piv, p, n);
        }
        Ok(out)
    }

    pub fn jordan_invariants(&self) -> Result<JordanInvariants> {
        let d = self.diagonalize()?;
        let mut blocks: Vec<JordanBlock> = Vec::new();
        for e in d {
            let v = e.valuation()?;
            let leg = legendre_int(e.unit_part()?.value() as i128, self.p())?;
            match blocks.iter_mut().find(|b| b.valuation == v) {
                Some(b) => {
                    b.rank += 1;
                    b.det_legendre *= leg;
                }
                None => blocks.push(JordanBlock { valuation: v, rank: 1, det_legendre: leg }),
            }
        }
        blocks.sort_by_key(|b| b.valuation);
        Ok(JordanInvariants { blocks })
    }
}

/// One constituent of a Jordan splitting: `rank` diagonal entries of
/// valuation `valuation` whose unit parts multiply to a residue of Legendre
/// symbol `det_legendre`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JordanBlock {
    pub valuation: u32,
    pub rank: usize,
    pub det_legendre: i8,
}

/// Complete `GL_4(R)` invariants of a non-degenerate form for odd `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JordanInvariants {
    pub blocks: Vec<JordanBlock>,
}

impl JordanInvariants {
    /// Invariants of `eps * Q` for a unit `eps` with Legendre symbol `eps_legendre`.
    pub fn scaled(&self, eps_legendre: i8) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| JordanBlock {
                det_legendre: if b.rank % 2 == 1 { b.det_legendre * eps_legendre } else { b.det_legendre },
                ..b.clone()
            })
            .collect();
        JordanInvariants { blocks }
    }

    pub fn ranks(&self) -> Vec<(u32, usize)> {
        self.blocks.iter().map(|b| (b.valuation, b.rank)).collect()
    }
}

impl fmt::Display for JordanInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("pi^{}:rank{}:{:+}", b.valuation, b.rank, b.det_legendre))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Twist element `br` of a type III class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrClass {
    One,
    SqrtA,
    DPlusI,
}

/// Canonical shapes. Type I and II shapes are parametrized by square
/// classes exactly as in `x^2 - r y^2 - D z^2 + r D t^2` and
/// `x^2 - r y^2 - AD z^2 + r D t^2`, with `AD` the class representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormShapeId {
    TypeI { d: SquareClass, r: SquareClass },
    I2,
    TypeII { r: SquareClass, a: SquareClass, d: SquareClass },
    IV2,
    IVRamified,
    TypeIII { br: BrClass, a: SquareClass, d: SquareClass },
}

use SquareClass::{One as S1, Pi as SPi, UPi as SUPi, U as SU};

impl FormShapeId {
    pub const I1: FormShapeId = FormShapeId::TypeI { d: SPi, r: S1 };
    pub const I3: FormShapeId = FormShapeId::TypeI { d: SU, r: S1 };
    pub const I_ANISO: FormShapeId = FormShapeId::TypeI { d: SPi, r: SU };
    pub const II1: FormShapeId = FormShapeId::TypeII { r: S1, a: SU, d: SPi };
    pub const II2: FormShapeId = FormShapeId::TypeII { r: SU, a: SU, d: SPi };
    pub const II3A: FormShapeId = FormShapeId::TypeII { r: S1, a: SPi, d: SU };
    pub const II3B: FormShapeId = FormShapeId::TypeII { r: S1, a: SUPi, d: SPi };
    pub const II4: FormShapeId = FormShapeId::TypeII { r: SPi, a: SPi, d: SU };
    pub const II5: FormShapeId = FormShapeId::TypeII { r: SU, a: SUPi, d: SPi };

    /// Named shapes in catalog order.
    pub fn named() -> Vec<(&'static str, FormShapeId)> {
        vec![
            ("I.1", Self::I1),
            ("I.2", FormShapeId::I2),
            ("I.3", Self::I3),
            ("I.aniso", Self::I_ANISO),
            ("I.aniso.upi", FormShapeId::TypeI { d: SUPi, r: SU }),
            ("I.aniso.u", FormShapeId::TypeI { d: SU, r: SPi }),
            ("II.1", Self::II1),
            ("II.2", Self::II2),
            ("II.3a", Self::II3A),
            ("II.3b", Self::II3B),
            ("II.4", Self::II4),
            ("II.5", Self::II5),
            ("IV.2", FormShapeId::IV2),
            ("IV.ram", FormShapeId::IVRamified),
        ]
    }

    pub fn name(&self) -> String {
        if let Some((n, _)) = Self::named().into_iter().find(|(_, s)| s == self) {
            return n.to_string();
        }
        match self {
            FormShapeId::TypeI { d, r } => format!("I[D={d},r={r}]"),
            FormShapeId::TypeII { r, a, d } => format!("II[r={r},A={a},D={d}]"),
            FormShapeId::TypeIII { br, a, d } => {
                let b = match br {
                    BrClass::One => "1",
                    BrClass::SqrtA => "sqrtA",
                    BrClass::DPlusI => "d+i",
                };
                format!("III[br={b},A={a},D={d}]")
            }
            _ => unreachable!("named shapes handled above"),
        }
    }
}

impl fmt::Display for FormShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FormShapeId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let alias = match s {
            "II.3" | "A.1" => "II.3a",
            "IV-unramified" | "IV.unram" => "IV.2",
            "IV-ramified" => "IV.ram",
            "I-anisotropic" => "I.aniso",
            other => other,
        };
        FormShapeId::named()
            .into_iter()
            .find(|(n, _)| *n == alias)
            .map(|(_, id)| id)
            .ok_or_else(|| Error::UnknownShape(s.to_string()))
    }
}

/// Integer value used for `A` in types III and IV: the class `u` is realized
/// by `-1` when `-1` is a non-square.
pub fn a_value(a: SquareClass, ctx: &PrimeContext) -> i128 {
    if a == SquareClass::U && !ctx.minus_one_is_square() {
        -1
    } else {
        ctx.class_rep(a)
    }
}

/// The class representative of `A*D`.
pub fn ad_rep(a: SquareClass, d: SquareClass, ctx: &PrimeContext) -> i128 {
    ctx.class_rep(a * d)
}

/// Type III form `b2 (t^2 + A z^2 - D y^2 - A D x^2) + 2 b1 (z t - D x y)`
/// for `br = b1 + b2 sqrt(A)`.
pub fn type_iii_form(b1: i128, b2: i128, a: i128, d: i128, p: u64, n: u32, label: &str) -> QuadForm4 {
    QuadForm4::from_poly(
        [-b2 * a * d, -b2 * d, b2 * a, b2],
        &[(2, 3, 2 * b1), (0, 1, -2 * b1 * d)],
        p,
        n,
        label,
    )
}

pub fn canonical_form(shape: FormShapeId, ctx: &PrimeContext, n: u32) -> Result<QuadForm4> {
    if n < 2 {
        return Err(Error::PrecisionTooLow { needed: 2, have: n });
    }
    let p = ctx.p();
    let (pi, u) = (p as i128, ctx.u() as i128);
    let label = shape.name();
    let rep = |c: SquareClass| ctx.class_rep(c);
    Ok(match shape {
        FormShapeId::TypeI { d, r } => {
            let (dv, rv) = (rep(d), rep(r));
            QuadForm4::diagonal([1, -rv, -dv, rv * dv], p, n, label)
        }
        FormShapeId::I2 => QuadForm4::diagonal([1, pi, -pi, -pi * pi], p, n, label),
        FormShapeId::TypeII { r, a, d } => {
            let (rv, dv) = (rep(r), rep(d));
            QuadForm4::diagonal([1, -rv, -ad_rep(a, d, ctx), rv * dv], p, n, label)
        }
        FormShapeId::IV2 => QuadForm4::from_poly([1, -u, 0, 0], &[(2, 3, -2)], p, n, label),
        FormShapeId::IVRamified => QuadForm4::from_poly([1, pi, 0, 0], &[(2, 3, -2)], p, n, label),
        FormShapeId::TypeIII { br, a, d } => {
            let (av, dv) = (a_value(a, ctx), rep(d));
            let (b1, b2) = match br {
                BrClass::One => (1, 0),
                BrClass::SqrtA => (0, 1),
                BrClass::DPlusI => {
                    if av != -1 {
                        return Err(Error::Unsupported("br = d+i needs A = -1".into()));
                    }
                    (ctx.d().ok_or(Error::MinusOneIsSquare(p))? as i128, 1)
                }
            };
            type_iii_form(b1, b2, av, dv, p, n, &label)
        }
    })
}

/// Outcome of the two isotropy tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub hasse: bool,
    /// `None` when the bounded search neither found a lifting witness nor
    /// ruled out primitive zeros.
    pub search: Option<bool>,
}

/// Isotropy from a diagonalization: a rank 4 form is anisotropic exactly when
/// its discriminant is a square and its Hasse invariant is `-1`.
pub fn hasse_isotropic(q: &QuadForm4, ctx: &PrimeContext) -> Result<bool> {
    let d = q.diagonalize()?;
    let mut parts = Vec::with_capacity(4);
    for e in d {
        let v = e.valuation()? as i64;
        let l = legendre_int(e.unit_part()?.value() as i128, ctx.p())?;
        parts.push((v, l));
    }
    let disc_val: i64 = parts.iter().map(|x| x.0).sum();
    let disc_leg: i8 = parts.iter().map(|x| x.1).product();
    let mut c = 1i8;
    for i in 0..4 {
        for j in (i + 1)..4 {
            c *= hilbert_from_parts(parts[i].0, parts[i].1, parts[j].0, parts[j].1, ctx.p());
        }
    }
    let anisotropic = disc_val % 2 == 0 && disc_leg == 1 && c == -1;
    Ok(!anisotropic)
}

fn exact_val(x: i128, p: i128) -> Option<u32> {
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
}

/// Bounded search for a primitive vector `v` with `val Q(v) > 2 val grad Q(v)`,
/// which lifts to a zero by Hensel's lemma. Returns `Some(false)` when some
/// level `p^k` (`k <= k_max`) has no primitive solution of `Q = 0 mod p^k`.
pub fn search_isotropic(q: &QuadForm4, k_max: u32, node_budget: usize) -> Option<bool> {
    let p = q.p() as i128;
    let g = q.int_gram();
    let eval = |v: &[i128; 4]| -> i128 {
        let mut s = 0;
        for i in 0..4 {
            for j in 0..4 {
                s += g[i][j] * v[i] * v[j];
            }
        }
        s
    };
    let hensel = |v: &[i128; 4]| -> bool {
        let qv = eval(v);
        let mut e = u32::MAX;
        for i in 0..4 {
            let gi: i128 = 2 * (0..4).map(|j| g[i][j] * v[j]).sum::<i128>();
            if let Some(k) = exact_val(gi, p) {
                e = e.min(k);
            }
        }
        match exact_val(qv, p) {
            None => true,
            Some(vq) => e != u32::MAX && vq > 2 * e,
        }
    };
    let mut budget = node_budget;
    // Level-1 nodes for every pivot.
    let mut level: Vec<[i128; 4]> = Vec::new();
    for pivot in 0..4 {
        let free: Vec<usize> = (0..4).filter(|&i| i > pivot).collect();
        let count = (p as usize).pow(free.len() as u32);
        for idx in 0..count {
            let mut v = [0i128; 4];
            v[pivot] = 1;
            let mut r = idx;
            for &f in &free {
                v[f] = (r % p as usize) as i128;
                r /= p as usize;
            }
            level.push(v);
        }
    }
    let mut pk = p;
    for k in 1..=k_max {
        let zeros: Vec<[i128; 4]> = level.into_iter().filter(|v| eval(v).rem_euclid(pk) == 0).collect();
        if zeros.is_empty() {
            return Some(false);
        }
        if zeros.iter().any(hensel) {
            return Some(true);
        }
        if k == k_max {
            break;
        }
        let mut next = Vec::new();
        for v in &zeros {
            let pivot = (0..4).find(|&i| v[i] == 1 && (0..i).all(|j| v[j] % p == 0)).unwrap_or(0);
            let free: Vec<usize> = (0..4).filter(|&i| i != pivot).collect();
            let count = (p as usize).pow(3);
            if budget < count {
                return None;
            }
            budget -= count;
            for idx in 0..count {
                let mut w = *v;
                let mut r = idx;
                for &f in &free {
                    w[f] += (r % p as usize) as i128 * pk;
                    r /= p as usize;
                }
                next.push(w);
            }
        }
        level = next;
        pk *= p;
    }
    None
}

pub fn isotropy_report(q: &QuadForm4, ctx: &PrimeContext) -> Result<IsotropyReport> {
    Ok(IsotropyReport { hasse: hasse_isotropic(q, ctx)?, search: search_isotropic(q, 4, 4_000_000) })
}

/// Hasse-invariant verdict, cross-checked against the lifting search.
pub fn is_isotropic(q: &QuadForm4, ctx: &PrimeContext) -> Result<bool> {
    let r = isotropy_report(q, ctx)?;
    match r.search {
        Some(s) if s != r.hasse => Err(Error::IsotropyMismatch { hasse: r.hasse, search: s }),
        _ => Ok(r.hasse),
    }
}

/// `true` iff `Q2(v) = c * Q1(M v)`, compared as Gram matrices.
pub fn verify_equivalence(q1: &QuadForm4, q2: &QuadForm4, m: &Mat4, c: &ResidueElement) -> Result<bool> {
    if !det(m).is_unit() {
        return Err(Error::SingularChangeOfBasis);
    }
    let n = q1.precision().min(q2.precision()).min(m[0][0].precision()).min(c.precision());
    let t = q1.transformed(m).scaled(c);
    Ok((0..4).all(|i| (0..4).all(|j| t.gram[i][j].reduce(n) == q2.gram[i][j].reduce(n))))
}

/// A witnessed reduction `source(v) = c * target(M v)` of a type III form.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub source_shape: FormShapeId,
    pub source: QuadForm4,
    pub target_shape: FormShapeId,
    pub target: QuadForm4,
    pub m: Mat4,
    pub c: ResidueElement,
}

impl Reduction {
    pub fn verify(&self) -> Result<bool> {
        verify_equivalence(&self.target, &self.source, &self.m, &self.c)
    }
}

pub fn type_iii_reduction(
    br: BrClass,
    a: SquareClass,
    d: SquareClass,
    ctx: &PrimeContext,
    n: u32,
) -> Result<Reduction> {
    let p = ctx.p();
    let source_shape = FormShapeId::TypeIII { br, a, d };
    let source = canonical_form(source_shape, ctx, n)?;
    let (av, dv) = (a_value(a, ctx), ctx.class_rep(d));
    let ints = |m: [[i128; 4]; 4]| mat_from_ints(&m, p, n);
    match br {
        BrClass::One => {
            // 2(zt - Dxy) = 1/2 ((z+t)^2 - (z-t)^2 - D(x+y)^2 + D(x-y)^2)
            let target_shape = FormShapeId::TypeI { d, r: SquareClass::One };
            let target = canonical_form(target_shape, ctx, n)?;
            let m = ints([[0, 0, 1, 1], [0, 0, 1, -1], [1, 1, 0, 0], [1, -1, 0, 0]]);
            let c = ResidueElement::new(2, p, n).inverse()?;
            Ok(Reduction { source_shape, source, target_shape, target, m, c })
        }
        BrClass::SqrtA => {
            // t^2 + A z^2 - D y^2 - A D x^2 is x^2 - r y^2 - D z^2 + r D t^2 with r = -A.
            let r = -av;
            let r_class = crate::localfield::square_class(&ctx.elem(r, n), ctx)?;
            let target_shape = FormShapeId::TypeI { d, r: r_class };
            let target = QuadForm4::diagonal([1, -r, -dv, r * dv], p, n, target_shape.name());
            let m = ints([[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]);
            Ok(Reduction { source_shape, source, target_shape, target, m, c: ctx.elem(1, n) })
        }
        BrClass::DPlusI => {
            // X^2 - w Y^2 - D (Z^2 - w T^2), w = d^2 + 1, X = t + d z, Y = z, Z = y + d x, T = x.
            let dd = ctx.d().ok_or(Error::MinusOneIsSquare(p))? as i128;
            let w = dd * dd + 1;
            let target_shape = FormShapeId::TypeI { d, r: SquareClass::U };
            let target = QuadForm4::diagonal([1, -w, -dv, w * dv], p, n, target_shape.name());
            let m = ints([[0, 0, dd, 1], [0, 0, 1, 0], [dd, 1, 0, 0], [1, 0, 0, 0]]);
            Ok(Reduction { source_shape, source, target_shape, target, m, c: ctx.elem(1, n) })
        }
    }
}
