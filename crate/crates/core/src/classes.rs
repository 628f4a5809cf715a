//! Representatives of the theta-conjugacy classes of types I to IV, their
//! quadratic forms `v -> v^T g J v`, norm-map images and Jacobian factors.

use crate::error::{Error, Result};
use crate::localfield::{
    hilbert_from_parts, legendre_int, square_class, CharDescriptor, PrimeContext, ResidueElement,
    SquareClass,
};
use crate::quadforms::{a_value, ad_rep, det, mat_from_ints, mat_mul, Mat4, QuadForm4};
use crate::scalar::ExactScalar;
use crate::series::QPowerValue;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassKind {
    I,
    II,
    III,
    IV,
    #[serde(rename = "IV-ramified-appendix")]
    Appendix,
}

impl ClassKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ClassKind::I => "I",
            ClassKind::II => "II",
            ClassKind::III => "III",
            ClassKind::IV => "IV",
            ClassKind::Appendix => "IV-ramified-appendix",
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Twist representative: a square class of `F`, or one of the two
/// `E_3`-elements used for type III.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Twist {
    Class(SquareClass),
    SqrtA,
    DPlusI,
}

impl Twist {
    pub fn tag(&self) -> &'static str {
        match self {
            Twist::Class(c) => c.tag(),
            Twist::SqrtA => "sqrtA",
            Twist::DPlusI => "d+i",
        }
    }
}

impl FromStr for Twist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrtA" | "sqrt(A)" => Ok(Twist::SqrtA),
            "d+i" => Ok(Twist::DPlusI),
            other => Ok(Twist::Class(other.parse()?)),
        }
    }
}

impl fmt::Display for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Twist representatives of `F^x / N E_1^x` for `E_1 = F(sqrt D)`.
pub fn norm_twists(d: SquareClass) -> [SquareClass; 2] {
    if d.is_ramified() {
        [SquareClass::One, SquareClass::U]
    } else {
        [SquareClass::One, SquareClass::Pi]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaClass {
    pub kind: ClassKind,
    pub p: u64,
    /// Class of `D` (types I, II, III and the appendix case).
    pub d: Option<SquareClass>,
    /// Class of `A` (types II, III, IV and the appendix case).
    pub a_class: Option<SquareClass>,
    pub a: [i128; 2],
    pub b: [i128; 2],
    pub r: Twist,
    /// Second twist of types II and the appendix case.
    pub s: Option<SquareClass>,
    pub y: CharDescriptor,
    /// Type IV: `D = d1 + d2 sqrt(A)`.
    pub d_e3: Option<[i128; 2]>,
}

#[derive(Serialize, Deserialize)]
struct TwistJson {
    r: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ClassJson {
    kind: ClassKind,
    p: u64,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d_class: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a_class: Option<String>,
    a: [i64; 2],
    b: [i64; 2],
    twist: TwistJson,
    #[serde(rename = "Y")]
    y: String,
    #[serde(rename = "d", default, skip_serializing_if = "Option::is_none")]
    d_elem: Option<[i64; 2]>,
}

fn parse_y(s: &str) -> Result<CharDescriptor> {
    CharDescriptor::new(s.parse()?)
}

impl ThetaClass {
    pub fn ctx(&self) -> Result<PrimeContext> {
        PrimeContext::new(self.p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ClassJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let opt = |x: &Option<String>| -> Result<Option<SquareClass>> { x.as_deref().map(str::parse).transpose() };
        let cls = ThetaClass {
            kind: j.kind,
            p: j.p,
            d: opt(&j.d_class)?,
            a_class: opt(&j.a_class)?,
            a: [j.a[0] as i128, j.a[1] as i128],
            b: [j.b[0] as i128, j.b[1] as i128],
            r: j.twist.r.parse()?,
            s: opt(&j.twist.s)?,
            y: parse_y(&j.y)?,
            d_e3: j.d_elem.map(|d| [d[0] as i128, d[1] as i128]),
        };
        cls.validate()?;
        Ok(cls)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = ClassJson {
            kind: self.kind,
            p: self.p,
            d_class: self.d.map(|c| c.tag().to_string()),
            a_class: self.a_class.map(|c| c.tag().to_string()),
            a: [self.a[0] as i64, self.a[1] as i64],
            b: [self.b[0] as i64, self.b[1] as i64],
            twist: TwistJson { r: self.r.tag().to_string(), s: self.s.map(|c| c.tag().to_string()) },
            y: self.y.tag().to_string(),
            d_elem: self.d_e3.map(|d| [d[0] as i64, d[1] as i64]),
        };
        serde_json::to_value(j).expect("class serializes")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    fn need<T: Copy>(&self, x: Option<T>, what: &str) -> Result<T> {
        x.ok_or_else(|| Error::Parse(format!("class of kind {} needs {what}", self.kind)))
    }

    pub fn d_class(&self) -> Result<SquareClass> {
        self.need(self.d, "D")
    }

    pub fn a_class(&self) -> Result<SquareClass> {
        self.need(self.a_class, "A")
    }

    /// Class of `A`, the square class generating `E_3` (`None` for type I).
    pub fn e3_class(&self) -> Option<SquareClass> {
        self.a_class
    }

    /// Structural checks independent of precision.
    pub fn validate(&self) -> Result<()> {
        let ctx = self.ctx()?;
        let bad = |m: &str| Err(Error::Unsupported(m.to_string()));
        if self.y.ramified() && self.kind != ClassKind::Appendix {
            return bad("ramified Y is implemented only for the appendix configuration");
        }
        match self.kind {
            ClassKind::I => {
                let d = self.d_class()?;
                if d == SquareClass::One {
                    return bad("D must be a non-square");
                }
                let s = self.need(self.s, "twist s")?;
                let Twist::Class(r) = self.r else { return bad("type I twists are square classes") };
                let set = norm_twists(d);
                if !set.contains(&r) || !set.contains(&s) {
                    return bad("type I twist outside the representative set");
                }
            }
            ClassKind::II | ClassKind::Appendix => {
                let (d, a) = (self.d_class()?, self.a_class()?);
                if d == SquareClass::One || a == SquareClass::One || d == a {
                    return bad("A and D must be distinct non-squares");
                }
                let s = self.need(self.s, "twist s")?;
                let Twist::Class(r) = self.r else { return bad("type II twists are square classes") };
                if !norm_twists(d).contains(&r) || !norm_twists(a * d).contains(&s) {
                    return bad("type II twist outside the representative set");
                }
                if self.kind == ClassKind::Appendix {
                    if d != SquareClass::U || a != SquareClass::Pi || r != SquareClass::One {
                        return bad("the appendix case has D = u, A = pi, r = 1");
                    }
                    if !self.y.ramified() {
                        return bad("the appendix case needs ramified Y");
                    }
                    if self.r_prime_class()? != SquareClass::One {
                        return bad("the appendix case needs r' = -a2 r / (b2 s) in the square class 1");
                    }
                }
            }
            ClassKind::III => {
                let (d, a) = (self.d_class()?, self.a_class()?);
                let ok = matches!(
                    (a, d),
                    (SquareClass::Pi, SquareClass::U)
                        | (SquareClass::UPi, SquareClass::U)
                        | (SquareClass::U, SquareClass::Pi)
                        | (SquareClass::U, SquareClass::UPi)
                );
                if !ok {
                    return bad("type III needs {A, D} with exactly one of them ramified");
                }
                let minus_one_nonsquare = !ctx.minus_one_is_square();
                match self.r {
                    Twist::Class(SquareClass::One) => {}
                    Twist::SqrtA if a.is_ramified() || !minus_one_nonsquare => {}
                    Twist::DPlusI if a == SquareClass::U && minus_one_nonsquare => {}
                    _ => return bad("type III twist outside the representative set"),
                }
            }
            ClassKind::IV => {
                let a = self.a_class()?;
                if a == SquareClass::One {
                    return bad("A must be a non-square");
                }
                let Twist::Class(r) = self.r else { return bad("type IV twists lie in F") };
                if !norm_twists(if a.is_ramified() { SquareClass::Pi } else { SquareClass::U }).contains(&r) {
                    return bad("type IV twist outside the representative set");
                }
                if self.b[1] != 0 {
                    return bad("type IV needs b in F so that br is fixed by sigma");
                }
            }
        }
        Ok(())
    }

    pub fn d_value(&self, ctx: &PrimeContext) -> Result<i128> {
        Ok(ctx.class_rep(self.d_class()?))
    }

    /// `A` as an integer: the class representative for types II and the
    /// appendix case, `a_value` for types III and IV.
    pub fn a_value(&self, ctx: &PrimeContext) -> Result<i128> {
        let a = self.a_class()?;
        Ok(match self.kind {
            ClassKind::III | ClassKind::IV => a_value(a, ctx),
            _ => ctx.class_rep(a),
        })
    }

    /// `D = d1 + d2 sqrt(A)` for type IV.
    pub fn d_tower(&self, ctx: &PrimeContext) -> Result<[i128; 2]> {
        if let Some(d) = self.d_e3 {
            return Ok(d);
        }
        if self.a_value(ctx)? == -1 {
            Ok([ctx.d().ok_or(Error::MinusOneIsSquare(ctx.p()))? as i128, 1])
        } else {
            Ok([0, 1])
        }
    }

    /// `r` as an element `r1 + r2 sqrt(A)` of `E_3` (types III, IV), or of `F`.
    pub fn r_value(&self, ctx: &PrimeContext) -> Result<[i128; 2]> {
        Ok(match self.r {
            Twist::Class(c) => [ctx.class_rep(c), 0],
            Twist::SqrtA => [0, 1],
            Twist::DPlusI => [ctx.d().ok_or(Error::MinusOneIsSquare(ctx.p()))? as i128, 1],
        })
    }

    fn twist_values(&self, ctx: &PrimeContext) -> Result<(i128, i128)> {
        let Twist::Class(r) = self.r else { return Err(Error::WrongKind(self.kind.to_string())) };
        Ok((ctx.class_rep(r), ctx.class_rep(self.need(self.s, "twist s")?)))
    }

    /// `AD` class representative (types II and the appendix case).
    pub fn ad_value(&self, ctx: &PrimeContext) -> Result<i128> {
        Ok(ad_rep(self.a_class()?, self.d_class()?, ctx))
    }

    /// Square class of `r' = -a2 r / (b2 s)` (types I, II, appendix).
    pub fn r_prime_class(&self) -> Result<SquareClass> {
        let ctx = self.ctx()?;
        let n = 8;
        let (r, s) = self.twist_values(&ctx)?;
        let mut c = square_class(&ctx.elem(-1, n), &ctx)?;
        for x in [self.a[1], r, self.b[1], s] {
            c = c * square_class(&ctx.elem(x, n), &ctx)?;
        }
        Ok(c)
    }

    /// Sign `kappa` of the twist.
    pub fn kappa(&self) -> Result<i8> {
        let ctx = self.ctx()?;
        match self.kind {
            ClassKind::II | ClassKind::Appendix | ClassKind::I => {
                let rp = self.r_prime_class()?;
                let d = self.d_class()?;
                let leg = |c: SquareClass| if c.unit_is_square() { 1 } else { -1 };
                Ok(hilbert_from_parts(rp.odd_valuation() as i64, leg(rp), d.odd_valuation() as i64, leg(d), ctx.p()))
            }
            ClassKind::IV => {
                let br = ctx.elem(self.b[0] * self.r_value(&ctx)?[0], 8);
                if self.a_class()?.is_ramified() {
                    legendre_int(br.unit_part()?.value() as i128, ctx.p())
                } else {
                    Ok(if br.valuation()? % 2 == 0 { 1 } else { -1 })
                }
            }
            ClassKind::III => Ok(1),
        }
    }

    /// Theta-regularity certified at precision `n` with one digit of margin.
    pub fn check_regular(&self, n: u32) -> Result<()> {
        let ctx = self.ctx()?;
        let m = n.saturating_sub(1).max(1);
        let nz = |x: i128| !ResidueElement::new(x, self.p, m).is_zero();
        let fail = |what: &str| Err(Error::NotThetaRegular(what.to_string()));
        let [a1, a2] = self.a;
        let [b1, b2] = self.b;
        match self.kind {
            ClassKind::I => {
                if !(nz(a1) && nz(a2) && nz(b1) && nz(b2)) {
                    return fail("a/sigma(a) or b/sigma(b) equals +-1");
                }
                if !nz(a2 * b1 - a1 * b2) {
                    return fail("a/sigma(a) = b/sigma(b)");
                }
            }
            ClassKind::II | ClassKind::Appendix => {
                if !(nz(a1) && nz(a2) && nz(b1) && nz(b2)) {
                    return fail("a/sigma(a) or b/tau(b) equals +-1");
                }
            }
            ClassKind::III => {
                if !(nz(a1) || nz(a2)) || !(nz(b1) || nz(b2)) || !nz(a2 * b1 - a1 * b2) {
                    return fail("alpha/sigma(alpha) degenerate");
                }
                let e3 = E3::new(self.a_value(&ctx)?, self.p, n);
                let dd = e3.elem([self.d_value(&ctx)?, 0]);
                let (a, b) = (e3.elem(self.a), e3.elem(self.b));
                if e3.norm(&e3.sub(&e3.mul(&a, &a), &e3.mul(&e3.mul(&b, &b), &dd))).is_zero() {
                    return fail("alpha has zero norm");
                }
            }
            ClassKind::IV => {
                if !(nz(b1) || nz(b2)) {
                    return fail("alpha = sigma^2(alpha)");
                }
            }
        }
        Ok(())
    }

    pub fn validated(self, n: u32) -> Result<Self> {
        self.validate()?;
        self.check_regular(n)?;
        Ok(self)
    }

    /// The same class with another twist `r`.
    pub fn with_r(&self, r: Twist) -> Self {
        ThetaClass { r, ..self.clone() }
    }

    /// The two representatives `r` of the stable class.
    pub fn r_twists(&self) -> Result<[Twist; 2]> {
        let ctx = self.ctx()?;
        Ok(match self.kind {
            ClassKind::I | ClassKind::II | ClassKind::Appendix => {
                let t = norm_twists(self.d_class()?);
                [Twist::Class(t[0]), Twist::Class(t[1])]
            }
            ClassKind::III => {
                let a = self.a_class()?;
                if a == SquareClass::U && !ctx.minus_one_is_square() {
                    [Twist::Class(SquareClass::One), Twist::DPlusI]
                } else {
                    [Twist::Class(SquareClass::One), Twist::SqrtA]
                }
            }
            ClassKind::IV => {
                let t = norm_twists(if self.a_class()?.is_ramified() { SquareClass::Pi } else { SquareClass::U });
                [Twist::Class(t[0]), Twist::Class(t[1])]
            }
        })
    }
}

/// Arithmetic in `E_3 = F(sqrt A)` on pairs `x1 + x2 sqrt(A)`.
#[derive(Clone, Copy, Debug)]
pub struct E3 {
    a: ResidueElement,
    p: u64,
    n: u32,
}

pub type E3Elem = [ResidueElement; 2];

impl E3 {
    pub fn new(a: i128, p: u64, n: u32) -> Self {
        E3 { a: ResidueElement::new(a, p, n), p, n }
    }

    pub fn elem(&self, x: [i128; 2]) -> E3Elem {
        [ResidueElement::new(x[0], self.p, self.n), ResidueElement::new(x[1], self.p, self.n)]
    }

    pub fn zero(&self) -> E3Elem {
        self.elem([0, 0])
    }

    pub fn add(&self, x: &E3Elem, y: &E3Elem) -> E3Elem {
        [x[0] + y[0], x[1] + y[1]]
    }

    pub fn sub(&self, x: &E3Elem, y: &E3Elem) -> E3Elem {
        [x[0] - y[0], x[1] - y[1]]
    }

    pub fn mul(&self, x: &E3Elem, y: &E3Elem) -> E3Elem {
        [x[0] * y[0] + self.a * x[1] * y[1], x[0] * y[1] + x[1] * y[0]]
    }

    pub fn conj(&self, x: &E3Elem) -> E3Elem {
        [x[0], -x[1]]
    }

    pub fn norm(&self, x: &E3Elem) -> ResidueElement {
        x[0] * x[0] - self.a * x[1] * x[1]
    }

    /// 2x2 matrix of multiplication by `x` on the basis `{1, sqrt A}`.
    pub fn mult_matrix(&self, x: &E3Elem) -> [[ResidueElement; 2]; 2] {
        [[x[0], x[1] * self.a], [x[1], x[0]]]
    }
}

fn block_matrix(blocks: [[[[ResidueElement; 2]; 2]; 2]; 2]) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| blocks[i / 2][j / 2][i % 2][j % 2]))
}

fn scale2(m: [[ResidueElement; 2]; 2], c: ResidueElement) -> [[ResidueElement; 2]; 2] {
    [[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]]
}

/// The matrix `g` of the class at precision `n`.
pub fn representative(cls: &ThetaClass, n: u32) -> Result<Mat4> {
    cls.validate()?;
    cls.check_regular(n)?;
    let ctx = cls.ctx()?;
    let p = cls.p;
    let [a1, a2] = cls.a;
    let [b1, b2] = cls.b;
    match cls.kind {
        ClassKind::I | ClassKind::II | ClassKind::Appendix => {
            let (r, s) = cls.twist_values(&ctx)?;
            let d = cls.d_value(&ctx)?;
            let bd = if cls.kind == ClassKind::I { d } else { cls.ad_value(&ctx)? };
            let g = [
                [a1 * r, 0, 0, a2 * d * r],
                [0, b1 * s, b2 * bd * s, 0],
                [0, b2 * s, b1 * s, 0],
                [a2 * r, 0, 0, a1 * r],
            ];
            Ok(mat_from_ints(&g, p, n))
        }
        ClassKind::III | ClassKind::IV => {
            let e3 = E3::new(cls.a_value(&ctx)?, p, n);
            let r = e3.elem(cls.r_value(&ctx)?);
            let ar = e3.mul(&e3.elem(cls.a), &r);
            let br = e3.mul(&e3.elem(cls.b), &r);
            let top_right = if cls.kind == ClassKind::III {
                scale2(e3.mult_matrix(&br), ctx.elem(cls.d_value(&ctx)?, n))
            } else {
                let d = e3.elem(cls.d_tower(&ctx)?);
                e3.mult_matrix(&e3.mul(&br, &d))
            };
            let ma = e3.mult_matrix(&ar);
            Ok(block_matrix([[ma, top_right], [e3.mult_matrix(&br), ma]]))
        }
    }
}

/// `J = [[0, w], [-w, 0]]` with `w = [[0, 1], [1, 0]]`.
pub fn j_matrix(p: u64, n: u32) -> Mat4 {
    mat_from_ints(&[[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]], p, n)
}

/// The form `v -> v^T g J v` in the coordinates of `v`.
pub fn raw_form(g: &Mat4, label: &str) -> QuadForm4 {
    let (p, n) = (g[0][0].p(), g[0][0].precision());
    let gj = mat_mul(g, &j_matrix(p, n));
    let half = ResidueElement::new(2, p, n).inverse().expect("p is odd");
    let sym = std::array::from_fn(|i| std::array::from_fn(|j| (gj[i][j] + gj[j][i]) * half));
    QuadForm4::from_gram(sym, label).expect("symmetrized")
}

/// Position of each of `x, y, z, t` in the vector used by types I and II.
const TYPE_I_LAYOUT: [usize; 4] = [2, 3, 1, 0];

/// The class's quadratic form in the variables `(x, y, z, t)`.
pub fn q_form_of(cls: &ThetaClass, n: u32) -> Result<QuadForm4> {
    let g = representative(cls, n)?;
    let label = format!("{}:{}", cls.kind, cls.to_json());
    let raw = raw_form(&g, &label);
    Ok(match cls.kind {
        ClassKind::III | ClassKind::IV => raw,
        _ => {
            let l = TYPE_I_LAYOUT;
            let gram = std::array::from_fn(|i| std::array::from_fn(|j| raw.gram[l[i]][l[j]]));
            QuadForm4 { gram, ..raw }
        }
    })
}

/// Elements of the biquadratic algebra on `{1, sqrt D, sqrt A, sqrt(AD)}`.
#[derive(Clone, Copy, Debug)]
pub struct Biquad {
    d: i128,
    a: i128,
    ad: i128,
    lambda: i128,
    p: u64,
    n: u32,
}

pub type BiquadElem = [ResidueElement; 4];

impl Biquad {
    /// `A D = lambda^2 * ad` with `ad` the class representative.
    pub fn new(d: i128, a: i128, ad: i128, p: u64, n: u32) -> Self {
        let ratio = (a * d) / ad;
        let lambda = (1..=ratio.abs()).find(|l| l * l == ratio.abs()).expect("AD / rep is a square");
        Biquad { d, a, ad, lambda, p, n }
    }

    fn c(&self, x: i128) -> ResidueElement {
        ResidueElement::new(x, self.p, self.n)
    }

    pub fn elem(&self, x: [i128; 4]) -> BiquadElem {
        x.map(|v| self.c(v))
    }

    pub fn mul(&self, x: &BiquadElem, y: &BiquadElem) -> BiquadElem {
        // e1 e2 = lambda e3, e1 e3 = (D / lambda) e2, e2 e3 = (A / lambda) e1; the
        // unit square class of AD / lambda^2 is that of the representative.
        let unit_ad = (self.a * self.d) / (self.lambda * self.lambda);
        let sq = [1, self.d, self.a, unit_ad];
        let table = |i: usize, j: usize| -> (i128, usize) {
            match (i.min(j), i.max(j)) {
                (0, k) => (1, k),
                (1, 1) | (2, 2) | (3, 3) => (sq[i], 0),
                (1, 2) => (self.lambda, 3),
                (1, 3) => (self.d / self.lambda, 2),
                (2, 3) => (self.a / self.lambda, 1),
                _ => unreachable!(),
            }
        };
        let mut out = self.elem([0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                let (coef, k) = table(i, j);
                out[k] = out[k] + x[i] * y[j] * self.c(coef);
            }
        }
        out
    }

    pub fn add(&self, x: &BiquadElem, y: &BiquadElem) -> BiquadElem {
        std::array::from_fn(|i| x[i] + y[i])
    }

    /// Fixes `sqrt A`.
    pub fn sigma(&self, x: &BiquadElem) -> BiquadElem {
        [x[0], -x[1], x[2], -x[3]]
    }

    /// Fixes `sqrt D`.
    pub fn tau(&self, x: &BiquadElem) -> BiquadElem {
        [x[0], x[1], -x[2], -x[3]]
    }

    pub fn ad(&self) -> i128 {
        self.ad
    }
}

/// Elements of `E = E_3(sqrt D)` inside `E_3[sqrt D, sqrt(sigma D)]`, as
/// `E_3`-coefficients of `1, sqrt D, sqrt(sigma D), sqrt D sqrt(sigma D)`.
#[derive(Clone, Copy, Debug)]
pub struct Tower {
    e3: E3,
    d: E3Elem,
}

pub type TowerElem = [E3Elem; 4];

impl Tower {
    pub fn new(e3: E3, d: E3Elem) -> Self {
        Tower { e3, d }
    }

    fn idx(j: usize, k: usize) -> usize {
        j + 2 * k
    }

    pub fn mul(&self, x: &TowerElem, y: &TowerElem) -> TowerElem {
        let e = &self.e3;
        let sd = e.conj(&self.d);
        let mut out = [e.zero(); 4];
        for (i1, xi) in x.iter().enumerate() {
            for (i2, yi) in y.iter().enumerate() {
                let (j1, k1, j2, k2) = (i1 % 2, i1 / 2, i2 % 2, i2 / 2);
                let mut c = e.mul(xi, yi);
                if j1 == 1 && j2 == 1 {
                    c = e.mul(&c, &self.d);
                }
                if k1 == 1 && k2 == 1 {
                    c = e.mul(&c, &sd);
                }
                let t = Tower::idx((j1 + j2) % 2, (k1 + k2) % 2);
                out[t] = e.add(&out[t], &c);
            }
        }
        out
    }

    pub fn add(&self, x: &TowerElem, y: &TowerElem) -> TowerElem {
        std::array::from_fn(|i| self.e3.add(&x[i], &y[i]))
    }

    /// `sqrt D -> sqrt(sigma D) -> -sqrt D`, conjugation on `E_3`.
    pub fn sigma(&self, x: &TowerElem) -> TowerElem {
        let mut out = [self.e3.zero(); 4];
        for (i, xi) in x.iter().enumerate() {
            let (j, k) = (i % 2, i / 2);
            let mut c = self.e3.conj(xi);
            if k == 1 {
                c = [-c[0], -c[1]];
            }
            out[Tower::idx(k, j)] = c;
        }
        out
    }

    pub fn from_pair(&self, a: &E3Elem, b: &E3Elem) -> TowerElem {
        [*a, *b, self.e3.zero(), self.e3.zero()]
    }
}

/// One `2x2` component of a norm-map image: eigenvalues, trace and
/// determinant, in coordinates of the ambient algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CYComponent {
    pub eigenvalues: [Vec<ResidueElement>; 2],
    pub trace: Vec<ResidueElement>,
    pub det: Vec<ResidueElement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CYClass {
    pub kind: ClassKind,
    /// Names of the ambient coordinates.
    pub basis: Vec<&'static str>,
    pub components: [CYComponent; 2],
    /// Coordinates allowed to be nonzero in a trace.
    pub trace_support: Vec<usize>,
    /// Coordinates allowed to be nonzero in a determinant (the copy of `F`).
    pub det_support: Vec<usize>,
}

impl CYClass {
    pub fn dets_agree(&self) -> bool {
        self.components[0].det == self.components[1].det
    }

    fn supported(v: &[ResidueElement], support: &[usize]) -> bool {
        v.iter().enumerate().all(|(i, x)| support.contains(&i) || x.is_zero())
    }

    pub fn det_in_f(&self) -> bool {
        self.components.iter().all(|c| Self::supported(&c.det, &self.det_support))
    }

    pub fn traces_in_subfield(&self) -> bool {
        self.components.iter().all(|c| Self::supported(&c.trace, &self.trace_support))
    }

    pub fn is_consistent(&self) -> bool {
        self.dets_agree() && self.det_in_f() && self.traces_in_subfield()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let v = |xs: &[ResidueElement]| xs.iter().map(|x| x.signed_value().to_string()).collect::<Vec<_>>();
        let comps: Vec<_> = self
            .components
            .iter()
            .map(|c| {
                serde_json::json!({
                    "eigenvalues": [v(&c.eigenvalues[0]), v(&c.eigenvalues[1])],
                    "trace": v(&c.trace),
                    "det": v(&c.det),
                })
            })
            .collect();
        serde_json::json!({
            "kind": self.kind.tag(),
            "basis": self.basis,
            "components": comps,
            "dets_agree": self.dets_agree(),
            "det_in_F": self.det_in_f(),
            "traces_in_subfield": self.traces_in_subfield(),
        })
    }
}

fn component<T: Clone>(
    e1: T,
    e2: T,
    add: impl Fn(&T, &T) -> T,
    mul: impl Fn(&T, &T) -> T,
    flat: impl Fn(&T) -> Vec<ResidueElement>,
) -> CYComponent {
    CYComponent {
        eigenvalues: [flat(&e1), flat(&e2)],
        trace: flat(&add(&e1, &e2)),
        det: flat(&mul(&e1, &e2)),
    }
}

pub fn norm_map(cls: &ThetaClass, n: u32) -> Result<CYClass> {
    cls.validate()?;
    cls.check_regular(n)?;
    let ctx = cls.ctx()?;
    let p = cls.p;
    match cls.kind {
        ClassKind::I | ClassKind::III => Err(Error::WrongKind(cls.kind.to_string())),
        ClassKind::II | ClassKind::Appendix => {
            let bq = Biquad::new(cls.d_value(&ctx)?, cls.a_value(&ctx)?, cls.ad_value(&ctx)?, p, n);
            let a = bq.elem([cls.a[0], cls.a[1], 0, 0]);
            let b = bq.elem([cls.b[0], 0, 0, cls.b[1]]);
            let add = |x: &BiquadElem, y: &BiquadElem| bq.add(x, y);
            let mul = |x: &BiquadElem, y: &BiquadElem| bq.mul(x, y);
            let flat = |x: &BiquadElem| x.to_vec();
            let c1 = component(bq.mul(&a, &b), bq.mul(&bq.tau(&b), &bq.sigma(&a)), add, mul, flat);
            let c2 = component(bq.mul(&a, &bq.tau(&b)), bq.mul(&b, &bq.sigma(&a)), add, mul, flat);
            Ok(CYClass {
                kind: cls.kind,
                basis: vec!["1", "sqrtD", "sqrtA", "sqrtAD"],
                components: [c1, c2],
                trace_support: vec![0, 2],
                det_support: vec![0],
            })
        }
        ClassKind::IV => {
            let e3 = E3::new(cls.a_value(&ctx)?, p, n);
            let tw = Tower::new(e3, e3.elem(cls.d_tower(&ctx)?));
            let alpha = tw.from_pair(&e3.elem(cls.a), &e3.elem(cls.b));
            let s1 = tw.sigma(&alpha);
            let s2 = tw.sigma(&s1);
            let s3 = tw.sigma(&s2);
            let add = |x: &TowerElem, y: &TowerElem| tw.add(x, y);
            let mul = |x: &TowerElem, y: &TowerElem| tw.mul(x, y);
            let flat = |x: &TowerElem| x.iter().flat_map(|c| c.iter().copied()).collect::<Vec<_>>();
            let c1 = component(tw.mul(&alpha, &s1), tw.mul(&s2, &s3), add, mul, flat);
            let c2 = component(tw.mul(&alpha, &s3), tw.mul(&s1, &s2), add, mul, flat);
            Ok(CYClass {
                kind: cls.kind,
                basis: vec![
                    "1", "sqrtA", "sqrtD", "sqrtA*sqrtD", "sqrtsD", "sqrtA*sqrtsD", "sqrtD*sqrtsD", "sqrtA*sqrtD*sqrtsD",
                ],
                components: [c1, c2],
                trace_support: vec![0, 1, 6, 7],
                det_support: vec![0],
            })
        }
    }
}

fn val_of(x: ResidueElement) -> Result<i64> {
    x.valuation().map(|v| v as i64).map_err(|_| Error::NotThetaRegular("a Jacobian norm vanishes at working precision".into()))
}

/// Valuation of the Jacobian ratio whose square root is the factor at `s = 0`.
pub fn jacobian_valuation(cls: &ThetaClass, n: u32) -> Result<i64> {
    cls.validate()?;
    cls.check_regular(n)?;
    let ctx = cls.ctx()?;
    let c = |x: i128| ctx.elem(x, n);
    let [a1, a2] = cls.a;
    let [b1, b2] = cls.b;
    match cls.kind {
        ClassKind::I | ClassKind::II | ClassKind::Appendix => {
            let d = cls.d_value(&ctx)?;
            let bd = if cls.kind == ClassKind::I { d } else { cls.ad_value(&ctx)? };
            let na = c(a1 * a1 - a2 * a2 * d);
            let nb = c(b1 * b1 - b2 * b2 * bd);
            Ok(2 * val_of(c(a2))? + val_of(c(d))? + 2 * val_of(c(b2))? + val_of(c(bd))? - val_of(na)? - val_of(nb)?)
        }
        ClassKind::III | ClassKind::IV => {
            let e3 = E3::new(cls.a_value(&ctx)?, cls.p, n);
            let (a, b) = (e3.elem(cls.a), e3.elem(cls.b));
            let d = if cls.kind == ClassKind::III {
                e3.elem([cls.d_value(&ctx)?, 0])
            } else {
                e3.elem(cls.d_tower(&ctx)?)
            };
            let nrm = e3.norm(&e3.sub(&e3.mul(&a, &a), &e3.mul(&e3.mul(&b, &b), &d)));
            Ok(2 * val_of(e3.norm(&b))? + val_of(e3.norm(&d))? - val_of(nrm)?)
        }
    }
}

/// `|Jacobian ratio|^(1/2)` at `s = 0`.
pub fn jacobian_factor<S: ExactScalar>(cls: &ThetaClass, n: u32) -> Result<QPowerValue<S>> {
    Ok(QPowerValue::abs_of_half_valuation(cls.p, jacobian_valuation(cls, n)?))
}

pub fn det_valuation(cls: &ThetaClass, n: u32) -> Result<i64> {
    let g = representative(cls, n)?;
    val_of(det(&g))
}

/// Largest precision with `p^N < 2^62`, at most 16.
pub fn working_precision(p: u64) -> u32 {
    let mut n = 1;
    while n < 16 && (p as u128).pow(n + 1) < (1u128 << 62) {
        n += 1;
    }
    n
}
