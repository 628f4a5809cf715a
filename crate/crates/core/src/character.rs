//! Class to twisted character value:
//!
//! `value = |det g|^(1/2) * Jac * chi_Y(c) |c|^(-2) * I_{Q/c}(s = 0) / T^Y phi_0`
//!
//! where `c` is the content of the form `Q` of the class and `I` is the
//! continued shell series of the primitive form `Q / c`.

use crate::classes::{det_valuation, jacobian_valuation, q_form_of, working_precision, ClassKind, ThetaClass, Twist};
use crate::error::{Error, Result};
use crate::localfield::{legendre_int, CharDescriptor, PrimeContext, SquareClass};
use crate::quadforms::{FormShapeId, QuadForm4};
use crate::scalar::ExactScalar;
use crate::series::{continue_to, normalization_constant, QPowerValue, SPoint, TailModel};
use crate::volumes::{char_profile, closed_form_table, vol_profile, EnumOptions, LemmaId, Profile};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Oracle,
    ClosedForm,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "closed-form" | "closed_form" => Ok(Mode::ClosedForm),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub mode: Mode,
    pub enumeration: EnumOptions,
    /// First `n_max` tried in oracle mode; raised until a tail is found.
    pub n_max: Option<u32>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { mode: Mode::Oracle, enumeration: EnumOptions::default(), n_max: None }
    }
}

impl PipelineOptions {
    pub fn mode(mode: Mode) -> Self {
        PipelineOptions { mode, ..Default::default() }
    }
}

/// Starting `n_max` per prime.
pub fn default_n_max(p: u64) -> u32 {
    match p {
        3 => 4,
        5 => 3,
        _ => 2,
    }
}

fn n_max_cap(p: u64) -> u32 {
    match p {
        3 => 7,
        5 => 6,
        7 => 5,
        _ => 4,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterValue<S> {
    pub value: QPowerValue<S>,
    pub kind: ClassKind,
    pub y_matches_e3: bool,
    pub twist_sign: i8,
}

impl<S: ExactScalar> CharacterValue<S> {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value.to_json_value(),
            "kind": self.kind.tag(),
            "y_matches_e3": self.y_matches_e3,
            "twist_sign": self.twist_sign,
        })
    }
}

/// Catalog shape equivalent to `epsilon * shape`, and the table it uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CatalogMatch {
    pub shape: Option<FormShapeId>,
    pub lemma: LemmaId,
    pub epsilon: SquareClass,
}

/// Table used for a named shape under unramified `Y`.
pub fn lemma_for_shape(shape: FormShapeId) -> Option<LemmaId> {
    use FormShapeId as F;
    Some(match shape {
        F::I2 => LemmaId::I2,
        F::IV2 => LemmaId::IV2,
        F::IVRamified => LemmaId::II3,
        s if s == F::I1 => LemmaId::I1,
        s if s == F::I3 => LemmaId::I3,
        s if s == F::II1 => LemmaId::II1,
        s if s == F::II2 => LemmaId::II2,
        s if s == F::II3A || s == F::II3B => LemmaId::II3,
        s if s == F::II4 => LemmaId::II4,
        s if s == F::II5 => LemmaId::II5,
        F::TypeI { .. } if shape.name().starts_with("I.aniso") => LemmaId::Aniso,
        _ => return None,
    })
}

/// Matches the Jordan invariants of a primitive form against the catalog,
/// up to a unit scalar `1` or `u`. Forms with Jordan ranks `(3, 1)` or
/// `(1, 3)` outside the catalog use the `II.3` table.
pub fn catalog_lookup(q: &QuadForm4, ctx: &PrimeContext) -> Result<CatalogMatch> {
    let inv = q.jordan_invariants()?;
    let n = q.precision().max(4);
    for (_, shape) in FormShapeId::named() {
        let Some(lemma) = lemma_for_shape(shape) else { continue };
        let sinv = crate::quadforms::canonical_form(shape, ctx, n)?.jordan_invariants()?;
        for eps in [SquareClass::One, SquareClass::U] {
            let leg = if eps == SquareClass::One { 1 } else { -1 };
            if sinv.scaled(leg) == inv {
                return Ok(CatalogMatch { shape: Some(shape), lemma, epsilon: eps });
            }
        }
    }
    let ranks = inv.ranks();
    if ranks == vec![(0, 3), (1, 1)] || ranks == vec![(0, 1), (1, 3)] {
        return Ok(CatalogMatch { shape: None, lemma: LemmaId::II3, epsilon: SquareClass::One });
    }
    Err(Error::NoCatalogMatch(inv.to_string()))
}

/// Closed-form profile for a primitive form under `Y`.
pub fn closed_form_profile_for<S: ExactScalar>(
    q: &QuadForm4,
    y: &CharDescriptor,
    ctx: &PrimeContext,
    n_max: u32,
) -> Result<(CatalogMatch, Profile<S>)> {
    if !y.ramified() {
        let m = catalog_lookup(q, ctx)?;
        return Ok((m, closed_form_table(m.lemma, ctx.q(), n_max)));
    }
    let inv = q.jordan_invariants()?;
    let base = crate::quadforms::canonical_form(FormShapeId::II3A, ctx, q.precision().max(4))?.jordan_invariants()?;
    let lemma = match y.d_class() {
        SquareClass::Pi => LemmaId::A1Pi,
        _ => LemmaId::A1UPi,
    };
    for eps in [SquareClass::One, SquareClass::U] {
        let leg = if eps == SquareClass::One { 1 } else { -1 };
        if base.scaled(leg) == inv {
            let table: Profile<S> = closed_form_table(lemma, ctx.q(), n_max);
            let chi = S::from_i64(y.chi_class(eps, ctx) as i64);
            return Ok((CatalogMatch { shape: Some(FormShapeId::II3A), lemma, epsilon: eps }, table.scaled(&chi)));
        }
    }
    Err(Error::Unsupported(format!("no closed form for ramified Y and invariants {inv}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterReport<S> {
    pub class: ThetaClass,
    pub mode: Mode,
    pub precision: u32,
    pub content_valuation: u32,
    pub content_unit_legendre: i8,
    pub catalog: Option<CatalogMatch>,
    pub profile: Profile<S>,
    pub tail: TailModel<S>,
    pub series_value: S,
    pub det_valuation: i64,
    pub jacobian_valuation: i64,
    pub prefactor: QPowerValue<S>,
    pub normalization: QPowerValue<S>,
    pub value: CharacterValue<S>,
    pub expected: CharacterValue<S>,
}

impl<S: ExactScalar> CharacterReport<S> {
    pub fn matches_expected(&self) -> bool {
        self.value.value == self.expected.value
    }

    pub fn magnitude_ok(&self) -> bool {
        self.value.value.coeff.abs() == self.expected.value.coeff.abs()
            && self.value.value.half_exponent == self.expected.value.half_exponent
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let (sn, sd) = self.series_value.num_den_strings();
        serde_json::json!({
            "class": self.class.to_json_value(),
            "mode": self.mode,
            "precision": self.precision,
            "content": {"valuation": self.content_valuation, "unit_legendre": self.content_unit_legendre},
            "catalog": self.catalog.map(|m| serde_json::json!({
                "shape": m.shape.map(|s| s.name()),
                "table": m.lemma.name(),
                "epsilon": m.epsilon.tag(),
            })),
            "profile": self.profile.to_json_value(),
            "tail": self.tail.to_json_value(),
            "series_at_s0": {"num": sn, "den": sd},
            "det_valuation": self.det_valuation,
            "jacobian_valuation": self.jacobian_valuation,
            "prefactor": self.prefactor.to_json_value(),
            "normalization": self.normalization.to_json_value(),
            "value": self.value.to_json_value(),
            "expected": self.expected.to_json_value(),
            "pass": {
                "exact": self.matches_expected(),
                "magnitude": self.magnitude_ok(),
            },
        })
    }
}

fn oracle_profile<S: ExactScalar>(
    q: &QuadForm4,
    y: &CharDescriptor,
    ctx: &PrimeContext,
    opts: &PipelineOptions,
) -> Result<(Profile<S>, TailModel<S>, S)> {
    let cap = n_max_cap(ctx.p()).min(q.precision().saturating_sub(2));
    let mut n_max = opts.n_max.unwrap_or_else(|| default_n_max(ctx.p())).min(cap);
    loop {
        let profile: Profile<S> = if y.ramified() {
            char_profile(q, y, n_max, ctx, opts.enumeration)?
        } else {
            vol_profile(q, n_max, opts.enumeration)?
        };
        match continue_to(&profile, SPoint::S0) {
            Ok((tail, v)) => return Ok((profile, tail, v)),
            Err(Error::NoGeometricTail) if n_max < cap => n_max += 1,
            Err(e) => return Err(e),
        }
    }
}

pub fn twisted_character_value<S: ExactScalar>(cls: &ThetaClass, opts: &PipelineOptions) -> Result<CharacterReport<S>> {
    let ctx = cls.ctx()?;
    let n = working_precision(cls.p);
    let q = q_form_of(cls, n)?;
    let norm = q.normalized()?;
    let k = norm.scale_valuation;
    let w_leg = legendre_int(norm.unit_prefactor.value() as i128, ctx.p())?;
    let (catalog, profile, tail, series_value) = match opts.mode {
        Mode::Oracle => {
            let (p, t, v) = oracle_profile(&norm, &cls.y, &ctx, opts)?;
            (None, p, t, v)
        }
        Mode::ClosedForm => {
            let (m, p) = closed_form_profile_for::<S>(&norm, &cls.y, &ctx, 8)?;
            let (t, v) = continue_to(&p, SPoint::S0)?;
            (Some(m), p, t, v)
        }
    };
    let dv = det_valuation(cls, n)?;
    let jv = jacobian_valuation(cls, n)?;
    let q_ = ctx.q();
    let chi_c = cls.y.chi_from_parts(k as i64, w_leg, &ctx);
    let abs_c_pow = S::powi(&S::from_i64(q_ as i64), 2 * k as i64);
    let prefactor = QPowerValue::abs_of_half_valuation(q_, dv)
        * QPowerValue::abs_of_half_valuation(q_, jv)
        * QPowerValue::rational(q_, S::from_i64(chi_c as i64) * abs_c_pow);
    let normalization = normalization_constant::<S>(&cls.y, &ctx, SPoint::S0);
    let raw = prefactor.clone() * QPowerValue::rational(q_, series_value.clone());
    let value = raw.checked_div(&normalization)?;
    let expected = expected_value::<S>(cls)?;
    Ok(CharacterReport {
        class: cls.clone(),
        mode: opts.mode,
        precision: n,
        content_valuation: k,
        content_unit_legendre: w_leg,
        catalog,
        profile,
        tail,
        series_value,
        det_valuation: dv,
        jacobian_valuation: jv,
        prefactor,
        normalization,
        value: CharacterValue { value, ..expected.clone() },
        expected,
    })
}

/// Sign `chi_Y(b2 s)` of types II and the appendix case.
fn chi_b2s(cls: &ThetaClass, ctx: &PrimeContext) -> Result<i8> {
    let s = cls.s.ok_or_else(|| Error::Parse("missing twist s".into()))?;
    let b2 = ctx.elem(cls.b[1], 8);
    let leg = legendre_int(b2.unit_part()?.value() as i128, ctx.p())?;
    let b2_part = cls.y.chi_from_parts(b2.valuation()? as i64, leg, ctx);
    Ok(b2_part * cls.y.chi_class(s, ctx))
}

/// Predicted value: `0` for types I and III, `-2 chi_Y(b2 s) kappa delta` for
/// type II, `2 kappa delta` for type IV and `-2 chi_Y(b2 s) chi_Y(-1) delta`
/// in the appendix case.
pub fn expected_value<S: ExactScalar>(cls: &ThetaClass) -> Result<CharacterValue<S>> {
    let ctx = cls.ctx()?;
    let q = ctx.q();
    let delta = cls.e3_class().is_some_and(|a| a == cls.y.d_class());
    let kappa = cls.kappa()?;
    let coeff: i64 = match cls.kind {
        ClassKind::I | ClassKind::III => 0,
        ClassKind::II => -2 * chi_b2s(cls, &ctx)? as i64 * kappa as i64 * delta as i64,
        ClassKind::IV => 2 * kappa as i64 * delta as i64,
        ClassKind::Appendix => {
            let chi_m1 = cls.y.chi_from_parts(0, ctx.legendre_int(-1)?, &ctx);
            -2 * chi_b2s(cls, &ctx)? as i64 * chi_m1 as i64 * delta as i64
        }
    };
    Ok(CharacterValue {
        value: QPowerValue::rational(q, S::from_i64(coeff)),
        kind: cls.kind,
        y_matches_e3: delta,
        twist_sign: kappa,
    })
}

/// Sum of the values over the two twists `r` of the stable class.
pub fn stable_class_sum<S: ExactScalar>(cls: &ThetaClass, opts: &PipelineOptions) -> Result<(Vec<CharacterReport<S>>, S)> {
    if !matches!(cls.kind, ClassKind::II | ClassKind::IV) {
        return Err(Error::WrongKind(cls.kind.to_string()));
    }
    let mut reports = Vec::new();
    let mut total = S::zero();
    for r in cls.r_twists()? {
        let rep: CharacterReport<S> = twisted_character_value(&cls.with_r(r), opts)?;
        total = total
            + rep.value.value.as_rational().ok_or_else(|| Error::Unsupported("irrational twisted value".into()))?;
        reports.push(rep);
    }
    Ok((reports, total))
}

/// The classes swept by the full report at one prime: every kind, field
/// datum and twist, with `Y` unramified except in the appendix case.
pub fn standard_classes(p: u64) -> Result<Vec<ThetaClass>> {
    use SquareClass::{One, Pi, UPi, U};
    let ctx = PrimeContext::new(p)?;
    let y0 = CharDescriptor::unramified();
    let base = ThetaClass {
        kind: ClassKind::I,
        p,
        d: None,
        a_class: None,
        a: [1, 1],
        b: [2, 1],
        r: Twist::Class(One),
        s: Some(One),
        y: y0,
        d_e3: None,
    };
    let mut out = Vec::new();
    for d in [U, Pi, UPi] {
        for r in crate::classes::norm_twists(d) {
            for s in crate::classes::norm_twists(d) {
                out.push(ThetaClass { d: Some(d), r: Twist::Class(r), s: Some(s), ..base.clone() });
            }
        }
    }
    for a in [U, Pi, UPi] {
        for d in [U, Pi, UPi] {
            if a == d {
                continue;
            }
            for r in crate::classes::norm_twists(d) {
                for s in crate::classes::norm_twists(a * d) {
                    out.push(ThetaClass {
                        kind: ClassKind::II,
                        d: Some(d),
                        a_class: Some(a),
                        b: [1, 1],
                        r: Twist::Class(r),
                        s: Some(s),
                        ..base.clone()
                    });
                }
            }
        }
    }
    for (a, d) in [(Pi, U), (UPi, U), (U, Pi), (U, UPi)] {
        let proto = ThetaClass {
            kind: ClassKind::III,
            d: Some(d),
            a_class: Some(a),
            b: [1, 0],
            s: None,
            ..base.clone()
        };
        for r in proto.r_twists()? {
            out.push(proto.with_r(r));
        }
    }
    for a in [U, Pi, UPi] {
        let proto = ThetaClass { kind: ClassKind::IV, a_class: Some(a), b: [1, 0], s: None, ..base.clone() };
        for r in proto.r_twists()? {
            out.push(proto.with_r(r));
        }
    }
    for y in [Pi, UPi] {
        for s in crate::classes::norm_twists(UPi) {
            out.push(ThetaClass {
                kind: ClassKind::Appendix,
                d: Some(U),
                a_class: Some(Pi),
                b: [1, -ctx.class_rep(s)],
                s: Some(s),
                y: CharDescriptor::new(y)?,
                ..base.clone()
            });
        }
    }
    for c in &out {
        c.validate()?;
    }
    Ok(out)
}
