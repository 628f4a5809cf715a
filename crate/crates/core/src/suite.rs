//! Fixed-order verification suite: every enumerated quantity against its
//! closed form, and every class value against its predicted value.

use crate::character::{expected_value, standard_classes, twisted_character_value, Mode, PipelineOptions};
use crate::classes::{ClassKind, ThetaClass};
use crate::error::{Error, Result};
use crate::localfield::{CharDescriptor, PrimeContext, SquareClass};
use crate::quadforms::{canonical_form, FormShapeId};
use crate::scalar::ExactScalar;
use crate::series::{
    anisotropic_decomposition, anisotropic_value, continue_to, normalization_constant, normalization_from_linear_form,
    SPoint,
};
use crate::volumes::{
    char_profile, closed_form_table, shell_integral, shell_integral_closed, vol_profile, EnumOptions, LemmaId, Profile,
};
use crate::Rational;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityResult {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub p: u64,
    pub n_max: u32,
    pub identities: Vec<IdentityResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.identities.iter().filter(|i| i.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.identities.iter().all(|i| i.pass)
    }

    pub fn first_failure(&self) -> Option<&IdentityResult> {
        self.identities.iter().find(|i| !i.pass)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "n_max": self.n_max,
            "total": self.identities.len(),
            "passed": self.passed(),
            "all_pass": self.all_pass(),
            "first_failure": self.first_failure(),
            "identities": self.identities,
        })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for i in &self.identities {
            let tag = if i.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {:<48} {}\n", i.name, i.actual));
            if !i.pass {
                out.push_str(&format!("      expected {}\n", i.expected));
            }
        }
        out.push_str(&format!("{}/{} identities hold at p = {}\n", self.passed(), self.identities.len(), self.p));
        out
    }
}

pub fn fmt_scalar<S: ExactScalar>(x: &S) -> String {
    let (n, d) = x.num_den_strings();
    if d == "1" {
        n
    } else {
        format!("{n}/{d}")
    }
}

fn fmt_profile<S: ExactScalar>(p: &Profile<S>) -> String {
    let parts: Vec<String> = p.entries.iter().map(fmt_scalar).collect();
    format!("[{}]", parts.join(", "))
}

struct Collector {
    out: Vec<IdentityResult>,
}

impl Collector {
    fn check(&mut self, name: String, expected: String, actual: Result<String>) {
        let (actual, pass) = match actual {
            Ok(a) => {
                let pass = a == expected;
                (a, pass)
            }
            Err(e) => (format!("error: {e}"), false),
        };
        self.out.push(IdentityResult { name, expected, actual, pass });
    }
}

/// Short label for a class, used in identity names.
pub fn class_label(c: &ThetaClass) -> String {
    let mut s = format!("{}[", c.kind);
    let mut parts = Vec::new();
    if let Some(d) = c.d {
        parts.push(format!("D={d}"));
    }
    if let Some(a) = c.a_class {
        parts.push(format!("A={a}"));
    }
    parts.push(format!("r={}", c.r));
    if let Some(t) = c.s {
        parts.push(format!("s={t}"));
    }
    parts.push(format!("Y={}", c.y.tag()));
    s.push_str(&parts.join(","));
    s.push(']');
    s
}

fn shell_identities(c: &mut Collector, ctx: &PrimeContext) {
    let q = ctx.q();
    let ys: Vec<Option<CharDescriptor>> = std::iter::once(None)
        .chain([SquareClass::Pi, SquareClass::UPi].map(|d| CharDescriptor::new(d).ok()))
        .collect();
    for y in &ys {
        for cv in [1i128, 2, 3] {
            let e = ctx.elem(cv, 8);
            if !e.is_unit() {
                continue;
            }
            for n in 1..=3u32 {
                let tag = y.as_ref().map_or("1".to_string(), |y| y.tag().to_string());
                let name = format!("shell[Y={tag},c={cv},n={n}]");
                let exp: Rational = shell_integral_closed(q, n, y.as_ref());
                let act = shell_integral::<Rational>(&e, n, y.as_ref(), ctx).map(|v| fmt_scalar(&v));
                c.check(name, fmt_scalar(&exp), act);
            }
        }
    }
}

fn table_identities(c: &mut Collector, ctx: &PrimeContext, n_max: u32, opts: EnumOptions) {
    let q = ctx.q();
    for (name, shape) in FormShapeId::named() {
        let Some(lemma) = crate::character::lemma_for_shape(shape) else { continue };
        let exp: Profile<Rational> = closed_form_table(lemma, q, n_max);
        let act = canonical_form(shape, ctx, n_max + 2)
            .and_then(|f| vol_profile::<Rational>(&f, n_max, opts))
            .map(|p| fmt_profile(&p));
        c.check(format!("volume[{name}]"), fmt_profile(&exp), act);
    }
    for (d, lemma) in [(SquareClass::Pi, LemmaId::A1Pi), (SquareClass::UPi, LemmaId::A1UPi)] {
        let exp: Profile<Rational> = closed_form_table(lemma, q, n_max);
        let act = CharDescriptor::new(d).and_then(|y| {
            let f = canonical_form(FormShapeId::II3A, ctx, n_max + 2)?;
            char_profile::<Rational>(&f, &y, n_max, ctx, opts).map(|p| fmt_profile(&p))
        });
        c.check(format!("char-sums[II.3a,Y={d}]"), fmt_profile(&exp), act);
    }
}

/// Value at `s = 0` of each volume table.
pub fn displayed_continuation<S: ExactScalar>(lemma: LemmaId, q: u64) -> Option<S> {
    let qi = S::from_i128_ratio(1, q as i128);
    let qs = S::from_i64(q as i64);
    let ratio = (S::one() + qi.clone() * qi) / (S::one() + qs.clone());
    Some(match lemma {
        LemmaId::I1 | LemmaId::I2 | LemmaId::I3 | LemmaId::II3 | LemmaId::II4 | LemmaId::II5 | LemmaId::Aniso => {
            S::zero()
        }
        LemmaId::II1 => S::from_i64(-2) * qs * ratio,
        LemmaId::II2 => S::from_i64(2) * qs * ratio,
        LemmaId::IV2 => S::from_i64(2) * ratio,
        LemmaId::A1Pi | LemmaId::A1UPi => return None,
    })
}

fn continuation_identities(c: &mut Collector, ctx: &PrimeContext) {
    let q = ctx.q();
    for lemma in LemmaId::VOLUME_TABLES {
        let Some(exp) = displayed_continuation::<Rational>(lemma, q) else { continue };
        let table: Profile<Rational> = closed_form_table(lemma, q, 8);
        let act = continue_to(&table, SPoint::S0).map(|(_, v)| fmt_scalar(&v));
        c.check(format!("continuation[{}]", lemma.name()), fmt_scalar(&exp), act);
    }
}

fn normalization_identities(c: &mut Collector, ctx: &PrimeContext, n_max: u32) {
    for at in [SPoint::S0, SPoint::S1] {
        let exp = normalization_constant::<Rational>(&CharDescriptor::unramified(), ctx, at);
        let act = normalization_from_linear_form::<Rational>(ctx, at, n_max.max(3)).map(|v| fmt_scalar(&v));
        let exp_s = exp.as_rational().map(|v| fmt_scalar(&v)).unwrap_or_else(|| exp.to_string());
        c.check(format!("normalization[s={}]", at.s()), exp_s, act);
    }
}

fn anisotropic_identities(c: &mut Collector, ctx: &PrimeContext, opts: EnumOptions) {
    for at in [SPoint::S0, SPoint::S1] {
        let exp = anisotropic_value::<Rational>(ctx.q(), at);
        let act = anisotropic_decomposition::<Rational>(ctx, at, opts)
            .map(|parts| fmt_scalar(&parts.into_iter().fold(Rational::from_i64(0), |a, b| a + b)));
        c.check(format!("anisotropic[s={}]", at.s()), fmt_scalar(&exp), act);
    }
}

fn class_value_identities(c: &mut Collector, p: u64, opts: &PipelineOptions) -> Result<()> {
    let classes = standard_classes(p)?;
    for cls in &classes {
        let label = class_label(cls);
        let exp = expected_value::<Rational>(cls)?.value.to_string();
        let oracle = twisted_character_value::<Rational>(cls, &PipelineOptions { mode: Mode::Oracle, ..*opts });
        let oracle_s = oracle.as_ref().map(|r| r.value.value.to_string()).map_err(Clone::clone);
        c.check(format!("value[{label}]"), exp, oracle_s.clone());
        let closed = twisted_character_value::<Rational>(cls, &PipelineOptions { mode: Mode::ClosedForm, ..*opts })
            .map(|r| r.value.value.to_string());
        if let Ok(o) = oracle_s {
            c.check(format!("modes[{label}]"), o, closed);
        }
    }
    let mut seen = Vec::new();
    for cls in classes.iter().filter(|c| matches!(c.kind, ClassKind::II | ClassKind::IV)) {
        let first = cls.with_r(cls.r_twists()?[0]);
        if seen.contains(&first) {
            continue;
        }
        seen.push(first.clone());
        let act = crate::character::stable_class_sum::<Rational>(&first, opts).map(|(_, s)| fmt_scalar(&s));
        c.check(format!("stable-sum[{}]", class_label(&first)), "0".into(), act);
    }
    Ok(())
}

/// Runs the whole suite at one prime in canonical order.
pub fn verify_lemmas(p: u64, n_max: u32, opts: &PipelineOptions) -> Result<SuiteReport> {
    let ctx = PrimeContext::new(p)?;
    if n_max < 2 {
        return Err(Error::PrecisionTooLow { needed: 2, have: n_max });
    }
    let mut c = Collector { out: Vec::new() };
    shell_identities(&mut c, &ctx);
    table_identities(&mut c, &ctx, n_max, opts.enumeration);
    continuation_identities(&mut c, &ctx);
    normalization_identities(&mut c, &ctx, n_max);
    anisotropic_identities(&mut c, &ctx, opts.enumeration);
    class_value_identities(&mut c, p, opts)?;
    Ok(SuiteReport { p, n_max, identities: c.out })
}
