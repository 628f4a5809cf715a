use theta_char::character::{catalog_lookup, standard_classes};
use theta_char::classes::{q_form_of, ClassKind, ThetaClass};
use theta_char::localfield::{PrimeContext, ResidueElement, SquareClass};
use theta_char::quadforms::{
    canonical_form, is_isotropic, isotropy_report, mat_from_ints, type_iii_reduction, verify_equivalence, BrClass,
    FormShapeId, QuadForm4,
};

const N: u32 = 5;

fn sqrt_mod(x: &ResidueElement) -> Option<ResidueElement> {
    let m = x.modulus() as i128;
    (0..m).map(|y| ResidueElement::new(y, x.p(), x.precision())).find(|y| *y * *y == *x)
}

fn diag_entries(q: &QuadForm4) -> [ResidueElement; 4] {
    for i in 0..4 {
        for j in 0..4 {
            assert!(i == j || q.gram[i][j].is_zero(), "not diagonal");
        }
    }
    std::array::from_fn(|i| q.gram[i][i])
}

/// Unit `x / y` for small integers of equal valuation.
fn unit_ratio(x: i128, y: i128, p: u64) -> Option<ResidueElement> {
    let (mut x, mut y) = (x, y);
    while x % p as i128 == 0 && y % p as i128 == 0 {
        x /= p as i128;
        y /= p as i128;
    }
    let y = ResidueElement::new(y, p, N).inverse().ok()?;
    let r = ResidueElement::new(x, p, N) * y;
    r.is_unit().then_some(r)
}

/// Finds a monomial `M` with `M[i][perm[i]] = m_i` and
/// `target = c * M^T source M`, checking it with `verify_equivalence`.
fn monomial_witness(source: &QuadForm4, target: &QuadForm4, perm: [usize; 4], c: ResidueElement) -> bool {
    let (s, t) = (diag_entries(source), diag_entries(target));
    let mut m = mat_from_ints(&[[0; 4]; 4], source.p(), source.precision());
    for i in 0..4 {
        let root =
            unit_ratio(t[perm[i]].signed_value(), (c * s[i]).signed_value(), source.p()).and_then(|r| sqrt_mod(&r));
        match root {
            Some(r) => m[i][perm[i]] = r,
            None => return false,
        }
    }
    verify_equivalence(source, target, &m, &c).unwrap()
}

#[test]
fn catalog_isotropy() {
    for p in [3u64, 5, 7] {
        let ctx = PrimeContext::new(p).unwrap();
        for (name, shape) in FormShapeId::named() {
            let q = canonical_form(shape, &ctx, N).unwrap();
            let rep = isotropy_report(&q, &ctx).unwrap();
            assert_eq!(rep.search, Some(rep.hasse), "{name} at {p}");
            assert_eq!(is_isotropic(&q, &ctx).unwrap(), !name.starts_with("I.aniso"), "{name} at {p}");
        }
    }
}

#[test]
fn always_isotropic_examples() {
    let ctx = PrimeContext::new(5).unwrap();
    let (p, u) = (5i128, ctx.u() as i128);
    let ii = QuadForm4::diagonal([1, -1, -u * p, p], 5, N, "x^2-y^2+pi(t^2-uz^2)");
    assert!(is_isotropic(&ii, &ctx).unwrap());
    let iv = QuadForm4::from_poly([1, p, 0, 0], &[(2, 3, -2)], 5, N, "x^2+pi y^2-2zt");
    assert!(is_isotropic(&iv, &ctx).unwrap());
}

fn type_iii_shapes(ctx: &PrimeContext) -> Vec<(BrClass, SquareClass, SquareClass)> {
    use SquareClass::{Pi, UPi, U};
    let mut v = Vec::new();
    for a in [Pi, UPi] {
        v.push((BrClass::One, a, U));
        v.push((BrClass::SqrtA, a, U));
    }
    for d in [Pi, UPi] {
        v.push((BrClass::One, U, d));
        v.push((if ctx.minus_one_is_square() { BrClass::SqrtA } else { BrClass::DPlusI }, U, d));
    }
    v
}

#[test]
fn type_iii_reductions_hold() {
    for p in [3u64, 5, 7, 11, 13] {
        let ctx = PrimeContext::new(p).unwrap();
        for (br, a, d) in type_iii_shapes(&ctx) {
            let red = type_iii_reduction(br, a, d, &ctx, N).unwrap();
            assert!(red.verify().unwrap(), "{} at {p}", red.source_shape);
        }
    }
}

#[test]
fn type_iii_quarter_identity() {
    // zt - Dxy = 1/4 ((z+t)^2 - (z-t)^2 - D(x+y)^2 + D(x-y)^2)
    for p in [3u64, 5, 7] {
        let ctx = PrimeContext::new(p).unwrap();
        for dc in [SquareClass::U, SquareClass::Pi, SquareClass::UPi] {
            let d = ctx.class_rep(dc);
            let source = QuadForm4::from_poly([0; 4], &[(2, 3, 1), (0, 1, -d)], p, N, "zt-Dxy");
            let target = QuadForm4::diagonal([-d, d, 1, -1], p, N, "sums");
            let m = mat_from_ints(&[[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]], p, N);
            let quarter = ResidueElement::new(4, p, N).inverse().unwrap();
            assert!(verify_equivalence(&target, &source, &m, &quarter).unwrap());
            assert!(!verify_equivalence(&target, &source, &m, &ctx.elem(1, N)).unwrap());
        }
    }
}

#[test]
fn type_iv_substitution_needs_sign() {
    for p in [3u64, 5, 7] {
        let ctx = PrimeContext::new(p).unwrap();
        let pi = p as i128;
        let u = ctx.elem(ctx.u() as i128, N);
        let uinv = u.inverse().unwrap();
        let q1 = QuadForm4::from_poly([1, pi, 0, 0], &[(2, 3, -2)], p, N, "x^2+pi y^2-2zt");
        // -u^-1 ((z-t)^2 - (z+t)^2 - u x^2 - u pi y^2) = x^2 + pi y^2 + 4 u^-1 zt
        let four_uinv = (ResidueElement::new(4, p, N) * uinv).signed_value();
        let q2 = QuadForm4::from_poly([1, pi, 0, 0], &[(2, 3, four_uinv)], p, N, "target");
        let scale = |k: i128| (ResidueElement::new(k, p, N) * uinv).signed_value();
        let sub = |z: i128| mat_from_ints(&[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, z, 0], [0, 0, 0, 1]], p, N);
        let minus_uinv = -uinv;
        assert!(!verify_equivalence(&q1, &q2, &sub(scale(2)), &minus_uinv).unwrap());
        assert!(!verify_equivalence(&q1, &q2, &sub(scale(2)), &ctx.elem(1, N)).unwrap());
        assert!(verify_equivalence(&q1, &q2, &sub(scale(-2)), &ctx.elem(1, N)).unwrap());
        let target_jordan = q2.jordan_invariants().unwrap();
        let ii3 = canonical_form(FormShapeId::II3A, &ctx, N).unwrap().jordan_invariants().unwrap();
        let ii3b = canonical_form(FormShapeId::II3B, &ctx, N).unwrap().jordan_invariants().unwrap();
        assert!(
            [1, -1].iter().any(|e| ii3.scaled(*e) == target_jordan || ii3b.scaled(*e) == target_jordan),
            "target is in the II.3 family at {p}"
        );
    }
}

fn expected_shape(cls: &ThetaClass) -> FormShapeId {
    let r = cls.r_prime_class().unwrap();
    match cls.kind {
        ClassKind::I => FormShapeId::TypeI { d: cls.d.unwrap(), r },
        _ => FormShapeId::TypeII { r, a: cls.a_class.unwrap(), d: cls.d.unwrap() },
    }
}

#[test]
fn type_i_and_ii_forms_are_catalog_shapes() {
    for p in [3u64, 5, 7] {
        let ctx = PrimeContext::new(p).unwrap();
        for cls in standard_classes(p).unwrap() {
            if !matches!(cls.kind, ClassKind::I | ClassKind::II | ClassKind::Appendix) {
                continue;
            }
            let q = q_form_of(&cls, N).unwrap();
            let (b2s, a2r) = (q.gram[0][0], q.gram[1][1]);
            let swapped = b2s.valuation().unwrap() > a2r.valuation().unwrap();
            let (perm, c) = if swapped { ([1, 0, 3, 2], a2r) } else { ([0, 1, 2, 3], b2s) };
            let shape = match expected_shape(&cls) {
                FormShapeId::TypeII { r, a, d } if swapped => FormShapeId::TypeII { r, a, d: a * d },
                s => s,
            };
            let canon = match shape {
                FormShapeId::TypeII { r, a, d } => {
                    let ad = theta_char::quadforms::ad_rep(a, d, &ctx);
                    let (rv, dv) = (ctx.class_rep(r), ctx.class_rep(d));
                    QuadForm4::diagonal([1, -rv, -ad, rv * dv], p, N, shape.name())
                }
                s => canonical_form(s, &ctx, N).unwrap(),
            };
            assert!(monomial_witness(&canon, &q, perm, c), "{} at {p}", cls.to_json());
        }
    }
}

#[test]
fn type_iii_and_iv_forms_match_catalog() {
    for p in [3u64, 5, 7] {
        let ctx = PrimeContext::new(p).unwrap();
        for cls in standard_classes(p).unwrap() {
            let q = q_form_of(&cls, N).unwrap().normalized().unwrap();
            let m = catalog_lookup(&q, &ctx).unwrap();
            let name = m.shape.map(|s| s.name()).unwrap_or_default();
            match (cls.kind, cls.r) {
                (ClassKind::III, theta_char::classes::Twist::Class(SquareClass::One)) => {
                    assert!(name == "I.1" || name == "I.3", "{name}")
                }
                (ClassKind::III, _) => assert!(name.starts_with("I.aniso"), "{name}"),
                (ClassKind::IV, _) if cls.a_class == Some(SquareClass::U) => assert_eq!(name, "IV.2"),
                (ClassKind::IV, _) => assert!(name.starts_with("II.3"), "{name}"),
                _ => {}
            }
        }
    }
}
