use hasse_core::algebra::{Field, Poly, PolyRing};
use hasse_core::hs::HsDerivation;
use hasse_core::index::{CoIdeal, MultiIndex};
use hasse_core::operator::LinOp;
use hasse_core::random::{random_d_element, random_hs, random_poly_series, random_subst};
use hasse_core::series::{Euler, Series};
use hasse_core::subst::{eps_pullback_check, n_coefficients, SubstMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

struct Shape {
    ring: PolyRing,
    source: CoIdeal,
    target: CoIdeal,
}

/// Degree-bound source and target with the target bound at most the source
/// bound, so that maps with images of order one are always well defined.
fn shape(rng: &mut ChaCha8Rng) -> Shape {
    let field = if rng.gen_bool(0.5) { Field::Rational } else { Field::Prime(5) };
    let ring = PolyRing::new(field, rng.gen_range(1..=2));
    let m = rng.gen_range(1..=3);
    Shape {
        ring,
        source: CoIdeal::from_degree_bound(rng.gen_range(1..=2), m),
        target: CoIdeal::from_degree_bound(rng.gen_range(1..=2), rng.gen_range(1..=m)),
    }
}

/// `Σ_α a_α Π_i φ(s_i)^{α_i}`, multiplied out in the target.
fn substitute(phi: &SubstMap, a: &Series<Poly>) -> Series<Poly> {
    let ring = phi.ring();
    let one = Series::one(phi.target().clone(), ring);
    let mut out = Series::zero(phi.target().clone(), ring);
    for (alpha, c) in a.iter() {
        let mut term = one.clone();
        for (i, &k) in alpha.entries().iter().enumerate() {
            for _ in 0..k {
                term = term.mul(phi.image(i)).unwrap();
            }
        }
        let scaled = Series::from_coeffs(phi.target().clone(), ring, [(MultiIndex::zero(phi.target().arity()), c.clone())])
            .unwrap();
        out = out.add(&scaled.mul(&term).unwrap()).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn apply_is_substitution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(&mut rng);
        let phi = random_subst(&mut rng, s.ring, &s.source, &s.target, 1).unwrap();
        let a = random_poly_series(&mut rng, s.ring, &s.source, 2);
        let b = random_poly_series(&mut rng, s.ring, &s.source, 2);
        prop_assert_eq!(phi.apply(&a).unwrap(), substitute(&phi, &a));
        prop_assert_eq!(
            phi.apply(&a.mul(&b).unwrap()).unwrap(),
            phi.apply(&a).unwrap().mul(&phi.apply(&b).unwrap()).unwrap()
        );
    }

    #[test]
    fn composition_and_hs_action(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(&mut rng);
        let phi = random_subst(&mut rng, s.ring, &s.source, &s.target, 1).unwrap();
        let last = CoIdeal::from_degree_bound(1, s.target.max_degree());
        let psi = random_subst(&mut rng, s.ring, &s.target, &last, 1).unwrap();
        let a = random_poly_series(&mut rng, s.ring, &s.source, 2);
        let both = psi.compose(&phi).unwrap();
        prop_assert_eq!(both.apply(&a).unwrap(), psi.apply(&phi.apply(&a).unwrap()).unwrap());
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        prop_assert_eq!(both.act_on_hs(&d).unwrap(), psi.act_on_hs(&phi.act_on_hs(&d).unwrap()).unwrap());
    }

    #[test]
    fn pullback_of_eps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(&mut rng);
        let phi = random_subst(&mut rng, s.ring, &s.source, &s.target, 1).unwrap();
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        let r = random_d_element(&mut rng, &d);
        let report = eps_pullback_check(&phi, &d, &r).unwrap();
        prop_assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn identity_map_gives_kronecker_coefficients(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(&mut rng);
        let phi = SubstMap::identity(s.ring, s.source.clone());
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        let n = n_coefficients(&phi, &d).unwrap();
        let p = s.source.arity();
        for j in 0..p {
            for i in 0..p {
                for e in s.source.iter() {
                    for h in s.source.iter() {
                        let expected = i == j && e == h && e.get(j) > 0;
                        let want = if expected { s.ring.one() } else { s.ring.zero() };
                        prop_assert_eq!(n.get(j, i, e, h, s.ring), want);
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_map_collapses_to_the_constant_term(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = shape(&mut rng);
        let zero = SubstMap::trivial(s.ring, s.source.clone(), s.target.clone());
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        let r = random_d_element(&mut rng, &d);
        let pushed = zero.act_left(&r).unwrap();
        let origin = MultiIndex::zero(s.target.arity());
        for (e, c) in pushed.iter() {
            if *e == origin {
                prop_assert_eq!(c, &r.coeff(&MultiIndex::zero(s.source.arity())));
            } else {
                prop_assert!(c.is_zero());
            }
        }
        prop_assert!(n_coefficients(&zero, &d).unwrap().entries.is_empty());
        prop_assert!(zero.act_on_hs(&d).unwrap().is_identity());
    }
}

#[test]
fn squaring_map_doubles_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ring = PolyRing::new(Field::Rational, 2);
    let source = CoIdeal::from_degree_bound(1, 2);
    let target = CoIdeal::from_degree_bound(1, 4);
    let t2 = Series::monomial(target.clone(), mi(&[2]), ring.one()).unwrap();
    let phi = SubstMap::from_images(ring, source.clone(), target, vec![t2]).unwrap();
    for _ in 0..5 {
        let d = random_hs(&mut rng, ring, &source, 2);
        let r = random_d_element(&mut rng, &d);
        let pushed = phi.act_left(&r).unwrap().eps(Euler::Total).unwrap();
        let eps = r.eps(Euler::Total).unwrap();
        for e in 0..=4u32 {
            let lhs = pushed.coeff(&mi(&[e]));
            if e % 2 == 1 {
                assert!(lhs.is_zero());
            } else {
                assert!(lhs.equals(&eps.coeff(&mi(&[e / 2])).scale(&ring.field.int(2))));
            }
        }
        assert!(eps_pullback_check(&phi, &d, &r).unwrap().passed());
    }
}

#[test]
fn sigma_in_one_variable_is_sigma_one() {
    let ring = PolyRing::new(Field::Rational, 1);
    let c = CoIdeal::from_degree_bound(1, 3);
    assert_eq!(SubstMap::sigma(ring, c.clone()), SubstMap::sigma_i(ring, c.clone(), 0).unwrap());
    assert!(SubstMap::sigma_i(ring, c, 1).is_err());
}

#[test]
fn identity_derivation_has_vanishing_sides() {
    let ring = PolyRing::new(Field::Rational, 1);
    let source = CoIdeal::from_degree_bound(2, 2);
    let target = CoIdeal::from_degree_bound(1, 2);
    let img = Series::from_coeffs(target.clone(), ring, [(mi(&[1]), ring.one()), (mi(&[2]), ring.var(0))]).unwrap();
    let phi = SubstMap::from_images(ring, source.clone(), target, vec![img.clone(), img]).unwrap();
    let d = HsDerivation::identity(ring, source);
    let r = d.as_operator_series();
    let eps = phi.act_left(&r).unwrap().eps(Euler::Total).unwrap();
    assert!(eps.iter().all(|(_, c)| c.equals(&LinOp::zero(ring))));
    assert!(eps_pullback_check(&phi, &d, &r).unwrap().passed());
}

#[test]
fn maps_must_factor_through_the_truncation() {
    let ring = PolyRing::new(Field::Rational, 1);
    let source = CoIdeal::from_box(&mi(&[1, 1]));
    let target = CoIdeal::from_degree_bound(1, 2);
    let t = Series::monomial(target.clone(), mi(&[1]), ring.one()).unwrap();
    // s_1^2 lies outside the box but t^2 survives in the target
    assert!(SubstMap::from_images(ring, source, target, vec![t.clone(), t]).is_err());
}
