use hasse_core::algebra::{ClassicalDerivation, Field, Poly, PolyRing};
use hasse_core::hs::{characterize_unit, d_element_check, integrate_derivations, Characterization, HsDerivation};
use hasse_core::index::{CoIdeal, MultiIndex};
use hasse_core::operator::LinOp;
use hasse_core::random::{random_hs, random_poly};
use hasse_core::series::{Euler, Series};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape(seed: u64) -> (PolyRing, CoIdeal) {
    let field = if seed.is_multiple_of(2) { Field::Rational } else { Field::Prime(5) };
    let ring = PolyRing::new(field, 1 + (seed % 2) as usize);
    let c = match (seed / 2) % 3 {
        0 => CoIdeal::from_degree_bound(1, 3),
        1 => CoIdeal::from_degree_bound(2, 2),
        _ => CoIdeal::from_box(&MultiIndex::new(vec![1, 2])),
    };
    (ring, c)
}

/// `Σ_{β+γ=α} D_β(f) E_γ(g)`, summed straight from components.
fn convolve(d: &HsDerivation, e: &HsDerivation, alpha: &MultiIndex, f: &Poly, g: &Poly) -> Poly {
    let ring = d.ring();
    d.coideal().iter().fold(ring.zero(), |acc, beta| match alpha.checked_sub(beta) {
        Some(gamma) => &acc + &(&d.component_apply(beta, f) * &e.component_apply(&gamma, g)),
        None => acc,
    })
}

/// Divided-power derivative in one variable.
fn divided(f: &Poly, k: u32) -> Poly {
    let ring = f.ring();
    f.terms().fold(ring.zero(), |acc, (m, c)| {
        let e = m.get(0);
        if e < k {
            return acc;
        }
        let b = (0..k).fold(1i64, |b, i| b * i64::from(e - i) / i64::from(i + 1));
        &acc + &Poly::monomial(ring, MultiIndex::new(vec![e - k]), c * &ring.field.int(b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn components_satisfy_leibniz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ring, c) = shape(seed);
        let d = random_hs(&mut rng, ring, &c, 2);
        let f = random_poly(&mut rng, ring, 3, 3);
        let g = random_poly(&mut rng, ring, 3, 3);
        for alpha in c.iter() {
            prop_assert_eq!(d.component_apply(alpha, &(&f * &g)), convolve(&d, &d, alpha, &f, &g));
        }
    }

    #[test]
    fn composition_is_convolution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ring, c) = shape(seed);
        let d = random_hs(&mut rng, ring, &c, 2);
        let e = random_hs(&mut rng, ring, &c, 2);
        let de = d.compose(&e).unwrap();
        let f = random_poly(&mut rng, ring, 3, 3);
        for alpha in c.iter() {
            let expected = c.iter().fold(ring.zero(), |acc, beta| match alpha.checked_sub(beta) {
                Some(gamma) => &acc + &d.component_apply(beta, &e.component_apply(&gamma, &f)),
                None => acc,
            });
            prop_assert_eq!(de.component_apply(alpha, &f), expected);
        }
    }

    #[test]
    fn group_laws(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ring, c) = shape(seed);
        let a = random_hs(&mut rng, ring, &c, 2);
        let b = random_hs(&mut rng, ring, &c, 2);
        let id = HsDerivation::identity(ring, c.clone());
        prop_assert_eq!(a.compose(&a.inverse()).unwrap(), id.clone());
        prop_assert_eq!(a.inverse().compose(&a).unwrap(), id.clone());
        prop_assert_eq!(a.compose(&id).unwrap(), a.clone());
        prop_assert_eq!(a.compose(&b).unwrap().inverse(), b.inverse().compose(&a.inverse()).unwrap());
    }

    #[test]
    fn eps_routes_agree_and_integrate_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ring, c) = shape(seed);
        let d = random_hs(&mut rng, ring, &c, 2);
        for bar in [false, true] {
            prop_assert_eq!(d.eps(Euler::Total, bar).unwrap(), d.eps_from_images(Euler::Total, bar).unwrap());
        }
        if ring.field == Field::Rational {
            prop_assert_eq!(integrate_derivations(&d.eps(Euler::Total, false).unwrap()).unwrap(), d);
        }
    }

    #[test]
    fn hs_derivations_are_their_own_elements(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ring, c) = shape(seed);
        let d = random_hs(&mut rng, ring, &c, 2);
        prop_assert!(d_element_check(&d.as_operator_series(), &d).unwrap().is_ok());
        if ring.field == Field::Rational {
            match characterize_unit(&d.as_operator_series()).unwrap() {
                Characterization::Accepted(back) => prop_assert_eq!(back, d),
                Characterization::Rejected { index, .. } => prop_assert!(false, "rejected at {}", index),
            }
        }
    }
}

#[test]
fn taylor_derivation_has_divided_power_components() {
    for field in [Field::Rational, Field::Prime(3)] {
        let ring = PolyRing::new(field, 1);
        let c = CoIdeal::from_degree_bound(1, 6);
        let image = Series::from_coeffs(c.clone(), ring, [
            (MultiIndex::new(vec![0]), ring.var(0)),
            (MultiIndex::new(vec![1]), ring.one()),
        ])
        .unwrap();
        let d = HsDerivation::from_generator_images(ring, c.clone(), vec![image]).unwrap();
        let f = ring.parse("x^7 - 2*x^4 + x^3 + 5").unwrap();
        for k in 0..=6u32 {
            assert_eq!(d.component_apply(&MultiIndex::new(vec![k]), &f), divided(&f, k));
        }
        // eps of the Taylor derivation is s·∂
        let e = d.eps(Euler::Total, false).unwrap();
        for alpha in c.iter() {
            let expected = if alpha.degree() == 1 {
                ClassicalDerivation::partial(ring, 0)
            } else {
                ClassicalDerivation::zero(ring)
            };
            assert_eq!(e.coeff(alpha), expected);
        }
    }
}

#[test]
fn squares_of_derivations_are_rejected() {
    let ring = PolyRing::new(Field::Rational, 1);
    let c = CoIdeal::from_degree_bound(1, 2);
    let dx = LinOp::derivation(&ClassicalDerivation::partial(ring, 0));
    let r = Series::from_coeffs(c, ring, [
        (MultiIndex::new(vec![0]), LinOp::identity(ring)),
        (MultiIndex::new(vec![2]), dx.compose(&dx)),
    ])
    .unwrap();
    match characterize_unit(&r).unwrap() {
        Characterization::Rejected { index, .. } => assert_eq!(index, MultiIndex::new(vec![2])),
        Characterization::Accepted(_) => panic!("1 + ∂²s² is not an HS-derivation"),
    }
}

#[test]
fn wrong_constant_terms_are_refused() {
    let ring = PolyRing::new(Field::Rational, 1);
    let c = CoIdeal::from_degree_bound(1, 1);
    let image = Series::monomial(c.clone(), MultiIndex::new(vec![0]), ring.one()).unwrap();
    assert!(HsDerivation::from_generator_images(ring, c, vec![image]).is_err());
}
