use std::collections::BTreeMap;

use hasse_core::algebra::{Field, Scalar};
use hasse_core::index::{CoIdeal, MultiIndex};
use hasse_core::random::{random_scalar_unit, random_unit_operator_series};
use hasse_core::series::{Euler, Series};
use hasse_core::algebra::PolyRing;
use hasse_core::Error;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Commutative truncated power series over Q, kept as a plain map; the
/// reference model for scalar-carrier series.
type Naive = BTreeMap<Vec<u32>, BigRational>;

fn to_naive(s: &Series<Scalar>) -> Naive {
    s.iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(a, c)| (a.entries().to_vec(), c.as_rational().expect("rational").clone()))
        .collect()
}

fn naive_mul(a: &Naive, b: &Naive, c: &CoIdeal) -> Naive {
    let mut out = Naive::new();
    for (x, u) in a {
        for (y, v) in b {
            let z: Vec<u32> = x.iter().zip(y).map(|(i, j)| i + j).collect();
            if c.contains(&MultiIndex::new(z.clone())) {
                *out.entry(z).or_insert_with(BigRational::zero) += u * v;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Inverse of a series with constant term 1, by the geometric series.
fn naive_inverse(a: &Naive, c: &CoIdeal) -> Naive {
    let p = c.arity();
    let mut tail = a.clone();
    tail.remove(&vec![0; p]);
    let tail: Naive = tail.into_iter().map(|(k, v)| (k, -v)).collect();
    let one: Naive = [(vec![0; p], BigRational::one())].into_iter().collect();
    let (mut sum, mut power) = (one.clone(), one);
    for _ in 0..c.max_degree() {
        power = naive_mul(&power, &tail, c);
        for (k, v) in &power {
            *sum.entry(k.clone()).or_insert_with(BigRational::zero) += v;
        }
    }
    sum.retain(|_, v| !v.is_zero());
    sum
}

fn naive_weight(a: &Naive, mode: Euler) -> Naive {
    a.iter()
        .map(|(k, v)| {
            let w = match mode {
                Euler::Total => k.iter().sum::<u32>(),
                Euler::Partial(i) => k[i],
            };
            (k.clone(), v * BigRational::from_integer(w.into()))
        })
        .filter(|(_, v)| !v.is_zero())
        .collect()
}

fn shape(seed: u64) -> CoIdeal {
    match seed % 4 {
        0 => CoIdeal::from_degree_bound(1, 6),
        1 => CoIdeal::from_degree_bound(2, 4),
        2 => CoIdeal::from_box(&MultiIndex::new(vec![2, 3])),
        _ => CoIdeal::from_degree_bound(3, 2),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_products_match_the_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = shape(seed);
        let a = random_scalar_unit(&mut rng, Field::Rational, &c);
        let b = random_scalar_unit(&mut rng, Field::Rational, &c);
        prop_assert_eq!(to_naive(&a.mul(&b).unwrap()), naive_mul(&to_naive(&a), &to_naive(&b), &c));
        prop_assert_eq!(to_naive(&a.inverse().unwrap()), naive_inverse(&to_naive(&a), &c));
        prop_assert_eq!(a.inverse_closed().unwrap(), a.inverse().unwrap());
    }

    #[test]
    fn eps_is_the_logarithmic_derivative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = shape(seed);
        let r = random_scalar_unit(&mut rng, Field::Rational, &c);
        let nr = to_naive(&r);
        let inv = naive_inverse(&nr, &c);
        let modes = std::iter::once(Euler::Total).chain((0..c.arity()).map(Euler::Partial));
        for mode in modes {
            let expected = naive_mul(&inv, &naive_weight(&nr, mode), &c);
            prop_assert_eq!(to_naive(&r.eps(mode).unwrap()), expected.clone());
            prop_assert_eq!(to_naive(&r.eps_bar(mode).unwrap()), expected);
        }
    }

    #[test]
    fn eps_turns_products_into_sums_for_scalars(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = shape(seed);
        let field = if seed % 3 == 0 { Field::Prime(7) } else { Field::Rational };
        let a = random_scalar_unit(&mut rng, field, &c);
        let b = random_scalar_unit(&mut rng, field, &c);
        let lhs = a.mul(&b).unwrap().eps(Euler::Total).unwrap();
        let rhs = a.eps(Euler::Total).unwrap().add(&b.eps(Euler::Total).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn eps_inverse_undoes_eps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = shape(seed);
        let r = random_scalar_unit(&mut rng, Field::Rational, &c);
        prop_assert_eq!(r.eps(Euler::Total).unwrap().eps_inverse().unwrap(), r);
    }

    #[test]
    fn operator_units_satisfy_the_group_laws(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = PolyRing::new(Field::Rational, 1);
        let c = CoIdeal::from_degree_bound(1 + (seed % 2) as usize, 2);
        let a = random_unit_operator_series(&mut rng, ring, &c);
        let b = random_unit_operator_series(&mut rng, ring, &c);
        let one = Series::one(c.clone(), ring);
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.mul(&inv).unwrap(), one.clone());
        prop_assert_eq!(inv.mul(&a).unwrap(), one);
        prop_assert_eq!(a.mul(&b).unwrap().inverse().unwrap(), b.inverse().unwrap().mul(&inv).unwrap());
        prop_assert_eq!(a.inverse_closed().unwrap(), inv);
    }

    #[test]
    fn operator_eps_satisfies_its_defining_relation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = PolyRing::new(Field::Rational, 1);
        let c = CoIdeal::from_degree_bound(1, 3);
        let r = random_unit_operator_series(&mut rng, ring, &c);
        prop_assert_eq!(r.mul(&r.eps(Euler::Total).unwrap()).unwrap(), r.euler());
        prop_assert_eq!(r.eps_bar(Euler::Total).unwrap().mul(&r).unwrap(), r.euler());
        prop_assert_eq!(r.eps(Euler::Total).unwrap().eps_inverse().unwrap(), r);
    }
}

#[test]
fn geometric_series_has_constant_log_derivative() {
    let c = CoIdeal::from_degree_bound(1, 5);
    let k = Field::Rational;
    let r = Series::from_coeffs(c.clone(), k, [
        (MultiIndex::new(vec![0]), k.one()),
        (MultiIndex::new(vec![1]), k.int(-1)),
    ])
    .unwrap();
    // 1/(1 - t) has eps = t/(1 - t) = t + t^2 + ...
    let e = r.inverse().unwrap().eps(Euler::Total).unwrap();
    for d in 0..=5u32 {
        let expected = if d == 0 { k.zero() } else { k.one() };
        assert_eq!(e.coeff(&MultiIndex::new(vec![d])), expected);
    }
}

#[test]
fn eps_inverse_needs_division_by_the_degree() {
    let k = Field::Prime(3);
    let c = CoIdeal::from_degree_bound(1, 4);
    let delta = Series::monomial(c, MultiIndex::new(vec![1]), k.one()).unwrap();
    match delta.eps_inverse() {
        Err(Error::Characteristic { index, .. }) => assert_eq!(index, MultiIndex::new(vec![3])),
        other => panic!("expected a characteristic error, got {other:?}"),
    }
}

#[test]
fn units_must_have_constant_term_one() {
    let k = Field::Rational;
    let c = CoIdeal::from_degree_bound(1, 2);
    let r = Series::monomial(c, MultiIndex::new(vec![0]), k.int(2)).unwrap();
    assert!(!r.is_unit());
    assert!(r.inverse().is_err());
}
