//! Seeded random generators for the property checks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ClassicalDerivation, Field, Poly, PolyRing, Scalar};
use crate::error::Result;
use crate::hs::HsDerivation;
use crate::index::{CoIdeal, MultiIndex};
use crate::operator::{scalar_series_as_operators, LinOp};
use crate::series::Series;
use crate::subst::SubstMap;

/// A small scalar; over `Q` occasionally a fraction with denominator 2 or 3.
pub fn random_scalar(rng: &mut ChaCha8Rng, field: Field) -> Scalar {
    let num = rng.gen_range(-3i64..=3);
    match field {
        Field::Rational if rng.gen_bool(0.25) => {
            let den = rng.gen_range(2i64..=3);
            &field.int(num) * &field.int(den).inverse().expect("nonzero")
        }
        _ => field.int(num),
    }
}

pub fn random_nonzero_scalar(rng: &mut ChaCha8Rng, field: Field) -> Scalar {
    loop {
        let c = random_scalar(rng, field);
        if !c.is_zero() {
            return c;
        }
    }
}

/// At most `max_terms` monomials of degree `≤ max_deg`.
pub fn random_poly(rng: &mut ChaCha8Rng, ring: PolyRing, max_deg: u32, max_terms: usize) -> Poly {
    let monomials = ring.monomials_up_to(max_deg);
    let k = rng.gen_range(0..=max_terms);
    let terms: Vec<(MultiIndex, Scalar)> = (0..k)
        .map(|_| {
            let m = monomials.choose(rng).expect("nonempty").clone();
            (m, random_scalar(rng, ring.field))
        })
        .collect();
    Poly::from_terms(ring, terms).expect("terms built in the ring")
}

pub fn random_derivation(rng: &mut ChaCha8Rng, ring: PolyRing, max_deg: u32) -> ClassicalDerivation {
    let images = (0..ring.n).map(|_| random_poly(rng, ring, max_deg, 2)).collect();
    ClassicalDerivation::new(ring, images).expect("images built in the ring")
}

/// A derivation series with zero constant term.
pub fn random_derivation_series(
    rng: &mut ChaCha8Rng,
    ring: PolyRing,
    coideal: &CoIdeal,
    max_deg: u32,
) -> Series<ClassicalDerivation> {
    let coeffs: Vec<_> = coideal
        .iter()
        .skip(1)
        .map(|a| (a.clone(), random_derivation(rng, ring, max_deg)))
        .collect();
    Series::from_coeffs(coideal.clone(), ring, coeffs).expect("indices from the co-ideal")
}

/// `Φ_D(x_j) = x_j + Σ_{α≠0} f_{j,α} s^α` with sparse random `f_{j,α}`.
pub fn random_hs(rng: &mut ChaCha8Rng, ring: PolyRing, coideal: &CoIdeal, max_deg: u32) -> HsDerivation {
    let zero = MultiIndex::zero(coideal.arity());
    let images = (0..ring.n)
        .map(|j| {
            let mut coeffs = vec![(zero.clone(), ring.var(j))];
            for a in coideal.iter().skip(1) {
                coeffs.push((a.clone(), random_poly(rng, ring, max_deg, 2)));
            }
            Series::from_coeffs(coideal.clone(), ring, coeffs).expect("indices from the co-ideal")
        })
        .collect();
    HsDerivation::from_generator_images(ring, coideal.clone(), images).expect("constant terms are x_j")
}

/// A sum of one or two products of multiplications and derivations.
pub fn random_linop(rng: &mut ChaCha8Rng, ring: PolyRing) -> LinOp {
    let mut out = LinOp::zero(ring);
    for _ in 0..rng.gen_range(1..=2) {
        let mut chain = LinOp::scalar(ring, random_nonzero_scalar(rng, ring.field));
        for _ in 0..rng.gen_range(1..=2) {
            let factor = if rng.gen_bool(0.5) {
                LinOp::mul_by(&random_poly(rng, ring, 1, 2))
            } else {
                LinOp::derivation(&random_derivation(rng, ring, 1))
            };
            chain = chain.compose(&factor);
        }
        out = out.add(&chain);
    }
    out
}

/// A series of random operators with constant term `Id`.
pub fn random_unit_operator_series(rng: &mut ChaCha8Rng, ring: PolyRing, coideal: &CoIdeal) -> Series<LinOp> {
    let mut coeffs = vec![(MultiIndex::zero(coideal.arity()), LinOp::identity(ring))];
    for a in coideal.iter().skip(1) {
        coeffs.push((a.clone(), random_linop(rng, ring)));
    }
    Series::from_coeffs(coideal.clone(), ring, coeffs).expect("indices from the co-ideal")
}

/// A polynomial series with arbitrary coefficients.
pub fn random_poly_series(rng: &mut ChaCha8Rng, ring: PolyRing, coideal: &CoIdeal, max_deg: u32) -> Series<Poly> {
    let coeffs: Vec<_> = coideal
        .iter()
        .map(|a| (a.clone(), random_poly(rng, ring, max_deg, 3)))
        .collect();
    Series::from_coeffs(coideal.clone(), ring, coeffs).expect("indices from the co-ideal")
}

/// A scalar series with constant term `1`.
pub fn random_scalar_unit(rng: &mut ChaCha8Rng, field: Field, coideal: &CoIdeal) -> Series<Scalar> {
    let mut coeffs = vec![(MultiIndex::zero(coideal.arity()), field.one())];
    for a in coideal.iter().skip(1) {
        coeffs.push((a.clone(), random_scalar(rng, field)));
    }
    Series::from_coeffs(coideal.clone(), field, coeffs).expect("indices from the co-ideal")
}

/// `D·u` for a random scalar unit `u`: a random `D`-element.
pub fn random_d_element(rng: &mut ChaCha8Rng, d: &HsDerivation) -> Series<LinOp> {
    let u = random_scalar_unit(rng, d.ring().field, d.coideal());
    d.as_operator_series()
        .mul(&scalar_series_as_operators(&u, d.ring()))
        .expect("shared co-ideal")
}

/// A substitution map with random images of order `≥ 1`; polynomial
/// coefficients have degree `≤ max_deg` (`0` gives constant coefficients).
/// Fails when the images do not vanish on the border of the source.
pub fn random_subst(
    rng: &mut ChaCha8Rng,
    ring: PolyRing,
    source: &CoIdeal,
    target: &CoIdeal,
    max_deg: u32,
) -> Result<SubstMap> {
    let images = (0..source.arity())
        .map(|_| {
            let coeffs: Vec<_> = target
                .iter()
                .skip(1)
                .map(|e| (e.clone(), random_poly(rng, ring, max_deg, 2)))
                .collect();
            Series::from_coeffs(target.clone(), ring, coeffs).expect("indices from the co-ideal")
        })
        .collect();
    SubstMap::from_images(ring, source.clone(), target.clone(), images)
}
