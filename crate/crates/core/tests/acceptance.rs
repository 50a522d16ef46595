//! The nine acceptance criteria, each checked with exact equality. Prints one
//! line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hasse_core::algebra::{ClassicalDerivation, Field, PolyRing};
use hasse_core::hs::{
    characterize_unit, integrate_derivations, sigma_inverse_via_eps, xi_hs, Characterization,
    HsDerivation,
};
use hasse_core::index::{CoIdeal, MultiIndex};
use hasse_core::operator::LinOp;
use hasse_core::random::{
    random_d_element, random_derivation_series, random_hs, random_scalar_unit, random_subst,
    random_unit_operator_series,
};
use hasse_core::series::{Euler, Series};
use hasse_core::subst::{eps_pullback_check, SubstMap};
use hasse_core::Error;

type Outcome = Result<String, String>;

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn hs_equal(a: &HsDerivation, b: &HsDerivation) -> bool {
    a.coideal() == b.coideal() && (0..a.ring().n).all(|j| a.image(j) == b.image(j))
}

fn subst_equal(a: &SubstMap, b: &SubstMap) -> bool {
    a.source() == b.source()
        && a.target() == b.target()
        && (0..a.source().arity()).all(|i| a.image(i) == b.image(i))
}

fn fail(what: impl Into<String>) -> Outcome {
    Err(what.into())
}

fn closed_eps_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = CoIdeal::from_degree_bound(1, 3);
    let mut count = 0;
    for field in [Field::Rational, Field::Prime(7)] {
        for n in 1..=2 {
            for _ in 0..25 {
                let ring = PolyRing::new(field, n);
                let d = random_hs(&mut rng, ring, &c, 3);
                let e = d.eps(Euler::Total, false).map_err(|e| e.to_string())?;
                let comp = |k: u32| d.component(&mi(&[k])).expect("index in range");
                let (d1, d2, d3) = (comp(1), comp(2), comp(3));
                let int = |k: i64| field.int(k);
                let expected = [
                    d1.clone(),
                    d2.scale(&int(2)).sub(&d1.compose(&d1)),
                    d3.scale(&int(3))
                        .sub(&d1.compose(&d2).scale(&int(2)))
                        .sub(&d2.compose(&d1))
                        .add(&d1.compose(&d1).compose(&d1)),
                ];
                for (k, want) in expected.iter().enumerate() {
                    let got = LinOp::derivation(&e.coeff(&mi(&[k as u32 + 1])));
                    if !got.equals(want) {
                        return fail(format!("eps_{} differs from its closed form over {field}", k + 1));
                    }
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} HS-derivations"))
}

fn unit_inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shapes = [
        CoIdeal::from_degree_bound(1, 6),
        CoIdeal::from_degree_bound(2, 4),
        CoIdeal::from_box(&mi(&[2, 2])),
    ];
    for k in 0..100 {
        let c = &shapes[k % shapes.len()];
        let field = if k % 2 == 0 { Field::Rational } else { Field::Prime(5) };
        let r = random_scalar_unit(&mut rng, field, c);
        let closed = r.inverse_closed().map_err(|e| e.to_string())?;
        let recursive = r.inverse().map_err(|e| e.to_string())?;
        let one = Series::one(c.clone(), field);
        if closed != recursive || r.mul(&closed).unwrap() != one || closed.mul(&r).unwrap() != one {
            return fail(format!("scalar unit {k}"));
        }
    }
    let op_shapes = [CoIdeal::from_degree_bound(1, 4), CoIdeal::from_degree_bound(2, 2), CoIdeal::from_box(&mi(&[1, 1]))];
    for k in 0..100 {
        let c = &op_shapes[k % op_shapes.len()];
        let field = if k % 2 == 0 { Field::Rational } else { Field::Prime(5) };
        let ring = PolyRing::new(field, 1 + k % 2);
        let r = random_unit_operator_series(&mut rng, ring, c);
        let closed = r.inverse_closed().map_err(|e| e.to_string())?;
        let recursive = r.inverse().map_err(|e| e.to_string())?;
        let one = Series::one(c.clone(), ring);
        if closed != recursive || r.mul(&closed).unwrap() != one {
            return fail(format!("operator unit {k}"));
        }
    }
    Ok("100 scalar and 100 operator units".into())
}

fn main_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shapes = [
        CoIdeal::from_degree_bound(1, 4),
        CoIdeal::from_degree_bound(2, 2),
        CoIdeal::from_box(&mi(&[2, 1])),
        CoIdeal::from_degree_bound(1, 7),
    ];
    for k in 0..100 {
        let c = &shapes[k % shapes.len()];
        let ring = PolyRing::new(Field::Rational, 1 + (k / 4) % 2);
        let d = random_hs(&mut rng, ring, c, 1);
        let e = d.eps(Euler::Total, false).map_err(|e| e.to_string())?;
        let back = integrate_derivations(&e).map_err(|e| e.to_string())?;
        if !hs_equal(&back, &d) {
            return fail(format!("eps^-1(eps(D)) != D on instance {k}"));
        }
        let delta = random_derivation_series(&mut rng, ring, c, 1);
        let integrated = integrate_derivations(&delta).map_err(|e| e.to_string())?;
        if integrated.eps(Euler::Total, false).map_err(|e| e.to_string())? != delta {
            return fail(format!("eps(eps^-1(delta)) != delta on instance {k}"));
        }
    }
    Ok("100 instances in both directions".into())
}

fn hh_triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shapes = [CoIdeal::from_degree_bound(2, 2), CoIdeal::from_degree_bound(2, 3), CoIdeal::from_box(&mi(&[2, 1]))];
    for k in 0..50 {
        let c = &shapes[k % shapes.len()];
        let ring = PolyRing::new(Field::Rational, 1 + k % 2);
        let d = random_hs(&mut rng, ring, c, 1);
        let fam = d.bold_eps().map_err(|e| e.to_string())?;
        if let Err(v) = fam.hh_membership() {
            return fail(format!("bold-eps output outside HH on instance {k}: {v}"));
        }
        if fam.sigma_sum().unwrap() != d.eps(Euler::Total, false).unwrap() {
            return fail(format!("sigma(bold-eps(D)) != eps(D) on instance {k}"));
        }
        let delta = random_derivation_series(&mut rng, ring, c, 1);
        let solved = delta.sigma_inverse().map_err(|e| e.to_string())?;
        let routed = sigma_inverse_via_eps(&delta).map_err(|e| e.to_string())?;
        if !solved.coeff_eq(&routed) {
            return fail(format!("linear solve and bold-eps route disagree on instance {k}"));
        }
        if solved.hh_membership().is_err() {
            return fail(format!("linear solve output outside HH on instance {k}"));
        }
    }
    Ok("50 instances with p = 2".into())
}

fn xi_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes = [CoIdeal::from_degree_bound(1, 3), CoIdeal::from_degree_bound(2, 2), CoIdeal::from_box(&mi(&[1, 1]))];
    for k in 0..50 {
        let c = &shapes[k % shapes.len()];
        let field = if k % 3 == 0 { Field::Prime(5) } else { Field::Rational };
        let ring = PolyRing::new(field, 1 + k % 2);
        let d = random_hs(&mut rng, ring, c, 1);
        let left = SubstMap::iota(ring, c.clone()).act_on_hs(&d.inverse()).unwrap();
        for i in 0..c.arity() {
            let sigma = SubstMap::sigma_i(ring, c.clone(), i).unwrap();
            let lhs = left.compose(&sigma.act_on_hs(&d).unwrap()).unwrap();
            let rhs = xi_hs(&d.eps(Euler::Partial(i), false).unwrap()).unwrap();
            if !hs_equal(&lhs, &rhs) {
                return fail(format!("partial identity, i = {}, instance {k}", i + 1));
            }
        }
        let lhs = left
            .compose(&SubstMap::sigma(ring, c.clone()).act_on_hs(&d).unwrap())
            .unwrap();
        let rhs = xi_hs(&d.eps(Euler::Total, false).unwrap()).unwrap();
        if !hs_equal(&lhs, &rhs) {
            return fail(format!("total identity, instance {k}"));
        }
    }
    Ok("50 HS-derivations".into())
}

struct Shapes {
    ring: PolyRing,
    source: CoIdeal,
    target: CoIdeal,
    further: CoIdeal,
}

/// Degree-bounded co-ideals with `|Δ|, |∇| ≤ 10`, each bound at most the
/// previous one so every map of order `≥ 1` is well defined.
fn subst_shapes(rng: &mut ChaCha8Rng) -> Shapes {
    let field = if rng.gen_bool(0.3) { Field::Prime(5) } else { Field::Rational };
    let ring = PolyRing::new(field, rng.gen_range(1..=2));
    let (p, q, r) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2));
    let bound = |k: usize, m: u32| if k == 1 { m } else { m.min(3) };
    let m = bound(p, rng.gen_range(1..=3));
    let mt = bound(q, rng.gen_range(1..=m));
    let mf = bound(r, rng.gen_range(1..=mt));
    Shapes {
        ring,
        source: CoIdeal::from_degree_bound(p, m),
        target: CoIdeal::from_degree_bound(q, mt),
        further: CoIdeal::from_degree_bound(r, mf),
    }
}

fn substitution_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut counts = [0usize; 7];
    for k in 0..30 {
        let s = subst_shapes(&mut rng);
        let phi = random_subst(&mut rng, s.ring, &s.source, &s.target, 1).unwrap();
        let psi = random_subst(&mut rng, s.ring, &s.target, &s.further, 1).unwrap();
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        let e = random_hs(&mut rng, s.ring, &s.source, 1);
        let phi_d = phi.twisted(&d).unwrap();

        // ψ•(φ•D) = (ψ∘φ)•D
        let lhs = psi.act_on_hs(&phi.act_on_hs(&d).unwrap()).unwrap();
        if !hs_equal(&lhs, &psi.compose(&phi).unwrap().act_on_hs(&d).unwrap()) {
            return fail(format!("psi•(phi•D) on instance {k}"));
        }
        counts[0] += 1;

        // (φ•D)* = φ^D•D*
        if !hs_equal(&phi.act_on_hs(&d).unwrap().inverse(), &phi_d.act_on_hs(&d.inverse()).unwrap()) {
            return fail(format!("(phi•D)* on instance {k}"));
        }
        counts[1] += 1;

        // φ•(D∘E) = (φ•D)∘(φ^D•E)
        let de = d.compose(&e).unwrap();
        let rhs = phi.act_on_hs(&d).unwrap().compose(&phi_d.act_on_hs(&e).unwrap()).unwrap();
        if !hs_equal(&phi.act_on_hs(&de).unwrap(), &rhs) {
            return fail(format!("phi•(D∘E) on instance {k}"));
        }
        counts[2] += 1;

        // (φ^D)^E = φ^{D∘E}
        if !subst_equal(&phi_d.twisted(&e).unwrap(), &phi.twisted(&de).unwrap()) {
            return fail(format!("(phi^D)^E on instance {k}"));
        }
        counts[3] += 1;

        // (ψ∘φ)^D = ψ^{φ•D}∘φ^D
        let lhs = psi.compose(&phi).unwrap().twisted(&d).unwrap();
        let rhs = psi
            .twisted(&phi.act_on_hs(&d).unwrap())
            .unwrap()
            .compose(&phi_d)
            .unwrap();
        if !subst_equal(&lhs, &rhs) {
            return fail(format!("(psi∘phi)^D on instance {k}"));
        }
        counts[4] += 1;

        // constant coefficients: φ^D = φ
        let constant = random_subst(&mut rng, s.ring, &s.source, &s.target, 0).unwrap();
        if !subst_equal(&constant.twisted(&d).unwrap(), &constant) {
            return fail(format!("constant-coefficient twist on instance {k}"));
        }
        counts[5] += 1;

        // the defining identity of φ^D, checked on generators
        if !phi.twisted_identity_check(&d, &phi_d).unwrap() {
            return fail(format!("(phi•D)~ ∘ phi^D = phi ∘ D~ on instance {k}"));
        }
        counts[6] += 1;
    }
    Ok(format!("{} instances of each law", counts.iter().min().unwrap()))
}

fn pullback_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut corollary = 0;
    let mut general = 0;
    for k in 0..24 {
        let s = subst_shapes(&mut rng);
        let phi = random_subst(&mut rng, s.ring, &s.source, &s.target, 1).unwrap();
        let d = random_hs(&mut rng, s.ring, &s.source, 1);
        let r = if k % 2 == 0 {
            corollary += 1;
            d.as_operator_series()
        } else {
            general += 1;
            random_d_element(&mut rng, &d)
        };
        let report = eps_pullback_check(&phi, &d, &r).map_err(|e| e.to_string())?;
        let first = report.failures().next().cloned();
        if let Some(f) = first {
            return fail(format!("instance {k}: {} ({})", f.identity, f.witness.clone().unwrap_or_default()));
        }
    }
    Ok(format!("{corollary} instances with r = D, {general} with r = D·u"))
}

fn characteristic_p() -> Outcome {
    let ring = PolyRing::new(Field::Prime(5), 1);
    for delta1 in [ClassicalDerivation::partial(ring, 0), ClassicalDerivation::new(ring, vec![ring.var(0)]).unwrap()] {
        let on = |m: u32| Series::monomial(CoIdeal::from_degree_bound(1, m), mi(&[1]), delta1.clone()).unwrap();
        match integrate_derivations(&on(5)) {
            Err(Error::Characteristic { index, divisor: 5, modulus: 5 }) if index == mi(&[5]) => {}
            other => return fail(format!("expected a characteristic error at (5), got {other:?}")),
        }
        let short = on(4);
        let d = integrate_derivations(&short).map_err(|e| e.to_string())?;
        if d.eps(Euler::Total, false).map_err(|e| e.to_string())? != short {
            return fail("round trip on {0..4}");
        }
    }
    Ok("fails at (5) on {0..5}, round-trips on {0..4}".into())
}

fn characterization() -> Outcome {
    let ring = PolyRing::new(Field::Rational, 1);
    let c = CoIdeal::from_degree_bound(1, 2);
    let dx = LinOp::derivation(&ClassicalDerivation::partial(ring, 0));
    // 1 + ∂² s: ε₁ = ∂², not a derivation
    let r = Series::from_coeffs(c.clone(), ring, [(mi(&[0]), LinOp::identity(ring)), (mi(&[1]), dx.compose(&dx))]).unwrap();
    let (index, witness) = match characterize_unit(&r).unwrap() {
        Characterization::Rejected { index, witness } => (index, witness),
        Characterization::Accepted(_) => return fail("1 + d^2 s accepted"),
    };
    // were ∂² a derivation, it would send x^w to w·x^(w-1)·∂²(x)
    let w = witness.get(0);
    let d2 = dx.compose(&dx);
    let second = d2.apply(&ring.var(0).pow(w));
    let candidate = &ring.var(0).pow(w.saturating_sub(1)).scale(&Field::Rational.int(w as i64)) * &d2.apply(&ring.var(0));
    if index != mi(&[1]) || second == candidate {
        return fail(format!("witness x^{witness} at {index} does not separate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..30 {
        let shape = if k % 2 == 0 { CoIdeal::from_degree_bound(1, 3) } else { CoIdeal::from_degree_bound(2, 2) };
        let ring = PolyRing::new(Field::Rational, 1 + k % 2);
        let d = random_hs(&mut rng, ring, &shape, 1);
        match characterize_unit(&d.as_operator_series()).unwrap() {
            Characterization::Accepted(back) if hs_equal(&back, &d) => {}
            _ => return fail(format!("HS-derivation {k} not accepted")),
        }
    }
    Ok(format!("rejected with witness x^{witness}; 30 HS-derivations accepted"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed eps forms", closed_eps_forms),
        ("unit inversion", unit_inversion),
        ("eps bijection", main_bijection),
        ("HH triangle", hh_triangle),
        ("xi identities", xi_identities),
        ("substitution laws", substitution_laws),
        ("eps pullback formula", pullback_formula),
        ("characteristic p", characteristic_p),
        ("characterization", characterization),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} ({secs:.2}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail} ({secs:.2}s)", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
