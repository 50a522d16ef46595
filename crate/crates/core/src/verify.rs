//! Randomized identity suites behind `hs verify`. Each check draws its own
//! generator from `(seed, check number)`, so results do not depend on the
//! number of worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ClassicalDerivation, Field, Poly, PolyRing, Scalar};
use crate::error::{Error, Result};
use crate::hs::{
    characterize_unit, d_element_check, delta_element_check, integrate_derivations,
    sigma_inverse_via_eps, verify_hs, xi_hs, Characterization, HsDerivation,
};
use crate::index::{CoIdeal, MultiIndex};
use crate::operator::{
    commutator_with_poly_series, derivation_series_as_operators, pairing_apply, LinOp,
};
use crate::random::*;
use crate::report::Report;
use crate::series::{Coeff, Euler, RingCoeff, Series};
use crate::subst::{eps_pullback_check, SubstMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Series,
    Hs,
    Subst,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Suite::Series),
            "hs" => Ok(Suite::Hs),
            "subst" => Ok(Suite::Subst),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Series => "series",
            Suite::Hs => "hs",
            Suite::Subst => "subst",
            Suite::All => "all",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub seed: u64,
    /// Random instances per identity.
    pub cases: usize,
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            cases: 20,
            jobs: 1,
        }
    }
}

type Check = fn(&mut ChaCha8Rng, usize) -> Report;

fn checks(suite: Suite) -> Vec<Check> {
    let series: Vec<Check> = vec![
        series_group_laws,
        series_inverse_formulas,
        series_eps_lemma,
        series_crossed_identity,
        series_eps_linearity,
        series_bijections,
        series_char_p,
    ];
    let hs: Vec<Check> = vec![
        hs_group_laws,
        hs_euler_leibniz,
        hs_eps_routes,
        hs_triangle,
        hs_char_p,
        hs_elements,
        hs_characterization,
        hs_closed_forms,
        hs_xi,
    ];
    let subst: Vec<Check> = vec![
        subst_expansion,
        subst_hs_laws,
        subst_twist_laws,
        subst_truncation,
        subst_taylor,
        subst_bullet_elements,
        subst_pullback,
    ];
    match suite {
        Suite::Series => series,
        Suite::Hs => hs,
        Suite::Subst => subst,
        Suite::All => series.into_iter().chain(hs).chain(subst).collect(),
    }
}

/// Runs a suite; reports are merged in check order.
pub fn run(suite: Suite, config: Config) -> Report {
    let list = checks(suite);
    let results: Vec<Mutex<Option<Report>>> = list.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(check) = list.get(k) else { break };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let report = check(&mut rng, config.cases.max(1));
        *results[k].lock().expect("no poisoned slots") = Some(report);
    };
    std::thread::scope(|scope| {
        for _ in 0..config.jobs.max(1) {
            scope.spawn(worker);
        }
    });
    let mut out = Report::new();
    for slot in results {
        out.extend(slot.into_inner().expect("no poisoned slots").expect("every check ran"));
    }
    out
}

/// Runs `f` on `cases` instances and records the first failure.
fn cases_of(report: &mut Report, identity: &str, cases: usize, mut f: impl FnMut(usize) -> Result<Option<String>>) {
    let mut witness = None;
    for c in 0..cases {
        match f(c) {
            Ok(None) => {}
            Ok(Some(w)) => {
                witness = Some(format!("case {c}: {w}"));
                break;
            }
            Err(e) => {
                witness = Some(format!("case {c}: {e}"));
                break;
            }
        }
    }
    report.record(identity, cases, witness);
}

fn diff<C: Coeff>(a: &Series<C>, b: &Series<C>) -> Option<String> {
    a.first_difference(b).map(|i| format!("coefficients differ at {i}"))
}

fn hs_diff(a: &HsDerivation, b: &HsDerivation) -> Option<String> {
    if a.coideal() != b.coideal() {
        return Some("co-ideals differ".into());
    }
    (0..a.ring().n).find_map(|j| diff(a.image(j), b.image(j)).map(|w| format!("image of x{}: {w}", j + 1)))
}

fn subst_diff(a: &SubstMap, b: &SubstMap) -> Option<String> {
    if a.source() != b.source() || a.target() != b.target() {
        return Some("shapes differ".into());
    }
    (0..a.source().arity())
        .find_map(|i| diff(a.image(i), b.image(i)).map(|w| format!("image of s{}: {w}", i + 1)))
}

fn first_failure(report: &Report) -> Option<String> {
    report
        .failures()
        .next()
        .map(|f| format!("{}: {}", f.identity, f.witness.as_deref().unwrap_or("")))
}

fn either(a: Option<String>, b: Option<String>) -> Option<String> {
    a.or(b)
}

fn field_of(rng: &mut ChaCha8Rng) -> Field {
    if rng.gen_bool(0.5) {
        Field::Rational
    } else {
        Field::Prime(5)
    }
}

/// `p ∈ {1,2}`, a degree bound, and occasionally a box.
fn small_coideal(rng: &mut ChaCha8Rng, max_p: usize, max_deg: u32) -> CoIdeal {
    let p = rng.gen_range(1..=max_p);
    if p == 2 && rng.gen_bool(0.3) {
        CoIdeal::from_box(&MultiIndex::new(vec![rng.gen_range(1..=2), 1]))
    } else {
        CoIdeal::from_degree_bound(p, rng.gen_range(1..=max_deg))
    }
}

fn modes(p: usize) -> Vec<Euler> {
    std::iter::once(Euler::Total).chain((0..p).map(Euler::Partial)).collect()
}

fn random_unit_pair<C: RingCoeff>(
    rng: &mut ChaCha8Rng,
    make: &dyn Fn(&mut ChaCha8Rng) -> Series<C>,
) -> (Series<C>, Series<C>) {
    (make(rng), make(rng))
}

fn scalar_unit(rng: &mut ChaCha8Rng, coideal: &CoIdeal, field: Field) -> Series<Scalar> {
    random_scalar_unit(rng, field, coideal)
}

// ---------------------------------------------------------------- series

fn series_group_laws(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "unit group laws, scalar carrier", cases, |_| {
        let field = field_of(rng);
        let c = small_coideal(rng, 2, 4);
        let (a, b) = random_unit_pair(rng, &|r: &mut ChaCha8Rng| scalar_unit(r, &c, field));
        let d = scalar_unit(rng, &c, field);
        group_law_witness(&a, &b, &d)
    });
    cases_of(&mut report, "unit group laws, operator carrier", cases, |_| {
        let ring = PolyRing::new(field_of(rng), rng.gen_range(1..=2));
        let c = small_coideal(rng, 2, 2);
        let (a, b) = random_unit_pair(rng, &|r: &mut ChaCha8Rng| random_unit_operator_series(r, ring, &c));
        let d = random_unit_operator_series(rng, ring, &c);
        group_law_witness(&a, &b, &d)
    });
    report
}

fn group_law_witness<C: RingCoeff>(a: &Series<C>, b: &Series<C>, c: &Series<C>) -> Result<Option<String>> {
    let one = Series::one(a.coideal().clone(), a.ctx().clone());
    let assoc = diff(&a.mul(b)?.mul(c)?, &a.mul(&b.mul(c)?)?);
    let unit = either(diff(&a.mul(&one)?, a), diff(&one.mul(a)?, a));
    let inv = a.inverse()?;
    let inverse = either(diff(&a.mul(&inv)?, &one), diff(&inv.mul(a)?, &one));
    Ok(assoc
        .map(|w| format!("associativity: {w}"))
        .or(unit.map(|w| format!("identity: {w}")))
        .or(inverse.map(|w| format!("inverse: {w}"))))
}

fn series_inverse_formulas(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "closed inverse formula equals recursive inverse, scalar carrier", cases, |_| {
        let c = small_coideal(rng, 2, 4);
        let field = field_of(rng);
        let r = scalar_unit(rng, &c, field);
        Ok(diff(&r.inverse_closed()?, &r.inverse()?))
    });
    cases_of(&mut report, "closed inverse formula equals recursive inverse, operator carrier", cases, |_| {
        let ring = PolyRing::new(field_of(rng), 1);
        let c = small_coideal(rng, 2, 2);
        let r = random_unit_operator_series(rng, ring, &c);
        Ok(diff(&r.inverse_closed()?, &r.inverse()?))
    });
    report
}

fn series_eps_lemma(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps(r'r) = eps(r) + r* eps(r') r and its bar and inverse forms", cases, |_| {
        let ring = PolyRing::new(field_of(rng), 1);
        let c = small_coideal(rng, 2, 2);
        let r = random_unit_operator_series(rng, ring, &c);
        let r2 = random_unit_operator_series(rng, ring, &c);
        let inv = r.inverse()?;
        for mode in modes(c.arity()) {
            let lhs = r2.mul(&r)?.eps(mode)?;
            let rhs = r.eps(mode)?.add(&inv.mul(&r2.eps(mode)?)?.mul(&r)?)?;
            if let Some(w) = diff(&lhs, &rhs) {
                return Ok(Some(format!("eps product rule, mode {mode}: {w}")));
            }
            let lhs = r.mul(&r2)?.eps_bar(mode)?;
            let rhs = r.eps_bar(mode)?.add(&r.mul(&r2.eps_bar(mode)?)?.mul(&inv)?)?;
            if let Some(w) = diff(&lhs, &rhs) {
                return Ok(Some(format!("eps-bar product rule, mode {mode}: {w}")));
            }
            if let Some(w) = diff(&inv.eps(mode)?, &r.eps_bar(mode)?.neg()) {
                return Ok(Some(format!("eps(r*) = -eps-bar(r), mode {mode}: {w}")));
            }
            if let Err(a) = r.eps_recursion_check(mode)? {
                return Ok(Some(format!("recursion for eps, mode {mode}, at {a}")));
            }
        }
        Ok(None)
    });
    report
}

fn series_crossed_identity(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "chi^j(eps^i(r)) - chi^i(eps^j(r)) = [eps^i(r), eps^j(r)]", cases, |_| {
        let ring = PolyRing::new(field_of(rng), 1);
        let c = CoIdeal::from_degree_bound(2, rng.gen_range(1..=2));
        let r = random_unit_operator_series(rng, ring, &c);
        let e0 = r.eps(Euler::Partial(0))?;
        let e1 = r.eps(Euler::Partial(1))?;
        let lhs = e0.euler_partial(1)?.sub(&e1.euler_partial(0)?)?;
        let rhs = e0.mul(&e1)?.sub(&e1.mul(&e0)?)?;
        Ok(diff(&lhs, &rhs))
    });
    report
}

fn series_eps_linearity(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps(r) = sum_i eps^i(r)", cases, |_| {
        let ring = PolyRing::new(field_of(rng), 1);
        let c = small_coideal(rng, 2, 3);
        let r = random_unit_operator_series(rng, ring, &c);
        let fam = r.bold_eps()?;
        Ok(diff(&r.eps(Euler::Total)?, &fam.sigma_sum()?))
    });
    report
}

fn series_bijections(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps, bold-eps and sigma are bijections over Q", cases, |_| {
        let ring = PolyRing::new(Field::Rational, 1);
        let c = small_coideal(rng, 2, 2);
        let r = random_unit_operator_series(rng, ring, &c);
        let e = r.eps(Euler::Total)?;
        if let Some(w) = diff(&e.eps_inverse()?, &r) {
            return Ok(Some(format!("eps^-1(eps(r)) = r: {w}")));
        }
        let mut delta = random_unit_operator_series(rng, ring, &c);
        delta.set(MultiIndex::zero(c.arity()), LinOp::zero(ring));
        if let Some(w) = diff(&delta.eps_inverse()?.eps(Euler::Total)?, &delta) {
            return Ok(Some(format!("eps(eps^-1(d)) = d: {w}")));
        }
        let fam = r.bold_eps()?;
        if let Err(v) = fam.hh_membership() {
            return Ok(Some(format!("bold-eps(r) is not in HH: {v:?}")));
        }
        let back = fam.sigma_sum()?.sigma_inverse()?;
        if !back.coeff_eq(&fam) {
            return Ok(Some("sigma^-1(sigma(bold-eps(r))) differs from bold-eps(r)".into()));
        }
        Ok(None)
    });
    report
}

fn series_char_p(_: &mut ChaCha8Rng, _: usize) -> Report {
    let mut report = Report::new();
    let field = Field::Prime(5);
    let c = CoIdeal::from_degree_bound(1, 5);
    let delta = Series::monomial(c, MultiIndex::new(vec![1]), field.one()).expect("index in range");
    let witness = match delta.eps_inverse() {
        Err(Error::Characteristic { index, .. }) if index == MultiIndex::new(vec![5]) => None,
        other => Some(format!("expected a characteristic error at (5), got {other:?}")),
    };
    report.record("eps^-1 over F_5 fails at degree 5", 1, witness);
    report
}

// -------------------------------------------------------------------- hs

fn hs_shape(rng: &mut ChaCha8Rng, field: Option<Field>) -> (PolyRing, CoIdeal) {
    let field = field.unwrap_or_else(|| field_of(rng));
    let ring = PolyRing::new(field, rng.gen_range(1..=2));
    (ring, small_coideal(rng, 2, 3))
}

fn hs_group_laws(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "HS composition is the series product, with identity and inverses", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let e = random_hs(rng, ring, &c, 1);
        let f = random_hs(rng, ring, &c, 1);
        let de = d.compose(&e)?;
        if let Some(w) = diff(&de.as_operator_series(), &d.as_operator_series().mul(&e.as_operator_series())?) {
            return Ok(Some(format!("D∘E as operators: {w}")));
        }
        if let Some(w) = hs_diff(&de.compose(&f)?, &d.compose(&e.compose(&f)?)?) {
            return Ok(Some(format!("associativity: {w}")));
        }
        let id = HsDerivation::identity(ring, c.clone());
        if let Some(w) = hs_diff(&d.compose(&d.inverse())?, &id).or(hs_diff(&d.inverse().compose(&d)?, &id)) {
            return Ok(Some(format!("inverse: {w}")));
        }
        let small = c.below_degree(1);
        let lhs = de.truncate(&small)?;
        let rhs = d.truncate(&small)?.compose(&e.truncate(&small)?)?;
        Ok(hs_diff(&lhs, &rhs).map(|w| format!("truncation: {w}")))
    });
    report
}

fn lift(a: &Series<Poly>) -> Series<LinOp> {
    a.map_into(*a.ctx(), |_, f| LinOp::mul_by(f))
}

fn generator_series(ring: PolyRing, c: &CoIdeal, j: usize) -> Series<Poly> {
    Series::monomial(c.clone(), MultiIndex::zero(c.arity()), ring.var(j)).expect("zero index")
}

fn hs_euler_leibniz(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "d(D) a = <d(D), a> D + <D, a> d(D) on generators", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let ops = d.as_operator_series();
        for mode in modes(c.arity()) {
            let dd = ops.euler_with(mode)?;
            for j in 0..ring.n {
                let a = generator_series(ring, &c, j);
                let lhs = dd.mul(&lift(&a))?;
                let rhs = lift(&pairing_apply(&dd, &a)?)
                    .mul(&ops)?
                    .add(&lift(&d.tilde(&a)?).mul(&dd)?)?;
                if let Some(w) = diff(&lhs, &rhs) {
                    return Ok(Some(format!("mode {mode}, x{}: {w}", j + 1)));
                }
            }
        }
        Ok(None)
    });
    report
}

fn hs_eps_routes(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps of an HS-derivation: generator route equals operator route", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        for mode in modes(c.arity()) {
            for bar in [false, true] {
                if let Some(w) = diff(&d.eps(mode, bar)?, &d.eps_from_images(mode, bar)?) {
                    return Ok(Some(format!("mode {mode}, bar {bar}: {w}")));
                }
            }
        }
        Ok(None)
    });
    report
}

fn hs_triangle(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps = sigma ∘ bold-eps, all three bijective over Q", cases, |_| {
        let (ring, c) = hs_shape(rng, Some(Field::Rational));
        let d = random_hs(rng, ring, &c, 1);
        let e = d.eps_from_images(Euler::Total, false)?;
        let fam = d.bold_eps()?;
        if let Err(v) = fam.hh_membership() {
            return Ok(Some(format!("bold-eps(D) is not in HH: {v:?}")));
        }
        if let Some(w) = diff(&fam.sigma_sum()?, &e) {
            return Ok(Some(format!("sigma(bold-eps(D)) = eps(D): {w}")));
        }
        if let Some(w) = hs_diff(&integrate_derivations(&e)?, &d) {
            return Ok(Some(format!("eps^-1(eps(D)) = D: {w}")));
        }
        let delta = random_derivation_series(rng, ring, &c, 1);
        if let Some(w) = diff(&integrate_derivations(&delta)?.eps_from_images(Euler::Total, false)?, &delta) {
            return Ok(Some(format!("eps(eps^-1(delta)) = delta: {w}")));
        }
        let solved = delta.sigma_inverse()?;
        if !solved.coeff_eq(&sigma_inverse_via_eps(&delta)?) {
            return Ok(Some("sigma^-1 by linear solve differs from bold-eps ∘ eps^-1".into()));
        }
        Ok(None)
    });
    report
}

fn hs_char_p(_: &mut ChaCha8Rng, _: usize) -> Report {
    let mut report = Report::new();
    let ring = PolyRing::new(Field::Prime(5), 1);
    let delta_on = |m: u32| {
        let c = CoIdeal::from_degree_bound(1, m);
        Series::monomial(c, MultiIndex::new(vec![1]), ClassicalDerivation::partial(ring, 0)).expect("in range")
    };
    let witness = match integrate_derivations(&delta_on(5)) {
        Err(Error::Characteristic { index, .. }) if index == MultiIndex::new(vec![5]) => None,
        other => Some(format!("expected a characteristic error at (5), got {other:?}")),
    };
    report.record("integration over F_5 fails at degree 5", 1, witness);
    let short = delta_on(4);
    let witness = match integrate_derivations(&short).and_then(|d| d.eps_from_images(Euler::Total, false)) {
        Ok(e) => diff(&e, &short),
        Err(err) => Some(err.to_string()),
    };
    report.record("integration over F_5 below degree 5 round-trips", 1, witness);
    report
}

fn hs_elements(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "product of a D-element and an E-element is a (D∘E)-element", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let e = random_hs(rng, ring, &c, 1);
        let r = random_d_element(rng, &d);
        let s = random_d_element(rng, &e);
        Ok(d_element_check(&r.mul(&s)?, &d.compose(&e)?)?.err().map(|v| v.to_string()))
    });
    cases_of(&mut report, "d(r) a = <d(D), a> r + <D, a> d(r) for D-elements r", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let r = random_d_element(rng, &d);
        let dops = d.as_operator_series();
        for mode in modes(c.arity()) {
            let dr = r.euler_with(mode)?;
            let dd = dops.euler_with(mode)?;
            for j in 0..ring.n {
                let a = generator_series(ring, &c, j);
                let lhs = dr.mul(&lift(&a))?;
                let rhs = lift(&pairing_apply(&dd, &a)?)
                    .mul(&r)?
                    .add(&lift(&d.tilde(&a)?).mul(&dr)?)?;
                if let Some(w) = diff(&lhs, &rhs) {
                    return Ok(Some(format!("mode {mode}, x{}: {w}", j + 1)));
                }
            }
        }
        Ok(None)
    });
    cases_of(&mut report, "eps(r) and eps-bar(r) are eps(D)- and eps-bar(D)-elements", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let r = random_d_element(rng, &d);
        for mode in modes(c.arity()) {
            for bar in [false, true] {
                let er = if bar { r.eps_bar(mode)? } else { r.eps(mode)? };
                let ed = d.eps_from_images(mode, bar)?;
                if let Err(v) = delta_element_check(&er, &ed)? {
                    return Ok(Some(format!("mode {mode}, bar {bar}: {v}")));
                }
            }
        }
        Ok(None)
    });
    report
}

fn hs_characterization(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "HS-derivations satisfy Leibniz and r a = r~(a) r", cases, |c| {
        let (ring, co) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &co, 1);
        let sub = verify_hs(&d.as_operator_series(), 5, 3, c as u64);
        Ok(first_failure(&sub))
    });
    cases_of(&mut report, "every HS-derivation is accepted by the eps test", cases, |_| {
        let (ring, c) = hs_shape(rng, Some(Field::Rational));
        let d = random_hs(rng, ring, &c, 1);
        Ok(match characterize_unit(&d.as_operator_series())? {
            Characterization::Accepted(back) => hs_diff(&back, &d),
            Characterization::Rejected { index, witness } => {
                Some(format!("rejected at {index} on x^{witness}"))
            }
        })
    });
    cases_of(&mut report, "a unit with second-order eps coefficient is rejected", 1, |_| {
        let ring = PolyRing::new(Field::Rational, 1);
        let c = CoIdeal::from_degree_bound(1, 1);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(ring, 0));
        let r = Series::from_coeffs(
            c,
            ring,
            [(MultiIndex::new(vec![0]), LinOp::identity(ring)), (MultiIndex::new(vec![1]), dx.compose(&dx))],
        )?;
        Ok(match characterize_unit(&r)? {
            Characterization::Rejected { .. } => None,
            Characterization::Accepted(_) => Some("accepted".into()),
        })
    });
    cases_of(&mut report, "derivation series satisfy [r, a] = r~(a)", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let delta = derivation_series_as_operators(&random_derivation_series(rng, ring, &c, 1));
        let a = random_poly_series(rng, ring, &c, 2);
        Ok(diff(&commutator_with_poly_series(&delta, &a)?, &lift(&pairing_apply(&delta, &a)?)))
    });
    cases_of(&mut report, "a second-order series violates [r, a] = r~(a)", 1, |_| {
        let ring = PolyRing::new(Field::Rational, 1);
        let c = CoIdeal::from_degree_bound(1, 1);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(ring, 0));
        let r = Series::monomial(c.clone(), MultiIndex::new(vec![1]), dx.compose(&dx))?;
        let a = Series::monomial(c, MultiIndex::new(vec![0]), ring.parse("x^2")?)?;
        let holds = commutator_with_poly_series(&r, &a)? == lift(&pairing_apply(&r, &a)?);
        Ok(holds.then(|| "identity holds for a non-derivation".to_string()))
    });
    report
}

fn hs_closed_forms(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps_1 = D_1, eps_2 = 2D_2 - D_1^2, eps_3 = 3D_3 - 2D_1D_2 - D_2D_1 + D_1^3", cases, |_| {
        let ring = PolyRing::new(field_of(rng), rng.gen_range(1..=2));
        let c = CoIdeal::from_degree_bound(1, 3);
        let d = random_hs(rng, ring, &c, 3);
        let e = d.eps(Euler::Total, false)?;
        let comp = |k: u32| d.component(&MultiIndex::new(vec![k]));
        let (d1, d2, d3) = (comp(1)?, comp(2)?, comp(3)?);
        let k = ring.field;
        let expected = [
            d1.clone(),
            d2.scale(&k.int(2)).sub(&d1.compose(&d1)),
            d3.scale(&k.int(3))
                .sub(&d1.compose(&d2).scale(&k.int(2)))
                .sub(&d2.compose(&d1))
                .add(&d1.compose(&d1).compose(&d1)),
        ];
        for (i, want) in expected.iter().enumerate() {
            let got = LinOp::derivation(&e.coeff(&MultiIndex::new(vec![i as u32 + 1])));
            if let Some(m) = got.find_difference(want) {
                return Ok(Some(format!("eps_{} differs on x^{m}", i + 1)));
            }
        }
        Ok(None)
    });
    report
}

fn hs_xi(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "D* (sigma^i • D) = xi(eps^i(D)) and D* (sigma • D) = xi(eps(D))", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let d = random_hs(rng, ring, &c, 1);
        let iota = SubstMap::iota(ring, c.clone());
        let left = iota.act_on_hs(&d.inverse())?;
        for i in 0..c.arity() {
            let sigma = SubstMap::sigma_i(ring, c.clone(), i)?;
            let lhs = left.compose(&sigma.act_on_hs(&d)?)?;
            let rhs = xi_hs(&d.eps_from_images(Euler::Partial(i), false)?)?;
            if let Some(w) = hs_diff(&lhs, &rhs) {
                return Ok(Some(format!("i = {}: {w}", i + 1)));
            }
        }
        let lhs = left.compose(&SubstMap::sigma(ring, c.clone()).act_on_hs(&d)?)?;
        let rhs = xi_hs(&d.eps_from_images(Euler::Total, false)?)?;
        Ok(hs_diff(&lhs, &rhs).map(|w| format!("total: {w}")))
    });
    report
}

// ----------------------------------------------------------------- subst

struct SubstShape {
    ring: PolyRing,
    source: CoIdeal,
    target: CoIdeal,
}

/// Degree-bounded shapes with the target bound at most the source bound,
/// so that every choice of images of order `≥ 1` is well defined.
fn subst_shape(rng: &mut ChaCha8Rng, field: Option<Field>) -> SubstShape {
    let field = field.unwrap_or_else(|| field_of(rng));
    let ring = PolyRing::new(field, rng.gen_range(1..=2));
    let p = rng.gen_range(1..=2);
    let q = rng.gen_range(1..=2);
    let m = rng.gen_range(1..=2);
    let source = CoIdeal::from_degree_bound(p, m);
    let target = CoIdeal::from_degree_bound(q, rng.gen_range(1..=m));
    SubstShape { ring, source, target }
}

fn subst_on(rng: &mut ChaCha8Rng, s: &SubstShape, max_deg: u32) -> SubstMap {
    random_subst(rng, s.ring, &s.source, &s.target, max_deg).expect("degree-bounded shapes are well defined")
}

/// `Σ_α a_α Π_i φ(s_i)^{α_i}` by repeated products, ignoring the cached
/// power table.
fn direct_substitution(phi: &SubstMap, a: &Series<Poly>) -> Result<Series<Poly>> {
    let target = phi.target().clone();
    let ring = phi.ring();
    let mut out = Series::zero(target.clone(), ring);
    for (alpha, c) in a.iter() {
        let mut term = Series::monomial(target.clone(), MultiIndex::zero(target.arity()), c.clone())?;
        for (i, &k) in alpha.entries().iter().enumerate() {
            for _ in 0..k {
                term = term.mul(phi.image(i))?;
            }
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

fn subst_expansion(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "phi(a) equals direct substitution of the images", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let a = random_poly_series(rng, s.ring, &s.source, 2);
        Ok(diff(&phi.apply(&a)?, &direct_substitution(&phi, &a)?))
    });
    cases_of(&mut report, "phi(ab) = phi(a) phi(b)", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let a = random_poly_series(rng, s.ring, &s.source, 2);
        let b = random_poly_series(rng, s.ring, &s.source, 2);
        Ok(diff(&phi.apply(&a.mul(&b)?)?, &phi.apply(&a)?.mul(&phi.apply(&b)?)?))
    });
    cases_of(&mut report, "psi(phi(a)) = (psi ∘ phi)(a) and psi • (phi • r) = (psi ∘ phi) • r", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let t = SubstShape {
            ring: s.ring,
            source: s.target.clone(),
            target: CoIdeal::from_degree_bound(rng.gen_range(1..=2), s.target.max_degree()),
        };
        let psi = subst_on(rng, &t, 1);
        let both = psi.compose(&phi)?;
        let a = random_poly_series(rng, s.ring, &s.source, 2);
        if let Some(w) = diff(&psi.apply(&phi.apply(&a)?)?, &both.apply(&a)?) {
            return Ok(Some(format!("apply: {w}")));
        }
        let r = random_unit_operator_series(rng, s.ring, &s.source);
        if let Some(w) = diff(&psi.act_left(&phi.act_left(&r)?)?, &both.act_left(&r)?) {
            return Ok(Some(format!("left action: {w}")));
        }
        Ok(diff(&psi.act_right(&phi.act_right(&r)?)?, &both.act_right(&r)?).map(|w| format!("right action: {w}")))
    });
    cases_of(&mut report, "constant-coefficient phi is multiplicative on operator series", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 0);
        let r = random_unit_operator_series(rng, s.ring, &s.source);
        let r2 = random_unit_operator_series(rng, s.ring, &s.source);
        Ok(diff(&phi.act_left(&r.mul(&r2)?)?, &phi.act_left(&r)?.mul(&phi.act_left(&r2)?)?))
    });
    report
}

fn subst_hs_laws(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "components of phi • D are sum_alpha C_e(phi, alpha) D_alpha", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        Ok(diff(&phi.act_on_hs(&d)?.as_operator_series(), &phi.act_left(&d.as_operator_series())?))
    });
    cases_of(&mut report, "psi • (phi • D) = (psi ∘ phi) • D", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let t = SubstShape {
            ring: s.ring,
            source: s.target.clone(),
            target: CoIdeal::from_degree_bound(rng.gen_range(1..=2), s.target.max_degree()),
        };
        let psi = subst_on(rng, &t, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        Ok(hs_diff(&psi.act_on_hs(&phi.act_on_hs(&d)?)?, &psi.compose(&phi)?.act_on_hs(&d)?))
    });
    cases_of(&mut report, "0 • D = I", cases, |_| {
        let s = subst_shape(rng, None);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let zero = SubstMap::trivial(s.ring, s.source.clone(), s.target.clone());
        Ok(hs_diff(&zero.act_on_hs(&d)?, &HsDerivation::identity(s.ring, s.target.clone())))
    });
    report
}

fn subst_twist_laws(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "(phi • D)~ ∘ phi^D = phi ∘ D~ and the C-recursion", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let phi_d = phi.twisted(&d)?;
        if !phi.twisted_identity_check(&d, &phi_d)? {
            return Ok(Some("defining identity fails".into()));
        }
        Ok(phi
            .c_recursion_check(&d, &phi_d)
            .map(|(e, f, nu)| format!("C-recursion fails at e={e}, f={f}, nu={nu}")))
    });
    cases_of(&mut report, "(phi • D)* = phi^D • D* and (phi^D)^(D*) = phi", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let phi_d = phi.twisted(&d)?;
        if let Some(w) = hs_diff(&phi.act_on_hs(&d)?.inverse(), &phi_d.act_on_hs(&d.inverse())?) {
            return Ok(Some(format!("inverse law: {w}")));
        }
        Ok(subst_diff(&phi_d.twisted(&d.inverse())?, &phi).map(|w| format!("untwisting: {w}")))
    });
    cases_of(&mut report, "phi • (D ∘ E) = (phi • D) ∘ (phi^D • E) and (phi^D)^E = phi^(D ∘ E)", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let e = random_hs(rng, s.ring, &s.source, 1);
        let de = d.compose(&e)?;
        let phi_d = phi.twisted(&d)?;
        let rhs = phi.act_on_hs(&d)?.compose(&phi_d.act_on_hs(&e)?)?;
        if let Some(w) = hs_diff(&phi.act_on_hs(&de)?, &rhs) {
            return Ok(Some(format!("action on products: {w}")));
        }
        Ok(subst_diff(&phi_d.twisted(&e)?, &phi.twisted(&de)?).map(|w| format!("iterated twist: {w}")))
    });
    cases_of(&mut report, "(phi ∘ psi)^D = phi^(psi • D) ∘ psi^D", cases, |_| {
        let s = subst_shape(rng, None);
        let psi = subst_on(rng, &s, 1);
        let t = SubstShape {
            ring: s.ring,
            source: s.target.clone(),
            target: CoIdeal::from_degree_bound(rng.gen_range(1..=2), s.target.max_degree()),
        };
        let phi = subst_on(rng, &t, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let lhs = phi.compose(&psi)?.twisted(&d)?;
        let rhs = phi.twisted(&psi.act_on_hs(&d)?)?.compose(&psi.twisted(&d)?)?;
        Ok(subst_diff(&lhs, &rhs))
    });
    cases_of(&mut report, "constant-coefficient phi has phi^D = phi; phi^I = phi", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 0);
        let d = random_hs(rng, s.ring, &s.source, 1);
        if let Some(w) = subst_diff(&phi.twisted(&d)?, &phi) {
            return Ok(Some(format!("constant coefficients: {w}")));
        }
        let general = subst_on(rng, &s, 1);
        let id = HsDerivation::identity(s.ring, s.source.clone());
        Ok(subst_diff(&general.twisted(&id)?, &general).map(|w| format!("identity twist: {w}")))
    });
    report
}

fn subst_truncation(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "truncation commutes with the action: tau(phi • D) = phi' • tau(D)", cases, |_| {
        let ring = PolyRing::new(field_of(rng), rng.gen_range(1..=2));
        let p = rng.gen_range(1..=2);
        let q = rng.gen_range(1..=2);
        let s = SubstShape {
            ring,
            source: CoIdeal::from_degree_bound(p, 3),
            target: CoIdeal::from_degree_bound(q, 3),
        };
        let phi = subst_on(rng, &s, 1);
        let small_s = CoIdeal::from_degree_bound(p, 1);
        let small_t = CoIdeal::from_degree_bound(q, 1);
        let images = phi
            .images()
            .iter()
            .map(|img| img.truncate(&small_t))
            .collect::<Result<Vec<_>>>()?;
        let phi_small = SubstMap::from_images(ring, small_s.clone(), small_t.clone(), images)?;
        let d = random_hs(rng, ring, &s.source, 1);
        let lhs = phi.act_on_hs(&d)?.truncate(&small_t)?;
        let rhs = phi_small.act_on_hs(&d.truncate(&small_s)?)?;
        Ok(hs_diff(&lhs, &rhs))
    });
    cases_of(&mut report, "the truncation map acts as truncation", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let small = c.below_degree(1);
        let tau = SubstMap::truncation(ring, c.clone(), small.clone())?;
        let d = random_hs(rng, ring, &c, 1);
        Ok(hs_diff(&tau.act_on_hs(&d)?, &d.truncate(&small)?))
    });
    report
}

fn subst_taylor(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "sigma^i(a) = a + chi^i(a) tau", cases, |_| {
        let (ring, c) = hs_shape(rng, None);
        let a = random_poly_series(rng, ring, &c, 2);
        let iota = SubstMap::iota(ring, c.clone());
        for i in 0..c.arity() {
            let sigma = SubstMap::sigma_i(ring, c.clone(), i)?;
            let mut rhs = iota.apply(&a)?;
            for (alpha, f) in a.euler_partial(i)?.iter() {
                rhs.accumulate(alpha.extend(1), f);
            }
            if let Some(w) = diff(&sigma.apply(&a)?, &rhs) {
                return Ok(Some(format!("i = {}: {w}", i + 1)));
            }
        }
        let total = SubstMap::sigma(ring, c.clone());
        let mut rhs = iota.apply(&a)?;
        for (alpha, f) in a.euler().iter() {
            rhs.accumulate(alpha.extend(1), f);
        }
        Ok(diff(&total.apply(&a)?, &rhs).map(|w| format!("total: {w}")))
    });
    report
}

fn subst_bullet_elements(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "phi • r is a (phi • D)-element; phi • (r r') = (phi • r)(phi^D • r')", cases, |_| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let r = random_d_element(rng, &d);
        let pushed = phi.act_left(&r)?;
        if let Err(v) = d_element_check(&pushed, &phi.act_on_hs(&d)?)? {
            return Ok(Some(format!("element law: {v}")));
        }
        let phi_d = phi.twisted(&d)?;
        let r2 = random_unit_operator_series(rng, s.ring, &s.source);
        if let Some(w) = diff(&phi.act_left(&r.mul(&r2)?)?, &pushed.mul(&phi_d.act_left(&r2)?)?) {
            return Ok(Some(format!("product law: {w}")));
        }
        Ok(diff(&pushed.inverse()?, &phi_d.act_left(&r.inverse()?)?).map(|w| format!("inverse law: {w}")))
    });
    report
}

fn subst_pullback(rng: &mut ChaCha8Rng, cases: usize) -> Report {
    let mut report = Report::new();
    cases_of(&mut report, "eps^j_e(phi • r) = sum N^{j,i}_{e,h} eps^i_h(r)", cases, |c| {
        let s = subst_shape(rng, None);
        let phi = subst_on(rng, &s, 1);
        let d = random_hs(rng, s.ring, &s.source, 1);
        let r = if c % 2 == 0 { d.as_operator_series() } else { random_d_element(rng, &d) };
        let sub = eps_pullback_check(&phi, &d, &r)?;
        Ok(first_failure(&sub))
    });
    report
}
