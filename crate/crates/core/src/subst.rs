//! Substitution maps `φ: A[[s]]_Δ → A[[t]]_∇`, their coefficient tables
//! `C_e(φ,α)`, their actions on series and HS-derivations, the twisted maps
//! `φ^D` and the coefficients `N^{j,i}_{e,h}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::algebra::{Poly, PolyRing};
use crate::error::{Error, Result};
use crate::hs::{d_element_check, HsDerivation};
use crate::index::{CoIdeal, MultiIndex};
use crate::operator::LinOp;
use crate::report::Report;
use crate::series::{Euler, LeftPolyModule, RightPolyModule, Series};

#[derive(Debug, PartialEq, Eq)]
struct SubstInner {
    ring: PolyRing,
    source: CoIdeal,
    target: CoIdeal,
    images: Vec<Series<Poly>>,
    /// `φ(s^α)` for every `α ∈ Δ`.
    powers: BTreeMap<MultiIndex, Series<Poly>>,
}

/// A substitution map, with its table `φ(s^α)` filled at construction.
#[derive(Clone, Debug)]
pub struct SubstMap(Arc<SubstInner>);

impl PartialEq for SubstMap {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.ring == other.0.ring
                && self.0.source == other.0.source
                && self.0.target == other.0.target
                && self.0.images == other.0.images)
    }
}

impl Eq for SubstMap {}

impl SubstMap {
    /// The map with `φ(s_i) = images[i]`.
    ///
    /// Each image needs order `≥ 1`, and `φ(s^β)` must vanish in `∇` for
    /// every `β` outside `Δ`, otherwise the map does not factor through
    /// the truncation.
    pub fn from_images(
        ring: PolyRing,
        source: CoIdeal,
        target: CoIdeal,
        images: Vec<Series<Poly>>,
    ) -> Result<Self> {
        let p = source.arity();
        if images.len() != p {
            return Err(Error::ArityMismatch {
                what: "substitution images",
                expected: p,
                found: images.len(),
            });
        }
        for (i, img) in images.iter().enumerate() {
            if *img.coideal() != target {
                return Err(Error::CoIdealMismatch);
            }
            if *img.ctx() != ring {
                return Err(Error::ContextMismatch);
            }
            if !img.constant_term().is_zero() {
                return Err(Error::OrderViolation { image: i });
            }
        }
        let mut powers = BTreeMap::new();
        powers.insert(MultiIndex::zero(p), Series::one(target.clone(), ring));
        let step = |powers: &BTreeMap<MultiIndex, Series<Poly>>, alpha: &MultiIndex| {
            let i = alpha.support()[0];
            let lower = alpha.checked_sub(&MultiIndex::unit(p, i)).expect("in support");
            powers[&lower].mul(&images[i]).expect("shared shape")
        };
        for alpha in source.iter().skip(1) {
            let v = step(&powers, alpha);
            powers.insert(alpha.clone(), v);
        }
        for beta in source.border() {
            let i = beta.support()[0];
            let lower = beta.checked_sub(&MultiIndex::unit(p, i)).expect("in support");
            if !powers[&lower].mul(&images[i]).expect("shared shape").is_zero() {
                return Err(Error::NotWellDefined { index: beta });
            }
        }
        Ok(SubstMap(Arc::new(SubstInner {
            ring,
            source,
            target,
            images,
            powers,
        })))
    }

    /// The map sending every `s_i` to `0`.
    pub fn trivial(ring: PolyRing, source: CoIdeal, target: CoIdeal) -> Self {
        let images = vec![Series::zero(target.clone(), ring); source.arity()];
        Self::from_images(ring, source, target, images).expect("the trivial map is well defined")
    }

    /// `s_i ↦ s_i` into a target of the same arity contained in the source.
    pub fn truncation(ring: PolyRing, source: CoIdeal, target: CoIdeal) -> Result<Self> {
        if !target.is_subset(&source) {
            return Err(Error::NotSubset(target.to_string()));
        }
        Self::coordinate_map(ring, source, target)
    }

    /// `s_i ↦ s_i` on one co-ideal.
    pub fn identity(ring: PolyRing, coideal: CoIdeal) -> Self {
        Self::coordinate_map(ring, coideal.clone(), coideal).expect("identity is well defined")
    }

    fn coordinate_map(ring: PolyRing, source: CoIdeal, target: CoIdeal) -> Result<Self> {
        let p = source.arity();
        let images = (0..p)
            .map(|i| {
                let mut s = Series::zero(target.clone(), ring);
                let v = MultiIndex::unit(p, i);
                if target.contains(&v) {
                    s.set(v, ring.one());
                }
                s
            })
            .collect();
        Self::from_images(ring, source, target, images)
    }

    /// `σ^i: s_i ↦ s_i + s_i τ`, `s_j ↦ s_j` into `Δ × {0,1}` (0-based `i`).
    pub fn sigma_i(ring: PolyRing, coideal: CoIdeal, i: usize) -> Result<Self> {
        let p = coideal.arity();
        if i >= p {
            return Err(Error::AxisOutOfRange { axis: i, arity: p });
        }
        Ok(Self::taylor(ring, coideal, |j| j == i))
    }

    /// `σ: s_i ↦ s_i + s_i τ` for every `i`.
    pub fn sigma(ring: PolyRing, coideal: CoIdeal) -> Self {
        Self::taylor(ring, coideal, |_| true)
    }

    /// `ι: s_i ↦ s_i`, the inclusion into `Δ × {0,1}`.
    pub fn iota(ring: PolyRing, coideal: CoIdeal) -> Self {
        Self::taylor(ring, coideal, |_| false)
    }

    fn taylor(ring: PolyRing, coideal: CoIdeal, shifted: impl Fn(usize) -> bool) -> Self {
        let p = coideal.arity();
        let target = coideal.product_with_unit_interval();
        let images = (0..p)
            .map(|i| {
                let mut s = Series::zero(target.clone(), ring);
                let v = MultiIndex::unit(p, i);
                if coideal.contains(&v) {
                    s.set(v.extend(0), ring.one());
                    if shifted(i) {
                        s.set(v.extend(1), ring.one());
                    }
                }
                s
            })
            .collect();
        Self::from_images(ring, coideal, target, images).expect("Taylor maps are well defined")
    }

    pub fn ring(&self) -> PolyRing {
        self.0.ring
    }

    pub fn source(&self) -> &CoIdeal {
        &self.0.source
    }

    pub fn target(&self) -> &CoIdeal {
        &self.0.target
    }

    pub fn images(&self) -> &[Series<Poly>] {
        &self.0.images
    }

    pub fn image(&self, i: usize) -> &Series<Poly> {
        &self.0.images[i]
    }

    /// `φ(s^α)`; zero for `α ∉ Δ`.
    pub fn power(&self, alpha: &MultiIndex) -> Series<Poly> {
        self.0
            .powers
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| Series::zero(self.target().clone(), self.ring()))
    }

    /// `C_e(φ, α)`; zero for `α ∉ Δ`.
    pub fn c(&self, e: &MultiIndex, alpha: &MultiIndex) -> Poly {
        match self.0.powers.get(alpha) {
            Some(s) => s.coeff(e),
            None => self.ring().zero(),
        }
    }

    /// Nonzero entries `(e, α, C_e(φ,α))`, by `α` then `e`.
    pub fn coeff_table(&self) -> Vec<(MultiIndex, MultiIndex, Poly)> {
        self.0
            .powers
            .iter()
            .flat_map(|(alpha, s)| s.iter().map(move |(e, c)| (e.clone(), alpha.clone(), c.clone())))
            .collect()
    }

    /// Whether every image has coefficients in `k`.
    pub fn has_constant_coefficients(&self) -> bool {
        self.images()
            .iter()
            .all(|s| s.iter().all(|(_, c)| c.is_constant()))
    }

    fn check_source<C: crate::series::Coeff>(&self, a: &Series<C>) -> Result<()> {
        if a.coideal() != self.source() {
            return Err(Error::CoIdealMismatch);
        }
        Ok(())
    }

    /// `φ(Σ a_α s^α) = Σ_e (Σ_α C_e(φ,α) a_α) t^e`.
    pub fn apply(&self, a: &Series<Poly>) -> Result<Series<Poly>> {
        self.act_left(a)
    }

    /// `φ•r = Σ_e (Σ_α C_e(φ,α) r_α) t^e`.
    pub fn act_left<C: LeftPolyModule>(&self, r: &Series<C>) -> Result<Series<C>> {
        self.check_source(r)?;
        let mut out = Series::zero(self.target().clone(), r.ctx().clone());
        for (alpha, x) in r.iter() {
            for (e, c) in self.power(alpha).iter() {
                out.accumulate(e.clone(), &x.poly_left(c));
            }
        }
        Ok(out)
    }

    /// `r•φ = Σ_e (Σ_α r_α C_e(φ,α)) t^e`.
    pub fn act_right<C: RightPolyModule>(&self, r: &Series<C>) -> Result<Series<C>> {
        self.check_source(r)?;
        let mut out = Series::zero(self.target().clone(), r.ctx().clone());
        for (alpha, x) in r.iter() {
            for (e, c) in self.power(alpha).iter() {
                out.accumulate(e.clone(), &x.poly_right(c));
            }
        }
        Ok(out)
    }

    /// `φ•D`, through `Φ_{φ•D} = φ ∘ Φ_D`.
    pub fn act_on_hs(&self, d: &HsDerivation) -> Result<HsDerivation> {
        if d.coideal() != self.source() {
            return Err(Error::CoIdealMismatch);
        }
        if d.ring() != self.ring() {
            return Err(Error::ContextMismatch);
        }
        let images = d
            .images()
            .iter()
            .map(|img| self.apply(img))
            .collect::<Result<Vec<_>>>()?;
        HsDerivation::from_generator_images(self.ring(), self.target().clone(), images)
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &SubstMap) -> Result<SubstMap> {
        if inner.target() != self.source() {
            return Err(Error::CoIdealMismatch);
        }
        if inner.ring() != self.ring() {
            return Err(Error::ContextMismatch);
        }
        let images = inner
            .images()
            .iter()
            .map(|img| self.apply(img))
            .collect::<Result<Vec<_>>>()?;
        SubstMap::from_images(self.ring(), inner.source().clone(), self.target().clone(), images)
    }

    /// `φ^D`: the map with `(φ•D)~ ∘ φ^D = φ ∘ D̃`, obtained as
    /// `φ^D(s_i) = ((φ•D)*)~(φ(s_i))`.
    pub fn twisted(&self, d: &HsDerivation) -> Result<SubstMap> {
        let e_inv = self.act_on_hs(d)?.inverse();
        let images = self
            .images()
            .iter()
            .map(|img| e_inv.tilde(img))
            .collect::<Result<Vec<_>>>()?;
        SubstMap::from_images(self.ring(), self.source().clone(), self.target().clone(), images)
    }

    /// Checks `(φ•D)~(φ^D(a)) = φ(D̃(a))` on `a = s_i` and `a = x_j`.
    pub fn twisted_identity_check(&self, d: &HsDerivation, phi_d: &SubstMap) -> Result<bool> {
        let e = self.act_on_hs(d)?;
        let ring = self.ring();
        let p = self.source().arity();
        let zero = MultiIndex::zero(p);
        for i in 0..p {
            let v = MultiIndex::unit(p, i);
            if !self.source().contains(&v) {
                continue;
            }
            let s_i = Series::monomial(self.source().clone(), v, ring.one())?;
            let lhs = e.tilde(&phi_d.apply(&s_i)?)?;
            let rhs = self.apply(&d.tilde(&s_i)?)?;
            if lhs != rhs {
                return Ok(false);
            }
        }
        for j in 0..ring.n {
            let x = Series::monomial(self.source().clone(), zero.clone(), ring.var(j))?;
            let lhs = e.tilde(&phi_d.apply(&x)?)?;
            let rhs = self.apply(&d.tilde(&x)?)?;
            if lhs != rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks
    /// `C_e(φ, f+ν) = Σ_{β+γ=e} Σ_g C_β(φ, f+g) D_g(C_γ(φ^D, ν))`
    /// over `e ∈ ∇` and `f, ν ∈ Δ` with `f + ν ∈ Δ`. Returns the first
    /// failing `(e, f, ν)`.
    pub fn c_recursion_check(
        &self,
        d: &HsDerivation,
        phi_d: &SubstMap,
    ) -> Option<(MultiIndex, MultiIndex, MultiIndex)> {
        let source = self.source();
        let ring = self.ring();
        for nu in source.iter() {
            // D_g(C_γ(φ^D, ν)) for every γ ∈ ∇, all g at once
            let images: BTreeMap<MultiIndex, Series<Poly>> = self
                .target()
                .iter()
                .map(|gamma| (gamma.clone(), d.phi_apply(&phi_d.c(gamma, nu))))
                .collect();
            for f in source.iter() {
                let fn_ = f + nu;
                if !source.contains(&fn_) {
                    continue;
                }
                for e in self.target().iter() {
                    let lhs = self.c(e, &fn_);
                    let mut rhs = ring.zero();
                    for beta in e.divisors() {
                        if !self.target().contains(&beta) {
                            continue;
                        }
                        let gamma = e.checked_sub(&beta).expect("divisor");
                        for (g, dg) in images[&gamma].iter() {
                            let c = self.c(&beta, &(f + g));
                            if !c.is_zero() {
                                rhs = &rhs + &(&c * dg);
                            }
                        }
                    }
                    if lhs != rhs {
                        return Some((e.clone(), f.clone(), nu.clone()));
                    }
                }
            }
        }
        None
    }
}

impl fmt::Display for SubstMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, img) in self.images().iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "s{} -> {img}", i + 1)?;
        }
        Ok(())
    }
}

/// The family `N^{j,i}_{e,h}` (0-based `j`, `i`); absent keys are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NTable {
    pub entries: BTreeMap<(usize, usize, MultiIndex, MultiIndex), Poly>,
}

impl NTable {
    pub fn get(&self, j: usize, i: usize, e: &MultiIndex, h: &MultiIndex, ring: PolyRing) -> Poly {
        self.entries
            .get(&(j, i, e.clone(), h.clone()))
            .cloned()
            .unwrap_or_else(|| ring.zero())
    }
}

/// `N^{j,i}_{e,h} = Σ g_j C_f(φ^D, β+h−v^i) D*_β(C_g(φ, v^i))` over
/// `f + g = e`, `β ∈ Δ`, `|β+h| − 1 ≤ |f|`, `g_j > 0`, for `e_j, h_i > 0`
/// and `|h| ≤ |e|`; zero otherwise.
pub fn n_coefficients(phi: &SubstMap, d: &HsDerivation) -> Result<NTable> {
    let phi_d = phi.twisted(d)?;
    let d_inv = d.inverse();
    let ring = phi.ring();
    let field = ring.field;
    let source = phi.source();
    let target = phi.target();
    let p = source.arity();
    let q = target.arity();
    let mut entries = BTreeMap::new();
    for i in 0..p {
        let vi = MultiIndex::unit(p, i);
        // D*_β(C_g(φ, v^i)) for every g, as a series in β
        let inner: BTreeMap<MultiIndex, Series<Poly>> = target
            .iter()
            .map(|g| (g.clone(), d_inv.phi_apply(&phi.c(g, &vi))))
            .collect();
        for j in 0..q {
            for e in target.iter().filter(|e| e.get(j) > 0) {
                for h in source.iter().filter(|h| h.get(i) > 0 && h.degree() <= e.degree()) {
                    let mut acc = ring.zero();
                    for g in e.divisors().into_iter().filter(|g| g.get(j) > 0) {
                        let f = e.checked_sub(&g).expect("divisor");
                        for (beta, dv) in inner[&g].iter() {
                            if (beta + h).degree() > f.degree() + 1 {
                                continue;
                            }
                            let idx = (beta + h).checked_sub(&vi).expect("h_i > 0");
                            let c = phi_d.c(&f, &idx);
                            if c.is_zero() {
                                continue;
                            }
                            acc = &acc + &(&c * dv).scale(&field.int(g.get(j) as i64));
                        }
                    }
                    if !acc.is_zero() {
                        entries.insert((j, i, e.clone(), h.clone()), acc);
                    }
                }
            }
        }
    }
    Ok(NTable { entries })
}

/// Compares `ε^j_e(φ•r)`, computed directly, with
/// `Σ_{0<|h|≤|e|, i ∈ supp h} N^{j,i}_{e,h} ε^i_h(r)` for every `j` and
/// `e ∈ ∇`. The first entry of the report checks that `r` is a `D`-element.
pub fn eps_pullback_check(phi: &SubstMap, d: &HsDerivation, r: &Series<LinOp>) -> Result<Report> {
    let mut report = Report::new();
    let element = d_element_check(r, d)?;
    report.record(
        "r is a D-element",
        1,
        element.err().map(|v| format!("fails at {v}")),
    );
    if !report.passed() {
        return Ok(report);
    }
    let ring = phi.ring();
    let n = n_coefficients(phi, d)?;
    let pushed = phi.act_left(r)?;
    let pushed_inv = pushed.inverse()?;
    let r_inv = r.inverse()?;
    let p = phi.source().arity();
    let q = phi.target().arity();
    let eps_r = (0..p)
        .map(|i| r.eps_given_inverse(&r_inv, Euler::Partial(i)))
        .collect::<Result<Vec<_>>>()?;
    for j in 0..q {
        let lhs_series = pushed.eps_given_inverse(&pushed_inv, Euler::Partial(j))?;
        for e in phi.target().iter() {
            let lhs = lhs_series.coeff(e);
            let mut rhs = LinOp::zero(ring);
            for h in phi.source().iter() {
                if h.is_zero() || h.degree() > e.degree() {
                    continue;
                }
                for i in h.support() {
                    let c = n.get(j, i, e, h, ring);
                    if c.is_zero() {
                        continue;
                    }
                    rhs = rhs.add(&LinOp::mul_by(&c).compose(&eps_r[i].coeff(h)));
                }
            }
            let witness = lhs
                .find_difference(&rhs)
                .map(|m| format!("operators differ on x^{m}"));
            report.record(format!("pullback formula at j={}, e={e}", j + 1), 1, witness);
        }
    }
    Ok(report)
}
