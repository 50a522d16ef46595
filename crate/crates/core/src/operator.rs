//! `k`-linear operators on `A = k[x_1, ..., x_n]`, kept as sums of
//! composition chains of primitives, with a tracked differential order.
//!
//! # Equality
//!
//! Every operator built here is a differential operator of order at most
//! its [`LinOp::order_bound`]. Such an operator `P` of order `≤ N` is fixed
//! by its values on the monomials of degree `≤ N`: write
//! `P = Σ_{|γ|≤N} c_γ ∂^{(γ)}` with divided-power derivatives `∂^{(γ)}`
//! (`∂^{(γ)} x^μ = binom(μ, γ) x^{μ−γ}`), which exist over any field. Then
//! `P(x^μ) = Σ_{γ≤μ} c_γ binom(μ, γ) x^{μ−γ}` and, going up through the
//! monomials by degree, `c_μ = P(x^μ) − Σ_{γ<μ} c_γ binom(μ, γ) x^{μ−γ}`
//! is determined for `|μ| ≤ N`. Two operators of order `≤ N` that agree on
//! those monomials therefore have equal coefficients and are equal.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{ClassicalDerivation, Field, Poly, PolyRing, Scalar};
use crate::error::{Error, Result};
use crate::hs::HsDerivation;
use crate::index::MultiIndex;
use crate::series::{Bracket, Coeff, LeftPolyModule, RightPolyModule, RingCoeff, Series};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Primitive {
    Identity,
    MulBy(Poly),
    Derivation(ClassicalDerivation),
    /// The component `D_α` of an HS-derivation.
    HsComponent { hs: HsDerivation, index: MultiIndex },
}

impl Primitive {
    pub fn order(&self) -> u32 {
        match self {
            Primitive::Identity | Primitive::MulBy(_) => 0,
            Primitive::Derivation(d) => u32::from(!d.is_zero()),
            Primitive::HsComponent { index, .. } => index.degree(),
        }
    }

    fn apply(&self, f: &Poly, cache: &mut EvalCache) -> Poly {
        match self {
            Primitive::Identity => f.clone(),
            Primitive::MulBy(g) => g * f,
            Primitive::Derivation(d) => d.apply(f),
            Primitive::HsComponent { hs, index } => {
                let mut out = f.ring().zero();
                for (m, c) in f.terms() {
                    let image = cache.phi(hs, m);
                    if let Some(v) = image.get(index) {
                        out = &out + &v.scale(c);
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::Identity => write!(f, "id"),
            Primitive::MulBy(g) => write!(f, "[{g}]"),
            Primitive::Derivation(d) => write!(f, "{{{d}}}"),
            Primitive::HsComponent { index, .. } => write!(f, "D{index}"),
        }
    }
}

/// Memoizes `Φ_D(x^μ)` during one evaluation session.
#[derive(Default)]
pub struct EvalCache {
    phi: HashMap<(usize, MultiIndex), Series<Poly>>,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn phi(&mut self, hs: &HsDerivation, m: &MultiIndex) -> &Series<Poly> {
        self.phi
            .entry((hs.identity_key(), m.clone()))
            .or_insert_with(|| hs.phi_apply_monomial(m))
    }
}

/// `Σ_k c_k P_{k,1} ∘ ... ∘ P_{k,l}`; the first primitive of a chain is
/// applied last.
#[derive(Clone, Debug)]
pub struct LinOp {
    ring: PolyRing,
    terms: Vec<(Scalar, Vec<Primitive>)>,
}

impl LinOp {
    pub fn zero(ring: PolyRing) -> Self {
        LinOp {
            ring,
            terms: Vec::new(),
        }
    }

    pub fn identity(ring: PolyRing) -> Self {
        Self::scalar(ring, ring.field.one())
    }

    pub fn scalar(ring: PolyRing, c: Scalar) -> Self {
        let mut out = Self::zero(ring);
        out.push_term(c, Vec::new());
        out
    }

    pub fn from_primitive(ring: PolyRing, p: Primitive) -> Self {
        let mut out = Self::zero(ring);
        out.push_term(ring.field.one(), vec![p]);
        out
    }

    pub fn mul_by(f: &Poly) -> Self {
        Self::from_primitive(f.ring(), Primitive::MulBy(f.clone()))
    }

    pub fn derivation(d: &ClassicalDerivation) -> Self {
        Self::from_primitive(d.ring(), Primitive::Derivation(d.clone()))
    }

    pub fn hs_component(hs: &HsDerivation, index: &MultiIndex) -> Result<Self> {
        if !hs.coideal().contains(index) {
            return Err(Error::IndexOutsideCoIdeal(index.clone()));
        }
        Ok(Self::from_primitive(
            hs.ring(),
            Primitive::HsComponent {
                hs: hs.clone(),
                index: index.clone(),
            },
        ))
    }

    /// Builds an operator from explicit terms, normalizing each chain.
    pub fn from_terms(ring: PolyRing, terms: Vec<(Scalar, Vec<Primitive>)>) -> Result<Self> {
        let mut out = Self::zero(ring);
        for (c, chain) in terms {
            if c.field() != ring.field {
                return Err(Error::FieldMismatch(ring.field.to_string(), c.field().to_string()));
            }
            for p in &chain {
                let ok = match p {
                    Primitive::Identity => true,
                    Primitive::MulBy(g) => g.ring() == ring,
                    Primitive::Derivation(d) => d.ring() == ring,
                    Primitive::HsComponent { hs, index } => {
                        hs.ring() == ring && hs.coideal().contains(index)
                    }
                };
                if !ok {
                    return Err(Error::ContextMismatch);
                }
            }
            out.push_term(c, chain);
        }
        Ok(out)
    }

    pub fn ring(&self) -> PolyRing {
        self.ring
    }

    pub fn terms(&self) -> &[(Scalar, Vec<Primitive>)] {
        &self.terms
    }

    /// Syntactic zero test.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Order bound: sum along chains, maximum over terms.
    pub fn order_bound(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, chain)| chain.iter().map(Primitive::order).sum())
            .max()
            .unwrap_or(0)
    }

    /// Normalizes a chain and merges it into the like term, if any.
    fn push_term(&mut self, mut c: Scalar, chain: Vec<Primitive>) {
        if c.is_zero() {
            return;
        }
        let mut norm: Vec<Primitive> = Vec::with_capacity(chain.len());
        for p in chain {
            match p {
                Primitive::Identity => {}
                Primitive::HsComponent { ref index, .. } if index.is_zero() => {}
                Primitive::Derivation(ref d) if d.is_zero() => return,
                Primitive::MulBy(g) => {
                    if g.is_zero() {
                        return;
                    }
                    if g.is_constant() {
                        c = &c * &g.constant_term();
                        continue;
                    }
                    if let Some(Primitive::MulBy(prev)) = norm.last_mut() {
                        *prev = &*prev * &g;
                    } else {
                        norm.push(Primitive::MulBy(g));
                    }
                }
                other => norm.push(other),
            }
        }
        if let Some((existing, _)) = self.terms.iter_mut().find(|(_, ch)| *ch == norm) {
            *existing = &*existing + &c;
            if existing.is_zero() {
                self.terms.retain(|(s, _)| !s.is_zero());
            }
        } else {
            self.terms.push((c, norm));
        }
    }

    fn assert_ring(&self, other: &LinOp) {
        assert_eq!(self.ring, other.ring, "operator ring mismatch");
    }

    pub fn add(&self, other: &LinOp) -> LinOp {
        self.assert_ring(other);
        let mut out = self.clone();
        for (c, chain) in &other.terms {
            out.push_term(c.clone(), chain.clone());
        }
        out
    }

    pub fn sub(&self, other: &LinOp) -> LinOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LinOp {
        self.scale(&self.ring.field.int(-1))
    }

    pub fn scale(&self, c: &Scalar) -> LinOp {
        let mut out = Self::zero(self.ring);
        for (s, chain) in &self.terms {
            out.push_term(s * c, chain.clone());
        }
        out
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &LinOp) -> LinOp {
        self.assert_ring(other);
        let mut out = Self::zero(self.ring);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut chain = ca.clone();
                chain.extend(cb.iter().cloned());
                out.push_term(a * b, chain);
            }
        }
        out
    }

    pub fn apply(&self, f: &Poly) -> Poly {
        self.apply_with(f, &mut EvalCache::new())
    }

    pub fn apply_with(&self, f: &Poly, cache: &mut EvalCache) -> Poly {
        assert_eq!(f.ring(), self.ring, "operator applied across rings");
        let mut out = self.ring.zero();
        for (c, chain) in &self.terms {
            let mut v = f.clone();
            for p in chain.iter().rev() {
                if v.is_zero() {
                    break;
                }
                v = p.apply(&v, cache);
            }
            out = &out + &v.scale(c);
        }
        out
    }

    /// The first monomial (graded order) on which the operators differ,
    /// among those of degree at most the larger order bound.
    pub fn find_difference(&self, other: &LinOp) -> Option<MultiIndex> {
        self.assert_ring(other);
        let n = self.order_bound().max(other.order_bound());
        let mut cache = EvalCache::new();
        self.ring.monomials_up_to(n).into_iter().find(|m| {
            let x = Poly::monomial(self.ring, m.clone(), self.ring.field.one());
            self.apply_with(&x, &mut cache) != other.apply_with(&x, &mut cache)
        })
    }

    /// Semantic equality, decided on monomials up to the order bound.
    pub fn equals(&self, other: &LinOp) -> bool {
        self.find_difference(other).is_none()
    }

    /// The derivation this operator is, if it is one.
    pub fn as_derivation(&self) -> Result<ClassicalDerivation> {
        let mut cache = EvalCache::new();
        let images = (0..self.ring.n)
            .map(|j| self.apply_with(&self.ring.var(j), &mut cache))
            .collect();
        let cand = ClassicalDerivation::new(self.ring, images)?;
        let n = self.order_bound().max(1);
        for m in self.ring.monomials_up_to(n) {
            let x = Poly::monomial(self.ring, m.clone(), self.ring.field.one());
            if self.apply_with(&x, &mut cache) != cand.apply(&x) {
                return Err(Error::NotADerivation { witness: m });
            }
        }
        Ok(cand)
    }
}

impl PartialEq for LinOp {
    /// Semantic equality; see the module documentation.
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.equals(other)
    }
}

impl fmt::Display for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, chain)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let body: Vec<String> = chain.iter().map(ToString::to_string).collect();
            match (c.is_one(), body.is_empty()) {
                (_, true) => write!(f, "{c}")?,
                (true, false) => write!(f, "{}", body.join("∘"))?,
                (false, false) => write!(f, "{c}*{}", body.join("∘"))?,
            }
        }
        Ok(())
    }
}

impl Coeff for LinOp {
    type Ctx = PolyRing;

    fn ctx(&self) -> PolyRing {
        self.ring
    }
    fn field_of(ctx: &PolyRing) -> Field {
        ctx.field
    }
    fn zero(ctx: &PolyRing) -> Self {
        LinOp::zero(*ctx)
    }
    fn add(&self, other: &Self) -> Self {
        LinOp::add(self, other)
    }
    fn neg(&self) -> Self {
        LinOp::neg(self)
    }
    fn scale(&self, c: &Scalar) -> Self {
        LinOp::scale(self, c)
    }
    fn is_zero(&self) -> bool {
        LinOp::is_zero(self)
    }
    fn coeff_eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

impl RingCoeff for LinOp {
    fn mul(&self, other: &Self) -> Self {
        self.compose(other)
    }
    fn one(ctx: &PolyRing) -> Self {
        LinOp::identity(*ctx)
    }
}

impl Bracket for LinOp {
    fn bracket(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }
}

impl LeftPolyModule for LinOp {
    fn poly_left(&self, f: &Poly) -> Self {
        LinOp::mul_by(f).compose(self)
    }
}

impl RightPolyModule for LinOp {
    fn poly_right(&self, f: &Poly) -> Self {
        self.compose(&LinOp::mul_by(f))
    }
}

/// `⟨r, a⟩ = r̃(a)`: `(r̃(a))_α = Σ_{β+γ=α} r_β(a_γ)`.
pub fn pairing_apply(r: &Series<LinOp>, a: &Series<Poly>) -> Result<Series<Poly>> {
    if r.coideal() != a.coideal() {
        return Err(Error::CoIdealMismatch);
    }
    if r.ctx() != a.ctx() {
        return Err(Error::ContextMismatch);
    }
    let mut cache = EvalCache::new();
    let mut out = Series::zero(a.coideal().clone(), *a.ctx());
    for (b, op) in r.iter() {
        for (g, f) in a.iter() {
            let alpha = b + g;
            if out.coideal().contains(&alpha) {
                out.accumulate(alpha, &op.apply_with(f, &mut cache));
            }
        }
    }
    Ok(out)
}

/// `[r, a] = r a − a r` for a series of operators and a series of
/// polynomials acting by multiplication.
pub fn commutator_with_poly_series(r: &Series<LinOp>, a: &Series<Poly>) -> Result<Series<LinOp>> {
    if r.coideal() != a.coideal() {
        return Err(Error::CoIdealMismatch);
    }
    let lifted = a.map_into(*a.ctx(), |_, f| LinOp::mul_by(f));
    r.mul(&lifted)?.sub(&lifted.mul(r)?)
}

/// Lifts a derivation series to operators.
pub fn derivation_series_as_operators(d: &Series<ClassicalDerivation>) -> Series<LinOp> {
    d.map_into(*d.ctx(), |_, x| LinOp::derivation(x))
}

/// Lifts a scalar series to operators (scalar multiples of the identity).
pub fn scalar_series_as_operators(u: &Series<Scalar>, ring: PolyRing) -> Series<LinOp> {
    u.map_into(ring, |_, c| LinOp::scalar(ring, c.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> PolyRing {
        PolyRing::new(Field::Rational, n)
    }

    #[test]
    fn evaluation_examples() {
        let r = ring(1);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(r, 0));
        let op = LinOp::mul_by(&r.var(0)).compose(&dx);
        assert_eq!(op.apply(&r.parse("x^2").unwrap()), r.parse("2*x^2").unwrap());
        let f = r.parse("x^3 - 2").unwrap();
        assert_eq!(LinOp::identity(r).apply(&f), f);
    }

    #[test]
    fn weyl_commutator_is_identity() {
        let r = ring(1);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(r, 0));
        let x = LinOp::mul_by(&r.var(0));
        let comm = dx.compose(&x).sub(&x.compose(&dx));
        assert!(comm.equals(&LinOp::identity(r)));
        assert!(dx.bracket(&x).equals(&LinOp::identity(r)));
    }

    #[test]
    fn orders_and_zero() {
        let r = ring(2);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(r, 0));
        let dy = LinOp::derivation(&ClassicalDerivation::partial(r, 1));
        assert_eq!(dx.compose(&dy).order_bound(), 2);
        assert_eq!(dx.add(&LinOp::zero(r)).terms(), dx.terms());
        assert!(dx.equals(&dx.add(&LinOp::zero(r))));
    }

    #[test]
    fn inequality_is_witnessed() {
        let r = ring(1);
        let dx = LinOp::derivation(&ClassicalDerivation::partial(r, 0));
        let one = LinOp::mul_by(&r.one());
        assert_eq!(dx.find_difference(&one), Some(MultiIndex::zero(1)));
    }

    #[test]
    fn as_derivation_examples() {
        let r = ring(1);
        let d = ClassicalDerivation::partial(r, 0);
        let dx = LinOp::derivation(&d);
        assert_eq!(dx.as_derivation().unwrap(), d);
        match dx.compose(&dx).as_derivation() {
            Err(Error::NotADerivation { witness }) => assert_eq!(witness, MultiIndex::new(vec![2])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_multiplications_fold_into_scalars() {
        let r = ring(1);
        let op = LinOp::mul_by(&r.int(3)).compose(&LinOp::mul_by(&r.var(0)));
        assert_eq!(op.terms().len(), 1);
        assert_eq!(op.terms()[0].0, Field::Rational.int(3));
    }
}
