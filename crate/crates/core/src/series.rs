//! Δ-truncated power series `M[[s]]_Δ` over a coefficient carrier, the unit
//! group, the Euler derivations and the ε / ε̄ transforms.

use std::collections::BTreeMap;
use std::fmt;

use crate::algebra::{ClassicalDerivation, Field, Poly, PolyRing, Scalar};
use crate::error::{Error, Result};
use crate::index::{partitions, CoIdeal, MultiIndex};

/// A coefficient type for [`Series`]: a `k`-module whose elements know the
/// context (field, polynomial ring) they live in.
pub trait Coeff: Clone + fmt::Debug {
    type Ctx: Clone + PartialEq + fmt::Debug;

    fn ctx(&self) -> Self::Ctx;
    fn field_of(ctx: &Self::Ctx) -> Field;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: &Scalar) -> Self;
    /// Syntactic zero test; absent terms are never stored.
    fn is_zero(&self) -> bool;
    /// Semantic equality. Defaults to comparing the difference with zero.
    fn coeff_eq(&self, other: &Self) -> bool {
        self.add(&other.neg()).is_zero()
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

/// Carriers with an associative product and a unit.
pub trait RingCoeff: Coeff {
    fn mul(&self, other: &Self) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
}

/// Carriers with a commutator-like bracket.
pub trait Bracket: Coeff {
    fn bracket(&self, other: &Self) -> Self;
}

/// Carriers on which polynomials act from the left.
pub trait LeftPolyModule: Coeff {
    fn poly_left(&self, f: &Poly) -> Self;
}

/// Carriers on which polynomials act from the right.
pub trait RightPolyModule: Coeff {
    fn poly_right(&self, f: &Poly) -> Self;
}

impl Coeff for Scalar {
    type Ctx = Field;

    fn ctx(&self) -> Field {
        self.field()
    }
    fn field_of(ctx: &Field) -> Field {
        *ctx
    }
    fn zero(ctx: &Field) -> Self {
        ctx.zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: &Scalar) -> Self {
        self * c
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn coeff_eq(&self, other: &Self) -> bool {
        self == other
    }
}

impl RingCoeff for Scalar {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn one(ctx: &Field) -> Self {
        ctx.one()
    }
}

impl Bracket for Scalar {
    fn bracket(&self, _other: &Self) -> Self {
        self.field().zero()
    }
}

impl Coeff for Poly {
    type Ctx = PolyRing;

    fn ctx(&self) -> PolyRing {
        self.ring()
    }
    fn field_of(ctx: &PolyRing) -> Field {
        ctx.field
    }
    fn zero(ctx: &PolyRing) -> Self {
        ctx.zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: &Scalar) -> Self {
        Poly::scale(self, c)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn coeff_eq(&self, other: &Self) -> bool {
        self == other
    }
}

impl RingCoeff for Poly {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn one(ctx: &PolyRing) -> Self {
        ctx.one()
    }
}

impl Bracket for Poly {
    fn bracket(&self, _other: &Self) -> Self {
        self.ring().zero()
    }
}

impl LeftPolyModule for Poly {
    fn poly_left(&self, f: &Poly) -> Self {
        f * self
    }
}

impl RightPolyModule for Poly {
    fn poly_right(&self, f: &Poly) -> Self {
        self * f
    }
}

impl Coeff for ClassicalDerivation {
    type Ctx = PolyRing;

    fn ctx(&self) -> PolyRing {
        self.ring()
    }
    fn field_of(ctx: &PolyRing) -> Field {
        ctx.field
    }
    fn zero(ctx: &PolyRing) -> Self {
        ClassicalDerivation::zero(*ctx)
    }
    fn add(&self, other: &Self) -> Self {
        ClassicalDerivation::add(self, other)
    }
    fn neg(&self) -> Self {
        ClassicalDerivation::neg(self)
    }
    fn scale(&self, c: &Scalar) -> Self {
        ClassicalDerivation::scale(self, c)
    }
    fn is_zero(&self) -> bool {
        ClassicalDerivation::is_zero(self)
    }
    fn coeff_eq(&self, other: &Self) -> bool {
        self == other
    }
}

impl Bracket for ClassicalDerivation {
    fn bracket(&self, other: &Self) -> Self {
        self.lie_bracket(other)
    }
}

impl LeftPolyModule for ClassicalDerivation {
    fn poly_left(&self, f: &Poly) -> Self {
        self.mul_left(f)
    }
}

/// The derivations of `k[[s]]_Δ` that the ε transforms are built from:
/// the total Euler derivation `χ` and the partial ones `χ^i` (0-based `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Euler {
    Total,
    Partial(usize),
}

impl Euler {
    /// The eigenvalue of `s^α`.
    pub fn weight(&self, alpha: &MultiIndex) -> u32 {
        match *self {
            Euler::Total => alpha.degree(),
            Euler::Partial(i) => alpha.get(i),
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        match *self {
            Euler::Partial(i) if i >= p => Err(Error::AxisOutOfRange { axis: i, arity: p }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Euler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Euler::Total => write!(f, "total"),
            Euler::Partial(i) => write!(f, "{}", i + 1),
        }
    }
}

/// A series `Σ_{α∈Δ} c_α s^α`. Only nonzero coefficients are stored.
#[derive(Clone, Debug)]
pub struct Series<C: Coeff> {
    coideal: CoIdeal,
    ctx: C::Ctx,
    coeffs: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> PartialEq for Series<C> {
    fn eq(&self, other: &Self) -> bool {
        self.coeff_eq(other)
    }
}

impl<C: Coeff> Eq for Series<C> {}

impl<C: Coeff> Series<C> {
    pub fn zero(coideal: CoIdeal, ctx: C::Ctx) -> Self {
        Series {
            coideal,
            ctx,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a series from `(α, c_α)` pairs; repeated indices are summed.
    pub fn from_coeffs<I>(coideal: CoIdeal, ctx: C::Ctx, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, C)>,
    {
        let mut out = Series::zero(coideal, ctx);
        for (alpha, c) in coeffs {
            if alpha.arity() != out.coideal.arity() {
                return Err(Error::ArityMismatch {
                    what: "series index",
                    expected: out.coideal.arity(),
                    found: alpha.arity(),
                });
            }
            if !out.coideal.contains(&alpha) {
                return Err(Error::IndexOutsideCoIdeal(alpha));
            }
            if c.ctx() != out.ctx {
                return Err(Error::ContextMismatch);
            }
            out.accumulate(alpha, &c);
        }
        Ok(out)
    }

    /// `c s^α`
    pub fn monomial(coideal: CoIdeal, alpha: MultiIndex, c: C) -> Result<Self> {
        let ctx = c.ctx();
        Self::from_coeffs(coideal, ctx, [(alpha, c)])
    }

    /// Adds `c` at `α`, silently dropping indices outside the co-ideal.
    pub(crate) fn accumulate(&mut self, alpha: MultiIndex, c: &C) {
        if !self.coideal.contains(&alpha) {
            return;
        }
        let sum = match self.coeffs.get(&alpha) {
            Some(prev) => prev.add(c),
            None => c.clone(),
        };
        if sum.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, sum);
        }
    }

    pub(crate) fn set(&mut self, alpha: MultiIndex, c: C) {
        debug_assert!(self.coideal.contains(&alpha));
        if c.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
    }

    pub fn coideal(&self) -> &CoIdeal {
        &self.coideal
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn arity(&self) -> usize {
        self.coideal.arity()
    }

    pub fn field(&self) -> Field {
        C::field_of(&self.ctx)
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C {
        self.coeffs
            .get(alpha)
            .cloned()
            .unwrap_or_else(|| C::zero(&self.ctx))
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&C> {
        self.coeffs.get(alpha)
    }

    /// Stored (syntactically nonzero) coefficients in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&MultiIndex::zero(self.arity()))
    }

    pub fn has_zero_constant_term(&self) -> bool {
        self.constant_term().coeff_eq(&C::zero(&self.ctx))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.coideal != other.coideal {
            return Err(Error::CoIdealMismatch);
        }
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.coeffs {
            out.accumulate(alpha.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|_, c| c.neg())
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map_coeffs(|_, a| a.scale(c))
    }

    /// Coefficientwise map keeping the carrier.
    pub fn map_coeffs(&self, f: impl Fn(&MultiIndex, &C) -> C) -> Self {
        let mut out = Series::zero(self.coideal.clone(), self.ctx.clone());
        for (alpha, c) in &self.coeffs {
            out.set(alpha.clone(), f(alpha, c));
        }
        out
    }

    /// Coefficientwise map into another carrier.
    pub fn map_into<D: Coeff>(&self, ctx: D::Ctx, f: impl Fn(&MultiIndex, &C) -> D) -> Series<D> {
        let mut out = Series::zero(self.coideal.clone(), ctx);
        for (alpha, c) in &self.coeffs {
            out.set(alpha.clone(), f(alpha, c));
        }
        out
    }

    /// Restriction to a smaller co-ideal.
    pub fn truncate(&self, target: &CoIdeal) -> Result<Self> {
        if !target.is_subset(&self.coideal) {
            return Err(Error::NotSubset(target.to_string()));
        }
        Ok(self.retruncate(target))
    }

    /// Re-reads the coefficients over any co-ideal of the same arity,
    /// dropping those that fall outside.
    pub(crate) fn retruncate(&self, target: &CoIdeal) -> Self {
        let mut out = Series::zero(target.clone(), self.ctx.clone());
        for (alpha, c) in &self.coeffs {
            if target.contains(alpha) {
                out.set(alpha.clone(), c.clone());
            }
        }
        out
    }

    /// `𝔡(r)` for an Euler derivation `𝔡`.
    pub fn euler_with(&self, mode: Euler) -> Result<Self> {
        mode.check(self.arity())?;
        let field = self.field();
        Ok(self.map_coeffs(|alpha, c| c.scale(&field.int(mode.weight(alpha) as i64))))
    }

    /// `χ^i(r)`, 0-based axis.
    pub fn euler_partial(&self, i: usize) -> Result<Self> {
        self.euler_with(Euler::Partial(i))
    }

    /// `χ(r)`
    pub fn euler(&self) -> Self {
        self.euler_with(Euler::Total).expect("total Euler derivation is always defined")
    }

    /// Semantic coefficientwise equality.
    pub fn coeff_eq(&self, other: &Self) -> bool {
        self.first_difference(other).is_none()
    }

    /// The first index (graded order) where the two series differ
    /// semantically; `Some(0)`-like answers are also given for shape
    /// mismatches.
    pub fn first_difference(&self, other: &Self) -> Option<MultiIndex> {
        if self.coideal != other.coideal || self.ctx != other.ctx {
            return Some(MultiIndex::zero(self.arity()));
        }
        self.coideal
            .iter()
            .find(|alpha| match (self.coeffs.get(*alpha), other.coeffs.get(*alpha)) {
                (None, None) => false,
                (Some(a), Some(b)) => !a.coeff_eq(b),
                (Some(a), None) | (None, Some(a)) => !a.coeff_eq(&C::zero(&self.ctx)),
            })
            .cloned()
    }

    /// Multiplication by a scalar series `u ∈ k[[s]]_Δ` on the right (the
    /// scalars are central, so the side only matters for bookkeeping).
    pub fn mul_scalar_series(&self, u: &Series<Scalar>) -> Result<Self> {
        if self.coideal != u.coideal {
            return Err(Error::CoIdealMismatch);
        }
        if self.field() != *u.ctx() {
            return Err(Error::FieldMismatch(self.field().to_string(), u.ctx().to_string()));
        }
        let mut out = Series::zero(self.coideal.clone(), self.ctx.clone());
        for (b, x) in &self.coeffs {
            for (g, c) in &u.coeffs {
                out.accumulate(b + g, &x.scale(c));
            }
        }
        Ok(out)
    }

    fn check_zero_constant(&self) -> Result<()> {
        if self.has_zero_constant_term() {
            Ok(())
        } else {
            Err(Error::NonZeroConstant)
        }
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (k, (alpha, c)) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if alpha.is_zero() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*s^{alpha}")?;
            }
        }
        Ok(())
    }
}

impl<C: RingCoeff> Series<C> {
    pub fn one(coideal: CoIdeal, ctx: C::Ctx) -> Self {
        let mut out = Self::zero(coideal, ctx);
        let one = C::one(&out.ctx);
        out.set(MultiIndex::zero(out.arity()), one);
        out
    }

    /// Truncated Cauchy product `(ab)_α = Σ_{β+γ=α} a_β b_γ`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Series::zero(self.coideal.clone(), self.ctx.clone());
        for (b, x) in &self.coeffs {
            for (g, y) in &other.coeffs {
                let a = b + g;
                if out.coideal.contains(&a) {
                    out.accumulate(a, &x.mul(y));
                }
            }
        }
        Ok(out)
    }

    pub fn is_unit(&self) -> bool {
        self.constant_term().coeff_eq(&C::one(&self.ctx))
    }

    fn check_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::NonUnit)
        }
    }

    /// `r*` by the graded recursion `r*_α = −Σ_{β+γ=α, γ≠0} r*_β r_γ`.
    pub fn inverse(&self) -> Result<Self> {
        self.check_unit()?;
        let mut inv = Self::one(self.coideal.clone(), self.ctx.clone());
        for alpha in self.coideal.iter().skip(1) {
            let mut acc = C::zero(&self.ctx);
            for (g, r) in self.coeffs.iter().filter(|(g, _)| !g.is_zero()) {
                let Some(b) = alpha.checked_sub(g) else { continue };
                if let Some(x) = inv.coeffs.get(&b) {
                    acc = acc.add(&x.mul(r));
                }
            }
            inv.set(alpha.clone(), acc.neg());
        }
        Ok(inv)
    }

    /// `r*` by the closed formula over ordered partitions:
    /// `r*_α = Σ_d (−1)^d Σ_{Par(α,d)} r_{α¹} ⋯ r_{α^d}`.
    pub fn inverse_closed(&self) -> Result<Self> {
        self.check_unit()?;
        let mut inv = Self::one(self.coideal.clone(), self.ctx.clone());
        for alpha in self.coideal.iter().skip(1) {
            let mut acc = C::zero(&self.ctx);
            for d in 1..=alpha.degree() as usize {
                let mut part = C::zero(&self.ctx);
                for tuple in partitions(alpha, d) {
                    let mut prod: Option<C> = None;
                    for piece in &tuple {
                        let Some(c) = self.coeffs.get(piece) else {
                            prod = None;
                            break;
                        };
                        prod = Some(match prod {
                            None => c.clone(),
                            Some(p) => p.mul(c),
                        });
                    }
                    if let Some(p) = prod {
                        part = part.add(&p);
                    }
                }
                acc = if d % 2 == 0 { acc.add(&part) } else { acc.sub(&part) };
            }
            inv.set(alpha.clone(), acc);
        }
        Ok(inv)
    }

    /// `ε^𝔡(r) = r* 𝔡(r)`.
    pub fn eps(&self, mode: Euler) -> Result<Self> {
        let inv = self.inverse()?;
        self.eps_given_inverse(&inv, mode)
    }

    /// `ε̄^𝔡(r) = 𝔡(r) r*`.
    pub fn eps_bar(&self, mode: Euler) -> Result<Self> {
        let inv = self.inverse()?;
        self.eps_bar_given_inverse(&inv, mode)
    }

    /// `ε^𝔡(r)` when `r*` is already known.
    pub fn eps_given_inverse(&self, inv: &Self, mode: Euler) -> Result<Self> {
        self.check_unit()?;
        inv.mul(&self.euler_with(mode)?)
    }

    pub fn eps_bar_given_inverse(&self, inv: &Self, mode: Euler) -> Result<Self> {
        self.check_unit()?;
        self.euler_with(mode)?.mul(inv)
    }

    /// `bold-ε(r) = (ε^1(r), ..., ε^p(r))`.
    pub fn bold_eps(&self) -> Result<DerivationFamily<C>> {
        let inv = self.inverse()?;
        let members = (0..self.arity())
            .map(|i| self.eps_given_inverse(&inv, Euler::Partial(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DerivationFamily { members })
    }

    /// Checks `𝔡-weight(α) r_α = Σ_{β+γ=α} r_β ε_γ(r) = Σ ε̄_γ(r) r_β` for
    /// every `α ∈ Δ`; returns the first failing index.
    pub fn eps_recursion_check(&self, mode: Euler) -> Result<std::result::Result<(), MultiIndex>> {
        let inv = self.inverse()?;
        let e = self.eps_given_inverse(&inv, mode)?;
        let eb = self.eps_bar_given_inverse(&inv, mode)?;
        let lhs = self.euler_with(mode)?;
        let right = self.mul(&e)?;
        let left = eb.mul(self)?;
        if let Some(a) = lhs.first_difference(&right) {
            return Ok(Err(a));
        }
        if let Some(a) = lhs.first_difference(&left) {
            return Ok(Err(a));
        }
        Ok(Ok(()))
    }

    /// The unique unit `r` with `ε(r) = r̄`, from `|α| r_α = Σ_{|γ|>0} r_β r̄_γ`.
    ///
    /// Fails with [`Error::Characteristic`] at the first `α` whose degree is
    /// divisible by the characteristic.
    pub fn eps_inverse(&self) -> Result<Self> {
        self.check_zero_constant()?;
        let field = self.field();
        let mut r = Self::one(self.coideal.clone(), self.ctx.clone());
        for alpha in self.coideal.iter().skip(1) {
            let d = alpha.degree();
            let inv_d = field.int(d as i64).inverse().ok_or_else(|| Error::Characteristic {
                index: alpha.clone(),
                divisor: d as u64,
                modulus: field.characteristic(),
            })?;
            let mut acc = C::zero(&self.ctx);
            for (g, y) in self.coeffs.iter().filter(|(g, _)| !g.is_zero()) {
                let Some(b) = alpha.checked_sub(g) else { continue };
                if let Some(x) = r.coeffs.get(&b) {
                    acc = acc.add(&x.mul(y));
                }
            }
            r.set(alpha.clone(), acc.scale(&inv_d));
        }
        Ok(r)
    }

    /// `ξ(δ) = 1 + Σ δ_α s^α τ` over `Δ × {0,1}`, with `τ` the last variable.
    pub fn xi(&self) -> Result<Self> {
        self.check_zero_constant()?;
        let target = self.coideal.product_with_unit_interval();
        let mut out = Self::one(target, self.ctx.clone());
        for (alpha, c) in self.coeffs.iter().filter(|(a, _)| !a.is_zero()) {
            out.set(alpha.extend(1), c.clone());
        }
        Ok(out)
    }
}

/// A validated element of the unit group `U^p(R;Δ)`.
#[derive(Clone, Debug)]
pub struct UnitSeries<C: RingCoeff>(Series<C>);

impl<C: RingCoeff> UnitSeries<C> {
    pub fn new(series: Series<C>) -> Result<Self> {
        series.check_unit()?;
        Ok(UnitSeries(series))
    }

    pub fn one(coideal: CoIdeal, ctx: C::Ctx) -> Self {
        UnitSeries(Series::one(coideal, ctx))
    }

    pub fn as_series(&self) -> &Series<C> {
        &self.0
    }

    pub fn into_series(self) -> Series<C> {
        self.0
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(UnitSeries(self.0.mul(&other.0)?))
    }

    pub fn inverse(&self) -> Self {
        UnitSeries(self.0.inverse().expect("validated unit"))
    }

    pub fn inverse_closed(&self) -> Self {
        UnitSeries(self.0.inverse_closed().expect("validated unit"))
    }
}

/// A family `(δ^1, ..., δ^p)` of series with zero constant term.
#[derive(Clone, Debug)]
pub struct DerivationFamily<C: Coeff> {
    pub members: Vec<Series<C>>,
}

/// Why a family is not in `HH^p(R;Δ)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HhViolation {
    /// Shapes disagree or the family has the wrong length.
    Shape,
    /// `δ^i_α ≠ 0` although `α_i = 0` (0-based `i`).
    Support { i: usize, index: MultiIndex },
    /// The crossed condition fails for the axes `i < j` at `α`.
    Crossed { i: usize, j: usize, index: MultiIndex },
}

impl fmt::Display for HhViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HhViolation::Shape => write!(f, "family members do not share arity and co-ideal"),
            HhViolation::Support { i, index } => {
                write!(f, "member {} is nonzero at {index} although that entry is 0", i + 1)
            }
            HhViolation::Crossed { i, j, index } => {
                write!(f, "crossed condition for ({}, {}) fails at {index}", i + 1, j + 1)
            }
        }
    }
}

impl<C: Coeff> DerivationFamily<C> {
    pub fn new(members: Vec<Series<C>>) -> Self {
        DerivationFamily { members }
    }

    /// `Σ(δ) = Σ_i δ^i`.
    pub fn sigma_sum(&self) -> Result<Series<C>> {
        let mut it = self.members.iter();
        let first = it.next().ok_or(Error::ArityMismatch {
            what: "derivation family",
            expected: 1,
            found: 0,
        })?;
        it.try_fold(first.clone(), |acc, m| acc.add(m))
    }

    pub fn coeff_eq(&self, other: &Self) -> bool {
        self.members.len() == other.members.len()
            && self.members.iter().zip(&other.members).all(|(a, b)| a.coeff_eq(b))
    }
}

impl<C: Bracket> DerivationFamily<C> {
    /// Tests membership in `HH^p(R;Δ)`:
    /// (a) `δ^i_α = 0` when `α_i = 0`, and
    /// (b) `α_j δ^i_α − α_i δ^j_α = Σ_{β+γ=α} [δ^i_β, δ^j_γ]`.
    pub fn hh_membership(&self) -> std::result::Result<(), HhViolation> {
        let Some(first) = self.members.first() else {
            return Err(HhViolation::Shape);
        };
        let p = first.arity();
        if self.members.len() != p
            || self
                .members
                .iter()
                .any(|m| m.coideal() != first.coideal() || m.ctx() != first.ctx())
        {
            return Err(HhViolation::Shape);
        }
        let zero = C::zero(first.ctx());
        let field = first.field();
        for (i, m) in self.members.iter().enumerate() {
            for alpha in first.coideal().iter() {
                if alpha.get(i) == 0 && !m.coeff(alpha).coeff_eq(&zero) {
                    return Err(HhViolation::Support { i, index: alpha.clone() });
                }
            }
        }
        for alpha in first.coideal().iter().skip(1) {
            let splits: Vec<(MultiIndex, MultiIndex)> = alpha
                .divisors()
                .into_iter()
                .filter(|b| !b.is_zero() && b != alpha)
                .map(|b| {
                    let g = alpha.checked_sub(&b).expect("divisor");
                    (b, g)
                })
                .collect();
            for i in 0..p {
                for j in (i + 1)..p {
                    let di = &self.members[i];
                    let dj = &self.members[j];
                    let lhs = di
                        .coeff(alpha)
                        .scale(&field.int(alpha.get(j) as i64))
                        .sub(&dj.coeff(alpha).scale(&field.int(alpha.get(i) as i64)));
                    let mut rhs = zero.clone();
                    for (b, g) in &splits {
                        if let (Some(x), Some(y)) = (di.get(b), dj.get(g)) {
                            rhs = rhs.add(&x.bracket(y));
                        }
                    }
                    if !lhs.coeff_eq(&rhs) {
                        return Err(HhViolation::Crossed {
                            i,
                            j,
                            index: alpha.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Solves the square system `Σ_k m[r][k] x_k = rhs[r]` over a field with
/// carrier-valued right-hand sides, by Gaussian elimination.
fn solve_square<C: Coeff>(mut m: Vec<Vec<Scalar>>, mut rhs: Vec<C>) -> Option<Vec<C>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].inverse().expect("nonzero pivot");
        for x in m[col].iter_mut() {
            *x = &*x * &inv;
        }
        rhs[col] = rhs[col].scale(&inv);
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            let pivot_row = m[col].clone();
            for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                *x = &*x - &(y * &factor);
            }
            rhs[r] = rhs[r].sub(&rhs[col].scale(&factor));
        }
    }
    Some(rhs)
}

impl<C: Bracket> Series<C> {
    /// The unique `HH^p` family with `Σ_i δ^i = self`, obtained by solving,
    /// degree by degree, the linear system
    /// `α_j x_i − α_i x_j = Σ [δ^i_β, δ^j_γ]`, `Σ_i x_i = δ_α`
    /// in the unknowns `x_i = δ^i_α`. Characteristic 0 only.
    pub fn sigma_inverse(&self) -> Result<DerivationFamily<C>> {
        let field = self.field();
        if field.characteristic() != 0 {
            return Err(Error::PositiveCharacteristic(field.characteristic()));
        }
        self.check_zero_constant()?;
        let p = self.arity();
        let mut members: Vec<Series<C>> =
            vec![Self::zero(self.coideal.clone(), self.ctx.clone()); p];
        for alpha in self.coideal.iter().skip(1) {
            let support = alpha.support();
            let j0 = support[0];
            let bracket_sum = |i: usize, j: usize, members: &[Series<C>]| {
                let mut acc = C::zero(&self.ctx);
                for b in alpha.divisors() {
                    if b.is_zero() || &b == alpha {
                        continue;
                    }
                    let g = alpha.checked_sub(&b).expect("divisor");
                    if let (Some(x), Some(y)) = (members[i].get(&b), members[j].get(&g)) {
                        acc = acc.add(&x.bracket(y));
                    }
                }
                acc
            };
            let m = support.len();
            let mut matrix = Vec::with_capacity(m);
            let mut rhs = Vec::with_capacity(m);
            for &i in support.iter().skip(1) {
                // α_{j0} x_i − α_i x_{j0} = Σ [δ^i_β, δ^{j0}_γ]
                let mut row = vec![field.zero(); m];
                let col_i = support.iter().position(|&k| k == i).expect("in support");
                row[col_i] = field.int(alpha.get(j0) as i64);
                row[0] = field.int(-(alpha.get(i) as i64));
                matrix.push(row);
                rhs.push(bracket_sum(i, j0, &members));
            }
            matrix.push(vec![field.one(); m]);
            rhs.push(self.coeff(alpha));
            let x = solve_square(matrix, rhs).expect("the system is non-singular");
            for (k, &i) in support.iter().enumerate() {
                members[i].set(alpha.clone(), x[k].clone());
            }
        }
        Ok(DerivationFamily { members })
    }
}
