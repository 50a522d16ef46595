//! Multivariate Hasse–Schmidt derivations of `A = k[x_1, ..., x_n]`, stored
//! through the generator images `Φ_D(x_j) ∈ A[[s]]_Δ`.

use std::fmt;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ClassicalDerivation, Poly, PolyRing};
use crate::error::{Error, Result};
use crate::index::{CoIdeal, MultiIndex};
use crate::operator::{EvalCache, LinOp};
use crate::random::random_poly;
use crate::report::Report;
use crate::series::{DerivationFamily, Euler, Series};

#[derive(Debug, PartialEq, Eq)]
struct HsInner {
    ring: PolyRing,
    coideal: CoIdeal,
    images: Vec<Series<Poly>>,
}

/// An element of `HS^p_k(A;Δ)`. Cloning shares the data.
#[derive(Clone, Debug)]
pub struct HsDerivation(Arc<HsInner>);

impl PartialEq for HsDerivation {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for HsDerivation {}

impl HsDerivation {
    /// The HS-derivation with `Φ_D(x_j) = images[j]`. Any choice with
    /// constant terms `x_j` is valid because `A` is free.
    pub fn from_generator_images(
        ring: PolyRing,
        coideal: CoIdeal,
        images: Vec<Series<Poly>>,
    ) -> Result<Self> {
        if images.len() != ring.n {
            return Err(Error::ArityMismatch {
                what: "generator images",
                expected: ring.n,
                found: images.len(),
            });
        }
        for (j, img) in images.iter().enumerate() {
            if *img.coideal() != coideal {
                return Err(Error::CoIdealMismatch);
            }
            if *img.ctx() != ring {
                return Err(Error::ContextMismatch);
            }
            if img.constant_term() != ring.var(j) {
                return Err(Error::WrongConstantTerm { generator: j });
            }
        }
        Ok(Self::from_parts(ring, coideal, images))
    }

    fn from_parts(ring: PolyRing, coideal: CoIdeal, images: Vec<Series<Poly>>) -> Self {
        HsDerivation(Arc::new(HsInner {
            ring,
            coideal,
            images,
        }))
    }

    /// `𝕀`
    pub fn identity(ring: PolyRing, coideal: CoIdeal) -> Self {
        let images = (0..ring.n)
            .map(|j| {
                Series::monomial(coideal.clone(), MultiIndex::zero(coideal.arity()), ring.var(j))
                    .expect("zero index lies in every co-ideal")
            })
            .collect();
        Self::from_parts(ring, coideal, images)
    }

    pub fn ring(&self) -> PolyRing {
        self.0.ring
    }

    pub fn coideal(&self) -> &CoIdeal {
        &self.0.coideal
    }

    /// `p`
    pub fn arity(&self) -> usize {
        self.0.coideal.arity()
    }

    pub fn images(&self) -> &[Series<Poly>] {
        &self.0.images
    }

    pub fn image(&self, j: usize) -> &Series<Poly> {
        &self.0.images[j]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.ring(), self.coideal().clone())
    }

    pub(crate) fn identity_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// `Φ_D(x^μ) = Π_j Φ_D(x_j)^{μ_j}`.
    pub fn phi_apply_monomial(&self, m: &MultiIndex) -> Series<Poly> {
        let mut acc = Series::one(self.coideal().clone(), self.ring());
        for (j, &e) in m.entries().iter().enumerate() {
            for _ in 0..e {
                acc = acc.mul(self.image(j)).expect("shared shape");
            }
        }
        acc
    }

    /// `Φ_D(f) = Σ_α D_α(f) s^α`.
    pub fn phi_apply(&self, f: &Poly) -> Series<Poly> {
        assert_eq!(f.ring(), self.ring(), "HS-derivation applied across rings");
        let mut out = Series::zero(self.coideal().clone(), self.ring());
        for (m, c) in f.terms() {
            for (alpha, v) in self.phi_apply_monomial(m).iter() {
                out.accumulate(alpha.clone(), &v.scale(c));
            }
        }
        out
    }

    /// `D_α(f)`.
    pub fn component_apply(&self, alpha: &MultiIndex, f: &Poly) -> Poly {
        self.phi_apply(f).coeff(alpha)
    }

    /// `D̃(Σ a_α s^α) = Σ Φ_D(a_α) s^α`.
    pub fn tilde(&self, a: &Series<Poly>) -> Result<Series<Poly>> {
        self.tilde_weighted(a, None)
    }

    /// `(𝔡(D))~(a) = Σ_{α,β} w(β) D_β(a_α) s^{α+β}`, or `D̃(a)` without a
    /// weight.
    fn tilde_weighted(&self, a: &Series<Poly>, weight: Option<Euler>) -> Result<Series<Poly>> {
        if a.coideal() != self.coideal() {
            return Err(Error::CoIdealMismatch);
        }
        if *a.ctx() != self.ring() {
            return Err(Error::ContextMismatch);
        }
        let field = self.ring().field;
        let mut out = Series::zero(self.coideal().clone(), self.ring());
        for (alpha, f) in a.iter() {
            for (beta, v) in self.phi_apply(f).iter() {
                let target = alpha + beta;
                if !out.coideal().contains(&target) {
                    continue;
                }
                match weight {
                    None => out.accumulate(target, v),
                    Some(mode) => {
                        let w = mode.weight(beta);
                        if w != 0 {
                            out.accumulate(target, &v.scale(&field.int(w as i64)));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `D_α` as an operator.
    pub fn component(&self, alpha: &MultiIndex) -> Result<LinOp> {
        LinOp::hs_component(self, alpha)
    }

    /// `Σ D_α s^α ∈ End_k(A)[[s]]_Δ`.
    pub fn as_operator_series(&self) -> Series<LinOp> {
        let mut out = Series::zero(self.coideal().clone(), self.ring());
        for alpha in self.coideal().iter() {
            out.set(alpha.clone(), self.component(alpha).expect("member index"));
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.ring() != other.ring() {
            return Err(Error::ContextMismatch);
        }
        if self.coideal() != other.coideal() {
            return Err(Error::CoIdealMismatch);
        }
        Ok(())
    }

    /// `D ∘ E`, through `Φ_{D∘E} = D̃ ∘ Φ_E`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let images = other
            .images()
            .iter()
            .map(|img| self.tilde(img))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(self.ring(), self.coideal().clone(), images))
    }

    /// `D*`, solving `D̃(Φ_{D*}(x_j)) = x_j` degree by degree:
    /// `y_α = −Σ_{β+γ=α, β≠0} D_β(y_γ)`.
    pub fn inverse(&self) -> Self {
        let ring = self.ring();
        let zero = MultiIndex::zero(self.arity());
        let images = (0..ring.n)
            .map(|j| {
                let mut y = Series::monomial(self.coideal().clone(), zero.clone(), ring.var(j))
                    .expect("zero index");
                let mut known: Vec<(MultiIndex, Series<Poly>)> =
                    vec![(zero.clone(), self.phi_apply(&ring.var(j)))];
                for alpha in self.coideal().iter().skip(1) {
                    let mut acc = ring.zero();
                    for (gamma, phi) in &known {
                        if let Some(beta) = alpha.checked_sub(gamma) {
                            if let Some(v) = phi.get(&beta) {
                                acc = &acc + v;
                            }
                        }
                    }
                    let value = -&acc;
                    if !value.is_zero() {
                        known.push((alpha.clone(), self.phi_apply(&value)));
                    }
                    y.set(alpha.clone(), value);
                }
                y
            })
            .collect();
        Self::from_parts(ring, self.coideal().clone(), images)
    }

    /// Restriction to `Δ′ ⊆ Δ`.
    pub fn truncate(&self, target: &CoIdeal) -> Result<Self> {
        let images = self
            .images()
            .iter()
            .map(|img| img.truncate(target))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(self.ring(), target.clone(), images))
    }

    /// `ε^𝔡(D)` (or `ε̄^𝔡(D)` when `bar`) computed in `End_k(A)[[s]]_Δ`
    /// from the component operators; every coefficient is then turned into a
    /// classical derivation.
    pub fn eps(&self, mode: Euler, bar: bool) -> Result<Series<ClassicalDerivation>> {
        let r = self.as_operator_series();
        let inv = self.inverse().as_operator_series();
        let e = if bar {
            r.eps_bar_given_inverse(&inv, mode)?
        } else {
            r.eps_given_inverse(&inv, mode)?
        };
        operator_series_as_derivations(&e)
    }

    /// The same transform computed on generator images only:
    /// `ε^𝔡(D)(x_j) = D̃*(𝔡 Φ_D(x_j))` and `ε̄^𝔡(D)(x_j) = (𝔡D)~(Φ_{D*}(x_j))`.
    /// Valid because the coefficients are derivations.
    pub fn eps_from_images(&self, mode: Euler, bar: bool) -> Result<Series<ClassicalDerivation>> {
        let inv = self.inverse();
        let series = (0..self.ring().n)
            .map(|j| {
                if bar {
                    self.tilde_weighted(inv.image(j), Some(mode))
                } else {
                    inv.tilde(&self.image(j).euler_with(mode)?)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(derivations_from_image_series(self.ring(), self.coideal(), &series))
    }

    /// `bold-ε(D) = (ε^1(D), ..., ε^p(D))`; membership in `HH^p` is asserted.
    pub fn bold_eps(&self) -> Result<DerivationFamily<ClassicalDerivation>> {
        let members = (0..self.arity())
            .map(|i| self.eps(Euler::Partial(i), false))
            .collect::<Result<Vec<_>>>()?;
        let fam = DerivationFamily::new(members);
        if let Err(v) = fam.hh_membership() {
            panic!("bold-ε left HH^p: {v}");
        }
        Ok(fam)
    }
}

impl fmt::Display for HsDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, img) in self.images().iter().enumerate() {
            if j > 0 {
                write!(f, "; ")?;
            }
            write!(f, "x{} -> {img}", j + 1)?;
        }
        Ok(())
    }
}

/// Turns a series of operators into a series of derivations, failing at
/// the first coefficient that is not one.
pub fn operator_series_as_derivations(e: &Series<LinOp>) -> Result<Series<ClassicalDerivation>> {
    let mut out = Series::zero(e.coideal().clone(), *e.ctx());
    for (alpha, op) in e.iter() {
        let d = op.as_derivation().map_err(|err| match err {
            Error::NotADerivation { witness } => Error::NotADerivationAt {
                index: alpha.clone(),
                witness,
            },
            other => other,
        })?;
        out.set(alpha.clone(), d);
    }
    Ok(out)
}

/// Assembles `Σ_α δ_α s^α` from the series `δ(x_j) = Σ_α δ_α(x_j) s^α`.
fn derivations_from_image_series(
    ring: PolyRing,
    coideal: &CoIdeal,
    series: &[Series<Poly>],
) -> Series<ClassicalDerivation> {
    let mut out = Series::zero(coideal.clone(), ring);
    for alpha in coideal.iter() {
        let images = series.iter().map(|s| s.coeff(alpha)).collect();
        out.set(
            alpha.clone(),
            ClassicalDerivation::new(ring, images).expect("arity matches"),
        );
    }
    out
}

/// The unique `D ∈ HS^p_k(A;Δ)` with `ε(D) = δ`.
///
/// From `χ(D) = D δ` on generators:
/// `|α| D_α(x_j) = Σ_{β+γ=α, |γ|>0} D_β(δ_γ(x_j))`, solved one degree at a
/// time. Fails with [`Error::Characteristic`] when a degree present in `Δ`
/// is divisible by the characteristic.
pub fn integrate_derivations(delta: &Series<ClassicalDerivation>) -> Result<HsDerivation> {
    if !delta.has_zero_constant_term() {
        return Err(Error::NonZeroConstant);
    }
    let ring = *delta.ctx();
    let coideal = delta.coideal().clone();
    let field = ring.field;
    let mut images: Vec<Series<Poly>> = HsDerivation::identity(ring, coideal.clone())
        .images()
        .to_vec();
    for d in 1..=coideal.max_degree() {
        let level: Vec<&MultiIndex> = coideal.iter().filter(|a| a.degree() == d).collect();
        let Some(first) = level.first() else { continue };
        let inv_d = field.int(d as i64).inverse().ok_or_else(|| Error::Characteristic {
            index: (*first).clone(),
            divisor: d as u64,
            modulus: field.characteristic(),
        })?;
        let lower = coideal.below_degree(d);
        let partial = HsDerivation::from_parts(
            ring,
            lower.clone(),
            images.iter().map(|s| s.retruncate(&lower)).collect(),
        );
        for (j, image) in images.iter_mut().enumerate() {
            let mut acc: Vec<Poly> = vec![ring.zero(); level.len()];
            for (gamma, dg) in delta.iter() {
                if gamma.is_zero() || gamma.degree() > d || dg.image(j).is_zero() {
                    continue;
                }
                let phi = partial.phi_apply(dg.image(j));
                for (k, alpha) in level.iter().enumerate() {
                    if let Some(beta) = alpha.checked_sub(gamma) {
                        if let Some(v) = phi.get(&beta) {
                            acc[k] = &acc[k] + v;
                        }
                    }
                }
            }
            for (alpha, v) in level.iter().zip(acc) {
                image.set((*alpha).clone(), v.scale(&inv_d));
            }
        }
    }
    Ok(HsDerivation::from_parts(ring, coideal, images))
}

/// The two routes to the `HH^p` family summing to `δ`: through
/// `bold-ε ∘ ε⁻¹`, and through the direct linear solve.
pub fn sigma_inverse_via_eps(
    delta: &Series<ClassicalDerivation>,
) -> Result<DerivationFamily<ClassicalDerivation>> {
    let field = delta.field();
    if field.characteristic() != 0 {
        return Err(Error::PositiveCharacteristic(field.characteristic()));
    }
    integrate_derivations(delta)?.bold_eps()
}

/// `ξ(δ) = 1 + Σ δ_α s^α τ ∈ HS^{p+1}_k(A;Δ×{0,1})`.
pub fn xi_hs(delta: &Series<ClassicalDerivation>) -> Result<HsDerivation> {
    if !delta.has_zero_constant_term() {
        return Err(Error::NonZeroConstant);
    }
    let ring = *delta.ctx();
    let target = delta.coideal().product_with_unit_interval();
    let images = (0..ring.n)
        .map(|j| {
            let mut s = Series::monomial(target.clone(), MultiIndex::zero(target.arity()), ring.var(j))
                .expect("zero index");
            for (alpha, d) in delta.iter() {
                s.set(alpha.extend(1), d.image(j).clone());
            }
            s
        })
        .collect();
    Ok(HsDerivation::from_parts(ring, target, images))
}

/// Where a commutation law fails: coefficient index and generator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ElementViolation {
    pub index: MultiIndex,
    pub generator: usize,
}

impl fmt::Display for ElementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "coefficient {} against x{}", self.index, self.generator + 1)
    }
}

/// Checks `r a = D̃(a) r` for `a = x_1, ..., x_n`, coefficientwise:
/// `r_α ∘ x_j = Σ_{β+γ=α} D_β(x_j) ∘ r_γ`.
pub fn d_element_check(
    r: &Series<LinOp>,
    d: &HsDerivation,
) -> Result<std::result::Result<(), ElementViolation>> {
    if r.coideal() != d.coideal() {
        return Err(Error::CoIdealMismatch);
    }
    if *r.ctx() != d.ring() {
        return Err(Error::ContextMismatch);
    }
    let ring = d.ring();
    for alpha in r.coideal().iter() {
        for j in 0..ring.n {
            let lhs = r.coeff(alpha).compose(&LinOp::mul_by(&ring.var(j)));
            let mut rhs = LinOp::zero(ring);
            for (beta, v) in d.image(j).iter() {
                if let Some(gamma) = alpha.checked_sub(beta) {
                    rhs = rhs.add(&LinOp::mul_by(v).compose(&r.coeff(&gamma)));
                }
            }
            if !lhs.equals(&rhs) {
                return Ok(Err(ElementViolation {
                    index: alpha.clone(),
                    generator: j,
                }));
            }
        }
    }
    Ok(Ok(()))
}

/// Checks `r′ a = a r′ + δ̃(a)` for `a = x_1, ..., x_n`, coefficientwise:
/// `r′_α ∘ x_j = x_j ∘ r′_α + δ_α(x_j)`.
pub fn delta_element_check(
    r: &Series<LinOp>,
    delta: &Series<ClassicalDerivation>,
) -> Result<std::result::Result<(), ElementViolation>> {
    if r.coideal() != delta.coideal() {
        return Err(Error::CoIdealMismatch);
    }
    if r.ctx() != delta.ctx() {
        return Err(Error::ContextMismatch);
    }
    let ring = *r.ctx();
    for alpha in r.coideal().iter() {
        for j in 0..ring.n {
            let x = LinOp::mul_by(&ring.var(j));
            let rc = r.coeff(alpha);
            let lhs = rc.compose(&x);
            let rhs = x
                .compose(&rc)
                .add(&LinOp::mul_by(delta.coeff(alpha).image(j)));
            if !lhs.equals(&rhs) {
                return Ok(Err(ElementViolation {
                    index: alpha.clone(),
                    generator: j,
                }));
            }
        }
    }
    Ok(Ok(()))
}

/// Outcome of [`characterize_unit`].
#[derive(Clone, Debug)]
pub enum Characterization {
    /// Every coefficient of `ε(r)` is a derivation; `r` is the
    /// HS-derivation returned.
    Accepted(HsDerivation),
    /// `ε(r)_index` is not a derivation, as `witness` shows.
    Rejected { index: MultiIndex, witness: MultiIndex },
}

/// Decides, in characteristic 0, whether a unit operator series is an
/// HS-derivation through the test "ε(r) has derivation coefficients".
pub fn characterize_unit(r: &Series<LinOp>) -> Result<Characterization> {
    let field = r.field();
    if field.characteristic() != 0 {
        return Err(Error::PositiveCharacteristic(field.characteristic()));
    }
    let e = r.eps(Euler::Total)?;
    match operator_series_as_derivations(&e) {
        Ok(_) => {}
        Err(Error::NotADerivationAt { index, witness }) => {
            return Ok(Characterization::Rejected { index, witness })
        }
        Err(other) => return Err(other),
    }
    let ring = *r.ctx();
    let mut cache = EvalCache::new();
    let images = (0..ring.n)
        .map(|j| {
            let mut s = Series::zero(r.coideal().clone(), ring);
            for (alpha, op) in r.iter() {
                s.set(alpha.clone(), op.apply_with(&ring.var(j), &mut cache));
            }
            s
        })
        .collect();
    let d = HsDerivation::from_generator_images(ring, r.coideal().clone(), images)?;
    match d_element_check(r, &d)? {
        Ok(()) => Ok(Characterization::Accepted(d)),
        Err(v) => panic!("ε(r) has derivation coefficients but r is not an HS-derivation ({v})"),
    }
}

/// Checks that a unit operator series is an HS-derivation: `r_0 = Id`,
/// the Leibniz rule on `samples` random pairs of degree `≤ max_degree`, and
/// the commutation `r a = r̃(a) r` on generators through the operator oracle.
pub fn verify_hs(r: &Series<LinOp>, samples: usize, max_degree: u32, seed: u64) -> Report {
    let mut report = Report::new();
    let ring = *r.ctx();
    let zero = MultiIndex::zero(r.arity());
    let id_ok = r.coeff(&zero).equals(&LinOp::identity(ring));
    report.record(
        "constant term is the identity",
        1,
        (!id_ok).then(|| format!("coefficient {zero} differs from Id")),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = EvalCache::new();
    let mut witness = None;
    'pairs: for _ in 0..samples {
        let f = random_poly(&mut rng, ring, max_degree, 3);
        let g = random_poly(&mut rng, ring, max_degree, 3);
        let fg = &f * &g;
        for alpha in r.coideal().iter() {
            let lhs = r.coeff(alpha).apply_with(&fg, &mut cache);
            let mut rhs = ring.zero();
            for beta in alpha.divisors() {
                let gamma = alpha.checked_sub(&beta).expect("divisor");
                let a = r.coeff(&beta).apply_with(&f, &mut cache);
                if a.is_zero() {
                    continue;
                }
                rhs = &rhs + &(&a * &r.coeff(&gamma).apply_with(&g, &mut cache));
            }
            if lhs != rhs {
                witness = Some(format!("coefficient {alpha} on f = {f}, g = {g}"));
                break 'pairs;
            }
        }
    }
    report.record("Leibniz rule on random pairs", samples, witness);

    let images = (0..ring.n)
        .map(|j| {
            let mut s = Series::zero(r.coideal().clone(), ring);
            for (alpha, op) in r.iter() {
                s.set(alpha.clone(), op.apply_with(&ring.var(j), &mut cache));
            }
            s
        })
        .collect();
    let commutation = match HsDerivation::from_generator_images(ring, r.coideal().clone(), images) {
        Ok(d) => match d_element_check(r, &d) {
            Ok(Ok(())) => None,
            Ok(Err(v)) => Some(v.to_string()),
            Err(e) => Some(e.to_string()),
        },
        Err(e) => Some(e.to_string()),
    };
    report.record("commutation r a = r~(a) r on generators", r.coideal().len() * ring.n, commutation);
    report
}
