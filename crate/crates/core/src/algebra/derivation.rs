//! Classical `k`-derivations of `k[x_1, ..., x_n]`, stored by their values
//! on the generators.

use std::fmt;

use crate::algebra::field::Scalar;
use crate::algebra::poly::{Poly, PolyRing};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ClassicalDerivation {
    ring: PolyRing,
    images: Vec<Poly>,
}

impl ClassicalDerivation {
    pub fn new(ring: PolyRing, images: Vec<Poly>) -> Result<Self> {
        if images.len() != ring.n {
            return Err(Error::ArityMismatch {
                what: "derivation images",
                expected: ring.n,
                found: images.len(),
            });
        }
        if let Some(bad) = images.iter().find(|f| f.ring() != ring) {
            return Err(Error::FieldMismatch(ring.field.to_string(), bad.field().to_string()));
        }
        Ok(ClassicalDerivation { ring, images })
    }

    pub fn zero(ring: PolyRing) -> Self {
        ClassicalDerivation {
            ring,
            images: vec![ring.zero(); ring.n],
        }
    }

    /// `∂/∂x_{j+1}`.
    pub fn partial(ring: PolyRing, j: usize) -> Self {
        let mut images = vec![ring.zero(); ring.n];
        images[j] = ring.one();
        ClassicalDerivation { ring, images }
    }

    pub fn ring(&self) -> PolyRing {
        self.ring
    }

    pub fn images(&self) -> &[Poly] {
        &self.images
    }

    pub fn image(&self, j: usize) -> &Poly {
        &self.images[j]
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(Poly::is_zero)
    }

    /// `Σ_j δ(x_j) ∂f/∂x_j`.
    pub fn apply(&self, f: &Poly) -> Poly {
        assert_eq!(f.ring(), self.ring, "derivation applied across rings");
        self.images
            .iter()
            .enumerate()
            .filter(|(_, img)| !img.is_zero())
            .fold(self.ring.zero(), |acc, (j, img)| &acc + &(img * &f.partial(j)))
    }

    /// `[δ, η] = δη − ηδ`, again a derivation.
    pub fn lie_bracket(&self, other: &ClassicalDerivation) -> ClassicalDerivation {
        let images = (0..self.ring.n)
            .map(|j| &self.apply(other.image(j)) - &other.apply(self.image(j)))
            .collect();
        ClassicalDerivation {
            ring: self.ring,
            images,
        }
    }

    pub fn add(&self, other: &ClassicalDerivation) -> ClassicalDerivation {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ClassicalDerivation) -> ClassicalDerivation {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> ClassicalDerivation {
        self.map(|a| -a)
    }

    pub fn scale(&self, c: &Scalar) -> ClassicalDerivation {
        self.map(|a| a.scale(c))
    }

    /// `f·δ`
    pub fn mul_left(&self, f: &Poly) -> ClassicalDerivation {
        self.map(|a| f * a)
    }

    fn map(&self, op: impl Fn(&Poly) -> Poly) -> ClassicalDerivation {
        ClassicalDerivation {
            ring: self.ring,
            images: self.images.iter().map(op).collect(),
        }
    }

    fn zip(&self, other: &ClassicalDerivation, op: impl Fn(&Poly, &Poly) -> Poly) -> ClassicalDerivation {
        assert_eq!(self.ring, other.ring, "derivation ring mismatch");
        ClassicalDerivation {
            ring: self.ring,
            images: self.images.iter().zip(&other.images).map(|(a, b)| op(a, b)).collect(),
        }
    }
}

impl fmt::Display for ClassicalDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .filter(|(_, img)| !img.is_zero())
            .map(|(j, img)| format!("({img})*d{}", j + 1))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
