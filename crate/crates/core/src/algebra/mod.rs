//! Coefficient fields, the polynomial algebra `A = k[x_1, ..., x_n]` and its
//! classical derivations.

pub mod derivation;
pub mod field;
pub mod poly;

pub use derivation::ClassicalDerivation;
pub use field::{Field, Scalar};
pub use poly::{Poly, PolyRing};
