pub mod algebra;
pub mod error;
pub mod hs;
pub mod index;
pub mod json;
pub mod operator;
pub mod random;
pub mod report;
pub mod series;
pub mod subst;
pub mod verify;

pub use error::{Error, Result};
