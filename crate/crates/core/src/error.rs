use thiserror::Error;

use crate::index::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what}: expected arity {expected}, found {found}")]
    ArityMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(String, String),

    #[error("{0} is not a prime modulus")]
    NotPrime(u64),

    #[error("division by zero in {0}")]
    DivisionByZero(String),

    #[error("set is not a non-empty co-ideal")]
    NotACoIdeal,

    #[error("co-ideal mismatch between operands")]
    CoIdealMismatch,

    #[error("coefficient context mismatch between operands")]
    ContextMismatch,

    #[error("{0} is not contained in the ambient co-ideal")]
    NotSubset(String),

    #[error("index {0} lies outside the co-ideal")]
    IndexOutsideCoIdeal(MultiIndex),

    #[error("series is not a unit: constant term is not the identity")]
    NonUnit,

    #[error("series must have zero constant term")]
    NonZeroConstant,

    #[error("axis {axis} out of range for arity {arity}")]
    AxisOutOfRange { axis: usize, arity: usize },

    #[error("division by {divisor} required at index {index} is impossible in characteristic {modulus}")]
    Characteristic {
        index: MultiIndex,
        divisor: u64,
        modulus: u64,
    },

    #[error("operation requires characteristic 0, field has characteristic {0}")]
    PositiveCharacteristic(u64),

    #[error("operator is not a derivation: differs from its derivation candidate on monomial {witness}")]
    NotADerivation { witness: MultiIndex },

    #[error("coefficient {index} is not a derivation: differs from its derivation candidate on monomial {witness}")]
    NotADerivationAt {
        index: MultiIndex,
        witness: MultiIndex,
    },

    #[error("image of generator {generator} must have constant term x{}", generator + 1)]
    WrongConstantTerm { generator: usize },

    #[error("substitution image {image} has order < 1")]
    OrderViolation { image: usize },

    #[error("substitution map is not well defined: s^{index} must vanish in the target")]
    NotWellDefined { index: MultiIndex },
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
