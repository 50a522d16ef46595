//! Exact coefficient fields: the rationals and prime fields `F_p`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest accepted prime modulus; keeps products inside `u128` trivially
/// and residues inside `u64`.
pub const MAX_MODULUS: u64 = 1 << 31;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Field {
    Rational,
    Prime(u64),
}

impl Field {
    pub fn prime(p: u64) -> Result<Field> {
        if !(2..=MAX_MODULUS).contains(&p) || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Field::Prime(p))
    }

    /// Builds `Q` for `0` and `F_p` otherwise.
    pub fn from_characteristic(c: u64) -> Result<Field> {
        if c == 0 {
            Ok(Field::Rational)
        } else {
            Field::prime(c)
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Rational => 0,
            Field::Prime(p) => *p,
        }
    }

    pub fn zero(&self) -> Scalar {
        self.int(0)
    }

    pub fn one(&self) -> Scalar {
        self.int(1)
    }

    pub fn int(&self, k: i64) -> Scalar {
        match *self {
            Field::Rational => Scalar::Q(BigRational::from_integer(BigInt::from(k))),
            Field::Prime(p) => Scalar::Fp {
                value: k.rem_euclid(p as i64) as u64,
                modulus: p,
            },
        }
    }

    /// Maps a rational into this field; fails in `F_p` when `p` divides the
    /// denominator.
    pub fn rational(&self, q: &BigRational) -> Result<Scalar> {
        match *self {
            Field::Rational => Ok(Scalar::Q(q.clone())),
            Field::Prime(p) => {
                let m = BigInt::from(p);
                let num = q.numer().mod_floor(&m).to_u64().expect("residue fits");
                let den = q.denom().mod_floor(&m).to_u64().expect("residue fits");
                if den == 0 {
                    return Err(Error::DivisionByZero(format!("reducing {q} modulo {p}")));
                }
                let num = Scalar::Fp { value: num, modulus: p };
                let den = Scalar::Fp { value: den, modulus: p };
                Ok(&num * &den.inverse().expect("nonzero residue"))
            }
        }
    }

    /// Parses `"a"` or `"a/b"` with integer `a, b`.
    pub fn parse_scalar(&self, text: &str) -> Result<Scalar> {
        let t = text.trim();
        let (num, den) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let num: BigInt = num
            .parse()
            .map_err(|_| Error::parse(format!("bad coefficient `{text}`")))?;
        let den: BigInt = den
            .parse()
            .map_err(|_| Error::parse(format!("bad coefficient `{text}`")))?;
        if den.is_zero() {
            return Err(Error::DivisionByZero(format!("coefficient `{text}`")));
        }
        self.rational(&BigRational::new(num, den))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "Q"),
            Field::Prime(p) => write!(f, "F_{p}"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of a [`Field`]. Rationals stay in lowest terms with a positive
/// denominator; residues stay in `[0, p)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Scalar {
    Q(BigRational),
    Fp { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Q(_) => Field::Rational,
            Scalar::Fp { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_zero(),
            Scalar::Fp { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_one(),
            Scalar::Fp { value, .. } => *value == 1,
        }
    }

    pub fn inverse(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        match self {
            Scalar::Q(q) => Some(Scalar::Q(q.recip())),
            Scalar::Fp { value, modulus } => {
                let inv = pow_mod(*value, modulus - 2, *modulus);
                Some(Scalar::Fp {
                    value: inv,
                    modulus: *modulus,
                })
            }
        }
    }

    /// Rational value, when in characteristic zero.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Q(q) => Some(q),
            Scalar::Fp { .. } => None,
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        self.check_field(other)?;
        Ok(self + other)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.check_field(other)?;
        Ok(self * other)
    }

    fn check_field(&self, other: &Scalar) -> Result<()> {
        if self.field() != other.field() {
            return Err(Error::FieldMismatch(
                self.field().to_string(),
                other.field().to_string(),
            ));
        }
        Ok(())
    }

    /// Whether the value is negative when written in canonical text form.
    pub(crate) fn is_negative(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_negative(),
            Scalar::Fp { .. } => false,
        }
    }
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc: u128 = 1;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

fn same_modulus(a: u64, b: u64) -> u64 {
    assert_eq!(a, b, "scalar field mismatch: F_{a} vs F_{b}");
    a
}

impl Add for &Scalar {
    type Output = Scalar;

    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp { value: a, modulus: p }, Scalar::Fp { value: b, modulus: q }) => {
                let p = same_modulus(*p, *q);
                Scalar::Fp {
                    value: (a + b) % p,
                    modulus: p,
                }
            }
            _ => panic!("scalar field mismatch: {} vs {}", self.field(), rhs.field()),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;

    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;

    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp { value: a, modulus: p }, Scalar::Fp { value: b, modulus: q }) => {
                let p = same_modulus(*p, *q);
                Scalar::Fp {
                    value: ((*a as u128 * *b as u128) % p as u128) as u64,
                    modulus: p,
                }
            }
            _ => panic!("scalar field mismatch: {} vs {}", self.field(), rhs.field()),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(a) => Scalar::Q(-a),
            Scalar::Fp { value, modulus } => Scalar::Fp {
                value: (modulus - value) % modulus,
                modulus: *modulus,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Q(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Fp { value, .. } => write!(f, "{value}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_stay_reduced() {
        let q = Field::Rational;
        let a = q.parse_scalar("6/-4").unwrap();
        assert_eq!(a.to_string(), "-3/2");
        let b = q.parse_scalar("3/2").unwrap();
        assert!((&a + &b).is_zero());
        assert_eq!((&b * &b).to_string(), "9/4");
    }

    #[test]
    fn prime_field_arithmetic() {
        let f5 = Field::prime(5).unwrap();
        let a = f5.int(-1);
        assert_eq!(a, f5.int(4));
        assert_eq!(&a * &a, f5.one());
        assert_eq!(f5.parse_scalar("1/2").unwrap(), f5.int(3));
        assert!(f5.parse_scalar("1/5").is_err());
        assert_eq!(f5.int(3).inverse().unwrap(), f5.int(2));
        assert!(f5.zero().inverse().is_none());
    }

    #[test]
    fn rejects_composite_moduli() {
        assert!(Field::prime(4).is_err());
        assert!(Field::prime(1).is_err());
        assert!(Field::prime(2).is_ok());
        assert!(Field::from_characteristic(0).unwrap() == Field::Rational);
    }

    #[test]
    fn checked_ops_report_mismatch() {
        let a = Field::Rational.one();
        let b = Field::prime(3).unwrap().one();
        assert!(matches!(a.checked_add(&b), Err(Error::FieldMismatch(..))));
    }
}
