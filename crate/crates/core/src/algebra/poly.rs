//! Sparse multivariate polynomials `k[x_1, ..., x_n]`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::algebra::field::{Field, Scalar};
use crate::error::{Error, Result};
use crate::index::MultiIndex;

/// The base algebra: a coefficient field and a number of variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PolyRing {
    pub field: Field,
    pub n: usize,
}

impl PolyRing {
    pub fn new(field: Field, n: usize) -> Self {
        assert!(n >= 1, "polynomial rings need at least one variable");
        PolyRing { field, n }
    }

    pub fn zero(&self) -> Poly {
        Poly::zero(*self)
    }

    pub fn one(&self) -> Poly {
        Poly::constant(*self, self.field.one())
    }

    /// `x_{j+1}` for a 0-based `j`.
    pub fn var(&self, j: usize) -> Poly {
        assert!(j < self.n, "variable index out of range");
        Poly::monomial(*self, MultiIndex::unit(self.n, j), self.field.one())
    }

    pub fn int(&self, k: i64) -> Poly {
        Poly::constant(*self, self.field.int(k))
    }

    /// All monomials of total degree at most `d`, in graded order.
    pub fn monomials_up_to(&self, d: u32) -> Vec<MultiIndex> {
        (0..=d).flat_map(|k| MultiIndex::of_degree(self.n, k)).collect()
    }

    pub fn parse(&self, text: &str) -> Result<Poly> {
        Parser::new(*self, text).parse()
    }
}

/// A polynomial in canonical form: no zero coefficients, terms in graded
/// order of their exponents.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    ring: PolyRing,
    terms: BTreeMap<MultiIndex, Scalar>,
}

impl Poly {
    pub fn zero(ring: PolyRing) -> Self {
        Poly {
            ring,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: PolyRing, c: Scalar) -> Self {
        Self::monomial(ring, MultiIndex::zero(ring.n), c)
    }

    pub fn monomial(ring: PolyRing, exps: MultiIndex, c: Scalar) -> Self {
        assert_eq!(exps.arity(), ring.n, "monomial arity mismatch");
        assert_eq!(c.field(), ring.field, "coefficient field mismatch");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Poly { ring, terms }
    }

    pub fn from_terms<I>(ring: PolyRing, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Scalar)>,
    {
        let mut out = Poly::zero(ring);
        for (m, c) in terms {
            if m.arity() != ring.n {
                return Err(Error::ArityMismatch {
                    what: "polynomial exponent",
                    expected: ring.n,
                    found: m.arity(),
                });
            }
            if c.field() != ring.field {
                return Err(Error::FieldMismatch(ring.field.to_string(), c.field().to_string()));
            }
            out.add_term(m, &c);
        }
        Ok(out)
    }

    fn add_term(&mut self, m: MultiIndex, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = &*existing + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn ring(&self) -> PolyRing {
        self.ring
    }

    pub fn field(&self) -> Field {
        self.ring.field
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(MultiIndex::is_zero)
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&MultiIndex::zero(self.ring.n))
    }

    /// Total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().last().map(MultiIndex::degree).unwrap_or(0)
    }

    pub fn coeff(&self, m: &MultiIndex) -> Scalar {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| self.ring.field.zero())
    }

    /// Terms in graded order of exponents.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.ring);
        }
        Poly {
            ring: self.ring,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// `∂f/∂x_{j+1}`.
    pub fn partial(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.ring);
        for (m, c) in &self.terms {
            let e = m.get(j);
            if e == 0 {
                continue;
            }
            let lowered = m
                .checked_sub(&MultiIndex::unit(self.ring.n, j))
                .expect("positive exponent");
            out.add_term(lowered, &(c * &self.ring.field.int(e as i64)));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = self.ring.one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn assert_ring(&self, other: &Poly) {
        assert_eq!(
            self.ring, other.ring,
            "polynomial ring mismatch: {:?} vs {:?}",
            self.ring, other.ring
        );
    }

    fn check_ring(&self, other: &Poly) -> Result<()> {
        if self.ring.field != other.ring.field {
            return Err(Error::FieldMismatch(
                self.ring.field.to_string(),
                other.ring.field.to_string(),
            ));
        }
        if self.ring.n != other.ring.n {
            return Err(Error::ArityMismatch {
                what: "polynomial",
                expected: self.ring.n,
                found: other.ring.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly> {
        self.check_ring(other)?;
        Ok(self + other)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_ring(other)?;
        Ok(self * other)
    }

    pub fn checked_scale(&self, c: &Scalar) -> Result<Poly> {
        if c.field() != self.ring.field {
            return Err(Error::FieldMismatch(
                self.ring.field.to_string(),
                c.field().to_string(),
            ));
        }
        Ok(self.scale(c))
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        self.assert_ring(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        Poly {
            ring: self.ring,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        self.assert_ring(rhs);
        let mut out = Poly::zero(self.ring);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1 + m2, &(c1 * c2));
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let magnitude = if negative { -c } else { c.clone() };
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = m
                .entries()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("x{}", j + 1)
                    } else {
                        format!("x{}^{}", j + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{magnitude}")?;
            } else if magnitude.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", magnitude, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Recursive-descent parser for expressions such as `3/2*x1^2*x2 - x3`.
///
/// Variables are `x1..xn`; for `n <= 3` the aliases `x, y, z` are accepted.
struct Parser<'a> {
    ring: PolyRing,
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(ring: PolyRing, src: &'a str) -> Self {
        Parser {
            ring,
            src,
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::parse(format!(
            "{msg} at column {} in polynomial `{}`",
            self.pos + 1,
            self.src
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Poly> {
        let p = self.expr()?;
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                '-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                '/' => {
                    self.pos += 1;
                    let d = self.unary()?;
                    if !d.is_constant() {
                        return Err(self.error("division by a non-constant polynomial"));
                    }
                    let inv = d
                        .constant_term()
                        .inverse()
                        .ok_or_else(|| self.error("division by zero"))?;
                    acc = acc.scale(&inv);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.integer()?;
            let k: u32 = k
                .try_into()
                .map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| self.error("integer out of range"))
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let c = self.ring.field.parse_scalar(&text)?;
                Ok(Poly::constant(self.ring, c))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                let j = self.variable(&name).ok_or_else(|| {
                    self.pos = start;
                    self.error(&format!("unknown variable `{name}`"))
                })?;
                Ok(self.ring.var(j))
            }
            _ => Err(self.error("expected a number, variable or `(`")),
        }
    }

    fn variable(&self, name: &str) -> Option<usize> {
        if let Some(idx) = name.strip_prefix('x').filter(|s| !s.is_empty()) {
            let j: usize = idx.parse().ok()?;
            return (1..=self.ring.n).contains(&j).then(|| j - 1);
        }
        if self.ring.n <= 3 {
            let j = match name {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => return None,
            };
            return (j < self.ring.n).then_some(j);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: usize) -> PolyRing {
        PolyRing::new(Field::Rational, n)
    }

    #[test]
    fn difference_of_squares() {
        let r = q(1);
        let x = r.var(0);
        let one = r.one();
        assert_eq!(&(&x + &one) * &(&x - &one), r.parse("x^2 - 1").unwrap());
        assert!((&x * &r.zero()).is_zero());
    }

    #[test]
    fn frobenius_in_characteristic_two() {
        let r = PolyRing::new(Field::prime(2).unwrap(), 2);
        let s = &r.var(0) + &r.var(1);
        assert_eq!(&s * &s, r.parse("x^2 + y^2").unwrap());
    }

    #[test]
    fn parse_and_display() {
        let r = q(3);
        let f = r.parse("3/2*x1^2*x2 - x3").unwrap();
        assert_eq!(f.to_string(), "3/2*x1^2*x2 - x3");
        assert_eq!(r.parse(&f.to_string()).unwrap(), f);
        let g = r.parse("(x + 2*y)^2 / 4").unwrap();
        assert_eq!(g, r.parse("1/4*x^2 + x*y + y^2").unwrap());
        assert_eq!(r.parse("-x1").unwrap().to_string(), "-x1");
        assert_eq!(r.zero().to_string(), "0");
    }

    #[test]
    fn parse_errors_carry_columns() {
        let r = q(2);
        let err = r.parse("x1 + x7").unwrap_err().to_string();
        assert!(err.contains("column 6"), "{err}");
        assert!(r.parse("x1 / x2").is_err());
        assert!(r.parse("(x1").is_err());
        assert!(r.parse("x1 x2").is_err());
    }

    #[test]
    fn partial_derivatives() {
        let r = q(2);
        let f = r.parse("x^3*y + 5*y^2").unwrap();
        assert_eq!(f.partial(0), r.parse("3*x^2*y").unwrap());
        assert_eq!(f.partial(1), r.parse("x^3 + 10*y").unwrap());
    }

    #[test]
    fn checked_ops() {
        let a = q(1).one();
        let b = PolyRing::new(Field::prime(5).unwrap(), 1).one();
        assert!(a.checked_add(&b).is_err());
        assert!(a.checked_mul(&q(2).one()).is_err());
        assert_eq!(a.checked_mul(&a).unwrap(), a);
    }
}
