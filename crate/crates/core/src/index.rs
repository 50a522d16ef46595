//! Multi-indices, finite co-ideals of `N^p` and ordered partitions.
//!
//! Every enumeration in the crate follows the graded order defined on
//! [`MultiIndex`]: total degree first, then larger leading exponents first,
//! so that `(1,0)` precedes `(0,1)`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::iter;
use std::ops::Add;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An exponent vector `α ∈ N^p`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    /// The canonical basis vector `v^i` (0-based axis).
    pub fn unit(p: usize, i: usize) -> Self {
        let mut e = vec![0; p];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// `|α|`
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Axes with a nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.arity() == other.arity() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Appends one extra coordinate.
    pub fn extend(&self, last: u32) -> MultiIndex {
        let mut e = self.0.clone();
        e.push(last);
        MultiIndex(e)
    }

    /// Every `β ≤ α`, in graded order.
    pub fn divisors(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.arity())];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=a).map(move |k| {
                        let mut v = prefix.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        let mut out: Vec<MultiIndex> = out.into_iter().map(MultiIndex).collect();
        out.sort();
        out
    }

    /// Every multi-index of arity `p` and degree exactly `d`, in graded order.
    pub fn of_degree(p: usize, d: u32) -> Vec<MultiIndex> {
        fn rec(p: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if p == 1 {
                prefix.push(d);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=d).rev() {
                prefix.push(first);
                rec(p - 1, d - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(p, d, &mut Vec::with_capacity(p), &mut out);
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.arity(), rhs.arity(), "multi-index arity mismatch");
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Add for MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: MultiIndex) -> MultiIndex {
        &self + &rhs
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::parse(format!("multi-index `{s}` must look like (a1,...,ap)")))?;
        let entries = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::parse(format!("bad multi-index entry `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(Error::parse("multi-index must have arity at least 1"));
        }
        Ok(MultiIndex(entries))
    }
}

/// How a co-ideal was described; kept only for serialization.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CoIdealShape {
    Degree(u32),
    Box(MultiIndex),
    Explicit,
}

#[derive(Debug)]
struct CoIdealInner {
    p: usize,
    members: Vec<MultiIndex>,
    lookup: HashSet<MultiIndex>,
    shape: CoIdealShape,
}

/// A finite, non-empty, down-closed subset of `N^p`.
///
/// Cloning is cheap: the member list is shared.
#[derive(Clone, Debug)]
pub struct CoIdeal(Arc<CoIdealInner>);

impl CoIdeal {
    fn build(p: usize, members: BTreeSet<MultiIndex>, shape: CoIdealShape) -> Self {
        let members: Vec<MultiIndex> = members.into_iter().collect();
        let lookup = members.iter().cloned().collect();
        CoIdeal(Arc::new(CoIdealInner {
            p,
            members,
            lookup,
            shape,
        }))
    }

    /// `{α : |α| ≤ m}`.
    pub fn from_degree_bound(p: usize, m: u32) -> Self {
        assert!(p >= 1, "co-ideals need arity at least 1");
        let members = (0..=m).flat_map(|d| MultiIndex::of_degree(p, d)).collect();
        Self::build(p, members, CoIdealShape::Degree(m))
    }

    /// `{α : α ≤ β}`.
    pub fn from_box(beta: &MultiIndex) -> Self {
        assert!(beta.arity() >= 1, "co-ideals need arity at least 1");
        let members = beta.divisors().into_iter().collect();
        Self::build(beta.arity(), members, CoIdealShape::Box(beta.clone()))
    }

    /// The co-ideal with exactly the given members.
    pub fn from_members<I: IntoIterator<Item = MultiIndex>>(p: usize, members: I) -> Result<Self> {
        let set: BTreeSet<MultiIndex> = members.into_iter().collect();
        if set.iter().any(|a| a.arity() != p) {
            return Err(Error::ArityMismatch {
                what: "co-ideal member",
                expected: p,
                found: set.iter().find(|a| a.arity() != p).map(|a| a.arity()).unwrap_or(0),
            });
        }
        if set.is_empty() || !is_coideal(&set) {
            return Err(Error::NotACoIdeal);
        }
        Ok(Self::build(p, set, CoIdealShape::Explicit))
    }

    /// The smallest co-ideal containing every given index.
    pub fn generated_by<I: IntoIterator<Item = MultiIndex>>(p: usize, gens: I) -> Self {
        let mut set = BTreeSet::new();
        set.insert(MultiIndex::zero(p));
        for g in gens {
            assert_eq!(g.arity(), p, "generator arity mismatch");
            set.extend(g.divisors());
        }
        Self::build(p, set, CoIdealShape::Explicit)
    }

    pub fn arity(&self) -> usize {
        self.0.p
    }

    pub fn len(&self) -> usize {
        self.0.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.members.is_empty()
    }

    pub fn shape(&self) -> &CoIdealShape {
        &self.0.shape
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.0.lookup.contains(alpha)
    }

    /// Members in graded order.
    pub fn members(&self) -> &[MultiIndex] {
        &self.0.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.0.members.iter()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.members.last().map(MultiIndex::degree).unwrap_or(0)
    }

    pub fn is_subset(&self, other: &CoIdeal) -> bool {
        self.arity() == other.arity() && self.iter().all(|a| other.contains(a))
    }

    /// Members of degree strictly below `d`.
    pub fn below_degree(&self, d: u32) -> CoIdeal {
        let set = self.iter().filter(|a| a.degree() < d).cloned().collect();
        Self::build(self.arity(), set, CoIdealShape::Explicit)
    }

    pub fn union(&self, other: &CoIdeal) -> CoIdeal {
        assert_eq!(self.arity(), other.arity());
        let set = self.iter().chain(other.iter()).cloned().collect();
        Self::build(self.arity(), set, CoIdealShape::Explicit)
    }

    pub fn intersection(&self, other: &CoIdeal) -> CoIdeal {
        assert_eq!(self.arity(), other.arity());
        let set = self.iter().filter(|a| other.contains(a)).cloned().collect();
        Self::build(self.arity(), set, CoIdealShape::Explicit)
    }

    /// `Δ × {0,1}` in arity `p + 1`; the new coordinate is last.
    pub fn product_with_unit_interval(&self) -> CoIdeal {
        let set = self
            .iter()
            .flat_map(|a| [a.extend(0), a.extend(1)])
            .collect();
        let shape = match self.shape() {
            CoIdealShape::Box(beta) => CoIdealShape::Box(beta.extend(1)),
            _ => CoIdealShape::Explicit,
        };
        Self::build(self.arity() + 1, set, shape)
    }

    /// Minimal elements of the complement: the generators of the monomial
    /// ideal that a truncated series ring quotients out.
    pub fn border(&self) -> Vec<MultiIndex> {
        let p = self.arity();
        let mut out = BTreeSet::new();
        for a in self.iter() {
            for i in 0..p {
                let cand = a + &MultiIndex::unit(p, i);
                if self.contains(&cand) {
                    continue;
                }
                let minimal = cand.support().into_iter().all(|k| {
                    let below = cand.checked_sub(&MultiIndex::unit(p, k)).expect("in support");
                    self.contains(&below)
                });
                if minimal {
                    out.insert(cand);
                }
            }
        }
        out.into_iter().collect()
    }
}

impl PartialEq for CoIdeal {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.members == other.0.members)
    }
}

impl Eq for CoIdeal {}

impl fmt::Display for CoIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, a) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// Down-closed test for an arbitrary finite set. The empty set counts as a
/// co-ideal; any non-empty co-ideal contains `0`.
pub fn is_coideal<'a, I>(set: I) -> bool
where
    I: IntoIterator<Item = &'a MultiIndex>,
    I::IntoIter: Clone,
{
    let items = set.into_iter();
    let lookup: HashSet<&MultiIndex> = items.clone().collect();
    items.clone().all(|a| {
        a.support().into_iter().all(|i| {
            let below = a
                .checked_sub(&MultiIndex::unit(a.arity(), i))
                .expect("axis in support");
            lookup.contains(&below)
        })
    })
}

/// `Par(α, d)`: ordered `d`-tuples of nonzero multi-indices summing to `α`,
/// produced lazily in graded order on the tuple.
pub fn partitions(alpha: &MultiIndex, d: usize) -> Box<dyn Iterator<Item = Vec<MultiIndex>>> {
    if d == 0 || d as u32 > alpha.degree() {
        return Box::new(iter::empty());
    }
    if d == 1 {
        return Box::new(iter::once(vec![alpha.clone()]));
    }
    let alpha = alpha.clone();
    let firsts: Vec<MultiIndex> = alpha
        .divisors()
        .into_iter()
        .filter(|b| !b.is_zero() && alpha.degree() - b.degree() >= (d - 1) as u32)
        .collect();
    Box::new(firsts.into_iter().flat_map(move |first| {
        let rest = alpha.checked_sub(&first).expect("divisor");
        partitions(&rest, d - 1).map(move |tail| {
            let mut tuple = Vec::with_capacity(d);
            tuple.push(first.clone());
            tuple.extend(tail);
            tuple
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn degree_bound_examples() {
        let c = CoIdeal::from_degree_bound(1, 2);
        assert_eq!(c.members(), &[mi(&[0]), mi(&[1]), mi(&[2])]);
        let c = CoIdeal::from_degree_bound(2, 1);
        assert_eq!(c.members(), &[mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        // brute force count of degree <= 2 in 3 variables
        let brute = (0..=2u32)
            .flat_map(|a| (0..=2u32).flat_map(move |b| (0..=2u32).map(move |c| (a, b, c))))
            .filter(|(a, b, c)| a + b + c <= 2)
            .count();
        assert_eq!(brute, 10);
        assert_eq!(CoIdeal::from_degree_bound(3, 2).len(), brute);
    }

    #[test]
    fn box_examples() {
        let c = CoIdeal::from_box(&mi(&[1, 1]));
        assert_eq!(
            c.members(),
            &[mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])]
        );
        assert_eq!(CoIdeal::from_box(&mi(&[0])).members(), &[mi(&[0])]);
        assert_eq!(CoIdeal::from_box(&mi(&[2, 1])).len(), 3 * 2);
    }

    #[test]
    fn coideal_recognition() {
        assert!(is_coideal(&[mi(&[0, 0]), mi(&[1, 0])]));
        assert!(!is_coideal(&[mi(&[0]), mi(&[2])]));
        assert!(is_coideal(&Vec::<MultiIndex>::new()));
        for p in 1..=3 {
            for m in 0..=3 {
                assert!(is_coideal(CoIdeal::from_degree_bound(p, m).members()));
            }
        }
        assert!(CoIdeal::from_members(1, vec![mi(&[0]), mi(&[2])]).is_err());
    }

    #[test]
    fn removing_a_non_maximal_element_breaks_down_closure() {
        let c = CoIdeal::from_degree_bound(2, 3);
        for a in c.iter() {
            let maximal = (0..2).all(|i| !c.contains(&(a + &MultiIndex::unit(2, i))));
            let rest: Vec<_> = c.iter().filter(|b| *b != a).cloned().collect();
            assert_eq!(is_coideal(&rest), maximal, "removing {a}");
        }
    }

    #[test]
    fn partition_examples() {
        let p: Vec<_> = partitions(&mi(&[2]), 2).collect();
        assert_eq!(p, vec![vec![mi(&[1]), mi(&[1])]]);
        let p: Vec<_> = partitions(&mi(&[1, 1]), 2).collect();
        assert_eq!(
            p,
            vec![vec![mi(&[1, 0]), mi(&[0, 1])], vec![mi(&[0, 1]), mi(&[1, 0])]]
        );
        let p: Vec<_> = partitions(&mi(&[2]), 1).collect();
        assert_eq!(p, vec![vec![mi(&[2])]]);
        assert_eq!(partitions(&mi(&[2]), 3).count(), 0);
    }

    #[test]
    fn unit_interval_product() {
        let c = CoIdeal::from_degree_bound(1, 1).product_with_unit_interval();
        assert_eq!(c.len(), 4);
        assert!(is_coideal(c.members()));
        for a in [[0, 0], [1, 0], [0, 1], [1, 1]] {
            assert!(c.contains(&mi(&a)));
        }
    }

    #[test]
    fn border_of_degree_bound() {
        let c = CoIdeal::from_degree_bound(2, 1);
        assert_eq!(c.border(), vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        let c = CoIdeal::from_box(&mi(&[1, 0]));
        assert_eq!(c.border(), vec![mi(&[0, 1]), mi(&[2, 0])]);
    }

    #[test]
    fn text_form_round_trips() {
        let a: MultiIndex = "(3, 0,1)".parse().unwrap();
        assert_eq!(a, mi(&[3, 0, 1]));
        assert_eq!(a.to_string(), "(3,0,1)");
        assert!("3,0".parse::<MultiIndex>().is_err());
    }
}
