//! Exact rational ranks and the sorted multisets used by the voting phase.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::RankError;
use crate::types::{ProcId, SystemParams};

/// A position in the stretched namespace. Always kept in lowest terms with a
/// positive denominator, so equality and ordering are structural.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rank(BigRational);

impl Rank {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, RankError> {
        let den = den.into();
        if den.is_zero() {
            return Err(RankError::ZeroDenominator);
        }
        Ok(Rank(BigRational::new(num.into(), den)))
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        Rank(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Rank(BigRational::zero())
    }

    pub fn one() -> Self {
        Rank(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Rank {
        Rank(self.0.abs())
    }

    pub fn mul_int(&self, k: i64) -> Rank {
        Rank(&self.0 * BigInt::from(k))
    }

    /// Exact division by a non-zero machine integer.
    pub fn div_int(&self, k: i64) -> Rank {
        assert!(k != 0, "division of a rank by zero");
        Rank(&self.0 / BigInt::from(k))
    }

    pub fn mul(&self, other: &Rank) -> Rank {
        Rank(&self.0 * &other.0)
    }

    /// Nearest integer; exact halves go up.
    pub fn round_nearest(&self) -> BigInt {
        let two = BigInt::from(2);
        let shifted = &self.0.numer().clone() * &two + self.0.denom();
        shifted.div_floor(&(self.0.denom() * &two))
    }

    /// Lossy, for display and logging only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for Rank {
    fn from(r: BigRational) -> Self {
        Rank(r)
    }
}

impl Add for &Rank {
    type Output = Rank;
    fn add(self, rhs: &Rank) -> Rank {
        Rank(&self.0 + &rhs.0)
    }
}

impl Sub for &Rank {
    type Output = Rank;
    fn sub(self, rhs: &Rank) -> Rank {
        Rank(&self.0 - &rhs.0)
    }
}

impl Add for Rank {
    type Output = Rank;
    fn add(self, rhs: Rank) -> Rank {
        Rank(self.0 + rhs.0)
    }
}

impl Sub for Rank {
    type Output = Rank;
    fn sub(self, rhs: Rank) -> Rank {
        Rank(self.0 - rhs.0)
    }
}

impl fmt::Debug for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RankRepr {
    num: String,
    den: String,
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RankRepr {
            num: self.0.numer().to_string(),
            den: self.0.denom().to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = RankRepr::deserialize(d)?;
        let num: BigInt = repr.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = repr.den.parse().map_err(D::Error::custom)?;
        Rank::new(num, den).map_err(D::Error::custom)
    }
}

/// Stretch factor separating adjacent ranks: `1 + 1/(3(n+t))`.
pub fn delta(params: &SystemParams) -> Rank {
    let denom = 3 * (params.n as i64 + params.t as i64);
    &Rank::one() + &Rank::new(1, denom).expect("n + t is positive")
}

/// 1-based position of `v` in the ascending order of `set`.
pub fn rank_in(set: &BTreeSet<ProcId>, v: ProcId) -> Result<usize, RankError> {
    if !set.contains(&v) {
        return Err(RankError::AbsentElement(v));
    }
    Ok(set.range(..v).count() + 1)
}

/// Sorted multiset of ranks. Duplicates are kept; positional access is exact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Multiset {
    elems: Vec<Rank>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, r: Rank) {
        let pos = self.elems.partition_point(|e| e <= &r);
        self.elems.insert(pos, r);
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// 0-based positional access in ascending order.
    pub fn get(&self, k: usize) -> Option<&Rank> {
        self.elems.get(k)
    }

    pub fn min(&self) -> Option<&Rank> {
        self.elems.first()
    }

    pub fn max(&self) -> Option<&Rank> {
        self.elems.last()
    }

    pub fn remove_min(&mut self) -> Option<Rank> {
        if self.elems.is_empty() {
            None
        } else {
            Some(self.elems.remove(0))
        }
    }

    pub fn remove_max(&mut self) -> Option<Rank> {
        self.elems.pop()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rank> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[Rank] {
        &self.elems
    }

    /// Arithmetic mean; `None` when empty.
    pub fn mean(&self) -> Option<Rank> {
        if self.elems.is_empty() {
            return None;
        }
        let sum = self.elems.iter().fold(Rank::zero(), |acc, r| &acc + r);
        Some(sum.div_int(self.elems.len() as i64))
    }
}

impl FromIterator<Rank> for Multiset {
    fn from_iter<I: IntoIterator<Item = Rank>>(iter: I) -> Self {
        let mut elems: Vec<Rank> = iter.into_iter().collect();
        elems.sort();
        Multiset { elems }
    }
}

/// Spread (max - min) of a non-empty collection of ranks.
pub fn spread<'a>(values: impl IntoIterator<Item = &'a Rank>) -> Option<Rank> {
    let mut lo: Option<&Rank> = None;
    let mut hi: Option<&Rank> = None;
    for v in values {
        if lo.is_none_or(|l| v.cmp(l) == Ordering::Less) {
            lo = Some(v);
        }
        if hi.is_none_or(|h| v.cmp(h) == Ordering::Greater) {
            hi = Some(v);
        }
    }
    Some(hi? - lo?)
}
