//! Exact set algebra on finite unions of closed subintervals of `[0, 1]`.
//!
//! Every endpoint is a [`BigRational`]; floating point only appears when a
//! caller explicitly asks for it.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar used for endpoints and measures.
pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("endpoint {0} lies outside [0, 1]")]
    OutOfRange(String),
    #[error("interval [{0}, {1}] has its endpoints reversed")]
    Reversed(String, String),
    #[error("partition uses {got} cuts but at most {max} are allowed")]
    TooManyCuts { got: usize, max: usize },
    #[error("cut positions are not sorted")]
    UnsortedCuts,
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Exact rational value of a finite double.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"0.25"`, `"1/4"`, `"3"` or `"2.5e-3"` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q, IntervalError> {
    let err = || IntervalError::Parse(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| err())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Q::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Decimal string when the denominator divides a power of ten, `p/q` otherwise.
pub fn format_q(x: &Q) -> String {
    let mut den = x.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", x.numer(), x.denom());
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return x.numer().to_string();
    }
    let scaled = x * Q::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let mut s = n.abs().to_string();
    if s.len() <= digits {
        s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
    }
    let (ip, fp) = s.split_at(s.len() - digits);
    let fp = fp.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if fp.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{fp}")
    }
}

fn check_unit(x: &Q) -> Result<(), IntervalError> {
    if x.is_negative() || *x > Q::one() {
        Err(IntervalError::OutOfRange(format_q(x)))
    } else {
        Ok(())
    }
}

/// Canonical union of closed intervals in `[0, 1]`: sorted, pairwise
/// separated by gaps of positive length, no zero-length pieces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    pieces: Vec<(Q, Q)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn full() -> Self {
        Self { pieces: vec![(Q::zero(), Q::one())] }
    }

    /// Single interval `[a, b]`; empty when `a == b`.
    pub fn interval(a: Q, b: Q) -> Result<Self, IntervalError> {
        Self::canonicalize(vec![(a, b)])
    }

    pub fn from_f64(raw: &[(f64, f64)]) -> Result<Self, IntervalError> {
        Self::canonicalize(raw.iter().map(|&(a, b)| (q_from_f64(a), q_from_f64(b))).collect())
    }

    /// Sorts, merges overlapping or touching pieces and drops degenerate ones.
    pub fn canonicalize(mut raw: Vec<(Q, Q)>) -> Result<Self, IntervalError> {
        for (a, b) in &raw {
            check_unit(a)?;
            check_unit(b)?;
            if a > b {
                return Err(IntervalError::Reversed(format_q(a), format_q(b)));
            }
        }
        raw.retain(|(a, b)| a < b);
        raw.sort_by(|x, y| x.0.cmp(&y.0));
        let mut pieces: Vec<(Q, Q)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match pieces.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => pieces.push((a, b)),
            }
        }
        Ok(Self { pieces })
    }

    /// Trusted constructor for pieces already in canonical form.
    fn from_canonical(pieces: Vec<(Q, Q)>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| w[0].1 < w[1].0));
        debug_assert!(pieces.iter().all(|(a, b)| a < b));
        Self { pieces }
    }

    pub fn pieces(&self) -> &[(Q, Q)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn measure(&self) -> Q {
        self.pieces.iter().fold(Q::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// `λ(S ∩ [lo, hi])` without building the intersection.
    pub fn measure_within(&self, lo: &Q, hi: &Q) -> Q {
        let mut total = Q::zero();
        for (a, b) in &self.pieces {
            if b <= lo {
                continue;
            }
            if a >= hi {
                break;
            }
            let l = if a > lo { a } else { lo };
            let r = if b < hi { b } else { hi };
            total += r - l;
        }
        total
    }

    pub fn contains_point(&self, x: &Q) -> bool {
        self.pieces.iter().any(|(a, b)| a <= x && x <= b)
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.pieces.iter().map(|(a, b)| (q_to_f64(a), q_to_f64(b))).collect()
    }

    fn combine(&self, other: &Self, keep: impl Fn(bool, bool) -> bool) -> Self {
        let mut cuts: Vec<&Q> = Vec::with_capacity(2 * (self.pieces.len() + other.pieces.len()) + 2);
        let zero = Q::zero();
        let one = Q::one();
        cuts.push(&zero);
        cuts.push(&one);
        for (a, b) in self.pieces.iter().chain(other.pieces.iter()) {
            cuts.push(a);
            cuts.push(b);
        }
        cuts.sort();
        cuts.dedup();
        let mut out: Vec<(Q, Q)> = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            while i < self.pieces.len() && self.pieces[i].1 <= *lo {
                i += 1;
            }
            while j < other.pieces.len() && other.pieces[j].1 <= *lo {
                j += 1;
            }
            let in_a = i < self.pieces.len() && self.pieces[i].0 <= *lo && *hi <= self.pieces[i].1;
            let in_b = j < other.pieces.len() && other.pieces[j].0 <= *lo && *hi <= other.pieces[j].1;
            if keep(in_a, in_b) {
                match out.last_mut() {
                    Some(last) if last.1 == *lo => last.1 = hi.clone(),
                    _ => out.push((lo.clone(), hi.clone())),
                }
            }
        }
        Self::from_canonical(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a != b)
    }

    pub fn complement(&self) -> Self {
        Self::full().difference(self)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (a, b)) in self.pieces.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[{}, {}]", format_q(a), format_q(b))?;
        }
        write!(f, "}}")
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<[String; 2]> = self.pieces.iter().map(|(a, b)| [format_q(a), format_q(b)]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<[String; 2]> = Vec::deserialize(d)?;
        let mut pairs = Vec::with_capacity(raw.len());
        for [a, b] in raw {
            pairs.push((parse_q(&a).map_err(D::Error::custom)?, parse_q(&b).map_err(D::Error::custom)?));
        }
        IntervalSet::canonicalize(pairs).map_err(D::Error::custom)
    }
}

/// Label of a piece in a consensus-halving partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            other => Err(D::Error::custom(format!("leading label must be \"+\" or \"-\", got {other:?}"))),
        }
    }
}

/// Cut positions together with the label of the piece containing 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutPartition {
    pub cuts: Vec<Q>,
    pub leading: Sign,
}

impl CutPartition {
    pub fn new(cuts: Vec<Q>, leading: Sign) -> Result<Self, IntervalError> {
        for c in &cuts {
            check_unit(c)?;
        }
        if cuts.windows(2).any(|w| w[0] > w[1]) {
            return Err(IntervalError::UnsortedCuts);
        }
        Ok(Self { cuts, leading })
    }

    pub fn all_plus() -> Self {
        Self { cuts: Vec::new(), leading: Sign::Plus }
    }

    pub fn from_f64(cuts: &[f64], leading: Sign) -> Result<Self, IntervalError> {
        Self::new(cuts.iter().map(|&c| q_from_f64(c)).collect(), leading)
    }

    pub fn num_cuts(&self) -> usize {
        self.cuts.len()
    }

    pub fn flipped(&self) -> Self {
        Self { cuts: self.cuts.clone(), leading: self.leading.flip() }
    }

    /// `(I⁺, I⁻)` with labels alternating from `leading` at 0.
    pub fn pieces(&self) -> (IntervalSet, IntervalSet) {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut label = self.leading;
        let mut left = Q::zero();
        for c in self.cuts.iter().chain(std::iter::once(&Q::one())) {
            if *c > left {
                let piece = (left.clone(), c.clone());
                match label {
                    Sign::Plus => plus.push(piece),
                    Sign::Minus => minus.push(piece),
                }
            }
            left = c.clone();
            label = label.flip();
        }
        // Alternating pieces can touch only through a degenerate piece, so
        // canonicalization is still needed to merge them.
        (
            IntervalSet::canonicalize(plus).expect("pieces inside [0, 1]"),
            IntervalSet::canonicalize(minus).expect("pieces inside [0, 1]"),
        )
    }

    /// Label of the first positive-length piece.
    pub fn effective_leading(&self) -> Sign {
        let mut label = self.leading;
        for c in &self.cuts {
            if c.is_positive() {
                return label;
            }
            label = label.flip();
        }
        label
    }

    pub fn cuts_f64(&self) -> Vec<f64> {
        self.cuts.iter().map(q_to_f64).collect()
    }
}

/// Splits a partition into its two labelled sides, rejecting more than
/// `max_cuts` cuts.
pub fn partition_pieces(p: &CutPartition, max_cuts: usize) -> Result<(IntervalSet, IntervalSet), IntervalError> {
    if p.cuts.len() > max_cuts {
        return Err(IntervalError::TooManyCuts { got: p.cuts.len(), max: max_cuts });
    }
    if p.cuts.windows(2).any(|w| w[0].cmp(&w[1]) == Ordering::Greater) {
        return Err(IntervalError::UnsortedCuts);
    }
    Ok(p.pieces())
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    cuts: Vec<String>,
    leading: Sign,
}

impl Serialize for CutPartition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PartitionRepr { cuts: self.cuts.iter().map(format_q).collect(), leading: self.leading }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CutPartition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PartitionRepr::deserialize(d)?;
        let cuts = r.cuts.iter().map(|c| parse_q(c)).collect::<Result<Vec<_>, _>>().map_err(D::Error::custom)?;
        CutPartition::new(cuts, r.leading).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(raw: &[(i64, i64, i64, i64)]) -> IntervalSet {
        IntervalSet::canonicalize(raw.iter().map(|&(a, b, c, d)| (q(a, b), q(c, d))).collect()).unwrap()
    }

    #[test]
    fn canonicalize_merges_overlap() {
        let s = set(&[(2, 10, 5, 10), (4, 10, 7, 10)]);
        assert_eq!(s, set(&[(2, 10, 7, 10)]));
    }

    #[test]
    fn canonicalize_empty_is_fixed_point() {
        let s = IntervalSet::canonicalize(vec![]).unwrap();
        assert!(s.is_empty());
        assert_eq!(IntervalSet::canonicalize(s.pieces().to_vec()).unwrap(), s);
    }

    #[test]
    fn canonicalize_merges_touching() {
        assert_eq!(set(&[(0, 1, 1, 4), (1, 4, 1, 2)]), set(&[(0, 1, 1, 2)]));
    }

    #[test]
    fn canonicalize_rejects_out_of_range() {
        let err = IntervalSet::canonicalize(vec![(q(-1, 10), q(1, 2))]).unwrap_err();
        assert!(matches!(err, IntervalError::OutOfRange(_)));
        let err = IntervalSet::canonicalize(vec![(q(1, 2), q(11, 10))]).unwrap_err();
        assert!(matches!(err, IntervalError::OutOfRange(_)));
    }

    #[test]
    fn canonicalize_drops_degenerate() {
        assert!(set(&[(1, 3, 1, 3)]).is_empty());
    }

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalSet::full().measure(), Q::one());
        assert_eq!(IntervalSet::empty().measure(), Q::zero());
        assert_eq!(set(&[(0, 1, 1, 4), (1, 2, 1, 1)]).measure(), q(3, 4));
    }

    #[test]
    fn symmetric_difference_examples() {
        let a = set(&[(0, 1, 1, 2)]);
        assert!(a.symmetric_difference(&a).is_empty());
        let b = set(&[(1, 4, 3, 4)]);
        assert_eq!(a.symmetric_difference(&b), set(&[(0, 1, 1, 4), (1, 2, 3, 4)]));
        assert_eq!(IntervalSet::empty().symmetric_difference(&IntervalSet::full()), IntervalSet::full());
    }

    #[test]
    fn complement_and_measure_within() {
        let a = set(&[(1, 10, 3, 10), (1, 2, 6, 10)]);
        assert_eq!(a.complement(), set(&[(0, 1, 1, 10), (3, 10, 1, 2), (6, 10, 1, 1)]));
        assert_eq!(a.measure_within(&q(1, 5), &q(11, 20)), q(1, 10) + q(1, 20));
    }

    #[test]
    fn partition_examples() {
        let p = CutPartition::new(vec![q(1, 2)], Sign::Plus).unwrap();
        let (plus, minus) = p.pieces();
        assert_eq!(plus, set(&[(0, 1, 1, 2)]));
        assert_eq!(minus, set(&[(1, 2, 1, 1)]));

        let (plus, minus) = CutPartition::all_plus().pieces();
        assert_eq!(plus, IntervalSet::full());
        assert!(minus.is_empty());

        let p = CutPartition::new(vec![q(1, 4), q(3, 4)], Sign::Plus).unwrap();
        let (plus, minus) = p.pieces();
        assert_eq!(plus, set(&[(0, 1, 1, 4), (3, 4, 1, 1)]));
        assert_eq!(minus, set(&[(1, 4, 3, 4)]));
    }

    #[test]
    fn partition_rejects_too_many_cuts() {
        let p = CutPartition::new(vec![q(1, 4), q(1, 2), q(3, 4)], Sign::Minus).unwrap();
        assert_eq!(partition_pieces(&p, 2).unwrap_err(), IntervalError::TooManyCuts { got: 3, max: 2 });
    }

    #[test]
    fn degenerate_leading_piece() {
        let p = CutPartition::new(vec![q(0, 1), q(1, 2)], Sign::Plus).unwrap();
        assert_eq!(p.effective_leading(), Sign::Minus);
        let (plus, minus) = p.pieces();
        assert_eq!(minus, set(&[(0, 1, 1, 2)]));
        assert_eq!(plus, set(&[(1, 2, 1, 1)]));
    }

    #[test]
    fn parse_and_format_roundtrip() {
        for (s, v) in [("0.25", q(1, 4)), ("1/3", q(1, 3)), ("1", q(1, 1)), ("2.5e-1", q(1, 4)), (".5", q(1, 2))] {
            assert_eq!(parse_q(s).unwrap(), v, "{s}");
        }
        assert_eq!(format_q(&q(1, 4)), "0.25");
        assert_eq!(format_q(&q(1, 3)), "1/3");
        assert_eq!(format_q(&q(0, 1)), "0");
        assert_eq!(format_q(&q(3, 40)), "0.075");
        assert!(parse_q("abc").is_err());
        assert!(parse_q("1/0").is_err());
    }
}
