//! Permutations, canonical pattern codes and containment.
//!
//! A pattern of length `k` is a permutation of `1..=k`. Any sequence of `k`
//! distinct integers *reduces* to the pattern obtained by replacing each entry
//! by its rank. Patterns are stored as a [`PatternCode`], whose equality is
//! bit equality and whose order is the lexicographic order of rank sequences.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perms;

/// Longest pattern stored in the single-word nibble encoding.
pub const PACKED_MAX_LEN: usize = 16;

/// A permutation of `1..=n` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    values: Vec<u32>,
}

impl Permutation {
    /// Validates that `values` is a bijection on `1..=n`.
    pub fn new(values: Vec<u32>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            let v = v as usize;
            if v == 0 || v > n {
                return Err(Error::invalid(format!("value {v} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(format!("value {v} repeated")));
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(values.clone()).is_ok());
        Self { values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: (1..=n as u32).collect(),
        }
    }

    pub fn reversal(n: usize) -> Self {
        Self {
            values: (1..=n as u32).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Value at a one-based position.
    pub fn at(&self, position: usize) -> u32 {
        self.values[position - 1]
    }

    /// Maps each value `v` to `n + 1 - v`.
    pub fn complement(&self) -> Self {
        let n = self.len() as u32;
        Self {
            values: self.values.iter().map(|v| n + 1 - v).collect(),
        }
    }

    /// The pattern of the whole permutation.
    pub fn pattern(&self) -> PatternCode {
        PatternCode::from_ranks_unchecked(&self.values)
    }

    /// Values taken at the given one-based positions.
    pub fn restrict(&self, at: &IndexSet) -> Vec<u32> {
        at.positions().iter().map(|&p| self.values[p - 1]).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.values.iter().join(" "))
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Comma or whitespace separated one-line notation; a bare digit string
    /// is read one digit per entry.
    fn from_str(s: &str) -> Result<Self> {
        Permutation::new(parse_sequence(s)?)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(&self.values)
    }
}

fn parse_sequence(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    if s.is_empty() || s == "∅" {
        return Ok(Vec::new());
    }
    let separated = s.contains(|c: char| c == ',' || c.is_whitespace());
    if !separated && s.len() > 1 {
        return s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::invalid(format!("not a digit: {c:?}")))
            })
            .collect();
    }
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::invalid(format!("not an integer: {t:?}")))
        })
        .collect()
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Rank minus one per nibble, first entry in the most significant nibble.
    Packed(u64),
    /// Rank minus one as big-endian `u16` pairs.
    Wide(Box<[u8]>),
}

/// Canonical code of a pattern: its length plus the packed rank sequence.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PatternCode {
    len: u32,
    repr: Repr,
}

impl PatternCode {
    pub fn empty() -> Self {
        Self {
            len: 0,
            repr: Repr::Packed(0),
        }
    }

    pub fn identity(k: usize) -> Self {
        Self::from_ranks_unchecked(&(1..=k as u32).collect::<Vec<_>>())
    }

    /// Validates that `ranks` is a permutation of `1..=k`.
    pub fn from_ranks(ranks: &[u32]) -> Result<Self> {
        if ranks.len() > u16::MAX as usize {
            return Err(Error::invalid("pattern longer than 65535"));
        }
        Permutation::new(ranks.to_vec())?;
        Ok(Self::from_ranks_unchecked(ranks))
    }

    pub(crate) fn from_ranks_unchecked(ranks: &[u32]) -> Self {
        let len = ranks.len() as u32;
        let repr = if ranks.len() <= PACKED_MAX_LEN {
            let mut word = 0u64;
            for (i, &r) in ranks.iter().enumerate() {
                word |= u64::from(r - 1) << (60 - 4 * i);
            }
            Repr::Packed(word)
        } else {
            let bytes: Vec<u8> = ranks
                .iter()
                .flat_map(|&r| ((r - 1) as u16).to_be_bytes())
                .collect();
            Repr::Wide(bytes.into_boxed_slice())
        };
        Self { len, repr }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The packed word when `len <= 16`.
    pub fn packed(&self) -> Option<u64> {
        match self.repr {
            Repr::Packed(w) => Some(w),
            Repr::Wide(_) => None,
        }
    }

    /// One-based rank at zero-based index `i`.
    pub fn rank_at(&self, i: usize) -> u32 {
        assert!(i < self.len(), "index {i} out of range for length {}", self.len);
        match &self.repr {
            Repr::Packed(w) => ((w >> (60 - 4 * i)) & 0xF) as u32 + 1,
            Repr::Wide(b) => u16::from_be_bytes([b[2 * i], b[2 * i + 1]]) as u32 + 1,
        }
    }

    pub fn ranks(&self) -> Vec<u32> {
        (0..self.len()).map(|i| self.rank_at(i)).collect()
    }

    pub fn complement(&self) -> Self {
        let k = self.len;
        Self::from_ranks_unchecked(&self.ranks().iter().map(|r| k + 1 - r).collect::<Vec<_>>())
    }

    pub fn reverse(&self) -> Self {
        let mut r = self.ranks();
        r.reverse();
        Self::from_ranks_unchecked(&r)
    }

    /// Position in the lexicographic listing of `S_k`, counted from zero. `k <= 20`.
    pub fn lex_index(&self) -> u64 {
        assert!(self.len() <= 20, "lexicographic index needs k <= 20");
        perms::rank(&self.ranks())
    }

    pub fn from_lex_index(k: usize, index: u64) -> Result<Self> {
        if k > 20 {
            return Err(Error::cap("lexicographic pattern length", 20, k));
        }
        if index >= perms::factorial_u64(k) {
            return Err(Error::invalid(format!("index {index} >= {k}!")));
        }
        Ok(Self::from_ranks_unchecked(&perms::unrank(k, index)))
    }

    /// All patterns of length `k` in lexicographic order. `k <= 12`.
    pub fn all(k: usize) -> impl Iterator<Item = PatternCode> {
        assert!(k <= 12, "listing S_k is limited to k <= 12");
        let mut cur: Option<Vec<u32>> = Some((1..=k as u32).collect());
        std::iter::from_fn(move || {
            let v = cur.take()?;
            let code = PatternCode::from_ranks_unchecked(&v);
            let mut nxt = v;
            if perms::next_permutation(&mut nxt) {
                cur = Some(nxt);
            }
            Some(code)
        })
    }
}

impl Ord for PatternCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| match (&self.repr, &other.repr) {
            (Repr::Packed(a), Repr::Packed(b)) => a.cmp(b),
            (Repr::Wide(a), Repr::Wide(b)) => a.cmp(b),
            // Equal lengths always share a representation.
            _ => unreachable!("mixed representations at equal length"),
        })
    }
}

impl PartialOrd for PatternCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        if self.len() <= 9 {
            write!(f, "{}", self.ranks().iter().join(""))
        } else {
            write!(f, "{}", self.ranks().iter().join(" "))
        }
    }
}

impl fmt::Debug for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PatternCode({self})")
    }
}

impl FromStr for PatternCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternCode::from_ranks(&parse_sequence(s)?)
    }
}

impl Serialize for PatternCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Strictly increasing one-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet {
    positions: Vec<usize>,
}

impl IndexSet {
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        if positions.first() == Some(&0) {
            return Err(Error::invalid("positions are one-based"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "positions must be strictly increasing: {positions:?}"
            )));
        }
        Ok(Self { positions })
    }

    /// Bit `p` of `mask` selects position `p + 1`.
    pub fn from_mask(mask: u64) -> Self {
        Self {
            positions: crate::subsets::mask_positions(mask)
                .into_iter()
                .map(|p| p + 1)
                .collect(),
        }
    }

    pub fn to_mask(&self) -> u64 {
        self.positions.iter().fold(0u64, |m, &p| m | (1 << (p - 1)))
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_position(&self) -> Option<usize> {
        self.positions.last().copied()
    }

    /// All `k`-subsets of `1..=n` in increasing mask order. `n <= 63`.
    pub fn all(n: usize, k: usize) -> impl Iterator<Item = IndexSet> {
        crate::subsets::Gosper::new(n, k).map(IndexSet::from_mask)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.positions.iter().join(","))
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(&self.positions)
    }
}

/// Replace each entry by its rank among the window's entries.
pub fn reduce(window: &[u32]) -> Result<PatternCode> {
    let ranks = ranks_of(window)?;
    Ok(PatternCode::from_ranks_unchecked(&ranks))
}

fn ranks_of(window: &[u32]) -> Result<Vec<u32>> {
    let mut order: Vec<usize> = (0..window.len()).collect();
    order.sort_unstable_by_key(|&i| window[i]);
    if let Some(w) = order.windows(2).find(|w| window[w[0]] == window[w[1]]) {
        return Err(Error::invalid(format!("duplicate entry {}", window[w[0]])));
    }
    let mut ranks = vec![0u32; window.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r as u32 + 1;
    }
    Ok(ranks)
}

/// Reduction of entries known to be distinct.
pub(crate) fn reduce_distinct(window: &[u32]) -> PatternCode {
    let k = window.len();
    if k <= PACKED_MAX_LEN {
        // Rank by counting smaller entries; k is bounded by 16 here.
        let mut word = 0u64;
        for (i, &v) in window.iter().enumerate() {
            let below = window.iter().filter(|&&w| w < v).count() as u64;
            word |= below << (60 - 4 * i);
        }
        PatternCode {
            len: k as u32,
            repr: Repr::Packed(word),
        }
    } else {
        reduce(window).expect("distinct entries")
    }
}

/// Does `pi` contain `mu` at some increasing index set?
///
/// Leftmost-greedy backtracking. Entries of `mu` are placed left to right;
/// a candidate value must fall strictly between the values already placed
/// for the neighbouring ranks and leave room for the unplaced ranks between.
pub fn contains(pi: &Permutation, mu: &PatternCode) -> bool {
    let k = mu.len();
    let n = pi.len();
    if k > n {
        return false;
    }
    if k == 0 {
        return true;
    }
    let ranks: Vec<usize> = mu.ranks().iter().map(|&r| r as usize - 1).collect();
    let mut placed = vec![0u32; k];
    place(pi.values(), &ranks, 0, 0, &mut placed)
}

fn place(values: &[u32], ranks: &[usize], t: usize, start: usize, placed: &mut [u32]) -> bool {
    let k = ranks.len();
    if t == k {
        return true;
    }
    let n = values.len() as u32;
    let rho = ranks[t];
    // Nearest placed ranks below and above rho, and the free ranks in between.
    let (mut lo, mut free_below) = (0u32, 0u32);
    for r in (0..rho).rev() {
        if placed[r] != 0 {
            lo = placed[r];
            break;
        }
        free_below += 1;
    }
    let (mut hi, mut free_above) = (n + 1, 0u32);
    for &v in &placed[rho + 1..] {
        if v != 0 {
            hi = v;
            break;
        }
        free_above += 1;
    }
    let last_start = values.len() - (k - t);
    for p in start..=last_start {
        let v = values[p];
        if v > lo + free_below && v + free_above < hi {
            placed[rho] = v;
            if place(values, ranks, t + 1, p + 1, placed) {
                return true;
            }
            placed[rho] = 0;
        }
    }
    false
}

/// Number of `r`-subsets of positions of `l` (with `r = t.len()`) reducing to `t`.
pub fn count_occurrences(l: &PatternCode, t: &PatternCode) -> u64 {
    let r = t.len();
    let values = l.ranks();
    if r > values.len() {
        return 0;
    }
    values
        .iter()
        .copied()
        .combinations(r)
        .filter(|sub| &reduce_distinct(sub) == t)
        .count() as u64
}

/// Does `mu` occur in `pi` exactly at the positions `at`?
pub fn occurs_at(pi: &Permutation, mu: &PatternCode, at: &IndexSet) -> Result<bool> {
    if at.len() != mu.len() {
        return Err(Error::invalid(format!(
            "index set has {} positions, pattern has length {}",
            at.len(),
            mu.len()
        )));
    }
    if at.max_position().is_some_and(|m| m > pi.len()) {
        return Err(Error::invalid(format!("index set {at} exceeds n = {}", pi.len())));
    }
    Ok(&reduce_distinct(&pi.restrict(at)) == mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> PatternCode {
        s.parse().unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&[7, 14, 6, 3, 10, 9, 2, 11, 13]).unwrap(), pat("493265178"));
        assert_eq!(reduce(&[1, 2, 3]).unwrap(), pat("123"));
        assert_eq!(reduce(&[5, 3, 9]).unwrap(), pat("213"));
        assert_eq!(reduce(&[]).unwrap(), PatternCode::empty());
        assert!(matches!(reduce(&[4, 2, 4]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn reduce_distinct_agrees_with_reduce_past_packed_limit() {
        let w: Vec<u32> = (0..20).map(|i| (i * 7 + 3) % 23).collect();
        assert_eq!(reduce_distinct(&w), reduce(&w).unwrap());
        assert!(reduce_distinct(&w).packed().is_none());
    }

    #[test]
    fn permutation_validation_and_parsing() {
        assert!(Permutation::new(vec![1, 3, 2]).is_ok());
        assert!(Permutation::new(vec![1, 3, 3]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 4]).is_err());
        let p: Permutation = "3 4 1 5 2".parse().unwrap();
        assert_eq!(p.values(), &[3, 4, 1, 5, 2]);
        assert_eq!("3,4,1,5,2".parse::<Permutation>().unwrap(), p);
        assert_eq!("34152".parse::<Permutation>().unwrap(), p);
        assert_eq!("".parse::<Permutation>().unwrap().len(), 0);
        assert!("3 x 1".parse::<Permutation>().is_err());
        assert_eq!(p.to_string(), "3 4 1 5 2");
    }

    #[test]
    fn codes_display_and_order() {
        assert_eq!(pat("493265178").to_string(), "493265178");
        assert_eq!(PatternCode::empty().to_string(), "∅");
        assert!(pat("123") < pat("132"));
        assert!(pat("21") < pat("123"));
        let long = PatternCode::identity(12);
        assert_eq!(long.to_string(), "1 2 3 4 5 6 7 8 9 10 11 12");
        assert_eq!(long.to_string().parse::<PatternCode>().unwrap(), long);
    }

    #[test]
    fn wide_codes_round_trip_and_order() {
        let a = PatternCode::from_ranks(&(1..=20).collect::<Vec<_>>()).unwrap();
        let mut r: Vec<u32> = (1..=20).collect();
        r.swap(18, 19);
        let b = PatternCode::from_ranks(&r).unwrap();
        assert!(a < b);
        assert_eq!(b.ranks(), r);
        assert_eq!(b.rank_at(19), 19);
    }

    #[test]
    fn lex_listing_matches_index() {
        let all: Vec<_> = PatternCode::all(4).collect();
        assert_eq!(all.len(), 24);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.lex_index(), i as u64);
            assert_eq!(&PatternCode::from_lex_index(4, i as u64).unwrap(), c);
        }
        assert_eq!(PatternCode::all(0).count(), 1);
        assert!(PatternCode::from_lex_index(3, 6).is_err());
    }

    #[test]
    fn containment_examples() {
        let p: Permutation = "34152".parse().unwrap();
        assert!(contains(&p, &pat("312")));
        assert!(!contains(&p, &pat("321")));
        assert!(contains(&p, &p.pattern()));
        assert!(contains(&p, &PatternCode::empty()));
        assert!(!contains(&p, &PatternCode::identity(6)));
    }

    #[test]
    fn occurrence_counts() {
        assert_eq!(count_occurrences(&pat("34152"), &pat("12")), 5);
        assert_eq!(count_occurrences(&pat("34152"), &pat("1")), 5);
        assert_eq!(count_occurrences(&pat("12"), &pat("123")), 0);
        let total: u64 = PatternCode::all(3).map(|l| count_occurrences(&l, &pat("12"))).sum();
        // average 3/2 over six patterns
        assert_eq!(total, 9);
    }

    #[test]
    fn occurs_at_examples() {
        let p: Permutation = "7,14,6,15,5,3,4,10,9,2,11,8,1,12,13".parse().unwrap();
        let mu = pat("493265178");
        let x = IndexSet::new(vec![1, 2, 3, 6, 8, 9, 10, 11, 15]).unwrap();
        let o = IndexSet::new(vec![3, 4, 5, 7, 9, 12, 13, 14, 15]).unwrap();
        assert!(occurs_at(&p, &mu, &x).unwrap());
        assert!(occurs_at(&p, &mu, &o).unwrap());
        let id = Permutation::identity(5);
        assert!(!occurs_at(&id, &pat("21"), &IndexSet::new(vec![1, 2]).unwrap()).unwrap());
        assert!(occurs_at(&id, &pat("21"), &IndexSet::new(vec![1]).unwrap()).is_err());
        assert!(occurs_at(&id, &pat("12"), &IndexSet::new(vec![1, 6]).unwrap()).is_err());
    }

    #[test]
    fn index_sets() {
        assert!(IndexSet::new(vec![2, 2]).is_err());
        assert!(IndexSet::new(vec![0, 1]).is_err());
        let s = IndexSet::new(vec![1, 3, 4]).unwrap();
        assert_eq!(s.to_mask(), 0b1101);
        assert_eq!(IndexSet::from_mask(0b1101), s);
        assert_eq!(IndexSet::all(5, 2).count(), 10);
    }
}
