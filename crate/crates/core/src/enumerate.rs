//! Exact distinct-pattern profiles and exact expectations.
//!
//! The classical (non-consecutive) engine walks all `2^n` index subsets once,
//! depth first, extending each subset by a position to its right. Appending a
//! value to a sequence changes its pattern in a way captured by one digit: the
//! number of earlier entries smaller than the new one. The digits form a
//! factorial-base key in `[0, k!)` that identifies the pattern of the subset,
//! so each node costs one popcount and a multiply-add. Keys are deduplicated
//! per length in a bitmap when `k!` is small, otherwise in a hash set.

use std::collections::BTreeSet;
use std::hash::Hash;
use std::io::Write;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{self, serde_rational};
use crate::pattern::{reduce_distinct, PatternCode, Permutation};
use crate::perms;
use crate::subsets::{mask_positions, Gosper};

/// Largest `n` accepted by the classical-pattern engine (it visits `2^n` subsets).
pub const NONCONSECUTIVE_CAP: usize = 24;

/// Largest `n` for sweeps over all of `S_n`.
pub const EXACT_SWEEP_CAP: usize = 9;

/// Lengths whose `k!` fits this many bits are deduplicated in a bitmap.
const BITMAP_BITS: u64 = 1 << 22;

/// Whether the empty pattern is part of a total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    WithEmpty,
    #[default]
    WithoutEmpty,
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "with_empty" => Ok(Convention::WithEmpty),
            "without_empty" => Ok(Convention::WithoutEmpty),
            other => Err(Error::invalid(format!("unknown convention {other:?}"))),
        }
    }
}

/// Per-length distinct-pattern counts of one permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternTally {
    pub n: usize,
    /// Indexed by length `k = 0..=n`.
    pub per_length: Vec<u64>,
    pub total_with_empty: u64,
    pub total_without_empty: u64,
}

impl PatternTally {
    pub fn from_counts(per_length: Vec<u64>) -> Self {
        let n = per_length.len().saturating_sub(1);
        let total_with_empty = per_length.iter().sum();
        let total_without_empty = per_length.iter().skip(1).sum();
        Self {
            n,
            per_length,
            total_with_empty,
            total_without_empty,
        }
    }

    pub fn total(&self, convention: Convention) -> u64 {
        match convention {
            Convention::WithEmpty => self.total_with_empty,
            Convention::WithoutEmpty => self.total_without_empty,
        }
    }

    /// `k,count` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "count"])?;
        for (k, c) in self.per_length.iter().enumerate() {
            w.write_record([k.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `E(X_k)` for every `k`, averaged exactly over `S_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactExpectation {
    pub n: usize,
    #[serde(serialize_with = "serde_rational::serialize_vec")]
    pub per_k_expectation: Vec<BigRational>,
    #[serde(serialize_with = "serde_rational::serialize")]
    pub total_with_empty: BigRational,
    #[serde(serialize_with = "serde_rational::serialize")]
    pub total_without_empty: BigRational,
}

impl ExactExpectation {
    pub fn total(&self, convention: Convention) -> &BigRational {
        match convention {
            Convention::WithEmpty => &self.total_with_empty,
            Convention::WithoutEmpty => &self.total_without_empty,
        }
    }
}

/// Distinct consecutive patterns of every length.
pub fn distinct_consecutive(pi: &Permutation) -> PatternTally {
    let n = pi.len();
    let v = pi.values();
    let mut per_length = vec![0u64; n + 1];
    per_length[0] = 1;
    let mut seen: FxHashSet<PatternCode> = FxHashSet::default();
    for k in 1..=n {
        seen.clear();
        for w in v.windows(k) {
            seen.insert(reduce_distinct(w));
        }
        per_length[k] = seen.len() as u64;
    }
    PatternTally::from_counts(per_length)
}

/// Distinct consecutive patterns of length `k`, sorted.
pub fn consecutive_patterns(pi: &Permutation, k: usize) -> BTreeSet<PatternCode> {
    if k == 0 {
        return BTreeSet::from([PatternCode::empty()]);
    }
    pi.values().windows(k).map(reduce_distinct).collect()
}

/// Distinct classical patterns of every length. `n <= 24`.
pub fn distinct_nonconsecutive(pi: &Permutation) -> Result<PatternTally> {
    Ok(SubsetPatternCounter::new(pi.len())?.count(pi))
}

/// Distinct classical patterns of length `k`, sorted. Reduces every `k`-subset
/// directly; meant for listing, not counting.
pub fn nonconsecutive_patterns(pi: &Permutation, k: usize) -> Result<BTreeSet<PatternCode>> {
    let n = pi.len();
    if n > NONCONSECUTIVE_CAP {
        return Err(Error::cap("n for classical pattern listing", NONCONSECUTIVE_CAP, n));
    }
    let v = pi.values();
    let mut buf = Vec::with_capacity(k);
    Ok(Gosper::new(n, k)
        .map(|mask| {
            buf.clear();
            buf.extend(mask_positions(mask).into_iter().map(|p| v[p]));
            reduce_distinct(&buf)
        })
        .collect())
}

trait Key: Copy + Eq + Hash {
    fn step(self, len: u32, smaller: u32) -> Self;
    fn index(self) -> usize;
}

impl Key for u64 {
    #[inline]
    fn step(self, len: u32, smaller: u32) -> Self {
        self * u64::from(len) + u64::from(smaller)
    }
    fn index(self) -> usize {
        self as usize
    }
}

impl Key for u128 {
    #[inline]
    fn step(self, len: u32, smaller: u32) -> Self {
        self * u128::from(len) + u128::from(smaller)
    }
    fn index(self) -> usize {
        self as usize
    }
}

/// Reusable classical-pattern counter for permutations of a fixed length.
///
/// Holding one per worker avoids reallocating the dedup tables per sample.
pub struct SubsetPatternCounter {
    n: usize,
    bitmaps: Vec<Vec<u64>>,
    sets64: Vec<FxHashSet<u64>>,
    sets128: Vec<FxHashSet<u128>>,
    counts: Vec<u64>,
    smaller: Vec<u32>,
}

impl SubsetPatternCounter {
    pub fn new(n: usize) -> Result<Self> {
        if n > NONCONSECUTIVE_CAP {
            return Err(Error::cap("n for classical pattern counting", NONCONSECUTIVE_CAP, n));
        }
        let mut bitmaps = vec![Vec::new(); n + 1];
        let mut fact = 1u64;
        for (k, bm) in bitmaps.iter_mut().enumerate().skip(1) {
            fact = fact.saturating_mul(k as u64);
            if fact <= BITMAP_BITS {
                *bm = vec![0u64; fact.div_ceil(64) as usize];
            }
        }
        let wide = n > 20;
        Ok(Self {
            n,
            bitmaps,
            sets64: if wide { Vec::new() } else { vec![FxHashSet::default(); n + 1] },
            sets128: if wide { vec![FxHashSet::default(); n + 1] } else { Vec::new() },
            counts: vec![0; n + 1],
            smaller: vec![0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&mut self, pi: &Permutation) -> PatternTally {
        assert_eq!(pi.len(), self.n, "counter built for a different n");
        let v = pi.values();
        for (p, slot) in self.smaller.iter_mut().enumerate() {
            *slot = (0..p).filter(|&q| v[q] < v[p]).fold(0u32, |m, q| m | (1 << q));
        }
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.counts[0] = 1;
        self.bitmaps.iter_mut().for_each(|b| b.fill(0));
        self.sets64.iter_mut().for_each(|s| s.clear());
        self.sets128.iter_mut().for_each(|s| s.clear());
        if self.n > 20 {
            self.visit::<u128>(0, 0, 0, 0);
        } else {
            self.visit::<u64>(0, 0, 0, 0);
        }
        PatternTally::from_counts(self.counts.clone())
    }

    fn visit<K: Key + InSets>(&mut self, start: usize, mask: u32, depth: usize, key: K) {
        let len = depth + 1;
        for p in start..self.n {
            let c = (mask & self.smaller[p]).count_ones();
            let k2 = key.step(len as u32, c);
            let fresh = if !self.bitmaps[len].is_empty() {
                let i = k2.index();
                let word = &mut self.bitmaps[len][i >> 6];
                let bit = 1u64 << (i & 63);
                let fresh = *word & bit == 0;
                *word |= bit;
                fresh
            } else {
                K::insert(self, len, k2)
            };
            if fresh {
                self.counts[len] += 1;
            }
            self.visit(p + 1, mask | (1 << p), len, k2);
        }
    }
}

trait InSets: Sized {
    fn insert(c: &mut SubsetPatternCounter, len: usize, key: Self) -> bool;
}

impl InSets for u64 {
    fn insert(c: &mut SubsetPatternCounter, len: usize, key: u64) -> bool {
        c.sets64[len].insert(key)
    }
}

impl InSets for u128 {
    fn insert(c: &mut SubsetPatternCounter, len: usize, key: u128) -> bool {
        c.sets128[len].insert(key)
    }
}

/// Exact `E(X_k)` by sweeping all of `S_n`. `n <= 9`.
pub fn exact_expected(n: usize) -> Result<ExactExpectation> {
    exact_expected_with_workers(n, 1)
}

pub fn exact_expected_with_workers(n: usize, workers: usize) -> Result<ExactExpectation> {
    if n > EXACT_SWEEP_CAP {
        return Err(Error::cap("n for the exact S_n sweep", EXACT_SWEEP_CAP, n));
    }
    struct Acc {
        counter: SubsetPatternCounter,
        sums: Vec<u64>,
    }
    let acc = perms::fold_permutations(
        n,
        workers,
        || Acc {
            counter: SubsetPatternCounter::new(n).expect("n under cap"),
            sums: vec![0; n + 1],
        },
        |acc, p| {
            let t = acc.counter.count(&Permutation::from_vec_unchecked(p.to_vec()));
            for (s, c) in acc.sums.iter_mut().zip(&t.per_length) {
                *s += c;
            }
        },
        |a, b| {
            for (s, c) in a.sums.iter_mut().zip(&b.sums) {
                *s += c;
            }
        },
    );
    let nfact = numeric::factorial(n as u64);
    let per_k: Vec<BigRational> = acc
        .sums
        .iter()
        .map(|&s| numeric::ratio(BigUint::from(s), nfact.clone()))
        .collect();
    let with: BigRational = per_k.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    let without = with.clone() - &per_k[0];
    Ok(ExactExpectation {
        n,
        per_k_expectation: per_k,
        total_with_empty: with,
        total_without_empty: without,
    })
}

/// `min(C(n,k), k!)`, the per-length pigeonhole ceiling.
pub fn length_ceiling(n: usize, k: usize) -> BigUint {
    numeric::binomial(n as u64, k as u64).min(numeric::factorial(k as u64))
}

/// `sum_{k=1..n} min(C(n,k), k!)`, an upper bound on the classical pattern count.
pub fn pigeonhole_max(n: usize) -> BigUint {
    (1..=n).map(|k| length_ceiling(n, k)).sum()
}

/// `pigeonhole_max` as `u64` when it fits.
pub fn pigeonhole_max_u64(n: usize) -> Option<u64> {
    pigeonhole_max(n).to_u64()
}
