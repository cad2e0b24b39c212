//! Exhaustive checks of the overlap, coupling and sub-pattern lemmas.
//!
//! Everything here is brute force over small symmetric groups. A scenario for
//! the overlap lemma lives on `[m]` with `m = 2k - r`, the union of its two
//! position sets.
//!
//! Friendliness, concretely: given position sets `j`, `i` and a pattern `l`,
//! a permutation is friendly when some good allotment `g` on `j ∪ i` has the
//! same values as it on `i \ j` and the same *set* of values on `j`. In the
//! `k = 9`, `r = 3` illustration with pattern 493265178 the friendly
//! permutation 11 9 10 15 5 2 4 7 6 3 14 8 1 12 13 becomes the good one
//! 7 14 6 15 5 3 4 10 9 2 11 8 1 12 13 after sorting its `j`-block.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{self, serde_rational};
use crate::pattern::{reduce_distinct, IndexSet, PatternCode, Permutation};
use crate::perms::{factorial_u64, next_permutation, rank};
use crate::subsets::Gosper;

/// Largest universe for [`good_count`].
pub const GOOD_COUNT_MAX_M: usize = 10;
/// Largest `n` for [`coupling_audit`].
pub const COUPLING_MAX_N: usize = 8;
pub const UNIFORMITY_MAX_K: usize = 7;
pub const OCCURRENCE_MAX_K: usize = 6;

/// Two `k`-position sets covering `[m]`, sharing `r >= 1` positions, and the
/// pattern required at both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapScenario {
    k: usize,
    pos_j: IndexSet,
    pos_i: IndexSet,
    pattern: PatternCode,
}

impl OverlapScenario {
    pub fn new(pos_j: IndexSet, pos_i: IndexSet, pattern: PatternCode) -> Result<Self> {
        let k = pattern.len();
        if pos_j.len() != k || pos_i.len() != k {
            return Err(Error::invalid(format!(
                "position sets {pos_j} and {pos_i} must both have {k} entries"
            )));
        }
        if pos_j.max_position().unwrap_or(0) > 64 || pos_i.max_position().unwrap_or(0) > 64 {
            return Err(Error::invalid("positions above 64 are not supported"));
        }
        let (mj, mi) = (pos_j.to_mask(), pos_i.to_mask());
        let r = (mj & mi).count_ones() as usize;
        if r == 0 {
            return Err(Error::invalid("position sets must overlap"));
        }
        let m = 2 * k - r;
        let full = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        if mj | mi != full {
            return Err(Error::invalid(format!("{pos_j} and {pos_i} do not cover [1..{m}]")));
        }
        Ok(Self {
            k,
            pos_j,
            pos_i,
            pattern,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        (self.pos_j.to_mask() & self.pos_i.to_mask()).count_ones() as usize
    }

    pub fn m(&self) -> usize {
        2 * self.k - self.r()
    }

    pub fn pos_j(&self) -> &IndexSet {
        &self.pos_j
    }

    pub fn pos_i(&self) -> &IndexSet {
        &self.pos_i
    }

    pub fn pattern(&self) -> &PatternCode {
        &self.pattern
    }

    /// `2^(2k - 2r)`.
    pub fn bound(&self) -> u64 {
        1u64 << (2 * (self.k - self.r()))
    }

    /// Whether the pattern's restrictions to the overlap agree when read
    /// inside `pos_j` and inside `pos_i`. If not, no permutation is good.
    pub fn overlap_isomorphic(&self) -> bool {
        let (u, l) = self.overlap_ranks_unsorted();
        reduce_distinct(&u) == reduce_distinct(&l)
    }

    /// Pattern ranks at the overlap positions, read in `pos_j` and in `pos_i`,
    /// in position order.
    fn overlap_ranks_unsorted(&self) -> (Vec<u32>, Vec<u32>) {
        let mi = self.pos_i.to_mask();
        let mj = self.pos_j.to_mask();
        let pick = |set: &IndexSet, other: u64| -> Vec<u32> {
            set.positions()
                .iter()
                .enumerate()
                .filter(|&(_, &p)| other & (1 << (p - 1)) != 0)
                .map(|(a, _)| self.pattern.rank_at(a))
                .collect()
        };
        (pick(&self.pos_j, mi), pick(&self.pos_i, mj))
    }

    /// `u_s + l_s - s` for `s = 1..=r`, with `u` and `l` sorted ascending.
    pub fn predicted_overlap_values(&self) -> Vec<u32> {
        let (mut u, mut l) = self.overlap_ranks_unsorted();
        u.sort_unstable();
        l.sort_unstable();
        u.iter()
            .zip(&l)
            .enumerate()
            .map(|(s, (&a, &b))| a + b - (s as u32 + 1))
            .collect()
    }

    fn is_good(&self, values: &[u32]) -> bool {
        let at = |set: &IndexSet| -> Vec<u32> { set.positions().iter().map(|&p| values[p - 1]).collect() };
        reduce_distinct(&at(&self.pos_j)) == self.pattern
            && reduce_distinct(&at(&self.pos_i)) == self.pattern
    }
}

impl fmt::Display for OverlapScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} r={} j={} i={} pattern={}", self.k, self.r(), self.pos_j, self.pos_i, self.pattern)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GoodCount {
    pub count: u64,
    pub bound: u64,
    pub within_bound: bool,
    pub witnesses: Vec<Permutation>,
}

/// All permutations of `[m]` carrying the pattern at both position sets.
pub fn good_count(s: &OverlapScenario) -> Result<GoodCount> {
    let m = s.m();
    if m > GOOD_COUNT_MAX_M {
        return Err(Error::cap("good_count universe m", GOOD_COUNT_MAX_M, m));
    }
    let mut witnesses = Vec::new();
    if s.overlap_isomorphic() {
        let mut v: Vec<u32> = (1..=m as u32).collect();
        loop {
            if s.is_good(&v) {
                witnesses.push(Permutation::from_vec_unchecked(v.clone()));
            }
            if !next_permutation(&mut v) {
                break;
            }
        }
    }
    let count = witnesses.len() as u64;
    Ok(GoodCount {
        count,
        bound: s.bound(),
        within_bound: count <= s.bound(),
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapValues {
    /// Witness values at the overlap positions, ascending.
    pub observed: Vec<u32>,
    pub predicted: Vec<u32>,
    pub matches: bool,
}

/// Overlap values of a good witness against `u_s + l_s - s`.
pub fn overlap_values(s: &OverlapScenario, witness: &Permutation) -> Result<OverlapValues> {
    if witness.len() != s.m() || !s.is_good(witness.values()) {
        return Err(Error::Contract(format!("{witness} is not good for {s}")));
    }
    let both = s.pos_j.to_mask() & s.pos_i.to_mask();
    let mut observed: Vec<u32> = IndexSet::from_mask(both)
        .positions()
        .iter()
        .map(|&p| witness.at(p))
        .collect();
    observed.sort_unstable();
    let predicted = s.predicted_overlap_values();
    Ok(OverlapValues {
        matches: observed == predicted,
        observed,
        predicted,
    })
}

/// Block label of each value of a good witness: overlap values are singleton
/// blocks `2s - 1`, the values strictly between consecutive overlap values
/// share block `2s`.
fn value_blocks(overlap_sorted: &[u32], m: usize) -> Vec<usize> {
    let mut block = vec![0usize; m + 1];
    let mut b = 0;
    let mut next = overlap_sorted.iter().copied().peekable();
    for v in 1..=m as u32 {
        if next.peek() == Some(&v) {
            next.next();
            block[v as usize] = b + 1;
            b += 2;
        } else {
            block[v as usize] = b;
        }
    }
    block
}

/// Every transposition of two values from different blocks breaks the
/// pattern at `pos_j` or at `pos_i`.
pub fn swap_breaks_goodness(s: &OverlapScenario, witness: &Permutation) -> Result<bool> {
    let ov = overlap_values(s, witness)?;
    Ok(swap_check(s, witness.values(), &ov.observed))
}

fn swap_check(s: &OverlapScenario, values: &[u32], overlap_sorted: &[u32]) -> bool {
    let m = values.len();
    let block = value_blocks(overlap_sorted, m);
    let mut buf = values.to_vec();
    for a in 0..m {
        for b in a + 1..m {
            if block[values[a] as usize] == block[values[b] as usize] {
                continue;
            }
            buf.swap(a, b);
            let still = s.is_good(&buf);
            buf.swap(a, b);
            if still {
                return false;
            }
        }
    }
    true
}

/// Result of forcing the pattern at `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CouplingOutcome {
    pub xi: Permutation,
    pub xi_prime: Permutation,
    /// Bit `b` is the indicator of the `b`-th `k`-subset in increasing mask order.
    pub indicators_before: u128,
    pub indicators_after: u128,
}

/// Reorder the values of `xi` on `j` so that they realise `l`.
pub fn couple(xi: &Permutation, j: &IndexSet, l: &PatternCode) -> Result<CouplingOutcome> {
    let n = xi.len();
    if n > COUPLING_MAX_N {
        return Err(Error::cap("coupling n", COUPLING_MAX_N, n));
    }
    if j.len() != l.len() || j.max_position().is_some_and(|p| p > n) {
        return Err(Error::invalid(format!("{j} does not fit pattern {l} in n = {n}")));
    }
    let subsets: Vec<u64> = Gosper::new(n, l.len()).collect();
    let ranks = l.ranks();
    let mut after = xi.values().to_vec();
    force(&mut after, j.positions(), &ranks);
    Ok(CouplingOutcome {
        indicators_before: indicators(xi.values(), &subsets, l),
        indicators_after: indicators(&after, &subsets, l),
        xi: xi.clone(),
        xi_prime: Permutation::from_vec_unchecked(after),
    })
}

fn force(values: &mut [u32], j: &[usize], ranks: &[u32]) {
    let mut sorted: Vec<u32> = j.iter().map(|&p| values[p - 1]).collect();
    sorted.sort_unstable();
    for (a, &p) in j.iter().enumerate() {
        values[p - 1] = sorted[ranks[a] as usize - 1];
    }
}

fn indicators(values: &[u32], subsets: &[u64], l: &PatternCode) -> u128 {
    let mut buf = Vec::with_capacity(l.len());
    let mut bits = 0u128;
    for (b, &mask) in subsets.iter().enumerate() {
        buf.clear();
        let mut rest = mask;
        while rest != 0 {
            buf.push(values[rest.trailing_zeros() as usize]);
            rest &= rest - 1;
        }
        if &reduce_distinct(&buf) == l {
            bits |= 1 << b;
        }
    }
    bits
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub k: usize,
    pub j: IndexSet,
    pub l: PatternCode,
    /// `n!`.
    pub permutations: u64,
    /// Permutations with `I_j = 1`, i.e. `n!/k!`.
    pub conditioned: u64,
    pub distinct_outcomes: usize,
    /// Probability of each conditional outcome, `k!/n!`.
    #[serde(serialize_with = "serde_rational::serialize")]
    pub outcome_probability: BigRational,
    /// `L(J) = L(I | I_j = 1)` on indicator vectors.
    pub law_equal: bool,
    /// Each forced permutation arises from exactly `k!` originals.
    pub uniform_preimages: bool,
    /// Times `{I_i = 0, J_i = 1}` occurred with `i` overlapping `j`.
    pub friendly_events: u64,
    pub unfriendly_events: u64,
    /// Times an `i` disjoint from `j` changed under the coupling.
    pub disjoint_changes: u64,
    pub pass: bool,
}

/// Exhaustive audit of the coupling of `I_i` and `J_i` for one `(j, l)`.
pub fn coupling_audit(n: usize, k: usize, j: &IndexSet, l: &PatternCode) -> Result<CouplingReport> {
    if n > COUPLING_MAX_N {
        return Err(Error::cap("coupling_audit n", COUPLING_MAX_N, n));
    }
    if k == 0 || k > n || l.len() != k || j.len() != k || j.max_position().is_some_and(|p| p > n) {
        return Err(Error::invalid(format!(
            "coupling_audit needs 1 <= k <= n, |j| = |l| = k inside [n]; got n={n} k={k} j={j} l={l}"
        )));
    }
    let subsets: Vec<u64> = Gosper::new(n, k).collect();
    let jm = j.to_mask();
    let j_bit = 1u128 << subsets.iter().position(|&s| s == jm).expect("j is a k-subset");
    let mut overlapping = 0u128;
    let mut disjoint = 0u128;
    for (b, &s) in subsets.iter().enumerate() {
        if s == jm {
            continue;
        }
        if s & jm != 0 {
            overlapping |= 1 << b;
        } else {
            disjoint |= 1 << b;
        }
    }
    let ranks = l.ranks();
    let mut law_j: FxHashMap<u128, u64> = FxHashMap::default();
    let mut law_i: FxHashMap<u128, u64> = FxHashMap::default();
    let mut preimages: FxHashMap<u64, u64> = FxHashMap::default();
    let mut goods: FxHashMap<(u64, u64), Vec<Vec<u32>>> = FxHashMap::default();
    let (mut friendly, mut unfriendly, mut disjoint_changes) = (0u64, 0u64, 0u64);
    let mut conditioned = 0u64;

    let mut xi: Vec<u32> = (1..=n as u32).collect();
    let mut forced = xi.clone();
    loop {
        let before = indicators(&xi, &subsets, l);
        forced.copy_from_slice(&xi);
        force(&mut forced, j.positions(), &ranks);
        let after = indicators(&forced, &subsets, l);
        *law_j.entry(after).or_default() += 1;
        *preimages.entry(rank(&forced)).or_default() += 1;
        if before & j_bit != 0 {
            conditioned += 1;
            *law_i.entry(before).or_default() += 1;
        }
        if (before ^ after) & disjoint != 0 {
            disjoint_changes += 1;
        }
        let mut events = !before & after & overlapping;
        while events != 0 {
            let b = events.trailing_zeros() as usize;
            events &= events - 1;
            if is_friendly(&xi, jm, subsets[b], l, &mut goods) {
                friendly += 1;
            } else {
                unfriendly += 1;
            }
        }
        if !next_permutation(&mut xi) {
            break;
        }
    }

    let kf = factorial_u64(k);
    let law_equal = law_j.len() == law_i.len()
        && law_j.iter().all(|(v, &c)| law_i.get(v).is_some_and(|&ci| c == kf * ci));
    let uniform_preimages = preimages.len() as u64 == conditioned && preimages.values().all(|&c| c == kf);
    let pass = law_equal && uniform_preimages && unfriendly == 0 && disjoint_changes == 0;
    Ok(CouplingReport {
        n,
        k,
        j: j.clone(),
        l: l.clone(),
        permutations: factorial_u64(n),
        conditioned,
        distinct_outcomes: law_j.len(),
        outcome_probability: numeric::ratio(BigUint::from(kf), BigUint::from(factorial_u64(n))),
        law_equal,
        uniform_preimages,
        friendly_events: friendly,
        unfriendly_events: unfriendly,
        disjoint_changes,
        pass,
    })
}

/// Good allotments on the union of `jm` and `im`, in relative coordinates.
fn goods_on_union(jm: u64, im: u64, l: &PatternCode) -> Vec<Vec<u32>> {
    let union = jm | im;
    let rel = |mask: u64| -> IndexSet {
        let mut out = Vec::new();
        for (idx, p) in crate::subsets::mask_positions(union).into_iter().enumerate() {
            if mask & (1 << p) != 0 {
                out.push(idx + 1);
            }
        }
        IndexSet::new(out).expect("increasing")
    };
    let s = OverlapScenario::new(rel(jm), rel(im), l.clone()).expect("valid overlap scenario");
    good_count(&s)
        .expect("the union lies inside [n] with n <= 8")
        .witnesses
        .into_iter()
        .map(|w| w.values().to_vec())
        .collect()
}

fn is_friendly(
    xi: &[u32],
    jm: u64,
    im: u64,
    l: &PatternCode,
    goods: &mut FxHashMap<(u64, u64), Vec<Vec<u32>>>,
) -> bool {
    let union = jm | im;
    let positions = crate::subsets::mask_positions(union);
    let local: Vec<u32> = positions.iter().map(|&p| xi[p]).collect();
    let rho = reduce_distinct(&local).ranks();
    let in_j: Vec<bool> = positions.iter().map(|&p| jm & (1 << p) != 0).collect();
    let mut j_values: Vec<u32> = rho.iter().zip(&in_j).filter(|(_, &b)| b).map(|(&v, _)| v).collect();
    j_values.sort_unstable();
    let candidates = goods.entry((jm, im)).or_insert_with(|| goods_on_union(jm, im, l));
    candidates.iter().any(|g| {
        let off_j_agrees = g.iter().zip(&rho).zip(&in_j).all(|((a, b), &j)| j || a == b);
        if !off_j_agrees {
            return false;
        }
        let mut gj: Vec<u32> = g.iter().zip(&in_j).filter(|(_, &b)| b).map(|(&v, _)| v).collect();
        gj.sort_unstable();
        gj == j_values
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityCheck {
    pub k: usize,
    pub a: IndexSet,
    pub expected_each: u64,
    pub counts: BTreeMap<PatternCode, u64>,
    pub pass: bool,
}

/// Tally `reduce(l|A)` over `l` in `S_k`; each `t` in `S_r` should appear `k!/r!` times.
pub fn subpattern_uniformity(k: usize, a: &IndexSet) -> Result<UniformityCheck> {
    if k > UNIFORMITY_MAX_K {
        return Err(Error::cap("subpattern_uniformity k", UNIFORMITY_MAX_K, k));
    }
    if a.max_position().is_some_and(|p| p > k) {
        return Err(Error::invalid(format!("{a} is not inside [{k}]")));
    }
    let r = a.len();
    let mut counts: BTreeMap<PatternCode, u64> = PatternCode::all(r).map(|t| (t, 0)).collect();
    let mut l: Vec<u32> = (1..=k as u32).collect();
    let mut buf = Vec::with_capacity(r);
    loop {
        buf.clear();
        buf.extend(a.positions().iter().map(|&p| l[p - 1]));
        *counts.get_mut(&reduce_distinct(&buf)).expect("every reduction is in S_r") += 1;
        if !next_permutation(&mut l) {
            break;
        }
    }
    let expected_each = factorial_u64(k) / factorial_u64(r);
    Ok(UniformityCheck {
        k,
        a: a.clone(),
        pass: counts.values().all(|&c| c == expected_each),
        expected_each,
        counts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OccurrenceAverage {
    pub t: PatternCode,
    #[serde(serialize_with = "serde_rational::serialize")]
    pub average: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct OccurrenceCheck {
    pub k: usize,
    pub r: usize,
    /// `C(k, r) / r!`.
    #[serde(serialize_with = "serde_rational::serialize")]
    pub expected: BigRational,
    pub averages: Vec<OccurrenceAverage>,
    pub pass: bool,
}

/// Exact average of `N(t, l)` over `l` in `S_k`, for each `t` in `S_r`.
pub fn expected_occurrences_check(k: usize, r: usize) -> Result<OccurrenceCheck> {
    if k > OCCURRENCE_MAX_K {
        return Err(Error::cap("expected_occurrences_check k", OCCURRENCE_MAX_K, k));
    }
    if r > k {
        return Err(Error::invalid(format!("need r <= k, got r={r} k={k}")));
    }
    let kf = BigUint::from(factorial_u64(k));
    let expected = numeric::ratio(numeric::binomial(k as u64, r as u64), numeric::factorial(r as u64));
    let patterns: Vec<PatternCode> = PatternCode::all(k).collect();
    let averages: Vec<OccurrenceAverage> = PatternCode::all(r)
        .map(|t| {
            let total: u64 = patterns.iter().map(|l| crate::pattern::count_occurrences(l, &t)).sum();
            OccurrenceAverage {
                average: numeric::ratio(BigUint::from(total), kf.clone()),
                t,
            }
        })
        .collect();
    Ok(OccurrenceCheck {
        k,
        r,
        pass: averages.iter().all(|a| a.average == expected),
        expected,
        averages,
    })
}

/// Aggregated overlap-lemma results for one `(k, r)`.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma21Summary {
    pub k: usize,
    pub r: usize,
    pub m: usize,
    /// Ordered `(pos_j, pos_i)` pairs covering `[m]`.
    pub position_pairs: u64,
    pub scenarios: u64,
    /// `2^(2k - 2r)`.
    pub bound: u64,
    /// `2^(2k - r)`, the weaker form.
    pub weak_bound: u64,
    pub max_count: u64,
    pub bound_violations: u64,
    pub witnesses: u64,
    pub overlap_mismatches: u64,
    pub swap_failures: u64,
    /// Non-isomorphic scenarios with a nonzero count.
    pub nonisomorphic_nonzero: u64,
    pub pass: bool,
}

/// Every `(k, r)` with `r >= 1` and `2k - r <= max_m`, all position pairs and
/// all patterns. Witness-level checks (overlap values, swaps) are run on all
/// good permutations.
pub fn lemma21_sweep(max_m: usize) -> Result<Vec<Lemma21Summary>> {
    if max_m > GOOD_COUNT_MAX_M {
        return Err(Error::cap("lemma21 max_m", GOOD_COUNT_MAX_M, max_m));
    }
    let mut kr = Vec::new();
    for k in 1..=max_m {
        for r in 1..=k {
            if 2 * k - r <= max_m {
                kr.push((k, r));
            }
        }
    }
    Ok(kr.into_par_iter().map(|(k, r)| lemma21_for(k, r)).collect())
}

fn lemma21_for(k: usize, r: usize) -> Lemma21Summary {
    let m = 2 * k - r;
    let full = (1u64 << m) - 1;
    let mut pairs = Vec::new();
    for jm in Gosper::new(m, k) {
        let rest = full & !jm;
        let jpos = crate::subsets::mask_positions(jm);
        for pick in Gosper::new(k, r) {
            let shared = crate::subsets::mask_positions(pick)
                .into_iter()
                .fold(0u64, |acc, idx| acc | (1 << jpos[idx]));
            pairs.push((jm, rest | shared));
        }
    }
    let parts: Vec<Lemma21Summary> = pairs
        .par_iter()
        .map(|&(jm, im)| lemma21_pair(k, r, jm, im))
        .collect();
    let mut total = Lemma21Summary {
        k,
        r,
        m,
        position_pairs: 0,
        scenarios: 0,
        bound: 1 << (2 * (k - r)),
        weak_bound: 1 << (2 * k - r),
        max_count: 0,
        bound_violations: 0,
        witnesses: 0,
        overlap_mismatches: 0,
        swap_failures: 0,
        nonisomorphic_nonzero: 0,
        pass: true,
    };
    for p in parts {
        total.position_pairs += 1;
        total.scenarios += p.scenarios;
        total.max_count = total.max_count.max(p.max_count);
        total.bound_violations += p.bound_violations;
        total.witnesses += p.witnesses;
        total.overlap_mismatches += p.overlap_mismatches;
        total.swap_failures += p.swap_failures;
        total.nonisomorphic_nonzero += p.nonisomorphic_nonzero;
    }
    total.pass = total.bound_violations == 0
        && total.overlap_mismatches == 0
        && total.swap_failures == 0
        && total.nonisomorphic_nonzero == 0;
    total
}

fn lemma21_pair(k: usize, r: usize, jm: u64, im: u64) -> Lemma21Summary {
    let m = 2 * k - r;
    let pos_j = IndexSet::from_mask(jm);
    let pos_i = IndexSet::from_mask(im);
    let scenarios: Vec<OverlapScenario> = PatternCode::all(k)
        .map(|p| OverlapScenario::new(pos_j.clone(), pos_i.clone(), p).expect("valid by construction"))
        .collect();
    let predicted: Vec<Vec<u32>> = scenarios.iter().map(|s| s.predicted_overlap_values()).collect();
    let overlap_positions = crate::subsets::mask_positions(jm & im);
    let mut counts = vec![0u64; scenarios.len()];
    let (mut mismatches, mut swaps) = (0u64, 0u64);
    let mut v: Vec<u32> = (1..=m as u32).collect();
    let mut bj = Vec::with_capacity(k);
    let mut bi = Vec::with_capacity(k);
    let mut ov = Vec::with_capacity(r);
    loop {
        bj.clear();
        bj.extend(pos_j.positions().iter().map(|&p| v[p - 1]));
        bi.clear();
        bi.extend(pos_i.positions().iter().map(|&p| v[p - 1]));
        let pj = rank(&bj);
        if pj == rank(&bi) {
            let idx = pj as usize;
            counts[idx] += 1;
            ov.clear();
            ov.extend(overlap_positions.iter().map(|&p| v[p]));
            ov.sort_unstable();
            if ov != predicted[idx] {
                mismatches += 1;
            }
            if !swap_check(&scenarios[idx], &v, &ov) {
                swaps += 1;
            }
        }
        if !next_permutation(&mut v) {
            break;
        }
    }
    let bound = 1u64 << (2 * (k - r));
    let nonisomorphic_nonzero = scenarios
        .iter()
        .zip(&counts)
        .filter(|(s, &c)| c > 0 && !s.overlap_isomorphic())
        .count() as u64;
    Lemma21Summary {
        k,
        r,
        m,
        position_pairs: 1,
        scenarios: scenarios.len() as u64,
        bound,
        weak_bound: 1 << (2 * k - r),
        max_count: counts.iter().copied().max().unwrap_or(0),
        bound_violations: counts.iter().filter(|&&c| c > bound).count() as u64,
        witnesses: counts.iter().sum(),
        overlap_mismatches: mismatches,
        swap_failures: swaps,
        nonisomorphic_nonzero,
        pass: true,
    }
}

/// Aggregated coupling results for one `(n, k)` over all `j` and `l`.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingSummary {
    pub n: usize,
    pub k: usize,
    pub audits: u64,
    pub failed: Vec<String>,
    pub friendly_events: u64,
    pub pass: bool,
}

/// [`coupling_audit`] for every `n <= max_n`, `k <= max_k`, every `j` and `l`.
pub fn coupling_sweep(max_n: usize, max_k: usize) -> Result<Vec<CouplingSummary>> {
    if max_n > COUPLING_MAX_N {
        return Err(Error::cap("coupling max_n", COUPLING_MAX_N, max_n));
    }
    let mut nk = Vec::new();
    for n in 1..=max_n {
        for k in 1..=max_k.min(n) {
            nk.push((n, k));
        }
    }
    nk.into_par_iter()
        .map(|(n, k)| {
            let jobs: Vec<(IndexSet, PatternCode)> = IndexSet::all(n, k)
                .flat_map(|j| PatternCode::all(k).map(move |l| (j.clone(), l)))
                .collect();
            let reports = jobs
                .par_iter()
                .map(|(j, l)| coupling_audit(n, k, j, l))
                .collect::<Result<Vec<_>>>()?;
            let failed: Vec<String> = reports
                .iter()
                .filter(|r| !r.pass)
                .map(|r| format!("j={} l={}", r.j, r.l))
                .collect();
            Ok(CouplingSummary {
                n,
                k,
                audits: reports.len() as u64,
                friendly_events: reports.iter().map(|r| r.friendly_events).sum(),
                pass: failed.is_empty(),
                failed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma21,
    Coupling,
    Occurrences,
    Fixtures,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lemma21" => Ok(Self::Lemma21),
            "coupling" => Ok(Self::Coupling),
            "occurrences" => Ok(Self::Occurrences),
            "fixtures" => Ok(Self::Fixtures),
            "all" => Ok(Self::All),
            other => Err(Error::invalid(format!(
                "unknown suite '{other}' (lemma21, coupling, occurrences, fixtures, all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceCase {
    pub suite: &'static str,
    pub scenario: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub suite: Suite,
    pub cases: Vec<ConformanceCase>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

/// Sweep limits for [`conformance`].
#[derive(Debug, Clone, Copy)]
pub struct ConformanceLimits {
    /// Largest overlap universe.
    pub max_m: usize,
    /// Largest `n` for the coupling audit.
    pub max_n: usize,
    pub max_coupling_k: usize,
    /// Largest `k` for the sub-pattern checks.
    pub max_occurrence_k: usize,
}

impl Default for ConformanceLimits {
    fn default() -> Self {
        Self {
            max_m: 8,
            max_n: 7,
            max_coupling_k: 3,
            max_occurrence_k: 6,
        }
    }
}

pub fn conformance(suite: Suite, limits: ConformanceLimits) -> Result<ConformanceReport> {
    let mut cases = Vec::new();
    let run = |s: Suite| suite == s || suite == Suite::All;
    if run(Suite::Fixtures) {
        cases.extend(fixture_cases()?);
    }
    if run(Suite::Lemma21) {
        for s in lemma21_sweep(limits.max_m)? {
            cases.push(ConformanceCase {
                suite: "lemma21",
                scenario: format!("k={} r={} m={} ({} scenarios)", s.k, s.r, s.m, s.scenarios),
                expected: format!("good_count <= {}, overlap values u_s + l_s - s, swaps break", s.bound),
                got: format!(
                    "max {} (weak form {}), {} witnesses, {} mismatches, {} swap failures",
                    s.max_count, s.weak_bound, s.witnesses, s.overlap_mismatches, s.swap_failures
                ),
                pass: s.pass,
            });
        }
    }
    if run(Suite::Coupling) {
        for s in coupling_sweep(limits.max_n, limits.max_coupling_k)? {
            cases.push(ConformanceCase {
                suite: "coupling",
                scenario: format!("n={} k={} ({} (j, l) audits)", s.n, s.k, s.audits),
                expected: "law equality, k! preimages, friendliness, disjoint invariance".into(),
                got: if s.pass {
                    format!("all pass, {} friendly events", s.friendly_events)
                } else {
                    format!("failed: {}", s.failed.join("; "))
                },
                pass: s.pass,
            });
        }
    }
    if run(Suite::Occurrences) {
        for k in 1..=limits.max_occurrence_k {
            for a_mask in 1u64..(1 << k) {
                let a = IndexSet::from_mask(a_mask);
                let u = subpattern_uniformity(k, &a)?;
                let got = u.counts.values().copied().collect::<Vec<_>>();
                cases.push(ConformanceCase {
                    suite: "occurrences",
                    scenario: format!("subpattern k={k} A={a}"),
                    expected: format!("each t appears {}", u.expected_each),
                    got: format!("{got:?}"),
                    pass: u.pass,
                });
            }
            for r in 1..=k {
                let c = expected_occurrences_check(k, r)?;
                let got: Vec<String> = c.averages.iter().map(|a| a.average.to_string()).collect();
                cases.push(ConformanceCase {
                    suite: "occurrences",
                    scenario: format!("occurrences k={k} r={r}"),
                    expected: format!("average N(t, L) = {}", c.expected),
                    got: got.join(","),
                    pass: c.pass,
                });
            }
        }
    }
    let passed = cases.iter().filter(|c| c.pass).count();
    let failed = cases.len() - passed;
    Ok(ConformanceReport {
        suite,
        cases,
        passed,
        failed,
        pass: failed == 0,
    })
}

/// The `k = 9`, `r = 3` illustration.
pub mod fixture {
    use super::*;

    pub const PERMUTATION: &str = "7,14,6,15,5,3,4,10,9,2,11,8,1,12,13";
    /// A friendly permutation for the witness. The commonly printed version has
    /// 10 and 12 transposed, which leaves position 14 (outside `X`) wrong.
    pub const FRIENDLY: &str = "11,9,10,15,5,2,4,7,6,3,14,8,1,12,13";
    pub const PATTERN: &str = "493265178";
    pub const X: [usize; 9] = [1, 2, 3, 6, 8, 9, 10, 11, 15];
    pub const O: [usize; 9] = [3, 4, 5, 7, 9, 12, 13, 14, 15];

    pub fn scenario() -> OverlapScenario {
        OverlapScenario::new(
            IndexSet::new(X.to_vec()).expect("increasing"),
            IndexSet::new(O.to_vec()).expect("increasing"),
            PATTERN.parse().expect("pattern"),
        )
        .expect("covers [15]")
    }

    pub fn witness() -> Permutation {
        PERMUTATION.parse().expect("permutation")
    }
}

fn fixture_cases() -> Result<Vec<ConformanceCase>> {
    let s = fixture::scenario();
    let w = fixture::witness();
    let mut cases = Vec::new();
    let at_x = crate::pattern::occurs_at(&w, s.pattern(), s.pos_j())?;
    let at_o = crate::pattern::occurs_at(&w, s.pattern(), s.pos_i())?;
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: format!("{} at X and O", fixture::PERMUTATION),
        expected: format!("{} at both", fixture::PATTERN),
        got: format!("X: {at_x}, O: {at_o}"),
        pass: at_x && at_o,
    });
    let ov = overlap_values(&s, &w)?;
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: "overlap values of the m = 15 witness".into(),
        expected: format!("{:?}", ov.predicted),
        got: format!("{:?}", ov.observed),
        pass: ov.matches,
    });
    let mut swapped = w.values().to_vec();
    let a = swapped.iter().position(|&v| v == 8).expect("8 present");
    let b = swapped.iter().position(|&v| v == 11).expect("11 present");
    swapped.swap(a, b);
    let sw = Permutation::new(swapped)?;
    let top = reduce_distinct(&sw.restrict(s.pos_j()));
    let bottom = reduce_distinct(&sw.restrict(s.pos_i()));
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: "swap 8 and 11".into(),
        expected: "493276158 / 493256178".into(),
        got: format!("{top} / {bottom}"),
        pass: top.to_string() == "493276158" && bottom.to_string() == "493256178",
    });
    let breaks = swap_breaks_goodness(&s, &w)?;
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: "every cross-block swap of the m = 15 witness".into(),
        expected: "breaks a pattern".into(),
        got: breaks.to_string(),
        pass: breaks,
    });
    let friendly: Permutation = fixture::FRIENDLY.parse()?;
    let mut sorted = friendly.values().to_vec();
    let ranks = s.pattern().ranks();
    force(&mut sorted, s.pos_j().positions(), &ranks);
    let becomes = sorted == w.values();
    let off_j_same = s
        .pos_i()
        .positions()
        .iter()
        .filter(|p| !s.pos_j().positions().contains(p))
        .all(|&p| friendly.at(p) == w.at(p));
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: format!("{} sorted on X", fixture::FRIENDLY),
        expected: fixture::PERMUTATION.into(),
        got: Permutation::from_vec_unchecked(sorted).to_string(),
        pass: becomes && off_j_same,
    });
    let p34152: Permutation = "34152".parse()?;
    let tally = crate::enumerate::SubsetPatternCounter::new(5)?.count(&p34152);
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: "distinct patterns of 34152, with the empty one".into(),
        expected: "14".into(),
        got: tally.total_with_empty.to_string(),
        pass: tally.total_with_empty == 14,
    });
    let occ = expected_occurrences_check(3, 2)?;
    cases.push(ConformanceCase {
        suite: "fixtures",
        scenario: "average N(12, L) over S_3".into(),
        expected: "3/2".into(),
        got: occ.averages[0].average.to_string(),
        pass: occ.averages[0].average == numeric::rational_from(3, 2),
    });
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    fn pat(s: &str) -> PatternCode {
        s.parse().unwrap()
    }

    #[test]
    fn smallest_scenario() {
        let s = OverlapScenario::new(set(&[1, 2]), set(&[2, 3]), pat("12")).unwrap();
        let g = good_count(&s).unwrap();
        assert_eq!(g.count, 1);
        assert_eq!(g.witnesses[0].to_string(), "1 2 3");
        let ov = overlap_values(&s, &g.witnesses[0]).unwrap();
        assert_eq!(ov.observed, vec![2]);
        assert!(ov.matches);
        assert!(swap_breaks_goodness(&s, &g.witnesses[0]).unwrap());
        assert_eq!(value_blocks(&[2], 3)[1..], [0, 1, 2]);
    }

    #[test]
    fn scenario_validation() {
        assert!(OverlapScenario::new(set(&[1, 2]), set(&[3, 4]), pat("12")).is_err());
        assert!(OverlapScenario::new(set(&[1, 2]), set(&[2, 4]), pat("12")).is_err());
        assert!(OverlapScenario::new(set(&[1, 2]), set(&[2]), pat("12")).is_err());
    }

    #[test]
    fn nonisomorphic_overlap_counts_zero() {
        // Overlap {2,3}: in j it reads 3,1 (descending), in i it reads 1,2.
        let s = OverlapScenario::new(set(&[1, 2, 3]), set(&[2, 3, 4]), pat("231")).unwrap();
        assert!(!s.overlap_isomorphic());
        assert_eq!(good_count(&s).unwrap().count, 0);
    }

    #[test]
    fn k3_r1_counts_at_most_16() {
        for j in Gosper::new(5, 3) {
            let full = 31u64;
            for i in Gosper::new(5, 3) {
                if (i | j) != full || (i & j).count_ones() != 1 {
                    continue;
                }
                for p in PatternCode::all(3) {
                    let s = OverlapScenario::new(IndexSet::from_mask(j), IndexSet::from_mask(i), p).unwrap();
                    assert!(good_count(&s).unwrap().count <= 16);
                }
            }
        }
    }

    #[test]
    fn degenerate_r_equals_k() {
        let s = OverlapScenario::new(set(&[1, 2, 3]), set(&[1, 2, 3]), pat("312")).unwrap();
        let g = good_count(&s).unwrap();
        assert_eq!(g.count, 1);
        let ov = overlap_values(&s, &g.witnesses[0]).unwrap();
        assert_eq!(ov.observed, vec![1, 2, 3]);
        assert!(ov.matches);
    }

    #[test]
    fn witness_must_be_good() {
        let s = OverlapScenario::new(set(&[1, 2]), set(&[2, 3]), pat("12")).unwrap();
        let bad: Permutation = "213".parse().unwrap();
        assert!(matches!(overlap_values(&s, &bad), Err(Error::Contract(_))));
    }

    #[test]
    fn worked_example_fixture() {
        let s = fixture::scenario();
        assert_eq!(s.r(), 3);
        assert_eq!(s.bound(), 1 << 12);
        let ov = overlap_values(&s, &fixture::witness()).unwrap();
        assert_eq!(ov.observed, vec![6, 9, 13]);
        assert!(ov.matches);
        for c in fixture_cases().unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn coupling_n5() {
        let r = coupling_audit(5, 2, &set(&[1, 2]), &pat("12")).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.conditioned, 60);
        assert_eq!(r.outcome_probability, numeric::rational_from(2, 120));
    }

    #[test]
    fn coupling_cap() {
        assert!(matches!(
            coupling_audit(9, 2, &set(&[1, 2]), &pat("12")),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn couple_fixes_pattern_and_leaves_rest() {
        let xi: Permutation = "52413".parse().unwrap();
        let j = set(&[2, 4]);
        let out = couple(&xi, &j, &pat("21")).unwrap();
        assert_eq!(out.xi_prime.to_string(), "5 2 4 1 3");
        let out = couple(&xi, &j, &pat("12")).unwrap();
        assert_eq!(out.xi_prime.to_string(), "5 1 4 2 3");
    }

    #[test]
    fn uniformity_examples() {
        let u = subpattern_uniformity(4, &set(&[1, 3])).unwrap();
        assert!(u.pass);
        assert_eq!(u.expected_each, 12);
        assert_eq!(u.counts.len(), 2);
        let c = expected_occurrences_check(4, 2).unwrap();
        assert!(c.pass);
        assert_eq!(c.expected, numeric::rational_from(3, 1));
    }

    #[test]
    fn suite_parse() {
        assert_eq!("lemma21".parse::<Suite>().unwrap(), Suite::Lemma21);
        assert!("nope".parse::<Suite>().is_err());
    }
}
