//! Poisson approximation of pattern occurrence counts.
//!
//! For a fixed pattern `l` of length `k`, `U` is the number of `k`-subsets of
//! positions of a uniform `pi in S_n` at which `l` occurs. Its mean is
//! `lambda = C(n,k)/k!`. This module computes the law of `U` exactly for small
//! `n`, its total variation distance to `Po(lambda)`, and the three error terms
//! of the coupling bound:
//!
//! - `T1 = C(n,k)/k!^2`
//! - `T2 <= C(n,k)^2/k!^2`
//! - `sum_l T3(l) <= C(n,k) sum_{r=1}^{k-1} C(k,r) C(n-k,k-r) 2^(2k-2r) k! / ((2k-r)! r!)`
//!
//! The pattern-summed `T3` bound also comes in a Chu-Vandermonde form
//! (`k! C(n,k)^2 max_r eta(k,r)`) and a Stirling form
//! (`(25e^2/16)^k C(n,k)^2 k!/k^(2k)`).
//!
//! Note on `T2`: the displayed bound sums over all `i != j`, overlapping or
//! not, while the accompanying prose restricts attention to the overlapping
//! case with the roles of the two cases apparently swapped relative to `T3`.
//! The formulas are implemented as displayed; the `T2` bound used here is the
//! cruder all-pairs one, so it is never smaller than either reading.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bounds;
use crate::error::{Error, Result};
use crate::numeric::{self, ln_binomial, ln_factorial, rational_to_f64, serde_rational};
use crate::pattern::PatternCode;
use crate::perms;
use crate::subsets::{mask_positions, Gosper};

/// Largest `n` for which the exact occurrence law is computed.
pub const LAW_CAP: usize = 9;

/// Above this `n` the bound terms are evaluated in log space.
pub const EXACT_CROSSOVER: u64 = 300;

/// Exact distribution of the occurrence count of one pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccurrenceLaw {
    pub n: usize,
    pub k: usize,
    pub pattern: PatternCode,
    /// `pmf[s] = P(U = s)` for `s = 0..=C(n,k)`.
    #[serde(serialize_with = "serde_rational::serialize_vec")]
    pub pmf: Vec<BigRational>,
    #[serde(serialize_with = "serde_rational::serialize")]
    pub lambda: BigRational,
}

impl OccurrenceLaw {
    pub fn pmf_f64(&self) -> Vec<f64> {
        self.pmf.iter().map(rational_to_f64).collect()
    }

    pub fn mean(&self) -> BigRational {
        self.pmf
            .iter()
            .enumerate()
            .fold(BigRational::zero(), |acc, (s, p)| acc + p * BigRational::from_integer(s.into()))
    }

    pub fn total_mass(&self) -> BigRational {
        self.pmf.iter().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn p_at_least_one(&self) -> BigRational {
        BigRational::one() - &self.pmf[0]
    }
}

/// Exact law of `U` for pattern `l` over `S_n`. `n <= 9`.
pub fn occurrence_law(n: usize, k: usize, l: &PatternCode) -> Result<OccurrenceLaw> {
    if l.len() != k {
        return Err(Error::invalid(format!("pattern {l} does not have length {k}")));
    }
    let mut laws = laws_for(n, k, Some(l.lex_index() as usize), 1)?;
    Ok(laws.pop().expect("one law"))
}

/// Exact laws for every pattern of length `k`, in lexicographic order of `l`.
pub fn occurrence_laws(n: usize, k: usize, workers: usize) -> Result<Vec<OccurrenceLaw>> {
    laws_for(n, k, None, workers)
}

fn laws_for(n: usize, k: usize, only: Option<usize>, workers: usize) -> Result<Vec<OccurrenceLaw>> {
    if n > LAW_CAP {
        return Err(Error::cap("n for exact occurrence laws", LAW_CAP, n));
    }
    if k > n {
        return Err(Error::invalid(format!("pattern length {k} exceeds n = {n}")));
    }
    let subsets: Vec<Vec<usize>> = Gosper::new(n, k).map(mask_positions).collect();
    let support = subsets.len();
    let kfact = perms::factorial_u64(k) as usize;
    let tracked: Vec<usize> = match only {
        Some(i) => vec![i],
        None => (0..kfact).collect(),
    };
    let weights: Vec<u64> = (0..k).rev().map(perms::factorial_u64).collect();

    struct Acc {
        counts: Vec<u32>,
        touched: Vec<usize>,
        hist: Vec<Vec<u64>>,
        window: Vec<u32>,
    }
    let acc = perms::fold_permutations(
        n,
        workers,
        || Acc {
            counts: vec![0; kfact],
            touched: Vec::new(),
            hist: vec![vec![0; support + 1]; kfact],
            window: vec![0; k],
        },
        |acc, p| {
            for sub in &subsets {
                for (w, &pos) in acc.window.iter_mut().zip(sub) {
                    *w = p[pos];
                }
                // Lehmer index of the window's pattern, read off the raw values.
                let w = &acc.window;
                let idx: u64 = (0..k)
                    .map(|i| w[i + 1..].iter().filter(|&&x| x < w[i]).count() as u64 * weights[i])
                    .sum();
                let idx = idx as usize;
                if only.is_some_and(|o| o != idx) {
                    continue;
                }
                if acc.counts[idx] == 0 {
                    acc.touched.push(idx);
                }
                acc.counts[idx] += 1;
            }
            for &idx in &acc.touched {
                acc.hist[idx][acc.counts[idx] as usize] += 1;
                acc.counts[idx] = 0;
            }
            acc.touched.clear();
        },
        |a, b| {
            for (ha, hb) in a.hist.iter_mut().zip(&b.hist) {
                for (x, y) in ha.iter_mut().zip(hb) {
                    *x += y;
                }
            }
        },
    );

    let nfact_u = perms::factorial_u64(n);
    let nfact = numeric::factorial(n as u64);
    let lambda = numeric::ratio(
        numeric::binomial(n as u64, k as u64),
        numeric::factorial(k as u64),
    );
    tracked
        .into_iter()
        .map(|idx| {
            let mut hist = acc.hist[idx].clone();
            hist[0] = nfact_u - hist[1..].iter().sum::<u64>();
            Ok(OccurrenceLaw {
                n,
                k,
                pattern: PatternCode::from_lex_index(k, idx as u64)?,
                pmf: hist
                    .iter()
                    .map(|&c| numeric::ratio(BigUint::from(c), nfact.clone()))
                    .collect(),
                lambda: lambda.clone(),
            })
        })
        .collect()
}

/// `e^-lambda lambda^s / s!`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, s: u64) -> f64 {
    if lambda == 0.0 {
        return if s == 0 { 1.0 } else { 0.0 };
    }
    (-lambda + s as f64 * lambda.ln() - ln_factorial(s)).exp()
}

/// `P(Po(lambda) > s)`, summed term by term with a geometric majorant for
/// the remainder once terms fall below `1e-18` of the running sum.
pub fn poisson_tail_above(lambda: f64, s: u64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut j = s + 1;
    let mut term = poisson_pmf(lambda, j);
    let mut sum = 0.0;
    loop {
        sum += term;
        let ratio = lambda / (j + 1) as f64;
        let next = term * ratio;
        if ratio < 0.5 && next <= 1e-18 * sum {
            return sum + next / (1.0 - ratio);
        }
        if next == 0.0 {
            return sum;
        }
        term = next;
        j += 1;
    }
}

/// Total variation distance between a pmf on `0..pmf.len()` and `Po(lambda)`,
/// including the Poisson mass beyond the support.
pub fn total_variation_pmf(pmf: &[f64], lambda: f64) -> f64 {
    let core: f64 = pmf
        .iter()
        .enumerate()
        .map(|(s, &p)| (p - poisson_pmf(lambda, s as u64)).abs())
        .sum();
    let top = pmf.len().saturating_sub(1) as u64;
    let tail = if pmf.is_empty() {
        1.0
    } else {
        poisson_tail_above(lambda, top)
    };
    0.5 * (core + tail)
}

pub fn total_variation(law: &OccurrenceLaw) -> f64 {
    total_variation_pmf(&law.pmf_f64(), rational_to_f64(&law.lambda))
}

/// `lambda = C(n,k)/k!`.
pub fn lambda(n: u64, k: u64) -> BigRational {
    numeric::ratio(numeric::binomial(n, k), numeric::factorial(k))
}

pub fn ln_lambda(n: u64, k: u64) -> f64 {
    ln_binomial(n, k) - ln_factorial(k)
}

/// `T1 = C(n,k)/k!^2`.
pub fn t1(n: u64, k: u64) -> BigRational {
    let f = numeric::factorial(k);
    numeric::ratio(numeric::binomial(n, k), &f * &f)
}

/// `T2 <= C(n,k)^2/k!^2`.
pub fn t2_bound(n: u64, k: u64) -> BigRational {
    let c = numeric::binomial(n, k);
    let f = numeric::factorial(k);
    numeric::ratio(&c * &c, &f * &f)
}

pub fn ln_t1(n: u64, k: u64) -> f64 {
    ln_binomial(n, k) - 2.0 * ln_factorial(k)
}

pub fn ln_t2_bound(n: u64, k: u64) -> f64 {
    2.0 * (ln_binomial(n, k) - ln_factorial(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum T3Form {
    ExactSum,
    ChuVandermonde,
    Stirling,
}

impl std::str::FromStr for T3Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "exact_sum" => Ok(T3Form::ExactSum),
            "chu_vandermonde" => Ok(T3Form::ChuVandermonde),
            "stirling" => Ok(T3Form::Stirling),
            other => Err(Error::invalid(format!("unknown T3 form {other:?}"))),
        }
    }
}

/// Pattern-summed `T3` bound, summed over overlaps `r = 1..k-1`.
pub fn t3_exact_sum(n: u64, k: u64) -> BigRational {
    if k < 2 || k > n {
        return BigRational::zero();
    }
    let kfact = numeric::factorial(k);
    let mut total = BigRational::zero();
    for r in 1..k {
        let c_nk = numeric::binomial(n - k, k - r);
        if c_nk.is_zero() {
            continue;
        }
        let num = numeric::binomial(k, r) * c_nk * numeric::pow2(2 * k - 2 * r) * &kfact;
        let den = numeric::factorial(2 * k - r) * numeric::factorial(r);
        total += numeric::ratio(num, den);
    }
    total * numeric::ratio_int(numeric::binomial(n, k))
}

/// `k! C(n,k)^2 max_{1<=r<=k-1} eta(k,r)`.
pub fn t3_chu_vandermonde(n: u64, k: u64) -> BigRational {
    if k < 2 || k > n {
        return BigRational::zero();
    }
    let max_eta = (1..k).map(|r| bounds::eta(k, r)).max().expect("k >= 2");
    let c = numeric::binomial(n, k);
    numeric::ratio_int(numeric::factorial(k) * &c * &c) * max_eta
}

/// Log-space value of the chosen `T3` form; `-inf` when the bound is zero.
pub fn ln_t3_sum_bound(n: u64, k: u64, form: T3Form) -> f64 {
    if k < 2 || k > n {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let ln2 = std::f64::consts::LN_2;
    match form {
        T3Form::ExactSum => {
            let terms = (1..k).filter(|&r| k - r <= n - k).map(|r| {
                ln_binomial(k, r) + ln_binomial(n - k, k - r) + (2 * k - 2 * r) as f64 * ln2
                    + ln_factorial(k)
                    - ln_factorial(2 * k - r)
                    - ln_factorial(r)
            });
            ln_binomial(n, k) + numeric::log_sum_exp(terms)
        }
        T3Form::ChuVandermonde => {
            let max_ln_eta = (1..k)
                .map(|r| bounds::ln_eta(k, r))
                .fold(f64::NEG_INFINITY, f64::max);
            ln_factorial(k) + 2.0 * ln_binomial(n, k) + max_ln_eta
        }
        T3Form::Stirling => {
            let ln_b = kf * (2.0 + (25.0f64 / 16.0).ln());
            ln_b + 2.0 * ln_binomial(n, k) + ln_factorial(k) - 2.0 * kf * kf.ln()
        }
    }
}

/// The chosen `T3` form as a real; exact arithmetic below the crossover.
pub fn t3_sum_bound(n: u64, k: u64, form: T3Form) -> f64 {
    if n <= EXACT_CROSSOVER {
        match form {
            T3Form::ExactSum => return rational_to_f64(&t3_exact_sum(n, k)),
            T3Form::ChuVandermonde => return rational_to_f64(&t3_chu_vandermonde(n, k)),
            T3Form::Stirling => {}
        }
    }
    ln_t3_sum_bound(n, k, form).exp()
}

/// Exact total variation distance next to the coupling bound for one pattern.
#[derive(Debug, Clone, Serialize)]
pub struct TvReport {
    pub n: usize,
    pub k: usize,
    pub pattern: PatternCode,
    pub lambda: f64,
    pub exact_dtv: f64,
    pub bound_t1: f64,
    pub bound_t2: f64,
    /// Pattern-summed `T3` bound divided by `k!`: a per-pattern proxy.
    pub bound_t3: f64,
    pub t3_is_proxy: bool,
    pub bound_total: f64,
    pub dtv_within_bound: bool,
    pub p_ge_1_exact: f64,
    /// `(1 - e^-lambda) - bound_total`.
    pub p_ge_1_lower: f64,
    /// True when `bound_total >= 1 - e^-lambda`, so the lower estimate is negative.
    pub vacuous: bool,
    pub lower_holds: bool,
}

impl TvReport {
    fn from_law(law: &OccurrenceLaw) -> Self {
        let (n, k) = (law.n as u64, law.k as u64);
        let lambda = rational_to_f64(&law.lambda);
        let exact_dtv = total_variation(law);
        let bound_t1 = rational_to_f64(&t1(n, k));
        let bound_t2 = rational_to_f64(&t2_bound(n, k));
        let bound_t3 = rational_to_f64(
            &(t3_exact_sum(n, k) / numeric::ratio_int(numeric::factorial(k))),
        );
        let bound_total = bound_t1 + bound_t2 + bound_t3;
        let p_ge_1_exact = rational_to_f64(&law.p_at_least_one());
        let p_ge_1_lower = -(-lambda).exp_m1() - bound_total;
        Self {
            n: law.n,
            k: law.k,
            pattern: law.pattern.clone(),
            lambda,
            exact_dtv,
            bound_t1,
            bound_t2,
            bound_t3,
            t3_is_proxy: true,
            bound_total,
            dtv_within_bound: exact_dtv <= bound_total,
            p_ge_1_exact,
            p_ge_1_lower,
            vacuous: p_ge_1_lower <= 0.0,
            lower_holds: p_ge_1_exact >= p_ge_1_lower,
        }
    }
}

pub fn tv_report(n: usize, k: usize, l: &PatternCode) -> Result<TvReport> {
    Ok(TvReport::from_law(&occurrence_law(n, k, l)?))
}

/// Reports for every pattern of length `k`, in lexicographic order.
pub fn tv_sweep(n: usize, k: usize, workers: usize) -> Result<Vec<TvReport>> {
    Ok(occurrence_laws(n, k, workers)?.iter().map(TvReport::from_law).collect())
}
