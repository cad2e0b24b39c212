//! Asymptotic analytics behind `E(X_n) >= 2^(n-1) - 3.5 n 2^(D n^(2/3))`.
//!
//! Every quantity is available exactly (big rationals) for moderate `n` and in
//! log space (as [`SignedLog`]) for `n` up to `10^6` and beyond. The constants
//! `1.57`, `3.5` and `D = 5.02` are fixed inputs, see [`crate::constants`].
//!
//! Discretisation choices: `k0 = floor(n/2)` for the main bound, the
//! continuous maximiser `k*` is compared with the integer argmax, case (iii)
//! uses `floor(4 n^(2/3))`, cases (iv) and (vi) use `round(alpha n)`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::constants::{ConstantsBlock, EXPONENT_D, GROWTH_BASE, TAU_COEFF, UPPER_REFERENCE};
use crate::error::{Error, Result};
use crate::numeric::{
    self, bisect, ln_binomial, ln_binomial_real, ln_biguint, ln_factorial, serde_rational,
    signed_log_of, SignedLog,
};

const LN2: f64 = std::f64::consts::LN_2;

/// Below this `n` the per-length bound is evaluated with exact rationals.
pub const EXACT_CROSSOVER: u64 = 300;

/// Largest `n` for exact big-integer binomial tails.
pub const EXACT_TAIL_MAX: u64 = 64;

/// `eta(k, r) = 2^(2k-2r) / ((2k-r)! r!)`.
pub fn eta(k: u64, r: u64) -> BigRational {
    assert!(r <= k, "eta needs r <= k");
    numeric::ratio(
        numeric::pow2(2 * k - 2 * r),
        numeric::factorial(2 * k - r) * numeric::factorial(r),
    )
}

pub fn ln_eta(k: u64, r: u64) -> f64 {
    (2 * k - 2 * r) as f64 * LN2 - ln_factorial(2 * k - r) - ln_factorial(r)
}

/// `eta(k, r+1) / eta(k, r) = (2k - r) / (4 (r + 1))`.
pub fn eta_step_ratio(k: u64, r: u64) -> BigRational {
    BigRational::new(BigInt::from(2 * k - r), BigInt::from(4 * (r + 1)))
}

/// Argmax over `r` predicted by the step ratio: `eta` grows while
/// `r <= (2k-4)/5`, so the peak sits one step past `floor((2k-4)/5)`.
/// When `(2k-4)/5` is an integer the step there is exactly 1 and the
/// previous index ties.
pub fn ratio_rule_argmax(k: u64) -> u64 {
    let r0 = (2 * k as i64 - 4).div_euclid(5);
    ((r0 + 1).max(0) as u64).min(k)
}

/// True when `(2k-4)/5` is a nonnegative integer, giving a two-way tie.
pub fn ratio_rule_tie(k: u64) -> bool {
    let t = 2 * k as i64 - 4;
    t >= 0 && t % 5 == 0
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaRow {
    pub r: u64,
    #[serde(serialize_with = "serde_rational::serialize")]
    pub eta: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaTable {
    pub k: u64,
    /// `r = 0..=k`.
    pub rows: Vec<EtaRow>,
    /// Smallest maximising `r`.
    pub argmax_r: u64,
    pub maximizers: Vec<u64>,
    pub predicted_argmax: u64,
    pub matches_ratio_rule: bool,
}

pub fn eta_table(k: u64) -> EtaTable {
    let rows: Vec<EtaRow> = (0..=k).map(|r| EtaRow { r, eta: eta(k, r) }).collect();
    let max = rows.iter().map(|row| &row.eta).max().expect("k >= 0").clone();
    let maximizers: Vec<u64> = rows.iter().filter(|row| row.eta == max).map(|row| row.r).collect();
    let predicted = ratio_rule_argmax(k);
    let expected: Vec<u64> = if ratio_rule_tie(k) && predicted > 0 {
        vec![predicted - 1, predicted]
    } else {
        vec![predicted]
    };
    EtaTable {
        k,
        argmax_r: maximizers[0],
        matches_ratio_rule: maximizers == expected,
        maximizers,
        predicted_argmax: predicted,
        rows,
    }
}

fn growth_base_exact() -> BigRational {
    numeric::rational_from(157, 100)
}

/// `tau2 = 3.5 (1.57)^k C(n,k)^2 / k!`, exactly.
pub fn tau2_exact(n: u64, k: u64) -> BigRational {
    let c = numeric::ratio_int(numeric::binomial(n, k));
    let base = num_traits::pow(growth_base_exact(), k as usize);
    numeric::rational_from(7, 2) * base * &c * &c / numeric::ratio_int(numeric::factorial(k))
}

pub fn ln_tau2(n: u64, k: u64) -> f64 {
    TAU_COEFF.ln() + k as f64 * GROWTH_BASE.ln() + 2.0 * ln_binomial(n, k) - ln_factorial(k)
}

pub fn tau2(n: u64, k: u64) -> SignedLog {
    if n <= EXACT_CROSSOVER {
        signed_log_of(&tau2_exact(n, k))
    } else {
        SignedLog::from_ln(ln_tau2(n, k))
    }
}

/// `C(n,k) - tau2(n,k)`, exactly.
pub fn eq19_lower_exact(n: u64, k: u64) -> BigRational {
    numeric::ratio_int(numeric::binomial(n, k)) - tau2_exact(n, k)
}

/// Per-length lower bound `E(X_k) >= C(n,k) - 3.5 (1.57)^k C(n,k)^2 / k!`.
pub fn eq19_lower(n: u64, k: u64) -> SignedLog {
    if n <= EXACT_CROSSOVER {
        signed_log_of(&eq19_lower_exact(n, k))
    } else {
        eq19_lower_log(n, k)
    }
}

/// Log-space evaluation regardless of `n`.
pub fn eq19_lower_log(n: u64, k: u64) -> SignedLog {
    SignedLog::from_ln(ln_binomial(n, k)).sub(SignedLog::from_ln(ln_tau2(n, k)))
}

/// Smallest `k >= 1` at which the per-length bound is positive.
pub fn eq19_crossover(n: u64) -> Option<u64> {
    (1..=n).find(|&k| eq19_lower(n, k).is_positive())
}

/// `ln phi(k)` with `phi(k) = 3.5 A^k (n^2/k^3)^k` and `A = 1.57 e^3`.
pub fn ln_phi(n: f64, k: f64) -> f64 {
    let ln_a = GROWTH_BASE.ln() + 3.0;
    TAU_COEFF.ln() + k * ln_a + 2.0 * k * n.ln() - 3.0 * k * k.ln()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiMax {
    pub n: f64,
    /// `(1.57)^(1/3) n^(2/3)`.
    pub k_star: f64,
    pub ln_value: f64,
    /// `log2 phi(k*) / n^(2/3)`, which tends to `3 (1.57)^(1/3) log2 e`.
    pub log2_over_n23: f64,
}

pub fn phi_max(n: f64) -> PhiMax {
    let n23 = n.cbrt().powi(2);
    let k_star = GROWTH_BASE.cbrt() * n23;
    let ln_value = ln_phi(n, k_star);
    PhiMax {
        n,
        k_star,
        ln_value,
        log2_over_n23: ln_value / LN2 / n23,
    }
}

/// Integer `k` in `1..=n` maximising `phi`.
pub fn phi_discrete_argmax(n: u64) -> u64 {
    let nf = n as f64;
    (1..=n)
        .max_by(|&a, &b| ln_phi(nf, a as f64).total_cmp(&ln_phi(nf, b as f64)))
        .expect("n >= 1")
}

/// `3 (1.57)^(1/3) log2 e`, the exponent the constant `D` rounds.
pub fn exponent_side_check() -> f64 {
    3.0 * GROWTH_BASE.cbrt() / LN2
}

/// `sum_{k=k0..n} C(n,k)`, exactly.
pub fn tail_exact(n: u64, k0: u64) -> BigUint {
    (k0..=n).map(|k| numeric::binomial(n, k)).sum()
}

/// `ln sum_{k=k0..n} C(n,k)`, summing outward from the largest term until the
/// terms drop below `1e-20` of the running sum.
pub fn ln_tail(n: u64, k0: u64) -> f64 {
    if k0 > n {
        return f64::NEG_INFINITY;
    }
    let peak = (n / 2).max(k0);
    let mut sum = 1.0f64;
    let mut t = 1.0f64;
    for j in peak..n {
        t *= (n - j) as f64 / (j + 1) as f64;
        sum += t;
        if t < 1e-20 * sum {
            break;
        }
    }
    t = 1.0;
    for j in (k0 + 1..=peak).rev() {
        t *= j as f64 / (n - j + 1) as f64;
        sum += t;
        if t < 1e-20 * sum {
            break;
        }
    }
    ln_binomial(n, peak) + sum.ln()
}

/// Binomial tail, exact for `n <= 64`.
pub fn tail(n: u64, k0: u64) -> SignedLog {
    if n <= EXACT_TAIL_MAX {
        let t = tail_exact(n, k0);
        if t.is_zero() {
            SignedLog::ZERO
        } else {
            SignedLog::from_ln(ln_biguint(&t))
        }
    } else {
        SignedLog::new(if k0 > n { 0 } else { 1 }, ln_tail(n, k0))
    }
}

/// `tail(n, k0) / 2^n`.
pub fn tail_fraction(n: u64, k0: u64) -> f64 {
    if n <= EXACT_TAIL_MAX {
        numeric::rational_to_f64(&numeric::ratio(tail_exact(n, k0), numeric::pow2(n)))
    } else {
        tail(n, k0).scale_ln(-(n as f64) * LN2).to_f64()
    }
}

/// `ln epsilon` with `epsilon = 3.5 n 2^(D n^(2/3)) / 2^n`.
pub fn ln_epsilon(n: u64) -> f64 {
    let nf = n as f64;
    TAU_COEFF.ln() + nf.ln() + (EXPONENT_D * nf.cbrt().powi(2) - nf) * LN2
}

pub fn epsilon(n: u64) -> f64 {
    ln_epsilon(n).exp()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonDelta {
    pub epsilon: f64,
    pub delta: f64,
    pub tail_fraction: f64,
}

/// `epsilon` and `delta = tail(n,k0)/2^n - epsilon`.
pub fn epsilon_delta(n: u64, k0: u64) -> EpsilonDelta {
    let epsilon = epsilon(n);
    let tail_fraction = tail_fraction(n, k0);
    EpsilonDelta {
        epsilon,
        delta: tail_fraction - epsilon,
        tail_fraction,
    }
}

/// `2^(n-1) - 3.5 n 2^(D n^(2/3))`.
pub fn theorem31(n: u64) -> SignedLog {
    let nf = n as f64;
    let main = SignedLog::from_ln((nf - 1.0) * LN2);
    let err = SignedLog::from_ln(TAU_COEFF.ln() + nf.ln() + EXPONENT_D * nf.cbrt().powi(2) * LN2);
    main.sub(err)
}

/// `theorem31(n) / 2^(n-1)`.
pub fn theorem31_ratio(n: u64) -> f64 {
    theorem31(n).scale_ln(-((n as f64) - 1.0) * LN2).to_f64()
}

/// Scan limit for [`positivity_threshold`].
pub const POSITIVITY_SCAN: u64 = 10_000;

/// Least `n` for which `theorem31(n) > 0`.
pub fn positivity_threshold() -> Option<u64> {
    (1..=POSITIVITY_SCAN).find(|&n| theorem31(n).is_positive())
}

/// `(n^2/2)(1 - 17 ln n / n)`, the consecutive-pattern lower bound without
/// its `(1 + o(1))` factor. Negative (vacuous) while `17 ln n > n`.
pub fn theorem11(n: u64) -> f64 {
    let nf = n as f64;
    nf * nf / 2.0 * (1.0 - crate::constants::CONSECUTIVE_LOG_COEFF * nf.ln() / nf)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerKRow {
    pub k: u64,
    pub lambda: SignedLog,
    pub eq19_value: SignedLog,
    pub tau2: SignedLog,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub k0: u64,
    pub rows: Vec<PerKRow>,
    pub epsilon: f64,
    pub delta: f64,
    pub tail: SignedLog,
    pub tail_fraction: f64,
    pub theorem31_value: SignedLog,
    pub theorem31_ratio: f64,
    pub positivity_n0: Option<u64>,
    pub constants: ConstantsBlock,
}

/// Full report at `(n, k0)`; per-length rows for `k = k0..=n` when requested.
pub fn bound_report(n: u64, k0: u64, with_rows: bool) -> BoundReport {
    let ed = epsilon_delta(n, k0);
    let rows = if with_rows {
        (k0.max(1)..=n)
            .map(|k| PerKRow {
                k,
                lambda: if n <= EXACT_CROSSOVER {
                    signed_log_of(&crate::steinchen::lambda(n, k))
                } else {
                    SignedLog::from_ln(crate::steinchen::ln_lambda(n, k))
                },
                eq19_value: eq19_lower(n, k),
                tau2: tau2(n, k),
            })
            .collect()
    } else {
        Vec::new()
    };
    BoundReport {
        n,
        k0,
        rows,
        epsilon: ed.epsilon,
        delta: ed.delta,
        tail: tail(n, k0),
        tail_fraction: ed.tail_fraction,
        theorem31_value: theorem31(n),
        theorem31_ratio: theorem31_ratio(n),
        positivity_n0: positivity_threshold(),
        constants: ConstantsBlock::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The implied lower bound exceeds the `0.608 * 2^n` reference line.
    Contradiction,
    /// A positive lower bound consistent with the reference line.
    Valid,
    /// The implied lower bound is not positive.
    Vacuous,
    /// Valid but smaller than the `k0 = floor(n/2)` bound.
    Weaker,
}

/// An auxiliary inequality checked in log space: `lhs <= rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct LogCheck {
    pub statement: &'static str,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

impl LogCheck {
    fn new(statement: &'static str, ln_lhs: f64, ln_rhs: f64) -> Self {
        Self {
            statement,
            ln_lhs,
            ln_rhs,
            holds: ln_lhs <= ln_rhs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRow {
    pub case: &'static str,
    pub k0: u64,
    pub tail_fraction: f64,
    pub epsilon: f64,
    /// Implied lower bound on `E(X_n) / 2^n`.
    pub delta: f64,
    pub reference: f64,
    pub verdict: Verdict,
    pub check: Option<LogCheck>,
}

fn verdict_for(delta: f64) -> Verdict {
    if delta <= 0.0 {
        Verdict::Vacuous
    } else if delta > UPPER_REFERENCE {
        Verdict::Contradiction
    } else {
        Verdict::Valid
    }
}

fn case_row(case: &'static str, n: u64, k0: u64, check: Option<LogCheck>) -> CaseRow {
    let ed = epsilon_delta(n, k0);
    CaseRow {
        case,
        k0,
        tail_fraction: ed.tail_fraction,
        epsilon: ed.epsilon,
        delta: ed.delta,
        reference: UPPER_REFERENCE,
        verdict: verdict_for(ed.delta),
        check,
    }
}

/// `alpha` used for cases (iv) and (vi).
pub const CASE_IV_ALPHA: f64 = 0.4;
pub const CASE_VI_ALPHA: f64 = 0.6;

/// Rows for the choices of `k0` in cases (i) to (vi). `n >= 8`.
pub fn case_table(n: u64) -> Result<Vec<CaseRow>> {
    if n < 8 {
        return Err(Error::Domain(format!("case table needs n >= 8, got {n}")));
    }
    let nf = n as f64;
    let n23 = nf.cbrt().powi(2);
    let mut rows = Vec::with_capacity(6);

    rows.push(case_row("i", n, 1, None));

    let k_cross = eq19_crossover(n).unwrap_or(n + 1);
    rows.push(case_row(
        "ii",
        n,
        k_cross,
        Some(LogCheck::new(
            "k0 (first k with a positive per-length bound) <= 3.16 n^(2/3)",
            (k_cross as f64).ln(),
            (GROWTH_BASE.cbrt() * std::f64::consts::E * n23).ln(),
        )),
    ));

    let k3 = ((4.0 * n23).floor() as u64).min(n + 1);
    rows.push(case_row(
        "iii",
        n,
        k3,
        Some(LogCheck::new(
            "C(n, 4n^(2/3)) <= exp((4/3) n^(2/3) ln n)",
            ln_binomial(n, k3),
            4.0 / 3.0 * n23 * nf.ln(),
        )),
    ));

    let k4 = (CASE_IV_ALPHA * nf).round() as u64;
    let a = k4 as f64 / nf;
    let ln_b = -(a * a.ln() + (1.0 - a) * (1.0 - a).ln());
    rows.push(case_row(
        "iv",
        n,
        k4,
        Some(LogCheck::new(
            "2 C(n, alpha n) <= K B^n with K = 2, B = alpha^-alpha (1-alpha)^-(1-alpha)",
            LN2 + ln_binomial(n, k4),
            LN2 + nf * ln_b,
        )),
    ));

    let k5 = n / 2;
    let v = case_row(
        "v",
        n,
        k5,
        Some(LogCheck::new(
            "2^(n-1) <= sum_{k >= floor(n/2)} C(n,k)",
            (nf - 1.0) * LN2,
            tail(n, k5).ln_abs,
        )),
    );
    let delta_v = v.delta;
    rows.push(v);

    let k6 = (CASE_VI_ALPHA * nf).round() as u64;
    let mut vi = case_row("vi", n, k6, None);
    if vi.verdict == Verdict::Valid && vi.delta < delta_v {
        vi.verdict = Verdict::Weaker;
    }
    rows.push(vi);
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaseVii {
    pub n: u64,
    /// Root of `ln C(n, n/2 - x) = (n - sqrt n) ln 2`.
    pub x: f64,
    pub x_over_n34: f64,
    pub residual: f64,
}

/// Solves `C(n, n/2 - x) = 2^(n - sqrt n)` for `x` in `[0, n/2]` by
/// bisection on the log-gamma form, to full `f64` resolution. `n >= 16`.
pub fn solve_case_vii(n: u64) -> Result<CaseVii> {
    if n < 16 {
        return Err(Error::Domain(format!("case (vii) solve needs n >= 16, got {n}")));
    }
    let nf = n as f64;
    let target = (nf - nf.sqrt()) * LN2;
    let f = |x: f64| ln_binomial_real(nf, nf / 2.0 - x) - target;
    let x = bisect(f, 0.0, nf / 2.0, 0.0)?;
    Ok(CaseVii {
        n,
        x,
        x_over_n34: x / nf.powf(0.75),
        residual: f(x).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eta_small_values() {
        assert_eq!(eta(3, 1), numeric::rational_from(16, 120));
        assert_eq!(eta(2, 0), numeric::rational_from(16, 24));
        assert_eq!(eta(5, 5), numeric::rational_from(1, 120 * 120));
    }

    #[test]
    fn eta_ratio_identity() {
        for k in 2..=30u64 {
            for r in 1..k {
                assert_eq!(eta(k, r + 1) / eta(k, r), eta_step_ratio(k, r), "k={k} r={r}");
            }
        }
    }

    #[test]
    fn eta_argmax_at_14_and_boundary_at_10() {
        // (2k-4)/5 = 24/5: the step from r = 4 to 5 still grows, the next shrinks.
        let t = eta_table(14);
        assert_eq!(t.argmax_r, 5);
        assert!(t.matches_ratio_rule);
        let r0 = (2 * 10 - 4) / 5;
        assert!(eta_step_ratio(10, r0) >= numeric::rational_from(1, 1));
        assert!(eta_step_ratio(10, r0 + 1) < numeric::rational_from(1, 1));
        // 2k-4 divisible by 5: tie.
        let t = eta_table(7);
        assert_eq!(t.maximizers, vec![2, 3]);
        assert!(t.matches_ratio_rule);
    }

    #[test]
    fn eq19_examples() {
        let sq = 20u64;
        assert!(!eq19_lower(400, sq).is_positive());
        assert!(eq19_lower(400, 200).is_positive());
        for k in 1..=40 {
            assert!(eq19_lower(40, k).to_f64() <= rational_to(numeric::binomial(40, k)) * (1.0 + 1e-12));
        }
    }

    fn rational_to(x: BigUint) -> f64 {
        num_traits::ToPrimitive::to_f64(&x).unwrap()
    }

    #[test]
    fn phi_chain_identity() {
        for &(n, k) in &[(100.0, 7.0), (1e4, 321.0), (1e6, 12000.0)] {
            let chain = TAU_COEFF.ln()
                + k * GROWTH_BASE.ln()
                + 2.0 * k * (n * std::f64::consts::E / k).ln()
                + k * (std::f64::consts::E / k).ln();
            assert_relative_eq!(ln_phi(n, k), chain, max_relative = 1e-12);
        }
    }

    #[test]
    fn phi_derivative_vanishes_at_k_star() {
        for &n in &[1e3, 1e6] {
            let m = phi_max(n);
            let ln_a = GROWTH_BASE.ln() + 3.0;
            assert_relative_eq!(3.0 * m.k_star.ln(), (ln_a + 2.0 * n.ln()) - 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn tau2_is_dominated_by_phi() {
        for n in [50u64, 200, 1000] {
            for k in (1..n).step_by(7) {
                assert!(ln_tau2(n, k) <= ln_phi(n as f64, k as f64) + 1e-9, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn tail_values() {
        assert_eq!(tail_exact(10, 5), BigUint::from(638u32));
        for n in 0..=64u64 {
            assert_eq!(tail_exact(n, 0), numeric::pow2(n));
        }
        assert_eq!(tail(10, 11), SignedLog::ZERO);
        assert_relative_eq!(tail_fraction(1000, 0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn epsilon_delta_examples() {
        let ed = epsilon_delta(1000, 500);
        assert!(ed.delta >= 0.499);
        assert!(epsilon(27) > 1.0);
        let ed = epsilon_delta(27, 13);
        let slack = 4.0 * f64::EPSILON * ed.epsilon.max(1.0);
        assert!((ed.delta + ed.epsilon - ed.tail_fraction).abs() <= slack);
    }

    #[test]
    fn theorem11_values() {
        assert_relative_eq!(theorem11(100), 5000.0 * (1.0 - 17.0 * 100f64.ln() / 100.0));
        assert!((theorem11(100) - 1085.6).abs() < 0.1);
        assert!(theorem11(50) < 0.0);
        assert!(theorem11(10_000_000) / 5e13 > 0.99);
    }

    #[test]
    fn case_vii_small_n_domain() {
        assert!(matches!(solve_case_vii(15), Err(Error::Domain(_))));
        let s = solve_case_vii(16).unwrap();
        assert!(s.x > 0.0 && s.x < 8.0);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn case_table_needs_n_8() {
        assert!(case_table(7).is_err());
        let rows = case_table(1000).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].verdict, Verdict::Contradiction);
        assert_eq!(rows[4].verdict, Verdict::Valid);
    }

    #[test]
    fn side_check_rounds_to_d() {
        let d = exponent_side_check();
        assert!((d - EXPONENT_D).abs() < 0.02, "{d}");
    }
}
