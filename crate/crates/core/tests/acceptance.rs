//! Acceptance suite. Runs each criterion at its stated tolerance and time
//! limit, prints one PASS/FAIL line per criterion, exits nonzero on any FAIL.
//!
//! Run alone with `cargo test -p patcount --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use patcount::bounds;
use patcount::constants::{EXPONENT_D, GROWTH_BASE};
use patcount::enumerate::{self, distinct_consecutive, exact_expected, SubsetPatternCounter};
use patcount::montecarlo::{self, estimate};
use patcount::numeric::{self, ln_biguint, rational_to_f64};
use patcount::oracles::{self, fixture};
use patcount::steinchen;
use patcount::{occurs_at, Convention, IndexSet, Mode, Permutation, SamplerConfig};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn c01_example_fidelity() -> Check {
    let pi: Permutation = "34152".parse().map_err(|e| format!("{e}"))?;
    let mut counter = SubsetPatternCounter::new(5).map_err(|e| format!("{e}"))?;
    counter.count(&pi);
    let started = Instant::now();
    let psi = counter.count(&pi);
    let phi = distinct_consecutive(&pi);
    let spent = started.elapsed();
    ensure(psi.per_length == [1, 1, 2, 5, 4, 1], || format!("psi profile {:?}", psi.per_length))?;
    ensure(phi.per_length == [1, 1, 2, 3, 2, 1], || format!("phi profile {:?}", phi.per_length))?;
    ensure(psi.total_with_empty == 14 && phi.total_with_empty == 10, || {
        format!("totals {} / {}", psi.total_with_empty, phi.total_with_empty)
    })?;
    ensure(spent < Duration::from_millis(1), || format!("took {spent:?}"))?;
    Ok(format!("psi 14, phi 10, profiles match, {spent:?}"))
}

fn c02_minimum_law() -> Check {
    for n in 1..=12usize {
        let mut c = SubsetPatternCounter::new(n).map_err(|e| format!("{e}"))?;
        let t = c.count(&Permutation::identity(n));
        ensure(t.total_with_empty == n as u64 + 1, || {
            format!("identity_{n}: {}", t.total_with_empty)
        })?;
    }
    Ok("psi(identity_n) = n + 1 for n = 1..=12".into())
}

fn c03_length_ceiling() -> Check {
    let n = 7;
    let ceiling: Vec<u64> = (0..=n)
        .map(|k| enumerate::length_ceiling(n, k).to_u64().expect("small"))
        .collect();
    let mut counter = SubsetPatternCounter::new(n).map_err(|e| format!("{e}"))?;
    let mut v: Vec<u32> = (1..=n as u32).collect();
    let mut seen = 0u64;
    let mut max_total = 0u64;
    loop {
        let pi = Permutation::new(v.clone()).map_err(|e| format!("{e}"))?;
        let t = counter.count(&pi);
        for k in 0..=n {
            ensure(t.per_length[k] <= ceiling[k], || {
                format!("{pi}: length {k} has {} > {}", t.per_length[k], ceiling[k])
            })?;
        }
        max_total = max_total.max(t.total_without_empty);
        seen += 1;
        if !next_perm(&mut v) {
            break;
        }
    }
    ensure(seen == 5040, || format!("visited {seen} permutations"))?;
    Ok(format!("all 5040 permutations of S_7 within min(C(7,k), k!); max total {max_total}"))
}

fn next_perm(v: &mut [u32]) -> bool {
    let n = v.len();
    let Some(i) = (1..n).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..n).rev().find(|&j| v[j] > v[i - 1]).expect("successor exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn c04_expectation_consistency() -> Check {
    let mut checked = 0;
    for n in 1..=8usize {
        let exact = exact_expected(n).map_err(|e| format!("{e}"))?;
        for k in 1..=4usize.min(n) {
            let laws = steinchen::occurrence_laws(n, k, workers()).map_err(|e| format!("{e}"))?;
            let sum = laws
                .iter()
                .fold(BigRational::zero(), |acc, law| acc + law.p_at_least_one());
            ensure(sum == exact.per_k_expectation[k], || {
                format!("n={n} k={k}: {sum} vs {}", exact.per_k_expectation[k])
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (n, k) pairs equal as rationals"))
}

fn c05_mc_calibration() -> Check {
    let mut worst = 0.0f64;
    for n in 3..=8usize {
        let exact = rational_to_f64(exact_expected(n).map_err(|e| format!("{e}"))?.total(Convention::WithoutEmpty));
        for seed in 0..20u64 {
            let cfg = SamplerConfig::new(n, 50_000, 0x5eed_0000 + seed).with_workers(workers());
            let r = estimate(&cfg).map_err(|e| format!("{e}"))?;
            let z = (r.mean - exact).abs() / r.stderr;
            worst = worst.max(z);
            ensure(z <= 4.0, || format!("n={n} seed={seed}: mean {} exact {exact} ({z:.2} stderr)", r.mean))?;
        }
    }
    Ok(format!("120 runs within 4 stderr, worst {worst:.2}"))
}

fn c06_theorem11() -> Check {
    let cfg = SamplerConfig::new(100, 200, 11).with_mode(Mode::Consecutive);
    let r = estimate(&cfg).map_err(|e| format!("{e}"))?;
    let bound = bounds::theorem11(100);
    ensure(r.mean >= bound, || format!("mean {} < {bound}", r.mean))?;
    Ok(format!("mean {:.1} >= {bound:.1}", r.mean))
}

fn c07_lemma21() -> Check {
    let rows = oracles::lemma21_sweep(8).map_err(|e| format!("{e}"))?;
    let mut witnesses = 0;
    let mut max_ratio = 0.0f64;
    for s in &rows {
        ensure(s.pass, || format!("{s:?}"))?;
        witnesses += s.witnesses;
        max_ratio = max_ratio.max(s.max_count as f64 / s.bound as f64);
    }
    let sc = fixture::scenario();
    let w = fixture::witness();
    let x = occurs_at(&w, sc.pattern(), sc.pos_j()).map_err(|e| format!("{e}"))?;
    let o = occurs_at(&w, sc.pattern(), sc.pos_i()).map_err(|e| format!("{e}"))?;
    ensure(x && o, || format!("fixture at X: {x}, at O: {o}"))?;
    let ov = oracles::overlap_values(&sc, &w).map_err(|e| format!("{e}"))?;
    ensure(ov.matches, || format!("fixture overlap {:?} vs {:?}", ov.observed, ov.predicted))?;
    Ok(format!(
        "{} (k, r) classes, {witnesses} witnesses, max count / 2^(2k-2r) = {max_ratio:.3}; m = 15 fixture ok",
        rows.len()
    ))
}

fn c08_coupling() -> Check {
    let rows = oracles::coupling_sweep(7, 3).map_err(|e| format!("{e}"))?;
    let audits: u64 = rows.iter().map(|r| r.audits).sum();
    let events: u64 = rows.iter().map(|r| r.friendly_events).sum();
    for r in &rows {
        ensure(r.pass, || format!("n={} k={}: {:?}", r.n, r.k, r.failed))?;
    }
    Ok(format!("{audits} audits pass, {events} friendly events checked"))
}

fn c09_subpattern_endpoints() -> Check {
    let mut checks = 0;
    for k in 1..=6usize {
        for a in 0u64..(1 << k) {
            let set = IndexSet::from_mask(a);
            let u = oracles::subpattern_uniformity(k, &set).map_err(|e| format!("{e}"))?;
            ensure(u.pass, || format!("k={k} A={set}: {:?}", u.counts))?;
            checks += 1;
        }
        for r in 0..=k {
            let c = oracles::expected_occurrences_check(k, r).map_err(|e| format!("{e}"))?;
            ensure(c.pass, || format!("k={k} r={r}"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} exact checks"))
}

/// Exact binomial row of `n`, built multiplicatively.
fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::from(1u32);
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

fn c10_analytics() -> Check {
    for k in 1..=50u64 {
        let t = bounds::eta_table(k);
        ensure(t.matches_ratio_rule, || {
            format!("k={k}: maximizers {:?} predicted {}", t.maximizers, t.predicted_argmax)
        })?;
    }
    for n in [1_000u64, 10_000, 100_000] {
        let d = bounds::phi_discrete_argmax(n) as f64;
        let k_star = GROWTH_BASE.cbrt() * (n as f64).powf(2.0 / 3.0);
        ensure((d - k_star).abs() <= 1.0, || format!("n={n}: argmax {d} vs k* {k_star}"))?;
    }
    let pm = bounds::phi_max(1e6);
    let rel = (pm.log2_over_n23 - EXPONENT_D).abs() / EXPONENT_D;
    ensure(rel < 0.01, || format!("log2 phi_max / n^(2/3) = {}", pm.log2_over_n23))?;

    let ln2 = std::f64::consts::LN_2;
    for n in 1..=64u64 {
        let t = bounds::tail_exact(n, n / 2);
        ensure(t >= numeric::pow2(n - 1), || format!("exact tail at n={n}"))?;
        let rel = (bounds::ln_tail(n, n / 2) - ln_biguint(&t)).abs() / ln_biguint(&t).max(1.0);
        ensure(rel <= 1e-9, || format!("log tail differs at n={n}: {rel:e}"))?;
    }
    for n in 65..=2_000u64 {
        let row = binomial_row(n);
        let exact: BigUint = row[(n / 2) as usize..].iter().sum();
        let l = ln_biguint(&exact);
        let rel = (bounds::ln_tail(n, n / 2) - l).abs() / l;
        ensure(rel <= 1e-9, || format!("log tail differs at n={n}: {rel:e}"))?;
    }
    let mut n = 2_000u64;
    while n <= 1_000_000 {
        let margin = bounds::ln_tail(n, n / 2) - (n as f64 - 1.0) * ln2;
        ensure(margin >= -1e-9 * (n as f64 - 1.0) * ln2, || format!("log tail below 2^(n-1) at n={n}"))?;
        n += 997;
    }
    let margin = bounds::ln_tail(1_000_000, 500_000) - 999_999.0 * ln2;
    ensure(margin >= 0.0, || format!("n = 10^6 margin {margin}"))?;

    let ratio = bounds::theorem31_ratio(1_000_000);
    ensure((1.0 - 1e-6..=1.0).contains(&ratio), || format!("theorem31 ratio {ratio}"))?;
    Ok(format!(
        "eta rule k <= 50, phi argmax within 1, log2 phi_max / n^(2/3) = {:.4}, tails ok, ratio {ratio}",
        pm.log2_over_n23
    ))
}

fn c11_case_vii() -> Check {
    let a = bounds::solve_case_vii(100_000).map_err(|e| format!("{e}"))?;
    let b = bounds::solve_case_vii(1_000_000).map_err(|e| format!("{e}"))?;
    let spread = (a.x_over_n34 - b.x_over_n34).abs() / b.x_over_n34;
    ensure(a.residual < 1e-6 && b.residual < 1e-6, || {
        format!("residuals {} {}", a.residual, b.residual)
    })?;
    ensure(spread < 0.05, || format!("x/n^(3/4): {} vs {}", a.x_over_n34, b.x_over_n34))?;
    Ok(format!(
        "x/n^(3/4) = {:.4} (1e5), {:.4} (1e6), spread {:.2}%",
        a.x_over_n34,
        b.x_over_n34,
        100.0 * spread
    ))
}

fn c12_reported_trend() -> Check {
    let template = SamplerConfig::new(1, 60, 2024).with_workers(workers());
    let ns: Vec<usize> = (1..=20).collect();
    let report = montecarlo::ratio_report(&ns, &template, true).map_err(|e| format!("{e}"))?;
    println!("      n  source   E(X_n)/2^n   95% CI                 (reference lines 0.5, 0.608)");
    for row in &report.rows {
        println!(
            "     {:>2}  {:<7}  {:.4}       [{:.4}, {:.4}]",
            row.n, row.source, row.ratio, row.ratio_ci95_low, row.ratio_ci95_high
        );
    }
    Ok("trend reported, not asserted".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let criteria = [
        Criterion { id: 1, name: "example fidelity", limit: Duration::from_secs(1), run: c01_example_fidelity },
        Criterion { id: 2, name: "minimum law", limit: Duration::from_secs(1), run: c02_minimum_law },
        Criterion { id: 3, name: "length ceiling on S_7", limit: Duration::from_secs(60), run: c03_length_ceiling },
        Criterion { id: 4, name: "per-length expectation consistency", limit: Duration::from_secs(300), run: c04_expectation_consistency },
        Criterion { id: 5, name: "Monte Carlo calibration", limit: Duration::from_secs(300), run: c05_mc_calibration },
        Criterion { id: 6, name: "consecutive lower bound desk check", limit: Duration::from_secs(120), run: c06_theorem11 },
        Criterion { id: 7, name: "overlap lemma sweep", limit: Duration::from_secs(600), run: c07_lemma21 },
        Criterion { id: 8, name: "coupling audit", limit: Duration::from_secs(600), run: c08_coupling },
        Criterion { id: 9, name: "sub-pattern endpoints", limit: Duration::from_secs(60), run: c09_subpattern_endpoints },
        Criterion { id: 10, name: "asymptotic analytics", limit: Duration::from_secs(60), run: c10_analytics },
        Criterion { id: 11, name: "root solve x ~ n^(3/4)", limit: Duration::from_secs(10), run: c11_case_vii },
        Criterion { id: 12, name: "headline claims (reported only)", limit: Duration::from_secs(600), run: c12_reported_trend },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|o| o == c.id)) {
        let started = Instant::now();
        let outcome = (c.run)();
        let spent = started.elapsed();
        let outcome = match outcome {
            Ok(msg) if spent > c.limit => Err(format!("{msg}; over time limit {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS  {:>2}  {:<36} {:>9.3}s  {msg}", c.id, c.name, spent.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:>2}  {:<36} {:>9.3}s  {msg}", c.id, c.name, spent.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
