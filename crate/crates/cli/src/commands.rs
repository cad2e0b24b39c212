use serde::Serialize;
use serde_json::{json, Value};

use patcount::bounds;
use patcount::enumerate::{self, distinct_consecutive, exact_expected, SubsetPatternCounter};
use patcount::montecarlo::{self, estimate, SamplerConfig};
use patcount::numeric::rational_to_f64;
use patcount::oracles::{self, ConformanceLimits};
use patcount::steinchen::{self, T3Form};
use patcount::Mode;

use crate::output::Table;
use crate::{
    BoundsArgs, Cli, Command, CommandResult, CountArgs, EstimateArgs, ExactArgs, Failure, SweepArgs,
    SweepTable, TvArgs, VerifyArgs, K0,
};

fn value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::usage(format!("serialization failed: {e}")))
}

fn done(payload: Value, table: Option<Table>) -> Result<CommandResult, Failure> {
    Ok(CommandResult {
        payload,
        table,
        pass: true,
    })
}

pub(crate) fn dispatch(cli: &Cli) -> Result<CommandResult, Failure> {
    if cli.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    match &cli.command {
        Command::Count(a) => count(a),
        Command::Estimate(a) => estimate_cmd(a, cli.workers),
        Command::Exact(a) => exact(a, cli.workers),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Tv(a) => tv(a, cli.workers),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a, cli.workers),
    }
}

fn count(a: &CountArgs) -> Result<CommandResult, Failure> {
    let tally = match a.mode {
        Mode::Consecutive => distinct_consecutive(&a.perm),
        Mode::Nonconsecutive => SubsetPatternCounter::new(a.perm.len())?.count(&a.perm),
    };
    let mut table = Table::new(&["k", "count"]);
    for (k, c) in tally.per_length.iter().enumerate() {
        table.push([k as u64, *c]);
    }
    let payload = json!({
        "perm": value(&a.perm)?,
        "mode": value(&a.mode)?,
        "convention": value(&a.convention)?,
        "tally": value(&tally)?,
        "total": tally.total(a.convention),
    });
    done(payload, Some(table))
}

fn estimate_payload(r: &montecarlo::EstimateResult) -> Result<Value, Failure> {
    let mut v = value(r)?;
    if let Value::Object(map) = &mut v {
        map.remove("elapsed");
    }
    Ok(v)
}

fn estimate_cmd(a: &EstimateArgs, workers: usize) -> Result<CommandResult, Failure> {
    let cfg = SamplerConfig::new(a.n, a.samples, a.seed)
        .with_mode(a.mode)
        .with_convention(a.convention)
        .with_workers(workers);
    let r = estimate(&cfg)?;
    let payload = json!({
        "estimate": estimate_payload(&r)?,
        "ratio_to_2n": r.mean / 2f64.powi(a.n as i32),
    });
    done(payload, None)
}

fn exact(a: &ExactArgs, workers: usize) -> Result<CommandResult, Failure> {
    let e = enumerate::exact_expected_with_workers(a.n, workers)?;
    let total = e.total(a.convention);
    let mut table = Table::new(&["k", "expectation", "expectation_f64"]);
    for (k, q) in e.per_k_expectation.iter().enumerate() {
        table.push([k.to_string(), q.to_string(), rational_to_f64(q).to_string()]);
    }
    let payload = json!({
        "expectation": value(&e)?,
        "total": total.to_string(),
        "total_f64": rational_to_f64(total),
        "ratio_to_2n": rational_to_f64(total) / 2f64.powi(a.n as i32),
        "pigeonhole_max": enumerate::pigeonhole_max(a.n).to_string(),
    });
    done(payload, Some(table))
}

fn bounds_cmd(a: &BoundsArgs) -> Result<CommandResult, Failure> {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let n = a.n;
    let k0 = match a.k0 {
        K0::Half => n / 2,
        K0::At(k) => k,
    };
    let report = bounds::bound_report(n, k0, n <= 200);
    let cases = if n >= 8 { Some(bounds::case_table(n)?) } else { None };
    let vii = if n >= 16 { Some(bounds::solve_case_vii(n)?) } else { None };
    let eta = a.k.map(bounds::eta_table);
    let payload = json!({
        "n": n,
        "k0": k0,
        "delta": report.delta,
        "epsilon": report.epsilon,
        "tail_fraction": report.tail_fraction,
        "theorem31_ratio": report.theorem31_ratio,
        "theorem11": bounds::theorem11(n),
        "positivity_n0": report.positivity_n0,
        "phi_max": value(&bounds::phi_max(n as f64))?,
        "exponent_side_check": bounds::exponent_side_check(),
        "report": value(&report)?,
        "case_table": value(&cases)?,
        "case_vii": value(&vii)?,
        "eta": value(&eta)?,
    });
    let mut table = Table::new(&["field", "value"]);
    for key in ["n", "k0", "delta", "epsilon", "tail_fraction", "theorem31_ratio", "theorem11", "positivity_n0"] {
        table.push([key.to_string(), payload[key].to_string()]);
    }
    if let Some(rows) = &cases {
        for c in rows {
            table.push([format!("case_{}.k0", c.case), c.k0.to_string()]);
            table.push([format!("case_{}.delta", c.case), c.delta.to_string()]);
            table.push([format!("case_{}.verdict", c.case), value(&c.verdict)?.as_str().unwrap_or("").to_string()]);
        }
    }
    if let Some(s) = &vii {
        table.push(["case_vii.x".to_string(), s.x.to_string()]);
        table.push(["case_vii.x_over_n34".to_string(), s.x_over_n34.to_string()]);
    }
    done(payload, Some(table))
}

fn tv_table(reports: &[steinchen::TvReport]) -> Table {
    let mut t = Table::new(&[
        "n",
        "k",
        "pattern",
        "lambda",
        "exact_dtv",
        "bound_t1",
        "bound_t2",
        "bound_t3",
        "bound_total",
        "p_ge_1_exact",
        "p_ge_1_lower",
        "vacuous",
    ]);
    for r in reports {
        t.push([
            r.n.to_string(),
            r.k.to_string(),
            r.pattern.to_string(),
            r.lambda.to_string(),
            r.exact_dtv.to_string(),
            r.bound_t1.to_string(),
            r.bound_t2.to_string(),
            r.bound_t3.to_string(),
            r.bound_total.to_string(),
            r.p_ge_1_exact.to_string(),
            r.p_ge_1_lower.to_string(),
            r.vacuous.to_string(),
        ]);
    }
    t
}

fn tv(a: &TvArgs, workers: usize) -> Result<CommandResult, Failure> {
    let reports = match &a.pattern {
        Some(l) => vec![steinchen::tv_report(a.n, a.k, l)?],
        None => steinchen::tv_sweep(a.n, a.k, workers)?,
    };
    let (n, k) = (a.n as u64, a.k as u64);
    let payload = json!({
        "n": a.n,
        "k": a.k,
        "reports": value(&reports)?,
        "t3_sum": {
            "exact_sum": steinchen::t3_sum_bound(n, k, T3Form::ExactSum),
            "chu_vandermonde": steinchen::t3_sum_bound(n, k, T3Form::ChuVandermonde),
            "stirling": steinchen::t3_sum_bound(n, k, T3Form::Stirling),
        },
    });
    done(payload, Some(tv_table(&reports)))
}

fn verify(a: &VerifyArgs) -> Result<CommandResult, Failure> {
    let limits = ConformanceLimits {
        max_m: a.max_m,
        max_n: a.n,
        max_coupling_k: a.k,
        ..ConformanceLimits::default()
    };
    let report = oracles::conformance(a.suite, limits)?;
    let mut table = Table::new(&["suite", "scenario", "expected", "got", "pass"]);
    for c in &report.cases {
        table.push([c.suite.to_string(), c.scenario.clone(), c.expected.clone(), c.got.clone(), c.pass.to_string()]);
    }
    Ok(CommandResult {
        pass: report.pass,
        payload: value(&report)?,
        table: Some(table),
    })
}

fn sweep(a: &SweepArgs, workers: usize) -> Result<CommandResult, Failure> {
    let table = match a.table {
        SweepTable::Ratio => {
            let ns: Vec<usize> = (1..=a.n as usize).collect();
            let template = SamplerConfig::new(1, a.samples, a.seed)
                .with_mode(a.mode)
                .with_convention(a.convention)
                .with_workers(workers);
            let report = montecarlo::ratio_report(&ns, &template, true)?;
            let mut t = Table::new(&["n", "source", "mean", "stderr", "ratio", "ratio_ci95_low", "ratio_ci95_high"]);
            for r in &report.rows {
                t.push([
                    r.n.to_string(),
                    r.source.to_string(),
                    r.mean.to_string(),
                    r.stderr.to_string(),
                    r.ratio.to_string(),
                    r.ratio_ci95_low.to_string(),
                    r.ratio_ci95_high.to_string(),
                ]);
            }
            t
        }
        SweepTable::Exact => {
            let mut t = Table::new(&["n", "k", "expectation", "expectation_f64"]);
            for n in 1..=a.n.min(enumerate::EXACT_SWEEP_CAP as u64) as usize {
                let e = exact_expected(n)?;
                for (k, q) in e.per_k_expectation.iter().enumerate() {
                    t.push([n.to_string(), k.to_string(), q.to_string(), rational_to_f64(q).to_string()]);
                }
            }
            t
        }
        SweepTable::Bounds => {
            let mut t = Table::new(&["n", "k0", "epsilon", "delta", "tail_fraction", "theorem31_ratio", "theorem11"]);
            for n in 1..=a.n {
                let ed = bounds::epsilon_delta(n, n / 2);
                t.push([
                    n.to_string(),
                    (n / 2).to_string(),
                    ed.epsilon.to_string(),
                    ed.delta.to_string(),
                    ed.tail_fraction.to_string(),
                    bounds::theorem31_ratio(n).to_string(),
                    bounds::theorem11(n).to_string(),
                ]);
            }
            t
        }
        SweepTable::Eta => {
            let mut t = Table::new(&["k", "r", "eta", "ln_eta", "is_argmax", "predicted_argmax"]);
            for k in 1..=a.k {
                let table = bounds::eta_table(k);
                for row in &table.rows {
                    t.push([
                        k.to_string(),
                        row.r.to_string(),
                        row.eta.to_string(),
                        bounds::ln_eta(k, row.r).to_string(),
                        table.maximizers.contains(&row.r).to_string(),
                        table.predicted_argmax.to_string(),
                    ]);
                }
            }
            t
        }
        SweepTable::Tv => {
            let mut reports = Vec::new();
            for n in 1..=a.n.min(steinchen::LAW_CAP as u64) as usize {
                for k in 1..=(a.k as usize).min(n) {
                    reports.extend(steinchen::tv_sweep(n, k, workers)?);
                }
            }
            tv_table(&reports)
        }
        SweepTable::Cases => {
            let mut t = Table::new(&["n", "case", "k0", "tail_fraction", "epsilon", "delta", "verdict"]);
            let mut n = 8u64;
            while n <= a.n.max(8) {
                for c in bounds::case_table(n)? {
                    t.push([
                        n.to_string(),
                        c.case.to_string(),
                        c.k0.to_string(),
                        c.tail_fraction.to_string(),
                        c.epsilon.to_string(),
                        c.delta.to_string(),
                        value(&c.verdict)?.as_str().unwrap_or("").to_string(),
                    ]);
                }
                n *= 2;
            }
            t
        }
    };
    let name = value(&format!("{:?}", a.table).to_lowercase())?;
    let mut payload = table.to_json();
    payload["table"] = name;
    done(payload, Some(table))
}
