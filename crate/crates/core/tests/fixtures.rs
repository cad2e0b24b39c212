//! Golden values, computed once and frozen.

use num_bigint::BigUint;
use patcount::bounds;
use patcount::enumerate::pigeonhole_max;
use patcount::montecarlo::{estimate, ratio_report};
use patcount::numeric::rational_from;
use patcount::steinchen::t1;
use patcount::SamplerConfig;

#[test]
fn pigeonhole_ceiling_at_20() {
    assert_eq!(pigeonhole_max(20), BigUint::from(830_859u32));
    assert_eq!(pigeonhole_max(1), BigUint::from(1u32));
}

#[test]
fn t1_at_20_10() {
    assert_eq!(t1(20, 10), rational_from(46_189, 3_292_047_360_000));
}

#[test]
fn positivity_threshold_is_155() {
    assert_eq!(bounds::positivity_threshold(), Some(155));
}

#[test]
fn ratio_at_20_regression() {
    let cfg = SamplerConfig::new(20, 500, 20);
    let r = estimate(&cfg).unwrap();
    assert_eq!(r.mean.to_bits(), 0x4107_96a4_1062_4dd3, "mean {}", r.mean);
    assert_eq!(r.mean, 193_236.508);
    let report = ratio_report(&[20], &cfg, false).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.ratio, r.mean / 1_048_576.0);
    assert!(row.ratio_ci95_low < row.ratio && row.ratio < row.ratio_ci95_high);
}

#[test]
fn case_table_at_1000() {
    let rows = bounds::case_table(1000).unwrap();
    let k0: Vec<u64> = rows.iter().map(|r| r.k0).collect();
    assert_eq!(k0, vec![1, 103, 400, 400, 500, 600]);
    assert!(rows.iter().all(|r| r.check.as_ref().is_none_or(|c| c.holds)));
}
