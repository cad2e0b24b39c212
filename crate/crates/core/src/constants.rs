//! Numeric constants used by the bounds, taken as fixed inputs.

use serde::Serialize;

/// Base of the geometric factor in the per-length lower bound, `(1.57)^k`.
pub const GROWTH_BASE: f64 = 1.57;

/// Leading coefficient `7/2` of the subtracted term in the per-length bound.
pub const TAU_COEFF: f64 = 3.5;

/// Exponent constant `D` in `2^(D n^(2/3))`.
pub const EXPONENT_D: f64 = 5.02;

/// Coefficient of `ln n / n` in the consecutive-pattern lower bound.
pub const CONSECUTIVE_LOG_COEFF: f64 = 17.0;

/// Known upper bound on `E(X_n) / 2^n`, used as a reference line only.
pub const UPPER_REFERENCE: f64 = 0.608;

/// The proven asymptotic lower ratio `E(X_n) / 2^n >= 1/2`.
pub const LOWER_REFERENCE: f64 = 0.5;

/// Normal quantile for the two-sided 95% interval.
pub const CI95_Z: f64 = 1.96;

/// Snapshot of every constant, embedded in machine-readable reports.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConstantsBlock {
    pub growth_base: f64,
    pub tau_coeff: f64,
    pub exponent_d: f64,
    pub consecutive_log_coeff: f64,
    pub upper_reference: f64,
    pub lower_reference: f64,
    pub ci95_z: f64,
    pub conventions: Conventions,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Conventions {
    pub pattern_order: &'static str,
    pub empty_pattern: &'static str,
    pub k0: &'static str,
    pub t3_per_pattern: &'static str,
}

impl Default for ConstantsBlock {
    fn default() -> Self {
        Self {
            growth_base: GROWTH_BASE,
            tau_coeff: TAU_COEFF,
            exponent_d: EXPONENT_D,
            consecutive_log_coeff: CONSECUTIVE_LOG_COEFF,
            upper_reference: UPPER_REFERENCE,
            lower_reference: LOWER_REFERENCE,
            ci95_z: CI95_Z,
            conventions: Conventions {
                pattern_order: "lexicographic on rank sequences",
                empty_pattern: "tallies report totals with and without the empty pattern",
                k0: "floor(n/2)",
                t3_per_pattern: "proxy: pattern-summed T3 bound divided by k!",
            },
        }
    }
}
