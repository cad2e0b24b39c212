//! Big-integer, rational and log-space helpers shared by the analytic modules.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use statrs::function::{factorial as sf, gamma};

use crate::error::{Error, Result};

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    num_integer::binomial(BigUint::from(n), BigUint::from(k.min(n - k)))
}

pub fn pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

pub fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_int(num: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(num))
}

/// Nearest `f64`; saturates to infinity when the value exceeds the `f64` range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    match q.to_f64() {
        Some(v) => v,
        None => {
            // Ratio::to_f64 gives up only on overflow.
            if q.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Natural log of a positive big integer, valid far beyond the `f64` range.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let head = (x >> shift).to_f64().expect("64-bit head");
    head.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Signed log of a rational: `(sign, ln |q|)`.
pub fn signed_log_of(q: &BigRational) -> SignedLog {
    if q.is_zero() {
        return SignedLog::ZERO;
    }
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    let ln_abs = ln_biguint(num) - ln_biguint(den);
    SignedLog::new(if q.is_negative() { -1 } else { 1 }, ln_abs)
}

/// `ln(n!)`; tabulated (exact to the last ulp) for `n <= 170`.
pub fn ln_factorial(n: u64) -> f64 {
    sf::ln_factorial(n)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    sf::ln_binomial(n, k)
}

/// `ln C(n, k)` for real arguments through the log-gamma function.
pub fn ln_binomial_real(n: f64, k: f64) -> f64 {
    gamma::ln_gamma(n + 1.0) - gamma::ln_gamma(k + 1.0) - gamma::ln_gamma(n - k + 1.0)
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// A real number stored as sign and natural log of its magnitude.
///
/// Used wherever a bound can leave the `f64` range (binomials at `n = 10^6`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// -1, 0 or 1.
    pub sign: i8,
    /// `ln |x|`, `-inf` for zero.
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    pub fn from_ln(ln_abs: f64) -> Self {
        Self::new(1, ln_abs)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x < 0.0 { -1 } else { 1 }, x.abs().ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.ln_abs.exp(),
        }
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn neg(self) -> Self {
        Self::new(-self.sign, self.ln_abs)
    }

    pub fn add(self, other: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let d = (small.ln_abs - big.ln_abs).exp();
        if big.sign == small.sign {
            SignedLog::new(big.sign, big.ln_abs + d.ln_1p())
        } else if d == 1.0 {
            SignedLog::ZERO
        } else {
            SignedLog::new(big.sign, big.ln_abs + (-d).ln_1p())
        }
    }

    pub fn sub(self, other: SignedLog) -> SignedLog {
        self.add(other.neg())
    }

    /// Multiply by a positive factor given as its log.
    pub fn scale_ln(self, ln_factor: f64) -> SignedLog {
        SignedLog::new(self.sign, self.ln_abs + ln_factor)
    }
}

impl Serialize for SignedLog {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SignedLog", 3)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("ln_abs", &finite_or_none(self.ln_abs))?;
        st.serialize_field("value", &finite_or_none(self.to_f64()))?;
        st.end()
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops once the bracket is within `rel_tol` of the midpoint, or when it can
/// no longer be split in `f64` (pass `rel_tol = 0.0` for full precision).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Domain(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }
    for _ in 0..4096 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi || (hi - lo) <= rel_tol * mid.abs() {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Serde adapters for exact rationals, written as `"p/q"` strings.
pub mod serde_rational {
    use num_rational::BigRational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn serialize_vec<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|q| q.to_string()))
    }
}

pub fn rational_from(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_binomials_and_factorials() {
        assert_eq!(factorial(0), BigUint::one());
        assert_eq!(factorial(10), BigUint::from(3_628_800u32));
        assert_eq!(binomial(10, 5), BigUint::from(252u32));
        assert_eq!(binomial(5, 7), BigUint::zero());
        assert_eq!(binomial(64, 32), BigUint::from(1_832_624_140_942_590_534u64));
    }

    #[test]
    fn ln_biguint_matches_f64_and_huge_values() {
        assert_relative_eq!(ln_biguint(&factorial(20)), (2_432_902_008_176_640_000f64).ln(), max_relative = 1e-15);
        // 2^5000 is outside f64.
        let big = pow2(5000);
        assert_relative_eq!(ln_biguint(&big), 5000.0 * std::f64::consts::LN_2, max_relative = 1e-15);
        assert_relative_eq!(ln_biguint(&factorial(500)), ln_factorial(500), max_relative = 1e-13);
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLog::from_f64(5.0);
        let b = SignedLog::from_f64(3.0);
        assert_relative_eq!(a.sub(b).to_f64(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.sub(a).to_f64(), -2.0, max_relative = 1e-14);
        assert_eq!(a.sub(a), SignedLog::ZERO);
        assert_relative_eq!(a.add(b).to_f64(), 8.0, max_relative = 1e-14);
        assert_relative_eq!(a.neg().add(b).to_f64(), -2.0, max_relative = 1e-14);
        assert_eq!(SignedLog::ZERO.add(b), b);
    }

    #[test]
    fn bisection_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, max_relative = 1e-15);
        assert!(matches!(bisect(|x| x * x + 1.0, 0.0, 2.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn log_sum_exp_handles_empty_and_large() {
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp([1000.0, 1000.0]), 1000.0 + 2f64.ln(), max_relative = 1e-15);
    }
}
