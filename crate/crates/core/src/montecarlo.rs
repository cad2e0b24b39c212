//! Seeded Monte Carlo estimation of the expected number of distinct patterns.
//!
//! Sample `i` draws its permutation from a generator seeded with
//! `seed ^ i` (expanded through SplitMix64), so an estimate depends only on
//! `(seed, n, samples)` and never on how samples are spread over workers.
//! Workers accumulate exact integer moments, which merge associatively.

use std::time::Instant;

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::constants::{CI95_Z, LOWER_REFERENCE, UPPER_REFERENCE};
use crate::enumerate::{
    distinct_consecutive, exact_expected, Convention, SubsetPatternCounter, EXACT_SWEEP_CAP,
    NONCONSECUTIVE_CAP,
};
use crate::error::{Error, Result};
use crate::numeric::rational_to_f64;
use crate::pattern::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Consecutive,
    #[default]
    Nonconsecutive,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consecutive" => Ok(Mode::Consecutive),
            "nonconsecutive" | "classical" => Ok(Mode::Nonconsecutive),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub mode: Mode,
    pub convention: Convention,
}

impl SamplerConfig {
    pub fn new(n: usize, samples: u64, seed: u64) -> Self {
        Self {
            n,
            samples,
            seed,
            workers: 1,
            mode: Mode::Nonconsecutive,
            convention: Convention::WithoutEmpty,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if self.mode == Mode::Nonconsecutive && self.n > NONCONSECUTIVE_CAP {
            return Err(Error::cap("n for classical pattern counting", NONCONSECUTIVE_CAP, self.n));
        }
        Ok(())
    }
}

/// Generator for sample `index` of a run seeded with `seed`.
pub fn sample_stream(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ index)
}

/// Uniform permutation of `1..=n` by a Fisher-Yates shuffle of the identity.
pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut v: Vec<u32> = (1..=n as u32).collect();
    v.shuffle(rng);
    Permutation::from_vec_unchecked(v)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    count: u64,
    sum: u128,
    sum_sq: u128,
}

impl Moments {
    fn push(&mut self, x: u64) {
        self.count += 1;
        self.sum += u128::from(x);
        self.sum_sq += u128::from(x) * u128::from(x);
    }

    fn merge(&mut self, o: Moments) {
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    /// Mean and unbiased sample variance, evaluated from exact integer sums.
    fn mean_variance(&self) -> (f64, f64) {
        let n = u128::from(self.count);
        let mean = self.sum as f64 / self.count as f64;
        if self.count < 2 {
            return (mean, 0.0);
        }
        // n * sum_sq - sum^2 >= 0 by Cauchy-Schwarz.
        let num = n * self.sum_sq - self.sum * self.sum;
        let var = num as f64 / (n * (n - 1)) as f64;
        (mean, var)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub config: SamplerConfig,
    pub mean: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub sample_variance: f64,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub elapsed: f64,
}

impl EstimateResult {
    /// Equality of everything except `elapsed`, compared bitwise.
    pub fn same_estimate(&self, other: &EstimateResult) -> bool {
        self.config == other.config
            && self.mean.to_bits() == other.mean.to_bits()
            && self.stderr.to_bits() == other.stderr.to_bits()
            && self.ci95_low.to_bits() == other.ci95_low.to_bits()
            && self.ci95_high.to_bits() == other.ci95_high.to_bits()
            && self.sample_variance.to_bits() == other.sample_variance.to_bits()
    }
}

/// Mean distinct-pattern total over `config.samples` uniform permutations.
pub fn estimate(config: &SamplerConfig) -> Result<EstimateResult> {
    config.validate()?;
    let started = Instant::now();
    let workers = (config.workers as u64).min(config.samples);
    let chunk = config.samples.div_ceil(workers);
    let run = |range: std::ops::Range<u64>| -> Moments {
        let mut m = Moments::default();
        let mut counter = match config.mode {
            Mode::Nonconsecutive => Some(SubsetPatternCounter::new(config.n).expect("validated")),
            Mode::Consecutive => None,
        };
        for i in range {
            let pi = sample_permutation(config.n, &mut sample_stream(config.seed, i));
            let tally = match counter.as_mut() {
                Some(c) => c.count(&pi),
                None => distinct_consecutive(&pi),
            };
            m.push(tally.total(config.convention));
        }
        m
    };
    let moments = if workers == 1 {
        run(0..config.samples)
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(config.samples);
                    let run = &run;
                    s.spawn(move || run(lo..hi))
                })
                .collect();
            handles.into_iter().fold(Moments::default(), |mut acc, h| {
                acc.merge(h.join().expect("worker panicked"));
                acc
            })
        })
    };
    let (mean, var) = moments.mean_variance();
    let stderr = (var / moments.count as f64).sqrt();
    Ok(EstimateResult {
        config: config.clone(),
        mean,
        stderr,
        ci95_low: mean - CI95_Z * stderr,
        ci95_high: mean + CI95_Z * stderr,
        sample_variance: var,
        elapsed: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub n: usize,
    /// `"exact"` for a full `S_n` sweep, `"sampled"` otherwise.
    pub source: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub ratio: f64,
    pub ratio_ci95_low: f64,
    pub ratio_ci95_high: f64,
}

/// `E(X_n) / 2^n` per `n`, printed next to the reference lines.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub lower_reference: f64,
    pub upper_reference: f64,
}

/// Ratio of the mean to `2^n` for each `n`. When `exact` is set, sizes up to
/// the exact-sweep cap use the exact expectation instead of sampling.
pub fn ratio_report(ns: &[usize], template: &SamplerConfig, exact: bool) -> Result<RatioReport> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let scale = 2f64.powi(n as i32);
        let row = if exact && n <= EXACT_SWEEP_CAP && template.mode == Mode::Nonconsecutive {
            let e = exact_expected(n)?;
            let mean = rational_to_f64(e.total(template.convention));
            RatioRow {
                n,
                source: "exact",
                mean,
                stderr: 0.0,
                ratio: mean / scale,
                ratio_ci95_low: mean / scale,
                ratio_ci95_high: mean / scale,
            }
        } else {
            let cfg = SamplerConfig { n, ..template.clone() };
            let est = estimate(&cfg)?;
            RatioRow {
                n,
                source: "sampled",
                mean: est.mean,
                stderr: est.stderr,
                ratio: est.mean / scale,
                ratio_ci95_low: est.ci95_low / scale,
                ratio_ci95_high: est.ci95_high / scale,
            }
        };
        rows.push(row);
    }
    Ok(RatioReport {
        rows,
        lower_reference: LOWER_REFERENCE,
        upper_reference: UPPER_REFERENCE,
    })
}

/// Mean as an exact fraction of `2^n` for tests on small `n`.
pub fn exact_ratio(n: usize, convention: Convention) -> Result<f64> {
    let e = exact_expected(n)?;
    let q = e.total(convention) / num_rational::BigRational::from_integer(num_bigint::BigInt::from(1u64 << n));
    Ok(q.to_f64().unwrap_or(f64::NAN))
}
