//! Distinct patterns in permutations.
//!
//! The crate counts the distinct consecutive and classical (not necessarily
//! consecutive) patterns of a permutation, estimates their expectation under
//! the uniform distribution on `S_n`, and evaluates the Stein-Chen Poisson
//! approximation bounds that drive the lower bound `E(X_n) >= 2^(n-1)(1 - o(1))`.
//!
//! Module map:
//!
//! - [`pattern`]: permutations, canonical pattern codes, containment.
//! - [`enumerate`]: exact per-length profiles and exact expectations for small `n`.
//! - [`montecarlo`]: seeded, worker-count independent estimators.
//! - [`steinchen`]: exact occurrence laws, total variation, the `T1/T2/T3` error terms.
//! - [`bounds`]: the asymptotic analytics (`eta`, `phi`, epsilon/delta, case analysis).
//! - [`oracles`]: brute-force checks of the overlap, coupling and sub-pattern lemmas.

pub mod bounds;
pub mod constants;
pub mod enumerate;
mod error;
pub mod montecarlo;
pub mod numeric;
pub mod oracles;
pub mod pattern;
mod perms;
pub mod steinchen;
pub mod subsets;

pub use enumerate::{Convention, ExactExpectation, PatternTally};
pub use error::{Error, Result};
pub use montecarlo::{EstimateResult, Mode, SamplerConfig};
pub use numeric::SignedLog;
pub use pattern::{contains, count_occurrences, occurs_at, reduce, IndexSet, PatternCode, Permutation};
