//! Criterion benches for `patcount`. See `benches/`.

use patcount::Permutation;

/// Fixed pseudo-random permutation of length `n` for benches.
pub fn fixture(n: usize, seed: u64) -> Permutation {
    use patcount::montecarlo::sample_permutation;
    let mut rng = <rand_xoshiro::Xoshiro256PlusPlus as rand::SeedableRng>::seed_from_u64(seed);
    sample_permutation(n, &mut rng)
}
