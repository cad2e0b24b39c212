//! Lexicographic permutation sweeps, optionally split over worker threads.

/// Advance `v` to its lexicographic successor; false when `v` was the last one.
pub(crate) fn next_permutation(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub(crate) fn factorial_u64(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// The permutation of `1..=n` with lexicographic index `idx` (Lehmer decode).
pub(crate) fn unrank(n: usize, mut idx: u64) -> Vec<u32> {
    let mut pool: Vec<u32> = (1..=n as u32).collect();
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial_u64(i);
        let d = (idx / f) as usize;
        idx %= f;
        out.push(pool.remove(d));
    }
    out
}

/// Lexicographic index of a permutation of `1..=n` (Lehmer encode). `n <= 20`.
pub(crate) fn rank(values: &[u32]) -> u64 {
    let n = values.len();
    let mut idx = 0u64;
    for i in 0..n {
        let smaller_after = values[i + 1..].iter().filter(|&&v| v < values[i]).count() as u64;
        idx += smaller_after * factorial_u64(n - 1 - i);
    }
    idx
}

/// Fold over every permutation of `1..=n` in lexicographic order.
///
/// The sweep is cut into `workers` contiguous blocks; partial results are
/// merged in block order, so an associative `merge` gives output independent
/// of the worker count.
pub(crate) fn fold_permutations<A, I, F, M>(n: usize, workers: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[u32]) + Sync,
    M: Fn(&mut A, A),
{
    let total = factorial_u64(n);
    let workers = workers.max(1).min(total as usize);
    let chunk = total.div_ceil(workers as u64);
    let run_block = |start: u64, len: u64| {
        let mut acc = init();
        let mut perm = unrank(n, start);
        for step in 0..len {
            fold(&mut acc, &perm);
            if step + 1 < len {
                next_permutation(&mut perm);
            }
        }
        acc
    };
    if workers == 1 {
        return run_block(0, total);
    }
    let parts: Vec<A> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let start = w * chunk;
                let len = chunk.min(total.saturating_sub(start));
                let run_block = &run_block;
                s.spawn(move || run_block(start, len))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut parts = parts.into_iter();
    let mut acc = parts.next().expect("at least one block");
    for p in parts {
        merge(&mut acc, p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successor_walk_visits_all_in_order() {
        let mut v = vec![1, 2, 3, 4];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 24);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
        for (i, p) in seen.iter().enumerate() {
            assert_eq!(rank(p), i as u64);
            assert_eq!(&unrank(4, i as u64), p);
        }
    }

    #[test]
    fn fold_is_worker_independent() {
        let count = |w| fold_permutations(6, w, || (0u64, 0u64), |a, p| {
            a.0 += 1;
            a.1 += p[0] as u64 * p[5] as u64;
        }, |a, b| {
            a.0 += b.0;
            a.1 += b.1;
        });
        assert_eq!(count(1), count(5));
        assert_eq!(count(1).0, 720);
    }

    #[test]
    fn empty_and_singleton_sweeps() {
        let c = fold_permutations(0, 3, || 0u32, |a, p| { assert!(p.is_empty()); *a += 1 }, |a, b| *a += b);
        assert_eq!(c, 1);
        let c = fold_permutations(1, 3, || 0u32, |a, _| *a += 1, |a, b| *a += b);
        assert_eq!(c, 1);
    }
}
