//! Fixed-size subset enumeration over bitmasks.

/// Iterates all `k`-subsets of `{0, .., n-1}` as bitmasks in increasing
/// numeric order (Gosper's hack). Requires `n <= 63`.
#[derive(Debug, Clone)]
pub struct Gosper {
    next: Option<u64>,
    limit: u64,
}

impl Gosper {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= 63, "Gosper enumeration supports n <= 63");
        let next = if k > n {
            None
        } else if k == 0 {
            Some(0)
        } else {
            Some((1u64 << k) - 1)
        };
        Self {
            next,
            limit: 1u64 << n,
        }
    }
}

impl Iterator for Gosper {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < self.limit).then_some(nxt)
        };
        Some(cur)
    }
}

/// Zero-based positions of the set bits, ascending.
pub fn mask_positions(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        for n in 0..=12usize {
            for k in 0..=n + 1 {
                let got = Gosper::new(n, k).count() as u64;
                let want = crate::numeric::binomial(n as u64, k as u64);
                assert_eq!(num_bigint::BigUint::from(got), want, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn masks_have_popcount_k_and_increase() {
        let masks: Vec<u64> = Gosper::new(6, 3).collect();
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
        assert!(masks.iter().all(|m| m.count_ones() == 3 && *m < 64));
        assert_eq!(masks[0], 0b111);
        assert_eq!(*masks.last().unwrap(), 0b111000);
    }

    #[test]
    fn positions_of_mask() {
        assert_eq!(mask_positions(0b101001), vec![0, 3, 5]);
        assert!(mask_positions(0).is_empty());
    }
}
