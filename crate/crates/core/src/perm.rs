//! Permutations of message labels with a reproducible Lehmer-code ranking.
//!
//! Rank `r` of a permutation of `{0..n-1}` is its position in lexicographic
//! order, computed through the factorial number system: writing
//! `r = sum_i d_i * (n-1-i)!` with `0 <= d_i <= n-1-i`, the i-th image is the
//! `d_i`-th smallest label not yet used. Rank 0 is the identity and rank
//! `n!-1` is the full reversal. The same ranking is used for shared-key
//! indices everywhere, so key index `xi` means the same permutation in every
//! module and in any reimplementation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n!` as `u128`, or `None` when it overflows (first at n = 35).
pub fn factorial_u128(n: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 2..=n as u128 {
        acc = acc.checked_mul(i)?;
    }
    Some(acc)
}

/// `n!` as `u64`, or `None` when it overflows (first at n = 21).
pub fn factorial_u64(n: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for i in 2..=n as u64 {
        acc = acc.checked_mul(i)?;
    }
    Some(acc)
}

/// A shared-key permutation of the message labels `{0..n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationKey {
    perm: Vec<usize>,
}

impl PermutationKey {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    /// Wrap an explicit permutation, validating bijectivity.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &v in &perm {
            if v >= n || seen[v] {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation of 0..{n}: {perm:?}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { perm })
    }

    /// Permutation at Lehmer rank `rank` (0-based, lexicographic order).
    pub fn from_rank(n: usize, rank: u128) -> Result<Self> {
        let total = factorial_u128(n).ok_or_else(|| {
            Error::InvalidArgument(format!("{n}! overflows the rank type"))
        })?;
        if rank >= total {
            return Err(Error::IndexOutOfRange(format!(
                "rank {rank} out of range for {n}! = {total} permutations"
            )));
        }
        let mut available: Vec<usize> = (0..n).collect();
        let mut perm = Vec::with_capacity(n);
        let mut r = rank;
        for i in 0..n {
            let f = factorial_u128(n - 1 - i).expect("smaller factorial fits");
            let d = (r / f) as usize;
            r %= f;
            perm.push(available.remove(d));
        }
        Ok(Self { perm })
    }

    /// Lehmer rank of this permutation; `None` if `n!` overflows `u128`.
    pub fn rank(&self) -> Option<u128> {
        let n = self.perm.len();
        factorial_u128(n)?;
        let mut rank: u128 = 0;
        for i in 0..n {
            let smaller = self.perm[i + 1..]
                .iter()
                .filter(|&&v| v < self.perm[i])
                .count() as u128;
            rank += smaller * factorial_u128(n - 1 - i).expect("fits");
        }
        Some(rank)
    }

    /// Uniformly random permutation by Fisher-Yates, swapping index i with a
    /// uniform j in 0..=i for i = n-1 down to 1. The draw order is part of
    /// the reproducibility contract.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Image of message label `x`.
    pub fn apply(&self, x: usize) -> usize {
        self.perm[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial_u64(0), Some(1));
        assert_eq!(factorial_u64(5), Some(120));
        assert_eq!(factorial_u64(20), Some(2_432_902_008_176_640_000));
        assert_eq!(factorial_u64(21), None);
        assert_eq!(factorial_u128(34).is_some(), true);
        assert_eq!(factorial_u128(35), None);
    }

    #[test]
    fn rank_zero_is_identity() {
        let p = PermutationKey::from_rank(5, 0).unwrap();
        assert_eq!(p.as_slice(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn last_rank_is_reversal() {
        let p = PermutationKey::from_rank(4, 23).unwrap();
        assert_eq!(p.as_slice(), &[3, 2, 1, 0]);
    }

    #[test]
    fn rank_round_trip_exhaustive_small() {
        for n in 1..=6 {
            let total = factorial_u128(n).unwrap();
            for r in 0..total {
                let p = PermutationKey::from_rank(n, r).unwrap();
                assert_eq!(p.rank(), Some(r));
            }
        }
    }

    #[test]
    fn ranks_enumerate_distinct_permutations() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..24 {
            let p = PermutationKey::from_rank(4, r).unwrap();
            assert!(seen.insert(p.as_slice().to_vec()));
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PermutationKey::new(vec![0, 0, 1]).is_err());
        assert!(PermutationKey::new(vec![0, 3]).is_err());
        assert!(PermutationKey::from_rank(3, 6).is_err());
    }
}
