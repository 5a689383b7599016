//! Independent brute-force verification of the optimality claims.
//!
//! The scan enumerates every pair of deterministic fingerprinting functions,
//! applies the induced optimal referee `r(a, b) = sgn(s_ab)`, and minimizes
//! the error mass `N_e = F(s) - n` exactly. It either runs to completion or
//! refuses; it never truncates, because a partial scan is not an oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocols::{min_ne_bound, GroupAssignment};

/// Default budget on pair evaluations for [`exhaustive_min_ne`].
pub const DEFAULT_SCAN_BUDGET: u128 = 1_000_000_000;

const WITNESS_CAP: usize = 8;

// ---------------------------------------------------------------------------
// Overlap matrices and the F functional
// ---------------------------------------------------------------------------

/// `s[a][b]` counts the messages that Alice maps to fingerprint `a` and Bob
/// maps to fingerprint `b`; entries sum to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapMatrix {
    s: Vec<Vec<u64>>,
}

impl OverlapMatrix {
    pub fn new(s: Vec<Vec<u64>>) -> Result<Self> {
        let cols = s.first().map_or(0, Vec::len);
        if s.is_empty() || cols == 0 {
            return Err(Error::InvalidArgument("empty overlap matrix".into()));
        }
        if s.iter().any(|row| row.len() != cols) {
            return Err(Error::DimensionMismatch("ragged overlap matrix".into()));
        }
        Ok(Self { s })
    }

    pub fn from_assignments(fp: &GroupAssignment, fq: &GroupAssignment) -> Result<Self> {
        if fp.n() != fq.n() {
            return Err(Error::DimensionMismatch(format!(
                "assignments over different message counts: {} vs {}",
                fp.n(),
                fq.n()
            )));
        }
        let mut s = vec![vec![0u64; fq.m()]; fp.m()];
        for x in 0..fp.n() {
            s[fp.group(x)][fq.group(x)] += 1;
        }
        Ok(Self { s })
    }

    pub fn n(&self) -> u64 {
        self.s.iter().flatten().sum()
    }

    pub fn rows(&self) -> usize {
        self.s.len()
    }

    pub fn cols(&self) -> usize {
        self.s[0].len()
    }

    pub fn entry(&self, a: usize, b: usize) -> u64 {
        self.s[a][b]
    }

    /// Row sums: Alice's group sizes `|M_a|`.
    pub fn row_sums(&self) -> Vec<u64> {
        self.s.iter().map(|row| row.iter().sum()).collect()
    }

    /// Column sums: Bob's group sizes `|M_b|`.
    pub fn col_sums(&self) -> Vec<u64> {
        let mut cols = vec![0u64; self.cols()];
        for row in &self.s {
            for (b, v) in row.iter().enumerate() {
                cols[b] += v;
            }
        }
        cols
    }
}

/// The literal quadruple sum `F(s) = sum_{a,b,i,j} s_ai s_jb sgn(s_ab)`,
/// with `sgn(0) = 0`. Slow; kept as the trustworthy reference for property
/// tests.
pub fn f_quadruple(s: &OverlapMatrix) -> u64 {
    let (rows, cols) = (s.rows(), s.cols());
    let mut total = 0u64;
    for a in 0..rows {
        for b in 0..cols {
            if s.entry(a, b) == 0 {
                continue;
            }
            for i in 0..cols {
                for j in 0..rows {
                    total += s.entry(a, i) * s.entry(j, b);
                }
            }
        }
    }
    total
}

/// `F(s)` through the factored form `sum_{a,b: s_ab > 0} row_a * col_b`;
/// cross-checked against [`f_quadruple`] by the test suite.
pub fn f_fast(s: &OverlapMatrix) -> u64 {
    let rows = s.row_sums();
    let cols = s.col_sums();
    let mut total = 0u64;
    for a in 0..s.rows() {
        for b in 0..s.cols() {
            if s.entry(a, b) > 0 {
                total += rows[a] * cols[b];
            }
        }
    }
    total
}

/// Error mass of the deterministic strategy pair `(fp, fq)` under the induced
/// optimal referee: `N_e = F(s) - n`.
pub fn ne_of_deterministic(fp: &GroupAssignment, fq: &GroupAssignment) -> Result<u64> {
    let s = OverlapMatrix::from_assignments(fp, fq)?;
    Ok(f_fast(&s) - s.n())
}

/// Collapse `s` onto its diagonal (`s'_aa = sum_j s_aj`) and check
/// `F(s') <= F(s)`, the diagonal-reduction step of the error-mass lower
/// bound. Always true; returned rather than asserted so it can serve as a
/// property-test target.
pub fn verify_diagonal_dominance(s: &OverlapMatrix) -> bool {
    let rows = s.row_sums();
    let dim = rows.len();
    let mut diag = vec![vec![0u64; dim]; dim];
    for (a, &r) in rows.iter().enumerate() {
        diag[a][a] = r;
    }
    let collapsed = OverlapMatrix::new(diag).expect("square diagonal");
    f_quadruple(&collapsed) <= f_quadruple(s)
}

/// Minimum of `sum_a s_aa^2` over nonnegative integer diagonals summing to
/// `n`: the balanced split `k*ceil(n/m)^2 + (m-k)*floor(n/m)^2`.
pub fn min_f_over_diagonal(n: usize, m: usize) -> u64 {
    min_ne_bound(n, m) + n as u64
}

// ---------------------------------------------------------------------------
// Exhaustive scan
// ---------------------------------------------------------------------------

/// Scan controls. `budget` counts pair evaluations; `prune_alice_symmetry`
/// restricts Alice to canonically-relabeled assignments (an `m_alice!`-fold
/// cut that cannot change the minimum), off by default so the unpruned scan
/// stays the trustworthy baseline.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub budget: u128,
    pub prune_alice_symmetry: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_SCAN_BUDGET,
            prune_alice_symmetry: false,
        }
    }
}

/// Result of an exhaustive deterministic-strategy scan.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub m_alice: usize,
    pub m_bob: usize,
    /// Exact minimum error mass over all scanned strategy pairs.
    pub min_ne: u64,
    /// The closed-form floor `k*ceil(n/m)^2 + (m-k)*floor(n/m)^2 - n`
    /// evaluated at `m = min(m_alice, m_bob)`.
    pub bound_value: u64,
    pub matches_bound: bool,
    /// Strategy pairs attaining `min_ne`, capped at a few exemplars.
    pub witnesses: Vec<(GroupAssignment, GroupAssignment)>,
    /// Total number of minimizing pairs seen.
    pub minimizer_count: u64,
    pub strategies_scanned: u64,
    pub symmetry_pruned: bool,
}

/// Exhaustively minimize `N_e` over all `m_alice^n * m_bob^n` deterministic
/// strategy pairs with default options.
pub fn exhaustive_min_ne(n: usize, m_alice: usize, m_bob: usize) -> Result<OracleReport> {
    exhaustive_min_ne_with(n, m_alice, m_bob, &ScanOptions::default())
}

pub fn exhaustive_min_ne_with(
    n: usize,
    m_alice: usize,
    m_bob: usize,
    options: &ScanOptions,
) -> Result<OracleReport> {
    if n < 1 || m_alice < 1 || m_bob < 1 {
        return Err(Error::InvalidArgument(
            "n, m_alice, m_bob must be >= 1".into(),
        ));
    }
    let alice_total = checked_pow(m_alice as u128, n)
        .ok_or_else(|| Error::BudgetExceeded("alice strategy space overflows".into()))?;
    let bob_total = checked_pow(m_bob as u128, n)
        .ok_or_else(|| Error::BudgetExceeded("bob strategy space overflows".into()))?;
    let pairs = alice_total
        .checked_mul(bob_total)
        .ok_or_else(|| Error::BudgetExceeded("strategy pair space overflows".into()))?;
    if pairs > options.budget {
        return Err(Error::BudgetExceeded(format!(
            "scan needs {pairs} pair evaluations ({m_alice}^{n} x {m_bob}^{n}), budget is {}",
            options.budget
        )));
    }

    // Bob's side is enumerated once up front: assignments in odometer order
    // (message n-1 is the fastest digit) with their group sizes.
    let bob_count = bob_total as usize;
    let mut bob_assignments = vec![0u8; bob_count * n];
    let mut bob_sizes = vec![0u32; bob_count * m_bob];
    {
        let mut fb = vec![0u8; n];
        for idx in 0..bob_count {
            bob_assignments[idx * n..(idx + 1) * n].copy_from_slice(&fb);
            let sizes = &mut bob_sizes[idx * m_bob..(idx + 1) * m_bob];
            for &a in fb.iter() {
                sizes[a as usize] += 1;
            }
            increment_odometer(&mut fb, m_bob as u8);
        }
    }

    let mut min_ne = u64::MAX;
    let mut witnesses: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut minimizer_count = 0u64;
    let mut scanned = 0u64;

    let mut fa = vec![0u8; n];
    let mut sizes_a = vec![0u32; m_alice];
    // sgn(s) support tracking, reset between pairs by unwinding the touched
    // cells rather than clearing the whole buffer.
    let mut seen = vec![false; m_alice * m_bob];
    let mut touched: Vec<usize> = Vec::with_capacity(n);

    for _ in 0..alice_total {
        if !options.prune_alice_symmetry || is_canonical(&fa) {
            sizes_a.fill(0);
            for &a in fa.iter() {
                sizes_a[a as usize] += 1;
            }
            for idx in 0..bob_count {
                let fb = &bob_assignments[idx * n..(idx + 1) * n];
                let sb = &bob_sizes[idx * m_bob..(idx + 1) * m_bob];
                let mut d = 0u64;
                for x in 0..n {
                    let (a, b) = (fa[x] as usize, fb[x] as usize);
                    let cell = a * m_bob + b;
                    if !seen[cell] {
                        seen[cell] = true;
                        touched.push(cell);
                        d += u64::from(sizes_a[a]) * u64::from(sb[b]);
                    }
                }
                for &cell in &touched {
                    seen[cell] = false;
                }
                touched.clear();
                let ne = d - n as u64;
                scanned += 1;

                if ne < min_ne {
                    min_ne = ne;
                    minimizer_count = 1;
                    witnesses.clear();
                    witnesses.push(to_witness(&fa, fb));
                } else if ne == min_ne {
                    minimizer_count += 1;
                    if witnesses.len() < WITNESS_CAP {
                        witnesses.push(to_witness(&fa, fb));
                    }
                }
            }
        }
        increment_odometer(&mut fa, m_alice as u8);
    }

    let bound_value = min_ne_bound(n, m_alice.min(m_bob));
    let witnesses = witnesses
        .into_iter()
        .map(|(a, b)| {
            Ok((
                GroupAssignment::new(a, m_alice)?,
                GroupAssignment::new(b, m_bob)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        n,
        m_alice,
        m_bob,
        min_ne,
        bound_value,
        matches_bound: min_ne == bound_value,
        witnesses,
        minimizer_count,
        strategies_scanned: scanned,
        symmetry_pruned: options.prune_alice_symmetry,
    })
}

fn to_witness(fa: &[u8], fb: &[u8]) -> (Vec<usize>, Vec<usize>) {
    (
        fa.iter().map(|&v| v as usize).collect(),
        fb.iter().map(|&v| v as usize).collect(),
    )
}

fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn increment_odometer(digits: &mut [u8], base: u8) {
    for d in digits.iter_mut().rev() {
        if *d + 1 < base {
            *d += 1;
            return;
        }
        *d = 0;
    }
}

/// Canonical under fingerprint relabeling: labels first appear in increasing
/// order 0, 1, 2, ...
fn is_canonical(fa: &[u8]) -> bool {
    let mut next = 0u8;
    for &a in fa {
        if a > next {
            return false;
        }
        if a == next {
            next += 1;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn balanced(n: usize, m: usize) -> GroupAssignment {
        GroupAssignment::balanced(n, m).unwrap()
    }

    #[test]
    fn ne_examples() {
        // Balanced (4, 2) against itself: the Lemma-bound equality case.
        assert_eq!(ne_of_deterministic(&balanced(4, 2), &balanced(4, 2)).unwrap(), 4);
        // Injective assignments never err.
        assert_eq!(ne_of_deterministic(&balanced(5, 5), &balanced(5, 5)).unwrap(), 0);
        // Both constant: s = [[3, 0], [0, 0]], F = 9, N_e = 6 = all unequal
        // ordered pairs.
        let constant = GroupAssignment::new(vec![0, 0, 0], 2).unwrap();
        assert_eq!(ne_of_deterministic(&constant, &constant).unwrap(), 6);
    }

    #[test]
    fn ne_rejects_mismatched_n() {
        assert!(ne_of_deterministic(&balanced(4, 2), &balanced(5, 2)).is_err());
    }

    #[test]
    fn f_forms_agree_on_random_matrices() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let rows = rng.random_range(1..=4);
            let cols = rng.random_range(1..=4);
            let s = OverlapMatrix::new(
                (0..rows)
                    .map(|_| (0..cols).map(|_| rng.random_range(0..6)).collect())
                    .collect(),
            )
            .unwrap();
            assert_eq!(f_quadruple(&s), f_fast(&s));
        }
    }

    #[test]
    fn diagonal_dominance_examples() {
        // All-ones 2x2 (n = 4): F(s) = 16, F(diag(2, 2)) = 8.
        let s = OverlapMatrix::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(f_quadruple(&s), 16);
        assert!(verify_diagonal_dominance(&s));

        // Already diagonal: equality.
        let d = OverlapMatrix::new(vec![vec![3, 0], vec![0, 1]]).unwrap();
        assert_eq!(f_quadruple(&d), 10);
        assert!(verify_diagonal_dominance(&d));

        // Off-diagonal mass only.
        let s = OverlapMatrix::new(vec![vec![0, 3], vec![1, 0]]).unwrap();
        assert!(verify_diagonal_dominance(&s));
    }

    #[test]
    fn diagonal_dominance_random() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..2000 {
            let dim = rng.random_range(1..=4);
            let s = OverlapMatrix::new(
                (0..dim)
                    .map(|_| (0..dim).map(|_| rng.random_range(0..6)).collect())
                    .collect(),
            )
            .unwrap();
            if s.n() == 0 {
                continue;
            }
            assert!(verify_diagonal_dominance(&s), "violated for {s:?}");
        }
    }

    #[test]
    fn min_f_diagonal_values() {
        assert_eq!(min_f_over_diagonal(4, 2), 8);
        for n in 1..=10 {
            assert_eq!(min_f_over_diagonal(n, 1), (n * n) as u64);
        }
        assert_eq!(min_f_over_diagonal(7, 3), 17);
    }

    #[test]
    fn min_f_diagonal_matches_composition_scan() {
        // Exhaustive search over all nonnegative integer diagonals.
        fn scan(prefix_sum: usize, idx: usize, m: usize, n: usize, acc: u64, best: &mut u64) {
            if idx == m - 1 {
                let last = (n - prefix_sum) as u64;
                *best = (*best).min(acc + last * last);
                return;
            }
            for v in 0..=(n - prefix_sum) {
                scan(prefix_sum + v, idx + 1, m, n, acc + (v * v) as u64, best);
            }
        }
        for n in 1..=12 {
            for m in 1..=4 {
                let mut best = u64::MAX;
                scan(0, 0, m, n, 0, &mut best);
                assert_eq!(min_f_over_diagonal(n, m), best, "n={n}, m={m}");
            }
        }
    }

    /// Plain quadruple-loop scan, independent of the optimized oracle path.
    fn naive_min_ne(n: usize, m_a: usize, m_b: usize) -> u64 {
        let mut min_ne = u64::MAX;
        let a_total = (m_a as u64).pow(n as u32);
        let b_total = (m_b as u64).pow(n as u32);
        for ca in 0..a_total {
            let fa: Vec<usize> = (0..n)
                .map(|x| ((ca / (m_a as u64).pow(x as u32)) % m_a as u64) as usize)
                .collect();
            for cb in 0..b_total {
                let fb: Vec<usize> = (0..n)
                    .map(|x| ((cb / (m_b as u64).pow(x as u32)) % m_b as u64) as usize)
                    .collect();
                let fa = GroupAssignment::new(fa.clone(), m_a).unwrap();
                let fb = GroupAssignment::new(fb, m_b).unwrap();
                min_ne = min_ne.min(ne_of_deterministic(&fa, &fb).unwrap());
            }
        }
        min_ne
    }

    #[test]
    fn scan_matches_naive_small() {
        for (n, m_a, m_b) in [(3, 2, 2), (4, 2, 2), (3, 3, 3), (4, 2, 3), (4, 2, 4)] {
            let report = exhaustive_min_ne(n, m_a, m_b).unwrap();
            assert_eq!(report.min_ne, naive_min_ne(n, m_a, m_b), "({n},{m_a},{m_b})");
        }
    }

    #[test]
    fn scan_known_values() {
        let report = exhaustive_min_ne(4, 2, 2).unwrap();
        assert_eq!(report.min_ne, 4);
        assert!(report.matches_bound);

        let report = exhaustive_min_ne(3, 3, 3).unwrap();
        assert_eq!(report.min_ne, 0);
        assert!(report.matches_bound);

        // Asymmetric alphabets: the bound at m = min(2, 4) applies.
        let report = exhaustive_min_ne(4, 2, 4).unwrap();
        assert_eq!(report.min_ne, 4);
        assert_eq!(report.bound_value, min_ne_bound(4, 2));
        assert!(report.matches_bound);
    }

    #[test]
    fn witnesses_reproduce_min() {
        let report = exhaustive_min_ne(5, 2, 2).unwrap();
        assert_eq!(report.min_ne, 8);
        assert!(!report.witnesses.is_empty());
        for (fp, fq) in &report.witnesses {
            assert_eq!(ne_of_deterministic(fp, fq).unwrap(), report.min_ne);
        }
    }

    #[test]
    fn scan_counts_pairs() {
        let report = exhaustive_min_ne(3, 2, 2).unwrap();
        assert_eq!(report.strategies_scanned, 64);
    }

    #[test]
    fn budget_refusal() {
        let options = ScanOptions {
            budget: 10,
            ..Default::default()
        };
        let err = exhaustive_min_ne_with(4, 2, 2, &options).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn symmetry_pruning_preserves_minimum() {
        for (n, m) in [(4, 2), (5, 2), (4, 3)] {
            let full = exhaustive_min_ne(n, m, m).unwrap();
            let pruned = exhaustive_min_ne_with(
                n,
                m,
                m,
                &ScanOptions {
                    prune_alice_symmetry: true,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(full.min_ne, pruned.min_ne);
            assert!(pruned.strategies_scanned < full.strategies_scanned);
        }
    }

    #[test]
    fn average_bounds_max_on_random_pairs() {
        // For a deterministic pair under the induced referee, the strategy
        // evaluator's profile agrees with the oracle count and
        // wce >= N_e / (n^2 - n).
        use crate::exact::{rat_u, Rat};
        use crate::strategy::{
            derive_referee, error_profile, PartyStrategy, ProtocolParams,
            SharedKeyDistribution, StrategyTriple,
        };
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.random_range(2..=5);
            let m_a = rng.random_range(1..=3);
            let m_b = rng.random_range(1..=3);
            let fa: Vec<usize> = (0..n).map(|_| rng.random_range(0..m_a)).collect();
            let fb: Vec<usize> = (0..n).map(|_| rng.random_range(0..m_b)).collect();
            let ga = GroupAssignment::new(fa.clone(), m_a).unwrap();
            let gb = GroupAssignment::new(fb.clone(), m_b).unwrap();
            let ne = ne_of_deterministic(&ga, &gb).unwrap();

            let alice = PartyStrategy::from_assignment(&fa, m_a).unwrap();
            let bob = PartyStrategy::from_assignment(&fb, m_b).unwrap();
            let dist = SharedKeyDistribution::single_key();
            let referee = derive_referee(&alice, &bob, &dist).unwrap();
            let triple = StrategyTriple::new(
                ProtocolParams::new(n, m_a, m_b).unwrap(),
                alice,
                bob,
                referee,
                dist,
            )
            .unwrap();
            let profile = error_profile(&triple).unwrap();
            assert_eq!(profile.ne(), &rat_u(ne, 1));
            let pairs = (n * n - n) as u64;
            let avg = if pairs == 0 {
                Rat::default()
            } else {
                rat_u(ne, pairs)
            };
            assert!(profile.wce() >= &avg);
        }
    }
}
