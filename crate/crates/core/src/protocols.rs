//! Closed-form bounds and the optimal classical constructions.
//!
//! `classical_bound` is the minimum achievable worst-case error of one-sided
//! classical fingerprinting with shared randomness,
//! `(k*ceil(n/m)^2 + (m-k)*floor(n/m)^2 - n) / (n^2 - n)` with `k = n mod m`.
//! `grouping_strategy` is the deterministic keyless strategy attaining the
//! matching error-mass bound, and `permuted_grouping` wraps it in a uniformly
//! random relabeling of the messages, attaining the bound as worst-case error.

use crate::error::{Error, Result};
use crate::exact::{rat_u, rat_zero, Rat};
use crate::strategy::{
    PartyStrategy, ProtocolParams, RefereeRule, SharedKeyDistribution, StrategyTriple,
};

pub use crate::perm::{factorial_u128, factorial_u64, PermutationKey};

// ---------------------------------------------------------------------------
// Group assignments
// ---------------------------------------------------------------------------

/// A deterministic fingerprinting function: `assignment[x]` is the
/// fingerprint of message `x`, with fingerprints in `{0..m-1}`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GroupAssignment {
    assignment: Vec<usize>,
    m: usize,
}

impl GroupAssignment {
    /// The balanced assignment `x -> x mod m`: `n mod m` groups of size
    /// `ceil(n/m)` and the rest of size `floor(n/m)`.
    pub fn balanced(n: usize, m: usize) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::InvalidArgument("n and m must be >= 1".into()));
        }
        Ok(Self {
            assignment: (0..n).map(|x| x % m).collect(),
            m,
        })
    }

    pub fn new(assignment: Vec<usize>, m: usize) -> Result<Self> {
        if assignment.is_empty() || m < 1 {
            return Err(Error::InvalidArgument("empty assignment".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= m) {
            return Err(Error::IndexOutOfRange(format!(
                "fingerprint {bad} with alphabet size {m}"
            )));
        }
        Ok(Self { assignment, m })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn group(&self, x: usize) -> usize {
        self.assignment[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignment
    }

    /// Messages per fingerprint.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.m];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

/// Integer floor on the error mass of deterministic one-sided strategies:
/// `k*ceil(n/m)^2 + (m-k)*floor(n/m)^2 - n` with `k = n mod m`.
pub fn min_ne_bound(n: usize, m: usize) -> u64 {
    let (n64, m64) = (n as u64, m as u64);
    let k = n64 % m64;
    let hi = n64.div_ceil(m64);
    let lo = n64 / m64;
    k * hi * hi + (m64 - k) * lo * lo - n64
}

/// Minimum achievable worst-case error of classical one-sided fingerprinting
/// with shared randomness. Zero when `n <= m` (injective fingerprints exist)
/// and for `n = 1` (no unequal pairs).
pub fn classical_bound(n: usize, m: usize) -> Rat {
    if n <= 1 || n <= m {
        return rat_zero();
    }
    rat_u(min_ne_bound(n, m), (n * n - n) as u64)
}

/// Worst-case error of the semiclassical protocol that fingerprints into
/// `m^2` groups. Zero when `n <= m^2`.
pub fn semiclassical_bound(n: usize, m: usize) -> Rat {
    if n <= 1 || n <= m * m {
        return rat_zero();
    }
    rat_u(min_ne_bound(n, m * m), (n * n - n) as u64)
}

/// Probability that two fixed distinct messages land in a common group under
/// a uniformly random balanced partition:
/// `(k*c*(c-1) + (m-k)*f*(f-1)) / (n*(n-1))` with `c = ceil(n/m)`,
/// `f = floor(n/m)`. Identical to [`classical_bound`] by the identity
/// `k*c + (m-k)*f = n`.
pub fn exact_permuted_error(n: usize, m: usize) -> Rat {
    if n <= 1 {
        return rat_zero();
    }
    let (n64, m64) = (n as u64, m as u64);
    let k = n64 % m64;
    let hi = n64.div_ceil(m64);
    let lo = n64 / m64;
    let same_group_pairs = k * hi * (hi - 1) + (m64 - k) * lo * (lo - 1);
    rat_u(same_group_pairs, n64 * (n64 - 1))
}

// ---------------------------------------------------------------------------
// Strategy constructions
// ---------------------------------------------------------------------------

/// The optimal deterministic keyless strategy: both parties fingerprint
/// `x -> x mod m` and the referee accepts equal fingerprints. One-sided, with
/// error mass exactly [`min_ne_bound`].
pub fn grouping_strategy(n: usize, m: usize) -> Result<StrategyTriple> {
    let assignment = GroupAssignment::balanced(n, m)?;
    let party = PartyStrategy::from_assignment(assignment.as_slice(), m)?;
    StrategyTriple::new(
        ProtocolParams::symmetric(n, m)?,
        party.clone(),
        party,
        RefereeRule::delta(m)?,
        SharedKeyDistribution::single_key(),
    )
}

/// The optimal strategy with shared randomness: a uniformly random
/// permutation of the message labels followed by the grouping strategy.
/// One-sided; every unequal pair errs with probability exactly
/// [`classical_bound`] and equal pairs never err.
///
/// Keys stay lazy (a key index is unranked into its permutation on demand),
/// so construction is cheap for any `n`; full-profile evaluation enumerates
/// only while `n!` is within the key cutoff.
pub fn permuted_grouping(n: usize, m: usize) -> Result<StrategyTriple> {
    let party = PartyStrategy::permuted_grouping(n, m)?;
    StrategyTriple::new(
        ProtocolParams::symmetric(n, m)?,
        party.clone(),
        party,
        RefereeRule::delta(m)?,
        SharedKeyDistribution::uniform_permutations(n)?,
    )
}

/// Variant of [`permuted_grouping`] over the reduced key space: one key per
/// distinct balanced assignment with the canonical size profile (fingerprint
/// `a` has size `ceil(n/m)` iff `a < n mod m`), uniformly weighted. Every
/// permutation induces one of these assignments with equal multiplicity, so
/// the error profile is unchanged while the key count drops from `n!` to a
/// multinomial coefficient.
pub fn permuted_grouping_reduced(n: usize, m: usize) -> Result<StrategyTriple> {
    const MAX_REDUCED_KEYS: u64 = 1_000_000;
    let sizes = GroupAssignment::balanced(n, m)?.group_sizes();
    let count = multinomial(n, &sizes).ok_or_else(|| {
        Error::BudgetExceeded(format!("reduced key space for n={n}, m={m} overflows"))
    })?;
    if count > MAX_REDUCED_KEYS {
        return Err(Error::BudgetExceeded(format!(
            "reduced key space has {count} assignments (limit {MAX_REDUCED_KEYS})"
        )));
    }
    let mut assignments = Vec::with_capacity(count as usize);
    let mut remaining = sizes;
    let mut current = vec![0usize; n];
    enumerate_assignments(0, &mut current, &mut remaining, &mut assignments);
    debug_assert_eq!(assignments.len() as u64, count);

    let party = PartyStrategy::from_assignments(&assignments, m)?;
    StrategyTriple::new(
        ProtocolParams::symmetric(n, m)?,
        party.clone(),
        party,
        RefereeRule::delta(m)?,
        SharedKeyDistribution::uniform(assignments.len())?,
    )
}

/// `n! / prod(sizes!)` if it fits in u64.
fn multinomial(n: usize, sizes: &[usize]) -> Option<u64> {
    debug_assert_eq!(sizes.iter().sum::<usize>(), n);
    let mut result: u64 = 1;
    let mut placed = 0usize;
    // Product of binomials C(placed + s, s); each step below keeps the
    // running product an exact integer.
    for &s in sizes {
        for i in 1..=s {
            result = result.checked_mul((placed + i) as u64)? / i as u64;
        }
        placed += s;
    }
    Some(result)
}

fn enumerate_assignments(
    x: usize,
    current: &mut Vec<usize>,
    remaining: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if x == current.len() {
        out.push(current.clone());
        return;
    }
    for a in 0..remaining.len() {
        if remaining[a] > 0 {
            remaining[a] -= 1;
            current[x] = a;
            enumerate_assignments(x + 1, current, remaining, out);
            remaining[a] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};
    use crate::strategy::{error_profile, is_one_sided};
    use num::Zero;

    #[test]
    fn classical_bound_values() {
        assert_eq!(classical_bound(4, 2), rat(1, 3));
        assert_eq!(classical_bound(3, 3), rat_int(0));
        assert_eq!(classical_bound(5, 2), rat(2, 5));
        assert_eq!(classical_bound(8, 2), rat(3, 7));
        assert_eq!(classical_bound(12, 2), rat(5, 11));
        for n in 2..10 {
            assert_eq!(classical_bound(n, 1), rat_int(1));
        }
        assert_eq!(classical_bound(1, 1), rat_int(0));
    }

    #[test]
    fn classical_bound_5_2_matches_test_side_brute_force() {
        // Independent check over all 2^5 x 2^5 deterministic assignment
        // pairs with the induced optimal referee.
        let n = 5usize;
        let mut min_ne = u64::MAX;
        for fa_code in 0..32u32 {
            let fa: Vec<usize> = (0..n).map(|x| ((fa_code >> x) & 1) as usize).collect();
            for fb_code in 0..32u32 {
                let fb: Vec<usize> = (0..n).map(|x| ((fb_code >> x) & 1) as usize).collect();
                let mut reachable = [[false; 2]; 2];
                for x in 0..n {
                    reachable[fa[x]][fb[x]] = true;
                }
                let mut ne = 0u64;
                for x in 0..n {
                    for y in 0..n {
                        if x != y && reachable[fa[x]][fb[y]] {
                            ne += 1;
                        }
                    }
                }
                min_ne = min_ne.min(ne);
            }
        }
        assert_eq!(min_ne, 8);
        assert_eq!(classical_bound(5, 2), rat_u(8, 20));
    }

    #[test]
    fn semiclassical_bound_values() {
        assert_eq!(semiclassical_bound(8, 2), rat(1, 7));
        assert_eq!(semiclassical_bound(4, 2), rat_int(0));
        assert_eq!(semiclassical_bound(6, 2), rat(2, 15));
    }

    #[test]
    fn exact_permuted_error_values() {
        assert_eq!(exact_permuted_error(4, 2), rat(1, 3));
        assert_eq!(exact_permuted_error(7, 3), rat(5, 21));
        assert_eq!(exact_permuted_error(6, 6), rat_int(0));
    }

    #[test]
    fn permuted_error_7_3_by_full_enumeration() {
        // Count, over all 7! permutations, how often a fixed unequal pair
        // lands in a common mod-3 group.
        let (n, m) = (7usize, 3usize);
        let total = factorial_u64(n).unwrap();
        let mut same = 0u64;
        for rank in 0..total {
            let p = PermutationKey::from_rank(n, rank as u128).unwrap();
            if p.apply(0) % m == p.apply(1) % m {
                same += 1;
            }
        }
        assert_eq!(rat_u(same, total), exact_permuted_error(n, m));
        assert_eq!(rat_u(same, total), rat(5, 21));
    }

    #[test]
    fn bound_equals_permuted_error_on_grid() {
        for n in 1..=64usize {
            for m in 1..=n {
                assert_eq!(
                    classical_bound(n, m),
                    exact_permuted_error(n, m),
                    "mismatch at n={n}, m={m}"
                );
            }
        }
    }

    #[test]
    fn bound_monotonicity() {
        for n in 2..=40usize {
            for m in 1..n {
                assert!(
                    classical_bound(n, m) >= classical_bound(n, m + 1),
                    "not nonincreasing in m at n={n}, m={m}"
                );
            }
        }
        for m in 1..=6usize {
            for n in 1..40usize {
                assert!(
                    classical_bound(n + 1, m) >= classical_bound(n, m),
                    "not nondecreasing in n at n={n}, m={m}"
                );
            }
        }
    }

    #[test]
    fn bound_divisible_case() {
        for m in 1..=8usize {
            for l in 1..=8usize {
                let n = l * m;
                if n > 1 {
                    assert_eq!(classical_bound(n, m), rat((l - 1) as i64, (n - 1) as i64));
                }
            }
        }
    }

    #[test]
    fn bound_tends_to_one_over_m() {
        // Conservative envelope: within (1/m - 2/n, 1/m + 2/n) once
        // n >= 4m^2.
        for m in 1..=6usize {
            for n in (4 * m * m)..=(4 * m * m + 64) {
                let b = classical_bound(n, m);
                let lo = rat(1, m as i64) - rat(2, n as i64);
                let hi = rat(1, m as i64) + rat(2, n as i64);
                assert!(b > lo && b < hi, "envelope violated at n={n}, m={m}");
            }
        }
    }

    #[test]
    fn grouping_strategy_error_mass() {
        let p = error_profile(&grouping_strategy(4, 2).unwrap()).unwrap();
        assert_eq!(p.ne(), &rat_int(4));
        let p = error_profile(&grouping_strategy(3, 5).unwrap()).unwrap();
        assert_eq!(p.ne(), &rat_int(0));
        // (5,2): same-group unequal ordered pairs 3*2 + 2*1 = 8.
        let p = error_profile(&grouping_strategy(5, 2).unwrap()).unwrap();
        assert_eq!(p.ne(), &rat_int(8));
        assert_eq!(p.ne(), &rat_u(min_ne_bound(5, 2), 1));
    }

    #[test]
    fn grouping_strategy_is_one_sided() {
        for (n, m) in [(4, 2), (5, 2), (7, 3), (3, 5), (6, 1)] {
            assert!(is_one_sided(&grouping_strategy(n, m).unwrap()).unwrap());
        }
    }

    #[test]
    fn balanced_assignment_sizes() {
        let g = GroupAssignment::balanced(7, 3).unwrap();
        let mut sizes = g.group_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
        // k = n mod m groups of ceil size.
        let g = GroupAssignment::balanced(9, 4).unwrap();
        let sizes = g.group_sizes();
        assert_eq!(sizes.iter().filter(|&&s| s == 3).count(), 1);
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 3);
    }

    #[test]
    fn permuted_grouping_profiles() {
        // (4, 2): one-sided, pe = 1/3 on every unequal pair.
        let triple = permuted_grouping(4, 2).unwrap();
        assert!(is_one_sided(&triple).unwrap());
        let profile = error_profile(&triple).unwrap();
        assert_eq!(profile.wce(), &rat(1, 3));
        for x in 0..4 {
            for y in 0..4 {
                let expect = if x == y { rat_int(0) } else { rat(1, 3) };
                assert_eq!(profile.pe(x, y), &expect);
            }
        }

        // (2, 2): injective after relabeling, error-free.
        let profile = error_profile(&permuted_grouping(2, 2).unwrap()).unwrap();
        assert!(profile.wce().is_zero());

        // (5, 2): uniform 2/5 on unequal pairs, enumerating all 120 keys.
        let profile = error_profile(&permuted_grouping(5, 2).unwrap()).unwrap();
        assert_eq!(profile.wce(), &rat(2, 5));
        for x in 0..5 {
            for y in 0..5 {
                if x != y {
                    assert_eq!(profile.pe(x, y), &rat(2, 5));
                }
            }
        }
    }

    #[test]
    fn permuted_acceptance_n3_m2_is_one_third() {
        // Hand enumeration of the 6 permutations of 3 labels puts a fixed
        // unequal pair in a common mod-2 group in exactly 2 of them.
        let triple = permuted_grouping(3, 2).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    let p = crate::strategy::acceptance_probability(&triple, x, y).unwrap();
                    assert_eq!(p, rat(1, 3));
                }
            }
        }
    }

    #[test]
    fn reduced_key_space_matches_full() {
        for (n, m) in [(4, 2), (5, 2), (5, 3), (6, 3)] {
            let full = error_profile(&permuted_grouping(n, m).unwrap()).unwrap();
            let reduced = error_profile(&permuted_grouping_reduced(n, m).unwrap()).unwrap();
            assert_eq!(full, reduced, "profiles differ at n={n}, m={m}");
        }
    }

    #[test]
    fn reduced_key_space_size() {
        // (8, 2): 8! / (4! 4!) = 70 distinct balanced assignments.
        let triple = permuted_grouping_reduced(8, 2).unwrap();
        assert_eq!(triple.enumerable_key_count().unwrap(), 70);
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(8, &[4, 4]), Some(70));
        assert_eq!(multinomial(7, &[3, 2, 2]), Some(210));
        assert_eq!(multinomial(4, &[4]), Some(1));
    }
}
