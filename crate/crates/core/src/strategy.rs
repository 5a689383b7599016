//! Classical strategy model and exact evaluation.
//!
//! A fingerprinting strategy is a triple `(p, q, r)`: per-key row-stochastic
//! fingerprint tables for Alice and Bob plus the referee's acceptance rule,
//! together with a shared-key distribution. Everything here is evaluated in
//! exact rational arithmetic; acceptance probabilities, error profiles, and
//! the one-sided-error check are exact statements, never tolerances.
//!
//! Message labels, fingerprints, and key indices are all 0-based. Key spaces
//! are finite; large permutation key spaces are kept lazy (a key index is
//! unranked into a permutation on demand) and full enumeration refuses past
//! [`MAX_ENUM_KEYS`].

use num::traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{is_probability, rat_mat_serde, rat_serde, rat_u, Rat};
use crate::perm::{factorial_u128, PermutationKey};

/// Full key enumeration stops above this many keys (8! = 40320 is the largest
/// key space any protocol in this crate enumerates).
pub const MAX_ENUM_KEYS: u64 = 100_000;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Message count and fingerprint alphabet sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProtocolParams {
    n: usize,
    m_alice: usize,
    m_bob: usize,
}

impl ProtocolParams {
    pub fn new(n: usize, m_alice: usize, m_bob: usize) -> Result<Self> {
        if n < 1 || m_alice < 1 || m_bob < 1 {
            return Err(Error::InvalidArgument(format!(
                "protocol parameters must be >= 1, got n={n}, m_alice={m_alice}, m_bob={m_bob}"
            )));
        }
        Ok(Self { n, m_alice, m_bob })
    }

    /// The paper's symmetric case `m_alice = m_bob = m`.
    pub fn symmetric(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_alice(&self) -> usize {
        self.m_alice
    }

    pub fn m_bob(&self) -> usize {
        self.m_bob
    }
}

/// Distribution of the shared key, hidden from the adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedKeyDistribution {
    kind: KeyDistKind,
}

#[derive(Debug, Clone, PartialEq)]
enum KeyDistKind {
    /// Explicit weights, one per key index.
    Explicit(Vec<Rat>),
    /// Uniform over the `n!` permutations of `{0..n-1}` under the Lehmer
    /// ranking; never materialized.
    UniformPermutations { n: usize },
}

impl SharedKeyDistribution {
    /// Explicit weights; must be nonnegative and sum to exactly 1.
    pub fn explicit(weights: Vec<Rat>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty key distribution".into()));
        }
        if !weights.iter().all(is_probability) {
            return Err(Error::InvalidArgument(
                "key weights must lie in [0, 1]".into(),
            ));
        }
        let total: Rat = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!(
                "key weights must sum to exactly 1, got {total}"
            )));
        }
        Ok(Self {
            kind: KeyDistKind::Explicit(weights),
        })
    }

    /// The trivial distribution: a single key with weight 1.
    pub fn single_key() -> Self {
        Self {
            kind: KeyDistKind::Explicit(vec![Rat::one()]),
        }
    }

    /// Uniform over `k` explicit keys.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("empty key distribution".into()));
        }
        Self::explicit(vec![rat_u(1, k as u64); k])
    }

    /// Uniform over all `n!` permutation keys, kept lazy.
    pub fn uniform_permutations(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        Ok(Self {
            kind: KeyDistKind::UniformPermutations { n },
        })
    }

    /// Number of keys when full enumeration is allowed, an error otherwise.
    pub fn enumerable_key_count(&self) -> Result<u64> {
        match &self.kind {
            KeyDistKind::Explicit(w) => Ok(w.len() as u64),
            KeyDistKind::UniformPermutations { n } => match factorial_u128(*n) {
                Some(k) if k <= MAX_ENUM_KEYS as u128 => Ok(k as u64),
                _ => Err(Error::BudgetExceeded(format!(
                    "key enumeration over {n}! permutations exceeds the cutoff of {MAX_ENUM_KEYS} keys; \
                     use the closed-form evaluators instead"
                ))),
            },
        }
    }

    /// σ(ξ) for key index `key`.
    pub fn weight(&self, key: u64) -> Result<Rat> {
        match &self.kind {
            KeyDistKind::Explicit(w) => w
                .get(key as usize)
                .cloned()
                .ok_or_else(|| Error::IndexOutOfRange(format!("key {key}"))),
            KeyDistKind::UniformPermutations { n } => {
                let mut denom = num::BigInt::one();
                for i in 2..=*n {
                    denom *= num::BigInt::from(i);
                }
                Ok(Rat::new(num::BigInt::one(), denom))
            }
        }
    }

    /// `Some(w)` when every key has the same weight `w` (enables the integer
    /// counting fast path in the evaluator).
    fn uniform_weight(&self) -> Option<Rat> {
        match &self.kind {
            KeyDistKind::Explicit(w) => {
                let first = w.first()?;
                w.iter().all(|x| x == first).then(|| first.clone())
            }
            KeyDistKind::UniformPermutations { .. } => self.weight(0).ok(),
        }
    }

    fn is_uniform_permutations(&self) -> Option<usize> {
        match &self.kind {
            KeyDistKind::UniformPermutations { n } => Some(*n),
            KeyDistKind::Explicit(_) => None,
        }
    }
}

/// One party's key-conditioned fingerprinting tables.
///
/// `prob(key, x, a)` is the probability of sending fingerprint `a` on message
/// `x` under key `key`; every row sums to exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyStrategy {
    n: usize,
    m: usize,
    deterministic: bool,
    kind: StrategyKind,
}

#[derive(Debug, Clone, PartialEq)]
enum StrategyKind {
    /// One `n x m` table per key.
    Explicit(Vec<Vec<Vec<Rat>>>),
    /// Key `xi` is the permutation of Lehmer rank `xi`; the fingerprint of
    /// `x` is `pi(x) mod m`. Deterministic by construction and never
    /// materialized as tables.
    PermutedGrouping,
}

/// A party's tables for one concrete key, resolved for evaluation.
pub(crate) enum ResolvedTable<'a> {
    /// Deterministic: fingerprint per message.
    Assignment(Vec<usize>),
    /// Probabilistic rows.
    Table(&'a Vec<Vec<Rat>>),
}

impl ResolvedTable<'_> {
    /// Nonzero entries of the row for message `x`, as `(fingerprint, prob)`.
    fn support(&self, x: usize) -> Vec<(usize, Rat)> {
        match self {
            ResolvedTable::Assignment(f) => vec![(f[x], Rat::one())],
            ResolvedTable::Table(t) => t[x]
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(a, p)| (a, p.clone()))
                .collect(),
        }
    }

    fn assignment(&self) -> &[usize] {
        match self {
            ResolvedTable::Assignment(f) => f,
            ResolvedTable::Table(_) => unreachable!("resolved table is probabilistic"),
        }
    }
}

impl PartyStrategy {
    /// Explicit per-key tables. Validates normalization (Eq. 4): every row of
    /// every table sums to exactly 1 with entries in [0, 1].
    pub fn explicit(tables: Vec<Vec<Vec<Rat>>>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidArgument("strategy needs at least one key".into()))?;
        let n = first.len();
        let m = first.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("empty strategy table".into()));
        }
        let mut deterministic = true;
        for table in &tables {
            if table.len() != n {
                return Err(Error::DimensionMismatch("ragged strategy tables".into()));
            }
            for row in table {
                if row.len() != m {
                    return Err(Error::DimensionMismatch("ragged strategy rows".into()));
                }
                if !row.iter().all(is_probability) {
                    return Err(Error::InvalidArgument(
                        "strategy entries must lie in [0, 1]".into(),
                    ));
                }
                let total: Rat = row.iter().sum();
                if !total.is_one() {
                    return Err(Error::InvalidArgument(format!(
                        "strategy row must sum to exactly 1, got {total}"
                    )));
                }
                deterministic &= row.iter().all(|p| p.is_zero() || p.is_one());
            }
        }
        Ok(Self {
            n,
            m,
            deterministic,
            kind: StrategyKind::Explicit(tables),
        })
    }

    /// Single-key deterministic strategy from a fingerprint-per-message map.
    pub fn from_assignment(assignment: &[usize], m: usize) -> Result<Self> {
        Self::from_assignments(std::slice::from_ref(&assignment.to_vec()), m)
    }

    /// Multi-key deterministic strategy, one assignment per key.
    pub fn from_assignments(assignments: &[Vec<usize>], m: usize) -> Result<Self> {
        let tables = assignments
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&a| {
                        if a >= m {
                            return Err(Error::IndexOutOfRange(format!(
                                "fingerprint {a} with alphabet size {m}"
                            )));
                        }
                        let mut row = vec![Rat::zero(); m];
                        row[a] = Rat::one();
                        Ok(row)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::explicit(tables)
    }

    /// The lazy permuted-grouping family: under key `xi` (a permutation rank)
    /// the fingerprint of message `x` is `pi_xi(x) mod m`.
    pub fn permuted_grouping(n: usize, m: usize) -> Result<Self> {
        if n < 1 || m < 1 {
            return Err(Error::InvalidArgument("n and m must be >= 1".into()));
        }
        Ok(Self {
            n,
            m,
            deterministic: true,
            kind: StrategyKind::PermutedGrouping,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// True iff every table entry is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// Number of keys this strategy defines tables for; `None` when the key
    /// space is the (possibly huge) permutation family.
    pub fn explicit_key_count(&self) -> Option<u64> {
        match &self.kind {
            StrategyKind::Explicit(t) => Some(t.len() as u64),
            StrategyKind::PermutedGrouping => None,
        }
    }

    /// p(a | x, key), exactly.
    pub fn prob(&self, key: u64, x: usize, a: usize) -> Result<Rat> {
        if x >= self.n || a >= self.m {
            return Err(Error::IndexOutOfRange(format!(
                "message {x} / fingerprint {a} for n={}, m={}",
                self.n, self.m
            )));
        }
        match self.resolve(key)? {
            ResolvedTable::Assignment(f) => Ok(if f[x] == a { Rat::one() } else { Rat::zero() }),
            ResolvedTable::Table(t) => Ok(t[x][a].clone()),
        }
    }

    pub(crate) fn resolve(&self, key: u64) -> Result<ResolvedTable<'_>> {
        match &self.kind {
            StrategyKind::Explicit(tables) => {
                let t = tables
                    .get(key as usize)
                    .ok_or_else(|| Error::IndexOutOfRange(format!("key {key}")))?;
                if self.deterministic {
                    let f = t
                        .iter()
                        .map(|row| row.iter().position(|p| p.is_one()).expect("det row"))
                        .collect();
                    Ok(ResolvedTable::Assignment(f))
                } else {
                    Ok(ResolvedTable::Table(t))
                }
            }
            StrategyKind::PermutedGrouping => {
                let p = PermutationKey::from_rank(self.n, key as u128)?;
                Ok(ResolvedTable::Assignment(
                    (0..self.n).map(|x| p.apply(x) % self.m).collect(),
                ))
            }
        }
    }

    /// Resolve against a sampled key draw (the simulator's path). A drawn
    /// permutation is used directly by the lazy family and ranked back to an
    /// index for explicit tables.
    pub(crate) fn resolve_draw(&self, draw: &KeyDraw) -> Result<ResolvedTable<'_>> {
        match (&self.kind, draw) {
            (_, KeyDraw::Index(i)) => self.resolve(*i),
            (StrategyKind::PermutedGrouping, KeyDraw::Permutation(p)) => {
                if p.len() != self.n {
                    return Err(Error::DimensionMismatch("permutation length".into()));
                }
                Ok(ResolvedTable::Assignment(
                    (0..self.n).map(|x| p.apply(x) % self.m).collect(),
                ))
            }
            (StrategyKind::Explicit(_), KeyDraw::Permutation(p)) => {
                let rank = p.rank().ok_or_else(|| {
                    Error::InvalidArgument("permutation too large to rank".into())
                })?;
                self.resolve(u64::try_from(rank).map_err(|_| {
                    Error::IndexOutOfRange("permutation rank exceeds explicit key space".into())
                })?)
            }
        }
    }

    pub(crate) fn is_permuted_grouping(&self) -> bool {
        matches!(self.kind, StrategyKind::PermutedGrouping)
    }
}

/// A concrete shared-key value, either an index or a sampled permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KeyDraw {
    Index(u64),
    Permutation(PermutationKey),
}

/// Roger's acceptance rule: `accept[a][b]` is the probability of output 1 on
/// fingerprint pair `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefereeRule {
    accept: Vec<Vec<Rat>>,
}

impl RefereeRule {
    pub fn new(accept: Vec<Vec<Rat>>) -> Result<Self> {
        let m_bob = accept.first().map_or(0, Vec::len);
        if accept.is_empty() || m_bob == 0 {
            return Err(Error::InvalidArgument("empty referee rule".into()));
        }
        for row in &accept {
            if row.len() != m_bob {
                return Err(Error::DimensionMismatch("ragged referee rule".into()));
            }
            if !row.iter().all(is_probability) {
                return Err(Error::InvalidArgument(
                    "referee entries must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(Self { accept })
    }

    /// Accept iff the fingerprints are equal: `r(a, b) = delta(a, b)`.
    pub fn delta(m: usize) -> Result<Self> {
        Self::new(
            (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| if a == b { Rat::one() } else { Rat::zero() })
                        .collect()
                })
                .collect(),
        )
    }

    /// Same value on every fingerprint pair.
    pub fn constant(m_alice: usize, m_bob: usize, value: Rat) -> Result<Self> {
        if m_alice == 0 || m_bob == 0 {
            return Err(Error::InvalidArgument("empty referee rule".into()));
        }
        Self::new(vec![vec![value; m_bob]; m_alice])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.accept.len(), self.accept[0].len())
    }

    pub fn accept_prob(&self, a: usize, b: usize) -> &Rat {
        &self.accept[a][b]
    }

    pub fn is_deterministic(&self) -> bool {
        self.accept
            .iter()
            .all(|row| row.iter().all(|p| p.is_zero() || p.is_one()))
    }

    /// Deterministic rule as a bool matrix; `None` if any entry is fractional.
    pub(crate) fn as_bool(&self) -> Option<Vec<Vec<bool>>> {
        self.is_deterministic().then(|| {
            self.accept
                .iter()
                .map(|row| row.iter().map(|p| p.is_one()).collect())
                .collect()
        })
    }

    pub(crate) fn rows(&self) -> &[Vec<Rat>] {
        &self.accept
    }
}

/// The complete `(p, q, r)` strategy with its shared-key distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTriple {
    params: ProtocolParams,
    alice: PartyStrategy,
    bob: PartyStrategy,
    referee: RefereeRule,
    key_dist: SharedKeyDistribution,
}

impl StrategyTriple {
    pub fn new(
        params: ProtocolParams,
        alice: PartyStrategy,
        bob: PartyStrategy,
        referee: RefereeRule,
        key_dist: SharedKeyDistribution,
    ) -> Result<Self> {
        if alice.n() != params.n() || bob.n() != params.n() {
            return Err(Error::DimensionMismatch(
                "strategy message count does not match params".into(),
            ));
        }
        if alice.m() != params.m_alice() || bob.m() != params.m_bob() {
            return Err(Error::DimensionMismatch(
                "strategy alphabet does not match params".into(),
            ));
        }
        if referee.dims() != (params.m_alice(), params.m_bob()) {
            return Err(Error::DimensionMismatch(
                "referee rule does not match alphabets".into(),
            ));
        }
        // Both parties index the same key set as the distribution.
        for party in [&alice, &bob] {
            match (party.explicit_key_count(), &key_dist.kind) {
                (Some(k), KeyDistKind::Explicit(w)) => {
                    if k != w.len() as u64 {
                        return Err(Error::DimensionMismatch(format!(
                            "strategy has {k} keys but distribution has {}",
                            w.len()
                        )));
                    }
                }
                (Some(k), KeyDistKind::UniformPermutations { n }) => {
                    if factorial_u128(*n) != Some(k as u128) {
                        return Err(Error::DimensionMismatch(format!(
                            "strategy has {k} keys but distribution ranges over {n}!"
                        )));
                    }
                }
                (None, KeyDistKind::Explicit(w)) => {
                    // Lazy family: every explicit key index must be a valid rank.
                    let max = factorial_u128(party.n()).unwrap_or(u128::MAX);
                    if (w.len() as u128) > max {
                        return Err(Error::DimensionMismatch(
                            "more keys than permutations".into(),
                        ));
                    }
                }
                (None, KeyDistKind::UniformPermutations { n }) => {
                    if *n != party.n() {
                        return Err(Error::DimensionMismatch(
                            "permutation key length does not match message count".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self {
            params,
            alice,
            bob,
            referee,
            key_dist,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn alice(&self) -> &PartyStrategy {
        &self.alice
    }

    pub fn bob(&self) -> &PartyStrategy {
        &self.bob
    }

    pub fn referee(&self) -> &RefereeRule {
        &self.referee
    }

    pub fn key_dist(&self) -> &SharedKeyDistribution {
        &self.key_dist
    }

    /// Key count for full enumeration, refusing past [`MAX_ENUM_KEYS`].
    pub fn enumerable_key_count(&self) -> Result<u64> {
        self.key_dist.enumerable_key_count()
    }

    /// True when this is the uniformly permuted grouping family (both parties
    /// lazy, uniform permutation keys), which has a closed-form error profile.
    pub(crate) fn is_uniform_permuted_grouping(&self) -> bool {
        self.alice.is_permuted_grouping()
            && self.bob.is_permuted_grouping()
            && self.key_dist.is_uniform_permutations() == Some(self.params.n())
    }
}

// ---------------------------------------------------------------------------
// Error profile
// ---------------------------------------------------------------------------

/// Exact per-pair acceptance and error probabilities (Eqs. for P1, Pe, Pwce,
/// Ne), all rational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorProfile {
    n: usize,
    #[serde(with = "rat_mat_serde")]
    p1: Vec<Vec<Rat>>,
    #[serde(with = "rat_mat_serde")]
    pe: Vec<Vec<Rat>>,
    #[serde(with = "rat_serde")]
    wce: Rat,
    #[serde(with = "rat_serde")]
    ne: Rat,
}

impl ErrorProfile {
    fn from_p1(p1: Vec<Vec<Rat>>) -> Self {
        let n = p1.len();
        let pe: Vec<Vec<Rat>> = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        if x == y {
                            Rat::one() - &p1[x][x]
                        } else {
                            p1[x][y].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let wce = pe
            .iter()
            .flatten()
            .max()
            .cloned()
            .expect("profile is nonempty");
        let ne = pe.iter().flatten().sum();
        Self { n, p1, pe, wce, ne }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p1(&self, x: usize, y: usize) -> &Rat {
        &self.p1[x][y]
    }

    pub fn pe(&self, x: usize, y: usize) -> &Rat {
        &self.pe[x][y]
    }

    /// Worst-case error probability: `max_{x,y} pe(x,y)`.
    pub fn wce(&self) -> &Rat {
        &self.wce
    }

    /// Total error mass `N_e = sum_{x,y} pe(x,y)`.
    pub fn ne(&self) -> &Rat {
        &self.ne
    }

    /// Argmax of the error matrix, ties broken by lowest `(x, y)` in
    /// lexicographic order.
    pub fn argmax_pe(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for x in 0..self.n {
            for y in 0..self.n {
                if self.pe[x][y] > self.pe[best.0][best.1] {
                    best = (x, y);
                }
            }
        }
        best
    }

    /// Error mass restricted to unequal pairs.
    pub fn sum_unequal(&self) -> Rat {
        let mut total = Rat::zero();
        for x in 0..self.n {
            for y in 0..self.n {
                if x != y {
                    total += &self.pe[x][y];
                }
            }
        }
        total
    }

    /// Mean error over the `n^2 - n` unequal pairs (0 when n = 1).
    pub fn mean_unequal(&self) -> Rat {
        let pairs = (self.n * self.n - self.n) as u64;
        if pairs == 0 {
            return Rat::zero();
        }
        self.sum_unequal() / rat_u(pairs, 1)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

fn pair_p1(
    alice: &ResolvedTable<'_>,
    bob: &ResolvedTable<'_>,
    referee: &RefereeRule,
    x: usize,
    y: usize,
) -> Rat {
    match (alice, bob) {
        (ResolvedTable::Assignment(fa), ResolvedTable::Assignment(fb)) => {
            referee.accept_prob(fa[x], fb[y]).clone()
        }
        _ => {
            let mut acc = Rat::zero();
            for (a, pa) in alice.support(x) {
                for (b, qb) in bob.support(y) {
                    let r = referee.accept_prob(a, b);
                    if !r.is_zero() {
                        acc += pa.clone() * qb * r;
                    }
                }
            }
            acc
        }
    }
}

/// Probability that Roger outputs 1 on the message pair `(x, y)`:
/// `sum_xi sum_{a,b} p(a|x,xi) q(b|y,xi) r(a,b) sigma(xi)`, exactly.
pub fn acceptance_probability(triple: &StrategyTriple, x: usize, y: usize) -> Result<Rat> {
    let n = triple.params.n();
    if x >= n || y >= n {
        return Err(Error::IndexOutOfRange(format!(
            "message pair ({x}, {y}) with n={n}"
        )));
    }
    let keys = triple.enumerable_key_count()?;
    let mut acc = Rat::zero();
    for key in 0..keys {
        let w = triple.key_dist.weight(key)?;
        if w.is_zero() {
            continue;
        }
        let fa = triple.alice.resolve(key)?;
        let fb = triple.bob.resolve(key)?;
        acc += w * pair_p1(&fa, &fb, &triple.referee, x, y);
    }
    Ok(acc)
}

/// Exact acceptance and error probabilities for every message pair.
pub fn error_profile(triple: &StrategyTriple) -> Result<ErrorProfile> {
    let n = triple.params.n();
    let keys = triple.enumerable_key_count()?;

    // Counting fast path: uniform key weights, deterministic parties and
    // referee. Accumulates integer acceptance counts and divides once.
    let fast = match (
        triple.key_dist.uniform_weight(),
        triple.referee.as_bool(),
        triple.alice.is_deterministic() && triple.bob.is_deterministic(),
    ) {
        (Some(w), Some(rb), true) => Some((w, rb)),
        _ => None,
    };

    let p1 = if let Some((w, rb)) = fast {
        let mut counts = vec![vec![0u64; n]; n];
        for key in 0..keys {
            let fa = triple.alice.resolve(key)?;
            let fb = triple.bob.resolve(key)?;
            let (fa, fb) = (fa.assignment().to_vec(), fb.assignment().to_vec());
            for (x, row) in counts.iter_mut().enumerate() {
                let ra = &rb[fa[x]];
                for (y, c) in row.iter_mut().enumerate() {
                    *c += u64::from(ra[fb[y]]);
                }
            }
        }
        counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| rat_u(c, 1) * &w).collect())
            .collect()
    } else {
        let mut p1 = vec![vec![Rat::zero(); n]; n];
        for key in 0..keys {
            let weight = triple.key_dist.weight(key)?;
            if weight.is_zero() {
                continue;
            }
            let fa = triple.alice.resolve(key)?;
            let fb = triple.bob.resolve(key)?;
            for (x, row) in p1.iter_mut().enumerate() {
                for (y, cell) in row.iter_mut().enumerate() {
                    *cell += weight.clone() * pair_p1(&fa, &fb, &triple.referee, x, y);
                }
            }
        }
        p1
    };
    Ok(ErrorProfile::from_p1(p1))
}

/// True iff `P1(x, x) = 1` exactly for every message `x` (Eq. 10).
pub fn is_one_sided(triple: &StrategyTriple) -> Result<bool> {
    let n = triple.params.n();
    let keys = triple.enumerable_key_count()?;
    let mut diag = vec![Rat::zero(); n];
    for key in 0..keys {
        let w = triple.key_dist.weight(key)?;
        if w.is_zero() {
            continue;
        }
        let fa = triple.alice.resolve(key)?;
        let fb = triple.bob.resolve(key)?;
        for (x, acc) in diag.iter_mut().enumerate() {
            *acc += w.clone() * pair_p1(&fa, &fb, &triple.referee, x, x);
        }
    }
    Ok(diag.iter().all(Rat::is_one))
}

/// The Lemma 1 referee: deterministic `r'(a, b) = 1` exactly when some
/// message `x` and some key with positive weight give both parties positive
/// probability of sending `(a, b)`. The result makes any completion
/// one-sided, and no one-sided referee beats it on any pair.
pub fn derive_referee(
    alice: &PartyStrategy,
    bob: &PartyStrategy,
    key_dist: &SharedKeyDistribution,
) -> Result<RefereeRule> {
    if alice.n() != bob.n() {
        return Err(Error::DimensionMismatch(
            "parties disagree on message count".into(),
        ));
    }
    let n = alice.n();
    let keys = key_dist.enumerable_key_count()?;
    let mut reachable = vec![vec![false; bob.m()]; alice.m()];
    for key in 0..keys {
        if key_dist.weight(key)?.is_zero() {
            continue;
        }
        let fa = alice.resolve(key)?;
        let fb = bob.resolve(key)?;
        for x in 0..n {
            for (a, _) in fa.support(x) {
                for (b, _) in fb.support(x) {
                    reachable[a][b] = true;
                }
            }
        }
    }
    RefereeRule::new(
        reachable
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|hit| if hit { Rat::one() } else { Rat::zero() })
                    .collect()
            })
            .collect(),
    )
}
