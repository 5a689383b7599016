//! Entanglement-assisted protocols: the tight unitary operator frame, the
//! maximally entangled state trace identity, and the error-free / permuted
//! quantum fingerprinting protocols built from them.
//!
//! Frame members are `m x m` complex matrices with 0-based indices
//! everywhere: `<j|U_x|k> = m^(-1/2) exp(2 pi i (jk/m + (j + m k) x / n))`
//! for `j, k` in `0..m` and `x` in `0..n`. Relative to a 1-based reading of
//! the same formula the entries differ by a per-operator phase pattern, which
//! leaves every |.|^2 quantity tested here unchanged; cross-implementations
//! agree bit-for-bit on moduli only.
//!
//! Everything is double precision with stated tolerances (1e-12 structural,
//! 1e-9 aggregate); all checks are low-dimensional and well-conditioned.

use num::complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rat_serde, rat_u, rat_zero, Rat};
use crate::perm::PermutationKey;

/// Structural tolerance: `max |(U^dag U - I)_jk|` for a matrix to count as
/// unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Largest dimension for which the explicit `m^2`-vector tensor route is
/// allowed.
pub const MAX_TENSOR_DIM: usize = 64;

// ---------------------------------------------------------------------------
// Complex matrices
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for j in 0..dim {
            entries[j * dim + j] = Complex64::ONE;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.dim + k]
    }

    /// Entrywise complex conjugate (conjugation in the computational basis).
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(Complex64::conj).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = vec![Complex64::ZERO; self.dim * self.dim];
        for j in 0..self.dim {
            for k in 0..self.dim {
                entries[k * self.dim + j] = self.get(j, k).conj();
            }
        }
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        let d = self.dim;
        let mut entries = vec![Complex64::ZERO; d * d];
        for j in 0..d {
            for l in 0..d {
                let v = self.get(j, l);
                if v != Complex64::ZERO {
                    for k in 0..d {
                        entries[j * d + k] += v * other.get(l, k);
                    }
                }
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// `max |(U^dag U - I)_jk|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().mul(self).expect("same dim");
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            for k in 0..self.dim {
                let expect = if j == k { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((gram.get(j, k) - expect).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARITY_TOL
    }

    /// `tr(E^dag E)`, real.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * c).collect(),
        }
    }
}

/// `tr(A^dag B) / m`, the normalized Hilbert-Schmidt overlap.
pub fn trace_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut acc = Complex64::ZERO;
    for (ea, eb) in a.entries.iter().zip(&b.entries) {
        acc += ea.conj() * eb;
    }
    Ok(acc / a.dim() as f64)
}

// ---------------------------------------------------------------------------
// Maximally entangled resource
// ---------------------------------------------------------------------------

/// The computational-basis maximally entangled state
/// `|psi+(d)> = d^(-1/2) sum_k |k>|k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntangledResource {
    dim: usize,
}

impl EntangledResource {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if dim > MAX_TENSOR_DIM {
            return Err(Error::BudgetExceeded(format!(
                "tensor dimension {dim} exceeds cap {MAX_TENSOR_DIM}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The explicit `d^2`-dimensional state vector, index `(i, j) -> i*d + j`.
    pub fn state_vector(&self) -> Vec<Complex64> {
        let d = self.dim;
        let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut psi = vec![Complex64::ZERO; d * d];
        for k in 0..d {
            psi[k * d + k] = amp;
        }
        psi
    }

    pub fn norm(&self) -> f64 {
        self.state_vector()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `<psi+| A* (x) B |psi+>` computed through explicit `m^2`-dimensional
/// vectors: apply the tensor operator entry by entry to the state vector,
/// then take the inner product. Independent of [`trace_overlap`], which it
/// must match to 1e-10 (tested, not assumed).
pub fn entangled_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let resource = EntangledResource::new(d)?;
    let psi = resource.state_vector();
    let a_conj = a.conj();

    let mut out = vec![Complex64::ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::ZERO;
            for k in 0..d {
                for l in 0..d {
                    let amp = psi[k * d + l];
                    if amp != Complex64::ZERO {
                        acc += a_conj.get(i, k) * b.get(j, l) * amp;
                    }
                }
            }
            out[i * d + j] = acc;
        }
    }
    let mut overlap = Complex64::ZERO;
    for (p, w) in psi.iter().zip(&out) {
        overlap += p.conj() * w;
    }
    Ok(overlap)
}

// ---------------------------------------------------------------------------
// The tight unitary operator frame (UTOF)
// ---------------------------------------------------------------------------

/// A list of `n` unitaries in dimension `m` with `tr(U^dag U) = m`.
#[derive(Debug, Clone)]
pub struct UnitaryFrame {
    dim: usize,
    members: Vec<ComplexMatrix>,
}

impl UnitaryFrame {
    /// Wrap explicit members, validating unitarity and normalization.
    pub fn new(members: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = members
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty frame".into()))?
            .dim();
        for (x, u) in members.iter().enumerate() {
            if u.dim() != dim {
                return Err(Error::DimensionMismatch(format!("member {x}")));
            }
            let defect = u.unitarity_defect();
            if defect > UNITARITY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "member {x} is not unitary (defect {defect:.3e})"
                )));
            }
            if (u.frobenius_norm_sq() - dim as f64).abs() > UNITARITY_TOL * dim as f64 {
                return Err(Error::InvalidArgument(format!(
                    "member {x} violates tr(U^dag U) = m"
                )));
            }
        }
        Ok(Self { dim, members })
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn member(&self, x: usize) -> &ComplexMatrix {
        &self.members[x]
    }

    pub fn members(&self) -> &[ComplexMatrix] {
        &self.members
    }

    /// `sum_{x,y} |tr(U_x^dag U_y)|^2`, summed in row-major pair order.
    pub fn frame_potential(&self) -> f64 {
        frame_potential_of(&self.members).expect("validated frame")
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.members
            .iter()
            .map(ComplexMatrix::unitarity_defect)
            .fold(0.0, f64::max)
    }
}

/// Frame potential of an arbitrary equal-dimension operator set.
pub fn frame_potential_of(ops: &[ComplexMatrix]) -> Result<f64> {
    let mut total = 0.0;
    for a in ops {
        for b in ops {
            let t = trace_overlap(a, b)? * a.dim() as f64;
            total += t.norm_sqr();
        }
    }
    Ok(total)
}

/// The tight-frame construction: `n` unitaries in dimension `m` with
/// `<j|U_x|k> = m^(-1/2) exp(2 pi i (jk/m + (j + m k) x / n))`. Requires
/// `n >= m^2`; at `n = m^2` the members form an orthonormal operator basis.
pub fn utof_frame(n: usize, m: usize) -> Result<UnitaryFrame> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if n < m * m {
        return Err(Error::RegimeViolation(format!(
            "frame bound regime needs n >= m^2, got n={n}, m={m}"
        )));
    }
    let norm = 1.0 / (m as f64).sqrt();
    let tau = std::f64::consts::TAU;
    let members = (0..n)
        .map(|x| {
            let mut entries = Vec::with_capacity(m * m);
            for j in 0..m {
                for k in 0..m {
                    let phase = tau * (j * k) as f64 / m as f64
                        + tau * ((j + m * k) * x) as f64 / n as f64;
                    entries.push(Complex64::from_polar(norm, phase));
                }
            }
            ComplexMatrix::new(m, entries)
        })
        .collect::<Result<Vec<_>>>()?;
    UnitaryFrame::new(members)
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

/// Error-free regime check for `n <= m^2` message pools.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem5Report {
    pub n: usize,
    pub m: usize,
    /// `|<psi+| U_x* (x) U_y |psi+>|^2` for every message pair.
    pub acceptance: Vec<Vec<f64>>,
    pub max_equal_deviation: f64,
    pub max_unequal_acceptance: f64,
    /// True iff every equal pair accepts within 1e-12 of 1 and every unequal
    /// pair accepts with probability at most 1e-20.
    pub error_free: bool,
}

pub const THEOREM5_EQUAL_TOL: f64 = 1e-12;
pub const THEOREM5_UNEQUAL_TOL: f64 = 1e-20;

/// Run the error-free protocol: an orthonormal operator basis of dimension
/// `m` restricted to `n <= m^2` members, with acceptance via the explicit
/// entangled-state route.
pub fn theorem5_protocol(n: usize, m: usize) -> Result<Theorem5Report> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if n > m * m {
        return Err(Error::RegimeViolation(format!(
            "error-free regime needs n <= m^2, got n={n}, m={m}"
        )));
    }
    // n^2 overlaps at O(m^4) each through the tensor route.
    let cost = (n as u128).pow(2) * (m as u128).pow(4);
    if cost > 2_000_000_000 {
        return Err(Error::BudgetExceeded(format!(
            "{n}^2 tensor overlaps in dimension {m} exceed the scan budget"
        )));
    }
    let frame = utof_frame(m * m, m)?;
    let mut acceptance = vec![vec![0.0f64; n]; n];
    let mut max_equal_deviation = 0.0f64;
    let mut max_unequal_acceptance = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let overlap = entangled_overlap(frame.member(x), frame.member(y))?;
            let p = overlap.norm_sqr();
            acceptance[x][y] = p;
            if x == y {
                max_equal_deviation = max_equal_deviation.max((p - 1.0).abs());
            } else {
                max_unequal_acceptance = max_unequal_acceptance.max(p);
            }
        }
    }
    Ok(Theorem5Report {
        n,
        m,
        acceptance,
        max_equal_deviation,
        max_unequal_acceptance,
        error_free: max_equal_deviation <= THEOREM5_EQUAL_TOL
            && max_unequal_acceptance <= THEOREM5_UNEQUAL_TOL,
    })
}

/// Worst-case error of the permuted frame protocol: `(n/m^2 - 1)/(n - 1)` as
/// an exact rational for `n >= m^2`, and 0 below it (error-free regime).
pub fn theorem6_error(n: usize, m: usize) -> Rat {
    if n <= 1 || n <= m * m {
        return rat_zero();
    }
    // (n/m^2 - 1)/(n - 1) = (n - m^2) / (m^2 (n - 1)).
    let m2 = (m * m) as u64;
    rat_u(n as u64 - m2, m2 * (n as u64 - 1))
}

/// Dense pair scan over the frame.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceStats {
    pub n: usize,
    pub m: usize,
    /// Mean of `|tr(U_x^dag U_y)|^2 / m^2` over ordered unequal pairs.
    pub mean_unequal_acceptance: f64,
    /// Largest unequal-pair acceptance seen (pre-permutation-averaging the
    /// frame's overlaps vary; only the mean is protocol-relevant).
    pub max_unequal_acceptance: f64,
    /// Max deviation of equal-pair acceptance from 1.
    pub max_equal_deviation: f64,
    /// The closed-form mean `(n^2/m^2 - n)/(n^2 - n)`.
    #[serde(with = "rat_serde")]
    pub expected_mean: Rat,
}

/// Scan all `n^2` frame pairs and aggregate acceptance statistics. The mean
/// over unequal pairs must land within 1e-9 of `(n^2/m^2 - n)/(n^2 - n)` and
/// every equal pair within 1e-12 of 1 (one-sided error).
pub fn theorem6_acceptance_stats(n: usize, m: usize) -> Result<AcceptanceStats> {
    if m > 16 || n > 4096 {
        return Err(Error::BudgetExceeded(format!(
            "dense pair scan capped at m <= 16, n <= 4096; got n={n}, m={m}"
        )));
    }
    let frame = utof_frame(n, m)?;
    let mut sum_unequal = 0.0f64;
    let mut max_unequal = 0.0f64;
    let mut max_equal_dev = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let t = trace_overlap(frame.member(x), frame.member(y))?;
            let p = t.norm_sqr(); // |tr/m|^2 = |tr|^2 / m^2
            if x == y {
                max_equal_dev = max_equal_dev.max((p - 1.0).abs());
            } else {
                sum_unequal += p;
                max_unequal = max_unequal.max(p);
            }
        }
    }
    let pairs = (n * n - n) as f64;
    let expected_mean = if n > 1 {
        // (n^2/m^2 - n)/(n^2 - n) = n (n - m^2) / (m^2 n (n - 1)).
        rat_u((n * (n - m * m)) as u64, ((m * m) * n * (n - 1)) as u64)
    } else {
        rat_zero()
    };
    Ok(AcceptanceStats {
        n,
        m,
        mean_unequal_acceptance: if pairs > 0.0 { sum_unequal / pairs } else { 0.0 },
        max_unequal_acceptance: max_unequal,
        max_equal_deviation: max_equal_dev,
        expected_mean,
    })
}

/// Acceptance probability of one protocol round: Roger's outcome-1
/// probability `|<psi+| U_{pi(x)}* (x) U_{pi(y)} |psi+>|^2` under the shared
/// permutation. The `|psi+(n!)>` resource is modeled as its operational
/// equivalent, a shared uniform permutation.
pub fn simulate_theorem6_round(
    n: usize,
    m: usize,
    permutation: &PermutationKey,
    x: usize,
    y: usize,
) -> Result<f64> {
    if permutation.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation of {} labels for n={n}",
            permutation.len()
        )));
    }
    if x >= n || y >= n {
        return Err(Error::IndexOutOfRange(format!("pair ({x}, {y}) with n={n}")));
    }
    let frame = utof_frame(n, m)?;
    let overlap = entangled_overlap(
        frame.member(permutation.apply(x)),
        frame.member(permutation.apply(y)),
    )?;
    Ok(overlap.norm_sqr())
}

// ---------------------------------------------------------------------------
// Random operators (for the frame-bound and trace-identity checks)
// ---------------------------------------------------------------------------

/// Haar-ish random unitary: complex Gaussian matrix orthonormalized by two
/// Gram-Schmidt passes.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
                .collect()
        })
        .collect();
    for _pass in 0..2 {
        for c in 0..dim {
            for prev in 0..c {
                let proj: Complex64 = cols[prev]
                    .iter()
                    .zip(&cols[c])
                    .map(|(p, v)| p.conj() * v)
                    .sum();
                for r in 0..dim {
                    let adjust = proj * cols[prev][r];
                    cols[c][r] -= adjust;
                }
            }
            let norm = cols[c].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for v in cols[c].iter_mut() {
                *v /= norm;
            }
        }
    }
    let mut entries = vec![Complex64::ZERO; dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            entries[r * dim + c] = *v;
        }
    }
    ComplexMatrix::new(dim, entries).expect("square by construction")
}

/// Random operator with the frame normalization `tr(E^dag E) = m`.
pub fn random_normalized_operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let raw: Vec<Complex64> = (0..dim * dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let matrix = ComplexMatrix::new(dim, raw).expect("square by construction");
    let scale = (dim as f64 / matrix.frobenius_norm_sq()).sqrt();
    matrix.scale(scale)
}
