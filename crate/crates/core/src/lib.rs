//! Exact evaluator, brute-force oracle, and simulator for classical and
//! entanglement-assisted fingerprinting protocols in the simultaneous
//! message passing model.
//!
//! Two parties, handed messages `x` and `y` from a pool of `n`, each send a
//! fingerprint from an alphabet of size `m` to a referee who must announce
//! whether `x = y`, never erring on equal inputs. The adversary who supplies
//! the messages knows the protocol but not the shared key. This crate
//! provides:
//!
//! - [`strategy`]: the `(p, q, r)` strategy model and an exact rational
//!   evaluator for acceptance probabilities, error profiles, and the
//!   one-sided-error condition;
//! - [`protocols`]: the closed-form classical and semiclassical error bounds
//!   and the grouping / permuted-grouping constructions that attain them;
//! - [`oracle`]: exhaustive minimization of the error mass over all
//!   deterministic strategies, independently verifying the bounds;
//! - [`quantum`]: the tight unitary operator frame construction, the
//!   maximally entangled state trace identity, and the entanglement-assisted
//!   protocols built from them;
//! - [`sim`]: a seeded Monte Carlo round simulator reconciling sampled error
//!   rates with the exact evaluators.
//!
//! Messages, fingerprints, and key indices are 0-based throughout.

pub mod error;
pub mod exact;
pub mod oracle;
mod perm;
pub mod protocols;
pub mod quantum;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result};
pub use exact::Rat;
