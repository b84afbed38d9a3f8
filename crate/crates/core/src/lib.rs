//! Exact verification toolkit for finite p-quaternionic pairings,
//! 𝔽ₚ[Cₚ]-module decompositions, and rank formulas for index-p subgroups of
//! one-relator pro-p presentations.
//!
//! Everything is computed over the prime field 𝔽ₚ with the prime carried at
//! runtime on every value; there is no floating point and no tolerance
//! anywhere. Searches that are bounded by design return a three-valued
//! [`Verdict`]: `Verified`, `Refuted` with a structured witness that can be
//! replayed, or `Inconclusive` when a work budget was exhausted before the
//! search space was.

pub mod cohomology;
pub mod constructions;
pub mod cp_modules;
pub mod error;
pub mod fp_linalg;
pub mod pairing;
pub mod propp;
pub mod suite;
pub mod verdict;

pub use error::{Error, Result};
pub use fp_linalg::{FpMatrix, Prime, Subspace};
pub use verdict::{Budget, Search, Verdict};
