//! Outcome probabilities and sampling for boson sampling with partially
//! distinguishable photons.
//!
//! The library is organized around two probability engines. The exact engine
//! sums over all `n!` photon permutations, weighting each by the product of
//! mutual wavefunction overlaps. The truncated engine groups the same sum by
//! the number of displaced (non-fixed-point) elements and keeps only orders
//! `j <= k`; each order factorizes into small complex permanents of displaced
//! columns paired with nonnegative permanents of the remaining single-photon
//! transmission probabilities, which is what makes the truncation cheap.
//!
//! Around the engines sit:
//!
//! - [`linalg`]: dense complex matrices, Haar-random unitaries, submatrix
//!   extraction for outcome patterns;
//! - [`permanent`]: Ryser's Gray-code permanent plus a naive oracle;
//! - [`combinatorics`]: subfactorials, rencontres numbers, streaming
//!   enumeration of subsets, derangements, and permutations;
//! - [`distinguishability`]: the mutual-overlap model (uniform `x` or a full
//!   Gram matrix `S`);
//! - [`probability`]: the engines themselves, truncation-error bounds, and
//!   the ensemble harnesses;
//! - [`fock`]: a brute-force Fock-space simulator with explicit internal
//!   labels, used as a first-principles cross-check on tiny instances;
//! - [`sampler`]: Metropolis-Hastings sampling of output patterns, with an
//!   exact enumeration sampler for small instances.
//!
//! Every stochastic operation takes an explicit seed and is bit-reproducible
//! for a fixed seed.

pub mod combinatorics;
pub mod distinguishability;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod permanent;
pub mod probability;
pub mod sampler;

pub use combinatorics::{FixedPointClass, Permutation, TermCount};
pub use distinguishability::{DistinguishabilityModel, ValidationReport};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, OutcomePattern, C64};
pub use probability::{CostGuard, ErrorBudget, TruncationResult};
pub use sampler::{ChainConfig, Proposal, SampleRun};
