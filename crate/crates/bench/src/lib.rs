//! Shared fixtures for the criterion benchmarks.

use distsampler_core::linalg::{extract_submatrix, haar_unitary, ComplexMatrix, OutcomePattern};

/// The first-`n`-modes submatrix of a seeded Haar unitary.
pub fn haar_submatrix(n: usize, n_modes: usize, seed: u64) -> ComplexMatrix {
    let u = haar_unitary(n_modes, seed).expect("valid dimensions");
    let pattern = OutcomePattern::first_modes(n, n_modes).expect("valid pattern");
    extract_submatrix(&u, &pattern).expect("pattern matches")
}
