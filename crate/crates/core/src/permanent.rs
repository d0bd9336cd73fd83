//! Exact matrix permanents.
//!
//! [`permanent_ryser`] is the workhorse: Gray-code Ryser inclusion-exclusion
//! at `O(2^n n)`. [`permanent_naive`] sums all `n!` permutation products and
//! exists purely as an independent oracle for the Ryser path.
//!
//! Accumulation is plain double-precision complex; at desk-scale dimensions
//! (`n <= ~16`) the Gray-code update loses at most a few ulps per step, so no
//! compensated summation is used.

use crate::combinatorics::{enumerate_permutations, factorial};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Largest dimension the Ryser path will accept (2^n subset sweep).
pub const MAX_RYSER_DIM: usize = 30;

/// Largest dimension the naive path will accept (n! permutation sweep).
pub const MAX_NAIVE_DIM: usize = 10;

/// Gray-code Ryser permanent of a square complex matrix. The empty matrix
/// has permanent 1 (empty product convention).
pub fn permanent_ryser(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(format!(
            "permanent needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_RYSER_DIM {
        return Err(Error::CostGuard(format!(
            "Ryser permanent of dimension {n} exceeds the {MAX_RYSER_DIM} limit"
        )));
    }
    Ok(ryser_complex(n, a.entries()))
}

/// Permanent by direct sum over all `n!` permutations; the oracle for
/// [`permanent_ryser`]. Refuses dimensions above [`MAX_NAIVE_DIM`].
pub fn permanent_naive(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(format!(
            "permanent needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_NAIVE_DIM {
        return Err(Error::CostGuard(format!(
            "naive permanent of dimension {n} exceeds the {MAX_NAIVE_DIM} limit"
        )));
    }
    let mut total = C64::ZERO;
    for sigma in enumerate_permutations(n) {
        let mut prod = C64::ONE;
        for i in 0..n {
            prod *= a.get(i, sigma.apply(i));
        }
        total += prod;
    }
    Ok(total)
}

/// Permanent of a matrix with real nonnegative entries, the explicit entry
/// point for the distinguishable-photon path `Perm(|M|^2)`.
///
/// Entries must be real to 1e-14 and nonnegative to -1e-14. Evaluation is
/// exact Ryser, not a polynomial-time approximation.
pub fn permanent_nonneg(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidDimension(format!(
            "permanent needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_RYSER_DIM {
        return Err(Error::CostGuard(format!(
            "Ryser permanent of dimension {n} exceeds the {MAX_RYSER_DIM} limit"
        )));
    }
    let mut real = Vec::with_capacity(n * n);
    for z in a.entries() {
        if z.im.abs() > 1e-14 {
            return Err(Error::InvalidInput(format!(
                "entry {z} is not real to 1e-14"
            )));
        }
        if z.re < -1e-14 {
            return Err(Error::InvalidInput(format!(
                "entry {z} is negative beyond tolerance"
            )));
        }
        real.push(z.re.max(0.0));
    }
    Ok(ryser_real(n, &real))
}

/// Ryser inclusion-exclusion over column subsets in Gray-code order, on a
/// row-major slice. `Perm(A) = sum_S (-1)^{n-|S|} prod_r (sum_{c in S} A_rc)`.
pub(crate) fn ryser_complex(n: usize, entries: &[C64]) -> C64 {
    debug_assert_eq!(entries.len(), n * n);
    if n == 0 {
        return C64::ONE;
    }
    let mut row_sums = vec![C64::ZERO; n];
    let mut total = C64::ZERO;
    let mut gray: u64 = 0;
    for t in 1..(1u64 << n) {
        let next = t ^ (t >> 1);
        let bit = (gray ^ next).trailing_zeros() as usize;
        if next & (1 << bit) != 0 {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += entries[r * n + bit];
            }
        } else {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s -= entries[r * n + bit];
            }
        }
        gray = next;
        let mut prod = C64::ONE;
        for s in &row_sums {
            prod *= s;
        }
        if (n as u32 - gray.count_ones()).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Real-valued twin of [`ryser_complex`], for the nonnegative blocks.
pub(crate) fn ryser_real(n: usize, entries: &[f64]) -> f64 {
    debug_assert_eq!(entries.len(), n * n);
    if n == 0 {
        return 1.0;
    }
    let mut row_sums = vec![0.0_f64; n];
    let mut total = 0.0_f64;
    let mut gray: u64 = 0;
    for t in 1..(1u64 << n) {
        let next = t ^ (t >> 1);
        let bit = (gray ^ next).trailing_zeros() as usize;
        if next & (1 << bit) != 0 {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += entries[r * n + bit];
            }
        } else {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s -= entries[r * n + bit];
            }
        }
        gray = next;
        let prod: f64 = row_sums.iter().product();
        if (n as u32 - gray.count_ones()).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Convenience used by tests: the expected count of permutation terms.
#[allow(dead_code)]
pub(crate) fn naive_term_count(n: usize) -> u64 {
    factorial(n).unwrap_or(u64::MAX)
}
