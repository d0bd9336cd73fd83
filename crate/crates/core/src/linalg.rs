//! Dense complex matrices, Haar-random unitaries, and outcome patterns.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Matrices are stored row-major; the global convention is
//! row = output mode, column = input mode (photon), so a permutation acting
//! on photons permutes columns.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::Permutation;
use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting length mismatches
    /// and non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entry is NaN or infinite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![C64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = C64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Elementwise `|m_{rc}|^2` as a real-valued complex matrix.
    pub fn abs_squared(&self) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect(),
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidDimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == C64::ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.entries[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    /// Max-entry residual of `U^dagger U - I`; zero for a perfect unitary.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                let mut dot = C64::ZERO;
                for k in 0..n {
                    dot += self.get(k, r).conj() * self.get(k, c);
                }
                let target = if r == c { C64::ONE } else { C64::ZERO };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// Largest entrywise absolute difference between two equal-shaped
    /// matrices.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.entries.iter().map(|z| z.re).collect(),
            im: self.entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom("re/im arrays differ in length"));
        }
        let entries = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::new(raw.rows, raw.cols, entries)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// Which input and output modes define the submatrix for one detection
/// outcome: `n` photons in an `N`-mode interferometer, collision-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomePattern {
    n_modes: usize,
    input_modes: Vec<usize>,
    output_modes: Vec<usize>,
}

impl OutcomePattern {
    pub fn new(n_modes: usize, input_modes: Vec<usize>, output_modes: Vec<usize>) -> Result<Self> {
        if input_modes.len() != output_modes.len() {
            return Err(Error::InvalidPattern(format!(
                "{} input modes vs {} output modes",
                input_modes.len(),
                output_modes.len()
            )));
        }
        if input_modes.len() > n_modes {
            return Err(Error::InvalidPattern(format!(
                "{} photons exceed {} modes",
                input_modes.len(),
                n_modes
            )));
        }
        for (name, modes) in [("input", &input_modes), ("output", &output_modes)] {
            for w in modes.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidPattern(format!(
                        "{name} modes must be strictly increasing, got {modes:?}"
                    )));
                }
            }
            if let Some(&last) = modes.last() {
                if last >= n_modes {
                    return Err(Error::InvalidPattern(format!(
                        "{name} mode {last} out of range for {n_modes} modes"
                    )));
                }
            }
        }
        Ok(Self { n_modes, input_modes, output_modes })
    }

    /// The pattern using the first `n` modes as both inputs and outputs.
    pub fn first_modes(n: usize, n_modes: usize) -> Result<Self> {
        Self::new(n_modes, (0..n).collect(), (0..n).collect())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn photons(&self) -> usize {
        self.input_modes.len()
    }

    pub fn input_modes(&self) -> &[usize] {
        &self.input_modes
    }

    pub fn output_modes(&self) -> &[usize] {
        &self.output_modes
    }
}

/// Draws an `n x n` Haar-distributed unitary: QR of a complex Ginibre matrix
/// with the R diagonal phase-fixed to be real positive.
///
/// The same seed always produces the bit-identical matrix.
pub fn haar_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("Haar unitary needs dimension >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = normal.sample(&mut rng);
        let im: f64 = normal.sample(&mut rng);
        Complex::new(re * inv_sqrt2, im * inv_sqrt2)
    });
    let qr = ginibre.qr();
    let r_diag: Vec<Complex<f64>> = (0..n).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.unpack().0;
    for (c, d) in r_diag.iter().enumerate() {
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for r in 0..n {
            q[(r, c)] *= phase;
        }
    }
    let entries = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| C64::new(q[(r, c)].re, q[(r, c)].im))
        .collect();
    ComplexMatrix::new(n, n, entries)
}

/// Extracts the `n x n` submatrix for an outcome pattern: entry `(r, c)` is
/// `U[output_modes[r], input_modes[c]]`.
pub fn extract_submatrix(u: &ComplexMatrix, pattern: &OutcomePattern) -> Result<ComplexMatrix> {
    if !u.is_square() || u.rows() != pattern.n_modes() {
        return Err(Error::InvalidPattern(format!(
            "pattern over {} modes does not match {}x{} matrix",
            pattern.n_modes(),
            u.rows(),
            u.cols()
        )));
    }
    let n = pattern.photons();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        u.get(pattern.output_modes()[r], pattern.input_modes()[c])
    }))
}

/// The elementwise interference matrix of one permutation term:
/// `A[r][c] = M[r][c] * conj(M[r][sigma(c)])` (rows unpermuted, columns
/// permuted by `sigma`).
pub fn interference_matrix(m: &ComplexMatrix, sigma: &Permutation) -> Result<ComplexMatrix> {
    if !m.is_square() || sigma.len() != m.cols() {
        return Err(Error::InvalidDimension(format!(
            "permutation of length {} does not match {}x{} matrix",
            sigma.len(),
            m.rows(),
            m.cols()
        )));
    }
    let n = m.cols();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        m.get(r, c) * m.get(r, sigma.apply(c)).conj()
    }))
}

/// The 2x2 50/50 beamsplitter `(1/sqrt 2) [[1, 1], [1, -1]]`, used all over
/// the tests as the smallest interfering instance.
pub fn beamsplitter_50_50() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::new(
        2,
        2,
        vec![C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)],
    )
    .expect("static 2x2")
}
