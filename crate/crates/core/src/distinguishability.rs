//! The mutual-overlap model between single-photon wavefunctions.
//!
//! Two variants: the one-parameter family `S_ij = x + (1-x) delta_ij`, and a
//! general Gram matrix of overlaps. The general matrix must be Hermitian with
//! unit diagonal and positive semidefinite, since it is the Gram matrix of a
//! set of internal single-photon states; [`validate_model`] reports how badly
//! a candidate matrix violates those constraints instead of erroring.

use nalgebra::{Complex, DMatrix};
use serde::Deserialize;

use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const UNIT_DIAGONAL_TOL: f64 = 0.0;
pub const PSD_EIGENVALUE_FLOOR: f64 = -1e-10;

/// Mutual distinguishability of the photons.
#[derive(Clone, Debug, PartialEq)]
pub enum DistinguishabilityModel {
    /// Every pair of distinct photons has the same real overlap `x`.
    Uniform { x: f64 },
    /// Full Gram matrix of pairwise overlaps; entries may be complex.
    General { overlaps: ComplexMatrix },
}

impl DistinguishabilityModel {
    /// Uniform model with overlap `x in [0, 1]`.
    pub fn uniform(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!(
                "indistinguishability x={x} outside [0, 1]"
            )));
        }
        Ok(Self::Uniform { x })
    }

    /// General model from a square overlap matrix. Shape is checked here;
    /// physicality (Hermiticity, unit diagonal, positive semidefiniteness)
    /// is the business of [`validate_model`].
    pub fn general(overlaps: ComplexMatrix) -> Result<Self> {
        if !overlaps.is_square() {
            return Err(Error::InvalidDimension(format!(
                "overlap matrix must be square, got {}x{}",
                overlaps.rows(),
                overlaps.cols()
            )));
        }
        Ok(Self::General { overlaps })
    }

    /// Photon count the model is defined for; `None` means any count
    /// (the uniform model).
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::Uniform { .. } => None,
            Self::General { overlaps } => Some(overlaps.rows()),
        }
    }

    /// Overlap entry `S[i][j]`.
    pub fn overlap(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Uniform { x } => {
                if i == j {
                    C64::ONE
                } else {
                    C64::new(*x, 0.0)
                }
            }
            Self::General { overlaps } => overlaps.get(i, j),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }

    /// Parses the general-model JSON form `{"n": n, "re": [...], "im": [...]}`.
    pub fn general_from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct SMatrixJson {
            n: usize,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let raw: SMatrixJson = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("bad overlap-matrix JSON: {e}")))?;
        if raw.re.len() != raw.n * raw.n || raw.im.len() != raw.n * raw.n {
            return Err(Error::InvalidInput(format!(
                "overlap matrix JSON for n={} needs {} entries, got re={} im={}",
                raw.n,
                raw.n * raw.n,
                raw.re.len(),
                raw.im.len()
            )));
        }
        let entries = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        Self::general(ComplexMatrix::new(raw.n, raw.n, entries)?)
    }
}

/// One violated constraint, with how badly it is violated.
#[derive(Clone, Debug)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

/// Outcome of [`validate_model`]: empty means the model is physical.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, constraint: impl Into<String>, residual: f64) {
        self.violations.push(Violation { constraint: constraint.into(), residual });
    }
}

/// Checks every invariant of the model and reports violations with measured
/// residuals. Never errors: an unphysical model yields a failing report.
pub fn validate_model(model: &DistinguishabilityModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    match model {
        DistinguishabilityModel::Uniform { x } => {
            if !(0.0..=1.0).contains(x) {
                report.push("uniform x within [0, 1]", if x.is_nan() { f64::NAN } else { (*x).min(0.0).abs().max(*x - 1.0) });
            }
        }
        DistinguishabilityModel::General { overlaps } => {
            let n = overlaps.rows();
            let mut herm = 0.0_f64;
            let mut diag = 0.0_f64;
            let mut magnitude = 0.0_f64;
            for i in 0..n {
                diag = diag.max((overlaps.get(i, i) - C64::ONE).norm());
                for j in 0..n {
                    herm = herm.max((overlaps.get(i, j) - overlaps.get(j, i).conj()).norm());
                    magnitude = magnitude.max(overlaps.get(i, j).norm() - 1.0);
                }
            }
            if herm > HERMITICITY_TOL {
                report.push("S Hermitian", herm);
            }
            if diag > UNIT_DIAGONAL_TOL {
                report.push("S_ii = 1", diag);
            }
            if magnitude > 0.0 {
                report.push("|S_ij| <= 1", magnitude);
            }
            // PSD only makes sense for a Hermitian matrix; symmetrize first
            // so the eigensolver sees what the model intends.
            if n > 0 {
                let min_eig = min_eigenvalue_hermitian(overlaps);
                if min_eig < PSD_EIGENVALUE_FLOOR {
                    report.push("S positive semidefinite", min_eig);
                }
            }
        }
    }
    report
}

fn min_eigenvalue_hermitian(s: &ComplexMatrix) -> f64 {
    let n = s.rows();
    let m = DMatrix::from_fn(n, n, |r, c| {
        let avg = 0.5 * (s.get(r, c) + s.get(c, r).conj());
        Complex::new(avg.re, avg.im)
    });
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &e| acc.min(e))
}

/// The weight a permutation picks up in the exact probability sum:
/// `prod_j S[sigma(j)][j]`. For the uniform model this is `x^d` with `d`
/// the number of displaced elements.
pub fn overlap_weight(model: &DistinguishabilityModel, sigma: &Permutation) -> Result<C64> {
    if let Some(dim) = model.dimension() {
        if dim != sigma.len() {
            return Err(Error::InvalidInput(format!(
                "permutation of length {} vs overlap matrix of dimension {dim}",
                sigma.len()
            )));
        }
    }
    match model {
        DistinguishabilityModel::Uniform { x } => {
            Ok(C64::new(x.powi(sigma.displaced() as i32), 0.0))
        }
        DistinguishabilityModel::General { overlaps } => {
            let mut prod = C64::ONE;
            for j in 0..sigma.len() {
                prod *= overlaps.get(sigma.apply(j), j);
            }
            Ok(prod)
        }
    }
}

/// Internal-state vectors whose Gram matrix is `S`, via a semidefinite
/// Cholesky factorization with zero-pivot tolerance. Used by the Fock-space
/// oracle to realize a general overlap model physically.
pub fn gram_vectors(s: &ComplexMatrix) -> Result<Vec<Vec<C64>>> {
    if !s.is_square() {
        return Err(Error::InvalidDimension("Gram factorization needs a square matrix".into()));
    }
    let n = s.rows();
    // lower-triangular L with S = L L^dagger; a pivot may hit zero on
    // semidefinite input (e.g. all photons identical), which is fine.
    let mut l = vec![C64::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if sum.re < -1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "overlap matrix is not positive semidefinite (pivot {})",
                        sum.re
                    )));
                }
                l[i * n + i] = C64::new(sum.re.max(0.0).sqrt(), 0.0);
            } else {
                let pivot = l[j * n + j].re;
                l[i * n + j] = if pivot > 1e-12 { sum / pivot } else { C64::ZERO };
            }
        }
    }
    // v_i[a] = conj(L[i][a]) gives <v_i|v_j> = S_ij with the physics
    // convention of conjugate-linear first arguments.
    Ok((0..n)
        .map(|i| (0..n).map(|a| l[i * n + a].conj()).collect())
        .collect())
}
