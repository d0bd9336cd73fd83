//! The probability engines: exact, truncated, and the truncation-error
//! calculus.
//!
//! The exact engine sums `overlap_weight(sigma) * Perm(M * conj(M_sigma))`
//! over all `n!` permutations. The truncated engine evaluates the same sum
//! grouped by displaced-element count `j`, using the column-subset expansion
//! of the permanent: for each choice of `j` displaced columns `rho`, each
//! derangement of `rho`, and each size-`j` row subset, a small complex
//! permanent pairs with the nonnegative permanent of the complementary
//! single-photon block. Truncating at `k` keeps orders `j <= k`.
//!
//! Orders are indexed by the displaced count, so `k = 0` and `k = 1`
//! coincide (no permutation displaces exactly one element). Callers that
//! label the distinguishable baseline "k = 1" get the same number.
//!
//! Per-order totals are recorded as polynomial coefficients `c_j`,
//! independent of `x`, so one engine pass serves every `(x, k)` pair.

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{
    enumerate_derangements, enumerate_permutations, enumerate_subsets, subfactorial, term_count,
    term_count_approx,
};
use crate::distinguishability::{overlap_weight, DistinguishabilityModel};
use crate::error::{Error, Result};
use crate::linalg::{extract_submatrix, haar_unitary, ComplexMatrix, OutcomePattern, C64};
use crate::permanent::{ryser_complex, ryser_real};

/// Tolerance on the imaginary residue of sums that must be real.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Probabilities this far below zero are clamped; anything lower is an error
/// (exact engine) or a logged warning (truncated engine).
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-9;

/// Cost limits for the engines. `DISTSAMPLER_MAX_STEPS` in the CLI maps onto
/// `max_permanents`.
#[derive(Clone, Copy, Debug)]
pub struct CostGuard {
    /// Exact engine refuses more photons than this (`n!` permutations).
    pub max_exact_photons: usize,
    /// Truncated engine refuses once `sum_j C(n,j)^2 !j` exceeds this.
    pub max_permanents: u64,
}

impl Default for CostGuard {
    fn default() -> Self {
        Self { max_exact_photons: 9, max_permanents: 100_000_000 }
    }
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "probability engines need a square submatrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.rows())
}

/// Exact detection probability: the full permutation sum with overlap
/// weights. Works for both uniform-`x` and general overlap models.
pub fn exact_probability(m: &ComplexMatrix, model: &DistinguishabilityModel) -> Result<f64> {
    exact_probability_guarded(m, model, &CostGuard::default())
}

pub fn exact_probability_guarded(
    m: &ComplexMatrix,
    model: &DistinguishabilityModel,
    guard: &CostGuard,
) -> Result<f64> {
    let n = require_square(m)?;
    if let Some(dim) = model.dimension() {
        if dim != n {
            return Err(Error::InvalidInput(format!(
                "overlap matrix of dimension {dim} vs {n} photons"
            )));
        }
    }
    if n > guard.max_exact_photons {
        return Err(Error::CostGuard(format!(
            "exact engine limited to {} photons, asked for {n}",
            guard.max_exact_photons
        )));
    }
    let mut buf = vec![C64::ZERO; n * n];
    let mut total = C64::ZERO;
    for sigma in enumerate_permutations(n) {
        let weight = overlap_weight(model, &sigma)?;
        if weight == C64::ZERO {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                buf[r * n + c] = m.get(r, c) * m.get(r, sigma.apply(c)).conj();
            }
        }
        total += weight * ryser_complex(n, &buf);
    }
    finalize_real_probability(total, "exact probability")
}

fn finalize_real_probability(total: C64, what: &str) -> Result<f64> {
    if total.im.abs() > IMAG_RESIDUE_TOL * total.norm().max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "{what} has imaginary residue {:.3e}",
            total.im
        )));
    }
    if total.re < -NEGATIVE_PROBABILITY_TOL {
        return Err(Error::NumericalInconsistency(format!(
            "{what} is negative: {:.3e}",
            total.re
        )));
    }
    Ok(total.re.max(0.0))
}

/// One truncation order: the polynomial coefficient `c_j` and the number of
/// complex permanents spent on it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrderTerm {
    pub order: usize,
    pub coefficient: f64,
    pub permanents: u64,
}

/// Polynomial coefficients `c_j` for `j in {0, 2, .., j_max}`, via the
/// factorized order-by-order expansion.
pub fn coefficients(m: &ComplexMatrix, j_max: usize) -> Result<Vec<OrderTerm>> {
    coefficients_guarded(m, j_max, &CostGuard::default())
}

pub fn coefficients_guarded(
    m: &ComplexMatrix,
    j_max: usize,
    guard: &CostGuard,
) -> Result<Vec<OrderTerm>> {
    let n = require_square(m)?;
    if j_max > n {
        return Err(Error::InvalidInput(format!(
            "order {j_max} exceeds photon count {n}"
        )));
    }
    let budget = match term_count(n, j_max) {
        Ok(tc) => tc.permanents,
        Err(Error::Overflow(_)) => u64::MAX,
        Err(e) => return Err(e),
    };
    if budget > guard.max_permanents {
        return Err(Error::CostGuard(format!(
            "order-{j_max} truncation needs {budget} permanents, budget is {}",
            guard.max_permanents
        )));
    }
    let abs2: Vec<f64> = m.entries().iter().map(|z| z.norm_sqr()).collect();
    let mut out = Vec::new();
    for j in truncation_orders(j_max) {
        out.push(order_term(m, &abs2, j)?);
    }
    Ok(out)
}

/// The orders that actually occur: `0, 2, 3, ..., j_max` (no permutation
/// displaces exactly one element).
pub fn truncation_orders(j_max: usize) -> impl Iterator<Item = usize> {
    std::iter::once(0).chain(2..=j_max)
}

fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for &s in subset {
        mask[s] = true;
    }
    (0..n).filter(|&i| !mask[i]).collect()
}

fn derangements_flat(j: usize) -> (usize, Vec<u8>) {
    let mut flat = Vec::new();
    let mut count = 0;
    for d in enumerate_derangements(j) {
        count += 1;
        flat.extend(d.as_slice().iter().map(|&v| v as u8));
    }
    (count, flat)
}

fn order_term(m: &ComplexMatrix, abs2: &[f64], j: usize) -> Result<OrderTerm> {
    let n = m.rows();
    let rhos: Vec<Vec<usize>> = enumerate_subsets(n, j).collect();
    let (n_der, ders) = derangements_flat(j);
    let per_rho = |rho: &Vec<usize>| -> C64 {
        let rho_bar = complement(n, rho);
        let nb = n - j;
        let mut block = vec![C64::ZERO; j * j];
        let mut dist = vec![0.0_f64; nb * nb];
        let mut acc = C64::ZERO;
        for rows in enumerate_subsets(n, j) {
            let rows_bar = complement(n, &rows);
            for (ri, &r) in rows_bar.iter().enumerate() {
                for (ci, &c) in rho_bar.iter().enumerate() {
                    dist[ri * nb + ci] = abs2[r * n + c];
                }
            }
            let dist_perm = ryser_real(nb, &dist);
            let mut interfering = C64::ZERO;
            for d in 0..n_der {
                let der = &ders[d * j..(d + 1) * j];
                for (ri, &r) in rows.iter().enumerate() {
                    for (ci, &c) in rho.iter().enumerate() {
                        let paired = rho[der[ci] as usize];
                        block[ri * j + ci] = m.get(r, c) * m.get(r, paired).conj();
                    }
                }
                interfering += ryser_complex(j, &block);
            }
            acc += dist_perm * interfering;
        }
        acc
    };
    // parallel over column subsets when the order is heavy; either path
    // produces the identical ordered reduction
    let units = (rhos.len() as u64)
        .saturating_mul(rhos.len() as u64)
        .saturating_mul(n_der as u64);
    let partials: Vec<C64> = if units > 4096 {
        rhos.par_iter().map(per_rho).collect()
    } else {
        rhos.iter().map(per_rho).collect()
    };
    let total: C64 = partials.into_iter().sum();
    if total.im.abs() > IMAG_RESIDUE_TOL * total.norm().max(1.0) {
        return Err(Error::NumericalInconsistency(format!(
            "order-{j} coefficient has imaginary residue {:.3e}",
            total.im
        )));
    }
    let permanents = (rhos.len() as u64) * (rhos.len() as u64) * subfactorial(j)?;
    Ok(OrderTerm { order: j, coefficient: total.re, permanents })
}

/// One order's contribution to a truncated probability.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Contribution {
    /// Displaced-element count `j`.
    pub order: usize,
    /// Polynomial coefficient `c_j` (independent of `x`).
    pub coefficient: f64,
    /// `c_j * x^j`.
    pub term: f64,
}

/// A truncated probability with its per-order breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct TruncationResult {
    /// Truncation order: maximum displaced-element count included.
    pub k: usize,
    /// The truncated probability `P_k = sum_j c_j x^j`.
    pub p_k: f64,
    /// Per-order contributions, for `j in {0, 2, .., k}`.
    pub contributions: Vec<Contribution>,
    /// Complex permanents evaluated.
    pub permanents_evaluated: u64,
}

/// Truncated probability for the uniform-`x` model, via the factorized
/// order-by-order expansion. `k = n` reproduces the exact engine.
pub fn truncated_probability(m: &ComplexMatrix, x: f64, k: usize) -> Result<TruncationResult> {
    truncated_probability_guarded(m, x, k, &CostGuard::default())
}

pub fn truncated_probability_guarded(
    m: &ComplexMatrix,
    x: f64,
    k: usize,
    guard: &CostGuard,
) -> Result<TruncationResult> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "indistinguishability x={x} outside [0, 1]"
        )));
    }
    let terms = coefficients_guarded(m, k, guard)?;
    let mut p_k = 0.0;
    let mut permanents = 0;
    let mut contributions = Vec::with_capacity(terms.len());
    for t in &terms {
        let term = t.coefficient * x.powi(t.order as i32);
        p_k += term;
        permanents += t.permanents;
        contributions.push(Contribution { order: t.order, coefficient: t.coefficient, term });
    }
    if let Some(c0) = contributions.first() {
        // negative truncations beyond tolerance (relative to the
        // distinguishable baseline c_0) are suspicious but not fatal
        if p_k < -NEGATIVE_PROBABILITY_TOL * c0.coefficient.abs().max(f64::MIN_POSITIVE) {
            log::warn!(
                "truncated probability P_{k} = {p_k:.3e} is negative beyond tolerance \
                 (c_0 = {:.3e}); treat as 0 when sampling",
                c0.coefficient
            );
        }
    }
    Ok(TruncationResult { k, p_k, contributions, permanents_evaluated: permanents })
}

/// The analytic truncation-error bound `x^{k+1} / (2 sqrt(1 - x^2))`,
/// relative to the baseline `P_0 = n!/N^n`. Diverges as `x -> 1`.
pub fn error_bound(k: usize, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "error bound needs 0 <= x < 1, got {x}"
        )));
    }
    Ok(x.powi(k as i32 + 1) / (2.0 * (1.0 - x * x).sqrt()))
}

/// Baseline probability scale `n! / N^n`.
pub fn baseline_p0(n: usize, n_modes: usize) -> f64 {
    let ln: f64 = (1..=n).map(|i| (i as f64).ln()).sum::<f64>()
        - n as f64 * (n_modes as f64).ln();
    ln.exp()
}

/// Resolution of "which order do I need": the minimal `k` meeting a target
/// relative error, plus the three efficiency criteria evaluated at it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorBudget {
    pub n: usize,
    pub x: f64,
    pub epsilon: f64,
    /// Smallest `k` with `error_bound(k, x) <= epsilon`.
    pub k_required: usize,
    /// Whether that order stays below the photon number (`k < n`), i.e. the
    /// truncation genuinely helps.
    pub feasible: bool,
    /// Smallest `k` keeping only the first error term `x^{k+1}/2` under
    /// `epsilon`.
    pub first_term_k: usize,
    pub first_term_feasible: bool,
    /// Estimated Ryser steps for the order actually computable
    /// (`min(k_required, n)`), in floating point: exact counts overflow u64
    /// long before this becomes interesting.
    pub estimated_steps: f64,
    /// Steps for one `n x n` complex permanent, `2^n n`.
    pub permanent_budget_steps: f64,
    /// Whether the truncation undercuts a single full-size permanent.
    pub within_permanent_budget: bool,
    /// Baseline `n!/N^n`; filled once a mode count is known.
    pub p0: Option<f64>,
}

impl ErrorBudget {
    /// Attaches the baseline probability scale for an `N`-mode device.
    pub fn with_baseline(mut self, n_modes: usize) -> Self {
        self.p0 = Some(baseline_p0(self.n, n_modes));
        self
    }
}

fn smallest_order(x: f64, epsilon: f64, single_term: bool) -> usize {
    if x == 0.0 {
        return 0;
    }
    let target = if single_term {
        2.0 * epsilon
    } else {
        2.0 * epsilon * (1.0 - x * x).sqrt()
    };
    if target >= x {
        return 0;
    }
    // x^{k+1} <= target  =>  k >= ln(target)/ln(x) - 1; then nudge for
    // floating-point edge cases
    let mut k = ((target.ln() / x.ln()) - 1.0).ceil().max(0.0) as usize;
    let metric = |k: usize| x.powi(k as i32 + 1) / if single_term { 2.0 } else { 2.0 * (1.0 - x * x).sqrt() };
    while k > 0 && metric(k - 1) <= epsilon {
        k -= 1;
    }
    while metric(k) > epsilon {
        k += 1;
    }
    k
}

/// Smallest truncation order meeting a target relative error, with the
/// solid (order below photon number), dashed (single-term), and dash-dotted
/// (cheaper than one full permanent) criteria.
pub fn required_order(x: f64, epsilon: f64, n: usize) -> Result<ErrorBudget> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "required order needs 0 <= x < 1, got {x}"
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "target error must be positive, got {epsilon}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("photon count must be >= 1".into()));
    }
    let k_required = smallest_order(x, epsilon, false);
    let first_term_k = smallest_order(x, epsilon, true);
    let computable = k_required.min(n);
    let estimated_steps = term_count_approx(n, computable).steps;
    let permanent_budget_steps = (n as f64) * (n as f64).exp2();
    Ok(ErrorBudget {
        n,
        x,
        epsilon,
        k_required,
        feasible: k_required < n,
        first_term_k,
        first_term_feasible: first_term_k < n,
        estimated_steps,
        permanent_budget_steps,
        within_permanent_budget: estimated_steps <= permanent_budget_steps,
        p0: None,
    })
}

/// Solves `error_bound(k, x) = epsilon` for `x` by bisection: the
/// indistinguishability above which order `k` no longer meets the target.
pub fn threshold_indistinguishability(k: usize, epsilon: f64) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "target error must be positive, got {epsilon}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if error_bound(k, mid)? <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One cell of the ensemble truncation-error scan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanRow {
    pub x: f64,
    pub k: usize,
    /// Root-mean-square of `|P_k - P| / P_0` over the ensemble.
    pub rms_rel_error: f64,
    /// Mean of the same quantity; reported alongside because the two
    /// statistics differ noticeably on this heavy-tailed ratio.
    pub mean_abs_rel_error: f64,
    pub trials: usize,
}

/// Ensemble truncation-error scan over Haar-random interferometers.
#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub n: usize,
    pub n_modes: usize,
    pub trials: usize,
    pub seed: u64,
    /// Baseline `n!/N^n` used as the error denominator.
    pub p0: f64,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    /// CSV with the fixed header `x,k,rms_rel_error,trials`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,k,rms_rel_error,trials\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.x, row.k, row.rms_rel_error, row.trials));
        }
        out
    }
}

/// Draws `trials` Haar unitaries, takes the first-`n`-modes pattern, and
/// tabulates the relative truncation error `|P_k - P| / P_0` for every
/// `(x, k)` pair. Deterministic for a fixed seed, regardless of thread
/// count.
///
/// For the uniform model the exact probability equals the order-`n`
/// polynomial, so each trial costs one coefficient pass; the full
/// permutation-sum route is pinned against this one separately.
pub fn ensemble_error_scan(
    n: usize,
    n_modes: usize,
    x_grid: &[f64],
    k_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ScanTable> {
    if n == 0 || n > 7 {
        return Err(Error::CostGuard(format!(
            "ensemble scan is a desk-scale harness (1 <= n <= 7), got n={n}"
        )));
    }
    if n_modes < n {
        return Err(Error::InvalidInput(format!(
            "need at least {n} modes, got {n_modes}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    for &x in x_grid {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!("grid point x={x} outside [0, 1]")));
        }
    }
    for &k in k_list {
        if k > n {
            return Err(Error::InvalidInput(format!(
                "truncation order {k} exceeds photon count {n}"
            )));
        }
    }
    let trial_seeds = derive_seeds(seed, trials);
    let guard = CostGuard::default();
    let per_trial: Vec<Vec<f64>> = trial_seeds
        .par_iter()
        .map(|&ts| -> Result<Vec<f64>> {
            let u = haar_unitary(n_modes, ts)?;
            let pattern = OutcomePattern::first_modes(n, n_modes)?;
            let m = extract_submatrix(&u, &pattern)?;
            let terms = coefficients_guarded(&m, n, &guard)?;
            let mut errs = Vec::with_capacity(x_grid.len() * k_list.len());
            for &x in x_grid {
                let p_exact: f64 =
                    terms.iter().map(|t| t.coefficient * x.powi(t.order as i32)).sum();
                for &k in k_list {
                    let p_k: f64 = terms
                        .iter()
                        .filter(|t| t.order <= k)
                        .map(|t| t.coefficient * x.powi(t.order as i32))
                        .sum();
                    errs.push(p_k - p_exact);
                }
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;

    let p0 = baseline_p0(n, n_modes);
    let cells = x_grid.len() * k_list.len();
    let mut rows = Vec::with_capacity(cells);
    for (xi, &x) in x_grid.iter().enumerate() {
        for (ki, &k) in k_list.iter().enumerate() {
            let idx = xi * k_list.len() + ki;
            let mut sq = 0.0;
            let mut abs = 0.0;
            for trial in &per_trial {
                let rel = trial[idx] / p0;
                sq += rel * rel;
                abs += rel.abs();
            }
            rows.push(ScanRow {
                x,
                k,
                rms_rel_error: (sq / trials as f64).sqrt(),
                mean_abs_rel_error: abs / trials as f64,
                trials,
            });
        }
    }
    Ok(ScanTable { n, n_modes, trials, seed, p0, rows })
}

/// One row of the coefficient-magnitude scan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoefficientScanRow {
    pub order: usize,
    /// RMS of `|c_j| N^n / n!` over the ensemble.
    pub rms_normalized: f64,
    /// Mean of the same quantity.
    pub mean_normalized: f64,
    /// The large-`n` reference value 1/2.
    pub reference: f64,
    pub trials: usize,
}

/// Coefficient-magnitude scan over Haar-random interferometers.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientScan {
    pub n: usize,
    pub n_modes: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<CoefficientScanRow>,
}

impl CoefficientScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,rms_c_norm,mean_c_norm,reference,trials\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.order, row.rms_normalized, row.mean_normalized, row.reference, row.trials
            ));
        }
        out
    }
}

/// Tabulates the normalized polynomial-coefficient magnitudes
/// `|c_j| N^n / n!` over Haar-random unitaries. Deterministic under seed.
pub fn coefficient_scan(
    n: usize,
    n_modes: usize,
    trials: usize,
    seed: u64,
) -> Result<CoefficientScan> {
    coefficient_scan_guarded(n, n_modes, trials, seed, &CostGuard::default())
}

pub fn coefficient_scan_guarded(
    n: usize,
    n_modes: usize,
    trials: usize,
    seed: u64,
    guard: &CostGuard,
) -> Result<CoefficientScan> {
    if n == 0 {
        return Err(Error::InvalidInput("photon count must be >= 1".into()));
    }
    if n_modes < n {
        return Err(Error::InvalidInput(format!(
            "need at least {n} modes, got {n_modes}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if trials == 1 {
        log::warn!("coefficient scan with a single trial: expect high variance");
    }
    let trial_seeds = derive_seeds(seed, trials);
    let per_trial: Vec<Vec<f64>> = trial_seeds
        .par_iter()
        .map(|&ts| -> Result<Vec<f64>> {
            let u = haar_unitary(n_modes, ts)?;
            let pattern = OutcomePattern::first_modes(n, n_modes)?;
            let m = extract_submatrix(&u, &pattern)?;
            let terms = coefficients_guarded(&m, n, guard)?;
            Ok(terms.iter().map(|t| t.coefficient).collect())
        })
        .collect::<Result<_>>()?;

    let scale = 1.0 / baseline_p0(n, n_modes);
    let orders: Vec<usize> = truncation_orders(n).collect();
    let mut rows = Vec::with_capacity(orders.len());
    for (idx, &order) in orders.iter().enumerate() {
        let mut sq = 0.0;
        let mut abs = 0.0;
        for trial in &per_trial {
            let norm = (trial[idx] * scale).abs();
            sq += norm * norm;
            abs += norm;
        }
        rows.push(CoefficientScanRow {
            order,
            rms_normalized: (sq / trials as f64).sqrt(),
            mean_normalized: abs / trials as f64,
            reference: 0.5,
            trials,
        });
    }
    Ok(CoefficientScan { n, n_modes, trials, seed, rows })
}

/// Per-trial seeds derived from the master seed; stable across runs and
/// thread counts.
pub fn derive_seeds(seed: u64, count: usize) -> Vec<u64> {
    use rand::{Rng as _, SeedableRng as _};
    let mut seeder = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| seeder.random()).collect()
}
