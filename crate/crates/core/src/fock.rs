//! Brute-force multiphoton Fock-space evolution with explicit internal
//! labels.
//!
//! This is the first-principles oracle for the probability engines: photons
//! carry an internal state (one shared component plus mutually orthogonal
//! labels) so that any pairwise overlap structure can be realized physically,
//! the interferometer acts on spatial modes only, and detectors are
//! label-blind. No permanents anywhere; just creation-operator algebra on a
//! dense amplitude map. Deliberately slow and guarded to tiny instances.

use std::collections::BTreeMap;

use crate::distinguishability::gram_vectors;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// State-space guards: the expansion is exponential in every direction.
pub const MAX_ORACLE_PHOTONS: usize = 4;
pub const MAX_ORACLE_MODES: usize = 6;

/// A photon configuration: one `(spatial mode, internal label)` pair per
/// photon, kept sorted so equal multisets share a key.
type Config = Vec<(u16, u16)>;

/// An `n`-photon state over `(spatial mode, internal label)` fine modes,
/// stored as a map from occupation configuration to amplitude.
#[derive(Clone, Debug)]
pub struct LabeledFockState {
    n_photons: usize,
    amplitudes: BTreeMap<Config, C64>,
}

impl LabeledFockState {
    pub fn photons(&self) -> usize {
        self.n_photons
    }

    /// Total norm `sum |amplitude|^2`; 1 for any properly prepared state.
    pub fn total_probability(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Largest spatial mode index carrying a photon.
    fn max_mode(&self) -> usize {
        self.amplitudes
            .keys()
            .flat_map(|cfg| cfg.iter().map(|&(m, _)| m as usize))
            .max()
            .unwrap_or(0)
    }

    /// Relocates photon `i` from spatial mode `i` to `modes[i]`, for inputs
    /// that are not the first `n` modes.
    pub fn with_input_modes(&self, modes: &[usize]) -> Result<Self> {
        if modes.len() != self.n_photons {
            return Err(Error::InvalidPattern(format!(
                "{} input modes for {} photons",
                modes.len(),
                self.n_photons
            )));
        }
        let mut sorted = modes.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPattern(format!(
                "input modes must be distinct, got {modes:?}"
            )));
        }
        let mut amplitudes = BTreeMap::new();
        for (config, &amp) in &self.amplitudes {
            let mut remapped: Config = config
                .iter()
                .map(|&(m, l)| {
                    let m = m as usize;
                    if m >= modes.len() {
                        return Err(Error::InvalidPattern(format!(
                            "state occupies mode {m} outside the remap table"
                        )));
                    }
                    Ok((modes[m] as u16, l))
                })
                .collect::<Result<_>>()?;
            remapped.sort_unstable();
            amplitudes.insert(remapped, amp);
        }
        Ok(Self { n_photons: self.n_photons, amplitudes })
    }

    fn from_internal_vectors(vectors: &[Vec<C64>]) -> Self {
        let n = vectors.len();
        let mut amplitudes = BTreeMap::new();
        let mut labels = vec![0usize; n];
        // walk the cartesian product of per-photon label choices
        loop {
            let mut amp = C64::ONE;
            for (photon, &label) in labels.iter().enumerate() {
                amp *= vectors[photon][label];
            }
            if amp != C64::ZERO {
                let config: Config =
                    labels.iter().enumerate().map(|(photon, &l)| (photon as u16, l as u16)).collect();
                amplitudes.insert(config, amp);
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return Self { n_photons: n, amplitudes };
                }
                labels[pos] += 1;
                if labels[pos] < vectors[pos].len() {
                    break;
                }
                labels[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// Prepares `n` photons, photon `i` in spatial mode `i`, each in the
/// internal state `sqrt(x)|common> + sqrt(1-x)|label_i>` so every pairwise
/// overlap equals `x`.
pub fn prepare_input(n: usize, x: f64) -> Result<LabeledFockState> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "indistinguishability x={x} outside [0, 1]"
        )));
    }
    if n > MAX_ORACLE_PHOTONS {
        return Err(Error::CostGuard(format!(
            "oracle limited to {MAX_ORACLE_PHOTONS} photons, asked for {n}"
        )));
    }
    let common = x.sqrt();
    let distinct = (1.0 - x).sqrt();
    let vectors: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut v = vec![C64::ZERO; n + 1];
            v[0] = C64::new(common, 0.0);
            v[i + 1] = C64::new(distinct, 0.0);
            v
        })
        .collect();
    Ok(LabeledFockState::from_internal_vectors(&vectors))
}

/// Prepares photons whose internal states realize an arbitrary Gram matrix
/// of overlaps, via its semidefinite Cholesky factorization.
pub fn prepare_input_general(s: &ComplexMatrix) -> Result<LabeledFockState> {
    let n = s.rows();
    if n > MAX_ORACLE_PHOTONS {
        return Err(Error::CostGuard(format!(
            "oracle limited to {MAX_ORACLE_PHOTONS} photons, asked for {n}"
        )));
    }
    let vectors = gram_vectors(s)?;
    Ok(LabeledFockState::from_internal_vectors(&vectors))
}

/// Applies the interferometer to the spatial modes (labels ride along
/// untouched), then returns the probability of detecting the photon pattern
/// `outputs`, summed over internal labels. `outputs` lists one mode per
/// photon and may contain repeats (collision outcomes).
pub fn evolve_and_project(
    state: &LabeledFockState,
    u: &ComplexMatrix,
    outputs: &[usize],
) -> Result<f64> {
    let n = state.n_photons;
    if !u.is_square() {
        return Err(Error::InvalidDimension(format!(
            "interferometer must be square, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let n_modes = u.rows();
    if n_modes > MAX_ORACLE_MODES {
        return Err(Error::CostGuard(format!(
            "oracle limited to {MAX_ORACLE_MODES} modes, asked for {n_modes}"
        )));
    }
    if state.max_mode() >= n_modes {
        return Err(Error::InvalidPattern(format!(
            "state occupies mode {} but the interferometer has {n_modes} modes",
            state.max_mode()
        )));
    }
    if outputs.len() != n {
        return Err(Error::InvalidPattern(format!(
            "{} output modes for {n} photons",
            outputs.len()
        )));
    }
    if outputs.iter().any(|&m| m >= n_modes) {
        return Err(Error::InvalidPattern(format!(
            "output mode out of range for {n_modes} modes"
        )));
    }
    let mut target: Vec<u16> = outputs.iter().map(|&m| m as u16).collect();
    target.sort_unstable();

    let evolved = evolve(state, u);
    let mut prob = 0.0;
    for (config, amp) in &evolved {
        let spatial: Vec<u16> = config.iter().map(|&(m, _)| m).collect();
        // config is sorted by (mode, label), so the mode list is sorted too
        if spatial == target {
            prob += amp.norm_sqr();
        }
    }
    Ok(prob)
}

/// Expands the evolved state: each creation operator on spatial mode `m`
/// becomes a superposition over all output modes, and monomials are
/// renormalized by `sqrt(q!)` per fine-mode multiplicity.
fn evolve(state: &LabeledFockState, u: &ComplexMatrix) -> BTreeMap<Config, C64> {
    let n = state.n_photons;
    let n_modes = u.rows();
    let mut monomials: BTreeMap<Config, C64> = BTreeMap::new();
    let mut scratch: Vec<(u16, u16)> = Vec::with_capacity(n);

    for (config, amp) in &state.amplitudes {
        // operator-monomial coefficient of the input configuration
        let coeff = amp / sqrt_occupancy_factorial(config);
        let mut assignment = vec![0usize; n];
        'assignments: loop {
            let mut term = coeff;
            for (photon, &(mode_in, _)) in config.iter().enumerate() {
                term *= u.get(assignment[photon], mode_in as usize);
            }
            if term != C64::ZERO {
                scratch.clear();
                for (photon, &(_, label)) in config.iter().enumerate() {
                    scratch.push((assignment[photon] as u16, label));
                }
                scratch.sort_unstable();
                *monomials.entry(scratch.clone()).or_insert(C64::ZERO) += term;
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    break 'assignments;
                }
                assignment[pos] += 1;
                if assignment[pos] < n_modes {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
        }
    }
    // convert monomial coefficients into Fock amplitudes
    let mut out = BTreeMap::new();
    for (cfg, c) in monomials {
        let a = c * sqrt_occupancy_factorial(&cfg);
        if a != C64::ZERO {
            out.insert(cfg, a);
        }
    }
    out
}

/// `prod_t sqrt(q_t!)` over the fine-mode multiplicities of a sorted
/// configuration.
fn sqrt_occupancy_factorial(config: &[(u16, u16)]) -> f64 {
    let mut factor = 1.0_f64;
    let mut run = 1u64;
    for w in config.windows(2) {
        if w[0] == w[1] {
            run += 1;
            factor *= (run as f64).sqrt();
        } else {
            run = 1;
        }
    }
    factor
}
