//! Sampling output patterns from the (truncated) outcome distribution.
//!
//! [`mh_sample`] runs a Metropolis-Hastings chain over collision-free output
//! patterns (size-`n` subsets of the `N` modes) with the truncated
//! probability as its unnormalized target; negative truncated values count
//! as zero weight. Both proposals are symmetric, so the acceptance ratio is
//! just the target ratio. [`exact_sampler`] enumerates the whole pattern
//! space and inverse-CDF samples it; it is the small-instance reference the
//! chain is validated against (via [`tvd`]).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinatorics::{binomial, enumerate_subsets};
use crate::distinguishability::DistinguishabilityModel;
use crate::error::{Error, Result};
use crate::linalg::{extract_submatrix, ComplexMatrix, OutcomePattern};
use crate::probability::{exact_probability_guarded, truncated_probability_guarded, CostGuard};

/// Proposal move for the Metropolis-Hastings chain. Both are symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Proposal {
    /// Swap one occupied output mode for one unoccupied mode, both uniform.
    SingleModeSwap,
    /// Propose a fresh uniform size-`n` subset, independent of the current
    /// state.
    UniformPattern,
}

/// Chain parameters. Every chain is bit-reproducible for a fixed seed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChainConfig {
    /// Steps discarded before any sample is kept.
    pub burn_in: usize,
    /// Steps between kept samples (>= 1).
    pub thinning: usize,
    pub proposal: Proposal,
    pub seed: u64,
    /// How many random initial states to try before declaring the chain
    /// stuck on an all-zero target.
    pub init_retries: usize,
}

impl ChainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            burn_in: 1_000,
            thinning: 10,
            proposal: Proposal::SingleModeSwap,
            seed,
            init_retries: 1_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidInput("thinning must be >= 1".into()));
        }
        Ok(())
    }
}

/// Diagnostics from one chain run.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ChainStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Target evaluations that missed the memo cache, i.e. distinct
    /// patterns actually costed.
    pub target_evaluations: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

/// Samples plus chain diagnostics.
#[derive(Clone, Debug)]
pub struct SampleRun {
    pub samples: Vec<OutcomePattern>,
    pub stats: ChainStats,
}

/// Metropolis-Hastings over output patterns with the order-`k` truncated
/// probability as target. Patterns with nonpositive truncated value are
/// never visited and never emitted.
pub fn mh_sample(
    u: &ComplexMatrix,
    inputs: &[usize],
    x: f64,
    k: usize,
    count: usize,
    cfg: &ChainConfig,
) -> Result<SampleRun> {
    mh_sample_guarded(u, inputs, x, k, count, cfg, &CostGuard::default())
}

pub fn mh_sample_guarded(
    u: &ComplexMatrix,
    inputs: &[usize],
    x: f64,
    k: usize,
    count: usize,
    cfg: &ChainConfig,
    guard: &CostGuard,
) -> Result<SampleRun> {
    cfg.validate()?;
    if !u.is_square() {
        return Err(Error::InvalidDimension(format!(
            "interferometer must be square, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let n_modes = u.rows();
    let n = inputs.len();
    // validates the input mode list
    OutcomePattern::new(n_modes, inputs.to_vec(), inputs.to_vec())?;
    if k > n {
        return Err(Error::InvalidInput(format!(
            "truncation order {k} exceeds photon count {n}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "indistinguishability x={x} outside [0, 1]"
        )));
    }
    // dry-run one evaluation so cost-guard violations surface before the
    // chain starts
    {
        let probe = OutcomePattern::new(n_modes, inputs.to_vec(), (0..n).collect())?;
        let m = extract_submatrix(u, &probe)?;
        truncated_probability_guarded(&m, x, k, guard)?;
    }

    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut evaluations = 0u64;
    let mut target = |outputs: &[usize]| -> Result<f64> {
        if let Some(&p) = cache.get(outputs) {
            return Ok(p);
        }
        evaluations += 1;
        let pattern = OutcomePattern::new(n_modes, inputs.to_vec(), outputs.to_vec())?;
        let m = extract_submatrix(u, &pattern)?;
        let p = truncated_probability_guarded(&m, x, k, guard)?.p_k.max(0.0);
        cache.insert(outputs.to_vec(), p);
        Ok(p)
    };

    let (outputs, mut stats) = run_chain(n_modes, n, &mut target, count, cfg)?;
    stats.target_evaluations = evaluations;
    let samples = outputs
        .into_iter()
        .map(|o| OutcomePattern::new(n_modes, inputs.to_vec(), o))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleRun { samples, stats })
}

/// The chain itself, generic in the unnormalized target. Exposed to tests
/// so detailed balance can be checked on hand-built targets.
pub(crate) fn run_chain(
    n_modes: usize,
    n: usize,
    target: &mut dyn FnMut(&[usize]) -> Result<f64>,
    count: usize,
    cfg: &ChainConfig,
) -> Result<(Vec<Vec<usize>>, ChainStats)> {
    cfg.validate()?;
    if n > n_modes {
        return Err(Error::InvalidPattern(format!(
            "{n} photons exceed {n_modes} modes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = ChainStats::default();

    // find a starting pattern with positive weight
    let mut current = random_subset(&mut rng, n_modes, n);
    let mut current_weight = target(&current)?;
    let mut tries = 0;
    while current_weight <= 0.0 {
        tries += 1;
        if tries > cfg.init_retries {
            return Err(Error::ChainStuck(format!(
                "no pattern with positive weight found in {} tries",
                cfg.init_retries
            )));
        }
        current = random_subset(&mut rng, n_modes, n);
        current_weight = target(&current)?;
    }

    let mut samples = Vec::with_capacity(count);
    let total_steps = cfg.burn_in + count.saturating_mul(cfg.thinning);
    let mut kept = 0;
    for step in 0..total_steps {
        if kept == count {
            break;
        }
        stats.proposed += 1;
        let proposed = match cfg.proposal {
            Proposal::UniformPattern => Some(random_subset(&mut rng, n_modes, n)),
            Proposal::SingleModeSwap => swap_move(&mut rng, &current, n_modes),
        };
        if let Some(candidate) = proposed {
            let weight = target(&candidate)?;
            let accept = weight > 0.0
                && (weight >= current_weight
                    || rng.random::<f64>() < weight / current_weight);
            if accept {
                current = candidate;
                current_weight = weight;
                stats.accepted += 1;
            }
        } else {
            // no move available (n == N): the chain self-loops
            stats.accepted += 1;
        }
        if step >= cfg.burn_in && (step - cfg.burn_in + 1).is_multiple_of(cfg.thinning) {
            samples.push(current.clone());
            kept += 1;
        }
    }
    Ok((samples, stats))
}

fn random_subset(rng: &mut ChaCha8Rng, n_modes: usize, n: usize) -> Vec<usize> {
    // partial Fisher-Yates
    let mut pool: Vec<usize> = (0..n_modes).collect();
    for i in 0..n {
        let j = rng.random_range(i..n_modes);
        pool.swap(i, j);
    }
    let mut subset = pool[..n].to_vec();
    subset.sort_unstable();
    subset
}

fn swap_move(rng: &mut ChaCha8Rng, current: &[usize], n_modes: usize) -> Option<Vec<usize>> {
    let n = current.len();
    if n == n_modes || n == 0 {
        return None;
    }
    let occupied_idx = rng.random_range(0..n);
    let mut unoccupied: Vec<usize> = Vec::with_capacity(n_modes - n);
    let mut members = vec![false; n_modes];
    for &m in current {
        members[m] = true;
    }
    for (m, &used) in members.iter().enumerate() {
        if !used {
            unoccupied.push(m);
        }
    }
    let incoming = unoccupied[rng.random_range(0..unoccupied.len())];
    let mut next = current.to_vec();
    next[occupied_idx] = incoming;
    next.sort_unstable();
    Some(next)
}

/// Enumerates every collision-free pattern, computes its exact probability,
/// normalizes over the enumerated set, and samples by inverse CDF.
pub fn exact_sampler(
    u: &ComplexMatrix,
    inputs: &[usize],
    model: &DistinguishabilityModel,
    count: usize,
    seed: u64,
) -> Result<Vec<OutcomePattern>> {
    exact_sampler_guarded(u, inputs, model, count, seed, &CostGuard::default())
}

pub fn exact_sampler_guarded(
    u: &ComplexMatrix,
    inputs: &[usize],
    model: &DistinguishabilityModel,
    count: usize,
    seed: u64,
    guard: &CostGuard,
) -> Result<Vec<OutcomePattern>> {
    if !u.is_square() {
        return Err(Error::InvalidDimension(format!(
            "interferometer must be square, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let n_modes = u.rows();
    let n = inputs.len();
    OutcomePattern::new(n_modes, inputs.to_vec(), inputs.to_vec())?;
    let space = binomial(n_modes, n)?;
    if space > 100_000 {
        return Err(Error::CostGuard(format!(
            "exact sampler would enumerate {space} patterns (limit 100000)"
        )));
    }
    let support: Vec<Vec<usize>> = enumerate_subsets(n_modes, n).collect();
    let mut weights = Vec::with_capacity(support.len());
    let mut total = 0.0;
    for outputs in &support {
        let pattern = OutcomePattern::new(n_modes, inputs.to_vec(), outputs.clone())?;
        let m = extract_submatrix(u, &pattern)?;
        let p = exact_probability_guarded(&m, model, guard)?;
        total += p;
        weights.push(p);
    }
    if total <= 0.0 {
        return Err(Error::InvalidInput(
            "every collision-free pattern has zero probability".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let r: f64 = rng.random();
        let idx = cumulative.partition_point(|&c| c < r).min(support.len() - 1);
        samples.push(OutcomePattern::new(
            n_modes,
            inputs.to_vec(),
            support[idx].clone(),
        )?);
    }
    Ok(samples)
}

/// Total variation distance `(1/2) sum |a_i - b_i|` between two
/// distributions over the same enumerated support.
pub fn tvd(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "distributions over different supports ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Histogram of samples against an enumerated support (sorted patterns), as
/// a probability vector aligned with `support`.
pub fn empirical_distribution(
    samples: &[OutcomePattern],
    support: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let index: HashMap<&[usize], usize> = support
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut counts = vec![0u64; support.len()];
    for sample in samples {
        let idx = index.get(sample.output_modes()).ok_or_else(|| {
            Error::InvalidInput(format!(
                "sample {:?} outside the enumerated support",
                sample.output_modes()
            ))
        })?;
        counts[*idx] += 1;
    }
    let total = samples.len().max(1) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}
