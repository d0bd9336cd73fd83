//! Subfactorials, rencontres numbers, and streaming enumeration of subsets,
//! derangements, and fixed-point-classified permutations.
//!
//! Counts use checked 64-bit arithmetic; anything that would wrap returns
//! [`Error::Overflow`] instead of silently corrupting a cost estimate.

use crate::error::{Error, Result};

/// A permutation of `{0..len-1}`, stored as its mapping `sigma(i) = map[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from an explicit mapping, rejecting anything that
    /// is not a bijection on `{0..len-1}`.
    pub fn from_mapping(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n {
                return Err(Error::InvalidInput(format!(
                    "permutation entry {v} out of range for length {n}"
                )));
            }
            if seen[v] {
                return Err(Error::InvalidInput(format!(
                    "permutation entry {v} repeated"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// The transposition swapping `a` and `b` on `{0..n-1}`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::InvalidInput(format!(
                "transposition ({a} {b}) out of range for length {n}"
            )));
        }
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Number of non-fixed points (elements moved by the permutation).
    pub fn displaced(&self) -> usize {
        self.map.iter().enumerate().filter(|&(i, &v)| i != v).count()
    }

    pub fn is_derangement(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i != v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }
}

/// The class of permutations of `n` elements that displace exactly `j` of
/// them (equivalently, have `n - j` fixed points).
///
/// `j = 1` is rejected: no permutation moves exactly one element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointClass {
    n: usize,
    j: usize,
}

impl FixedPointClass {
    pub fn new(n: usize, j: usize) -> Result<Self> {
        if j > n {
            return Err(Error::InvalidInput(format!(
                "displaced count {j} exceeds size {n}"
            )));
        }
        if j == 1 {
            return Err(Error::InvalidInput(
                "no permutation displaces exactly one element".into(),
            ));
        }
        Ok(Self { n, j })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn displaced(&self) -> usize {
        self.j
    }

    /// Rencontres count of this class.
    pub fn count(&self) -> Result<u64> {
        rencontres(self.n, self.j)
    }

    /// Streams every permutation in the class exactly once: each size-`j`
    /// subset of positions composed with each derangement of that subset.
    pub fn permutations(&self) -> impl Iterator<Item = Permutation> + '_ {
        let n = self.n;
        enumerate_subsets(self.n, self.j).flat_map(move |subset| {
            enumerate_derangements(subset.len()).map(move |d| {
                let mut map: Vec<usize> = (0..n).collect();
                for (slot, &pos) in subset.iter().enumerate() {
                    map[pos] = subset[d.apply(slot)];
                }
                Permutation { map }
            })
        })
    }
}

/// `n!` with overflow checking (`n <= 20` fits in 64 bits).
pub fn factorial(n: usize) -> Result<u64> {
    let mut acc: u64 = 1;
    for f in 2..=n as u64 {
        acc = acc.checked_mul(f).ok_or(Error::Overflow("factorial"))?;
    }
    Ok(acc)
}

/// Binomial coefficient `C(n, k)` with overflow checking.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // multiply before divide keeps the intermediate integral
        acc = acc
            .checked_mul((n - i) as u64)
            .ok_or(Error::Overflow("binomial"))?
            / (i as u64 + 1);
    }
    Ok(acc)
}

/// Subfactorial `!j`: the number of derangements of `j` elements, via the
/// recurrence `!j = (j-1)(!(j-1) + !(j-2))` with `!0 = 1`, `!1 = 0`.
pub fn subfactorial(j: usize) -> Result<u64> {
    match j {
        0 => return Ok(1),
        1 => return Ok(0),
        _ => {}
    }
    let (mut prev2, mut prev1): (u64, u64) = (1, 0); // !0, !1
    for m in 2..=j as u64 {
        let sum = prev1.checked_add(prev2).ok_or(Error::Overflow("subfactorial"))?;
        let next = (m - 1)
            .checked_mul(sum)
            .ok_or(Error::Overflow("subfactorial"))?;
        prev2 = prev1;
        prev1 = next;
    }
    Ok(prev1)
}

/// Rencontres number: permutations of `n` elements with exactly `n - j`
/// fixed points, i.e. `C(n, j) * !j`.
pub fn rencontres(n: usize, j: usize) -> Result<u64> {
    if j > n {
        return Err(Error::InvalidInput(format!(
            "rencontres displaced count {j} exceeds size {n}"
        )));
    }
    binomial(n, j)?
        .checked_mul(subfactorial(j)?)
        .ok_or(Error::Overflow("rencontres"))
}

/// Advances `a` to the next permutation in lexicographic order, returning
/// `false` once the last permutation has been passed.
pub(crate) fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Streams all permutations of `{0..n-1}` in lexicographic order.
pub fn enumerate_permutations(n: usize) -> Permutations {
    Permutations { state: Some((0..n).collect()) }
}

pub struct Permutations {
    state: Option<Vec<usize>>,
}

impl Iterator for Permutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.state.as_mut()?;
        let item = Permutation { map: current.clone() };
        if !next_permutation(current) {
            self.state = None;
        }
        Some(item)
    }
}

/// Streams every fixed-point-free permutation of `{0..j-1}` exactly once, in
/// lexicographic order. `j = 0` yields the single empty permutation.
pub fn enumerate_derangements(j: usize) -> Derangements {
    Derangements { inner: enumerate_permutations(j) }
}

pub struct Derangements {
    inner: Permutations,
}

impl Iterator for Derangements {
    type Item = Permutation;

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.by_ref().find(Permutation::is_derangement)
    }
}

/// Streams all size-`j` subsets of `{0..n-1}` in lexicographic order, each
/// as a strictly increasing index vector.
pub fn enumerate_subsets(n: usize, j: usize) -> Subsets {
    let state = if j <= n { Some((0..j).collect()) } else { None };
    Subsets { n, state }
}

pub struct Subsets {
    n: usize,
    state: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.state.as_mut()?;
        let item = current.clone();
        let j = current.len();
        // find the rightmost index that can still advance
        let mut i = j;
        while i > 0 {
            i -= 1;
            if current[i] < self.n - (j - i) {
                current[i] += 1;
                for l in i + 1..j {
                    current[l] = current[l - 1] + 1;
                }
                return Some(item);
            }
        }
        self.state = None;
        Some(item)
    }
}

/// Work estimate for a truncated probability at order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermCount {
    /// Exact number of complex permanent evaluations,
    /// `sum_{j<=k} C(n,j)^2 !j`.
    pub permanents: u64,
    /// Estimated Ryser step count, `sum_{j<=k} C(n,j)^2 !j 2^j j`.
    pub steps: u64,
}

/// Counts the complex permanents (and estimated Ryser steps) needed to
/// evaluate a truncation of order `k` for `n` photons.
pub fn term_count(n: usize, k: usize) -> Result<TermCount> {
    if k > n {
        return Err(Error::InvalidInput(format!(
            "truncation order {k} exceeds photon count {n}"
        )));
    }
    let mut permanents: u64 = 0;
    let mut steps: u64 = 0;
    for j in 0..=k {
        let c = binomial(n, j)?;
        let terms = c
            .checked_mul(c)
            .and_then(|c2| c2.checked_mul(subfactorial(j).ok()?))
            .ok_or(Error::Overflow("term count"))?;
        permanents = permanents
            .checked_add(terms)
            .ok_or(Error::Overflow("term count"))?;
        let per_perm = (1u64.checked_shl(j as u32))
            .and_then(|p| p.checked_mul(j as u64))
            .ok_or(Error::Overflow("term count"))?;
        steps = terms
            .checked_mul(per_perm)
            .and_then(|s| steps.checked_add(s))
            .ok_or(Error::Overflow("term count"))?;
    }
    Ok(TermCount { permanents, steps })
}

/// Same estimate in floating point, for regimes (large `n`) where the exact
/// counts overflow 64 bits.
pub fn term_count_approx(n: usize, k: usize) -> TermCount64 {
    let k = k.min(n);
    let mut permanents = 0.0_f64;
    let mut steps = 0.0_f64;
    let mut ln_binom = 0.0_f64; // ln C(n,0)
    let mut subf = 1.0_f64; // !0
    let mut subf_prev = 1.0_f64;
    for j in 0..=k {
        if j == 1 {
            subf_prev = 1.0;
            subf = 0.0;
        } else if j >= 2 {
            let next = (j as f64 - 1.0) * (subf + subf_prev);
            subf_prev = subf;
            subf = next;
        }
        if j > 0 {
            ln_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        let terms = (2.0 * ln_binom).exp() * subf;
        permanents += terms;
        steps += terms * (j as f64) * (j as f64).exp2();
    }
    TermCount64 { permanents, steps }
}

/// Floating-point variant of [`TermCount`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermCount64 {
    pub permanents: f64,
    pub steps: f64,
}
