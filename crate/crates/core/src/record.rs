//! Exact distribution of measurement records.
//!
//! Each period applies the Floquet operator and then measures whether `J_z`
//! is non-negative (`+`) or negative (`-`). The full tree of unnormalized
//! post-measurement vectors is propagated layer by layer; the squared norm
//! of a branch is the probability of its history.

use std::cell::RefCell;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kicked_top::FloquetOperator;
use crate::spin::{CMatrix, CVector, PureState, SpinSystem, C64};

/// Longest record a [`History`] can hold.
pub const MAX_DEPTH: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// `J_z >= 0`
    Plus,
    /// `J_z < 0`
    Minus,
}

impl Outcome {
    pub fn bit(self) -> u64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => 0,
        }
    }

    pub fn from_bit(bit: u64) -> Self {
        if bit & 1 == 1 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

/// A record of outcomes packed into an integer, first measurement in the
/// most significant position. `+` is 1 and `-` is 0, so histories of equal
/// length sort like their keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History {
    len: u8,
    key: u64,
}

impl History {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_key(key: u64, len: usize) -> Result<Self> {
        if len > MAX_DEPTH || (len < 64 && key >> len != 0) {
            return Err(Error::InvalidArgument(format!(
                "key {key} does not fit a history of length {len}"
            )));
        }
        Ok(Self { len: len as u8, key })
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends an outcome. Panics past [`MAX_DEPTH`].
    pub fn push(self, outcome: Outcome) -> Self {
        assert!(self.len() < MAX_DEPTH, "history longer than {MAX_DEPTH}");
        Self {
            len: self.len + 1,
            key: (self.key << 1) | outcome.bit(),
        }
    }

    /// Outcome of the `i`-th measurement, counting from 0.
    pub fn outcome(&self, i: usize) -> Outcome {
        assert!(i < self.len());
        Outcome::from_bit(self.key >> (self.len() - 1 - i))
    }

    pub fn last(&self) -> Option<Outcome> {
        (!self.is_empty()).then(|| Outcome::from_bit(self.key))
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.len()).map(|i| self.outcome(i))
    }

    /// The first `n` outcomes.
    pub fn prefix(&self, n: usize) -> Self {
        assert!(n <= self.len());
        Self {
            len: n as u8,
            key: self.key >> (self.len() - n),
        }
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.outcomes() {
            write!(f, "{}", o.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut h = History::empty();
        for (i, c) in s.chars().enumerate() {
            if i >= MAX_DEPTH {
                return Err(Error::InvalidDepth {
                    depth: s.chars().count(),
                    max: MAX_DEPTH,
                });
            }
            h = match c {
                '+' => h.push(Outcome::Plus),
                '-' => h.push(Outcome::Minus),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "history symbols must be '+' or '-', found {other:?}"
                    )))
                }
            };
        }
        Ok(h)
    }
}

/// The two-outcome projective measurement `{P+, P-}` onto `m >= 0` and
/// `m < 0`. With `m` descending both supports are contiguous index ranges.
#[derive(Clone, Debug)]
pub struct MeasurementScheme {
    dim: usize,
    split: usize,
}

impl MeasurementScheme {
    pub fn new(sys: &SpinSystem) -> Self {
        let split = sys.m_values().take_while(|&m| m >= 0.0).count();
        Self { dim: sys.dim(), split }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Basis indices on which the projector for `outcome` is 1.
    pub fn support(&self, outcome: Outcome) -> Range<usize> {
        match outcome {
            Outcome::Plus => 0..self.split,
            Outcome::Minus => self.split..self.dim,
        }
    }

    pub fn rank(&self, outcome: Outcome) -> usize {
        self.support(outcome).len()
    }

    /// The projector as a dense diagonal matrix.
    pub fn projector(&self, outcome: Outcome) -> CMatrix {
        let d = self.dim();
        let mut p = CMatrix::zeros(d, d);
        for k in self.support(outcome) {
            p[(k, k)] = C64::new(1.0, 0.0);
        }
        p
    }

    pub fn p_plus(&self) -> CMatrix {
        self.projector(Outcome::Plus)
    }

    pub fn p_minus(&self) -> CMatrix {
        self.projector(Outcome::Minus)
    }

    pub fn project(&self, outcome: Outcome, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut out = CVector::zeros(self.dim());
        for k in self.support(outcome) {
            out[k] = v[k];
        }
        Ok(out)
    }
}

/// All surviving branches at one record depth.
///
/// Branches are kept sorted by history key. Amplitudes are stored flat with
/// stride `dim`.
#[derive(Clone, Debug)]
pub struct BranchLayer {
    depth: usize,
    dim: usize,
    keys: Vec<u64>,
    amplitudes: Vec<C64>,
    pruned_mass: f64,
}

impl BranchLayer {
    /// The depth-0 layer holding only `psi0`.
    pub fn initial(psi0: &PureState) -> Self {
        Self {
            depth: 0,
            dim: psi0.dim(),
            keys: vec![0],
            amplitudes: psi0.amplitudes().iter().copied().collect(),
            pruned_mass: 0.0,
        }
    }

    /// Back to the depth-0 layer for `psi0`, keeping allocations.
    pub fn reset(&mut self, psi0: &PureState) {
        self.depth = 0;
        self.dim = psi0.dim();
        self.keys.clear();
        self.keys.push(0);
        self.amplitudes.clear();
        self.amplitudes.extend(psi0.amplitudes().iter().copied());
        self.pruned_mass = 0.0;
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Probability dropped by pruning over all steps so far.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn branches(&self) -> impl Iterator<Item = (History, &[C64])> + '_ {
        let depth = self.depth;
        self.keys
            .iter()
            .zip(self.amplitudes.chunks_exact(self.dim))
            .map(move |(&key, v)| (History { len: depth as u8, key }, v))
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (History, f64)> + '_ {
        self.branches().map(|(h, v)| (h, norm_sqr(v)))
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities().map(|(_, p)| p).sum()
    }

    pub fn distribution(&self) -> HistoryDistribution {
        HistoryDistribution {
            depth: self.depth,
            entries: self.probabilities().collect(),
            pruned_mass: self.pruned_mass,
        }
    }

    /// One period: apply `u`, then split every branch into its `-` and `+`
    /// children. Children with squared norm below `prune_eps`, or exactly
    /// zero, are dropped and their mass is added to [`Self::pruned_mass`].
    pub fn step(
        &self,
        u: &FloquetOperator,
        scheme: &MeasurementScheme,
        prune_eps: f64,
        parallel: bool,
    ) -> Result<Self> {
        let mut next = Self {
            depth: 0,
            dim: self.dim,
            keys: Vec::new(),
            amplitudes: Vec::new(),
            pruned_mass: 0.0,
        };
        self.step_into(u, scheme, prune_eps, parallel, &mut next)?;
        Ok(next)
    }

    /// [`Self::step`] writing into `next`, reusing its buffers.
    pub fn step_into(
        &self,
        u: &FloquetOperator,
        scheme: &MeasurementScheme,
        prune_eps: f64,
        parallel: bool,
        next: &mut Self,
    ) -> Result<()> {
        if u.dim() != self.dim || scheme.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if u.dim() != self.dim { u.dim() } else { scheme.dim() },
            });
        }
        if prune_eps.is_nan() || prune_eps < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "prune_eps must be non-negative, got {prune_eps}"
            )));
        }
        if self.depth >= MAX_DEPTH {
            return Err(Error::InvalidDepth {
                depth: self.depth + 1,
                max: MAX_DEPTH,
            });
        }

        let kernel = BranchKernel::new(u, scheme, self.depth == 0);
        let d = self.dim;
        let amplitudes = &mut next.amplitudes;
        amplitudes.clear();
        amplitudes.resize(2 * self.amplitudes.len(), C64::new(0.0, 0.0));
        let mut masses = vec![0.0; 2 * self.keys.len()];
        if parallel {
            self.amplitudes
                .par_chunks_exact(d)
                .zip(&self.keys)
                .zip(amplitudes.par_chunks_exact_mut(2 * d))
                .zip(masses.par_chunks_exact_mut(2))
                .for_each(|(((v, &key), out), mass)| kernel.split(key, v, out, mass));
        } else {
            self.amplitudes
                .chunks_exact(d)
                .zip(&self.keys)
                .zip(amplitudes.chunks_exact_mut(2 * d))
                .zip(masses.chunks_exact_mut(2))
                .for_each(|(((v, &key), out), mass)| kernel.split(key, v, out, mass));
        }

        // children of parent i sit at 2i (-) and 2i + 1 (+), already in key order
        let keys = &mut next.keys;
        keys.clear();
        let mut pruned_mass = self.pruned_mass;
        let mut kept = 0;
        for (i, &mass) in masses.iter().enumerate() {
            if mass == 0.0 || mass < prune_eps {
                pruned_mass += mass;
                continue;
            }
            keys.push((self.keys[i / 2] << 1) | (i as u64 & 1));
            if kept != i {
                amplitudes.copy_within(i * d..(i + 1) * d, kept * d);
            }
            kept += 1;
        }
        amplitudes.truncate(kept * d);
        next.depth = self.depth + 1;
        next.dim = d;
        next.pruned_mass = pruned_mass;
        Ok(())
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `v -> (P- U v, P+ U v)`, skipping columns of `U` where `v` is known to
/// vanish. After the first measurement every branch lies inside the support
/// of its last projector.
struct BranchKernel<'a> {
    columns: &'a [C64],
    dim: usize,
    scheme: &'a MeasurementScheme,
    first_step: bool,
}

impl<'a> BranchKernel<'a> {
    fn new(u: &'a FloquetOperator, scheme: &'a MeasurementScheme, first_step: bool) -> Self {
        Self {
            columns: u.matrix().as_slice(),
            dim: u.dim(),
            scheme,
            first_step,
        }
    }

    /// Writes the `-` child into `out[..dim]` and the `+` child into
    /// `out[dim..]`, both zeroed on entry, with their squared norms.
    fn split(&self, key: u64, v: &[C64], out: &mut [C64], mass: &mut [f64]) {
        let support = if self.first_step {
            0..self.dim
        } else {
            self.scheme.support(Outcome::from_bit(key))
        };
        let (minus, plus) = out.split_at_mut(self.dim);
        for (outcome, child, m) in [(Outcome::Minus, minus, 0), (Outcome::Plus, plus, 1)] {
            let rows = self.scheme.support(outcome);
            let child = &mut child[rows.clone()];
            for c in support.clone() {
                let coeff = v[c];
                let column = &self.columns[c * self.dim + rows.start..c * self.dim + rows.end];
                for (acc, &entry) in child.iter_mut().zip(column) {
                    *acc += entry * coeff;
                }
            }
            mass[m] = norm_sqr(child);
        }
    }
}

/// Probabilities of every surviving history of one length.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryDistribution {
    depth: usize,
    entries: Vec<(History, f64)>,
    pruned_mass: f64,
}

impl HistoryDistribution {
    /// Builds a distribution from explicit entries. Entries are sorted by
    /// history; every history must have length `depth` and appear once.
    pub fn from_entries(depth: usize, mut entries: Vec<(History, f64)>, pruned_mass: f64) -> Result<Self> {
        if let Some((h, _)) = entries.iter().find(|(h, _)| h.len() != depth) {
            return Err(Error::InvalidArgument(format!(
                "history {h} does not have length {depth}"
            )));
        }
        entries.sort_by_key(|(h, _)| h.key());
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate history".into()));
        }
        Ok(Self {
            depth,
            entries,
            pruned_mass,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn entries(&self) -> &[(History, f64)] {
        &self.entries
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&(_, p)| p)
    }

    /// Probability of `history`; histories that were never stored have
    /// probability 0.
    pub fn get(&self, history: &History) -> f64 {
        if history.len() != self.depth {
            return 0.0;
        }
        self.entries
            .binary_search_by_key(&history.key(), |(h, _)| h.key())
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities().sum()
    }

    /// Sums out the last `depth - n` outcomes.
    pub fn marginal(&self, n: usize) -> Result<Self> {
        if n > self.depth {
            return Err(Error::InvalidDepth {
                depth: n,
                max: self.depth,
            });
        }
        let mut entries: Vec<(History, f64)> = Vec::new();
        for &(h, p) in &self.entries {
            let prefix = h.prefix(n);
            match entries.last_mut() {
                Some((last, acc)) if *last == prefix => *acc += p,
                _ => entries.push((prefix, p)),
            }
        }
        Ok(Self {
            depth: n,
            entries,
            pruned_mass: self.pruned_mass,
        })
    }

    /// CSV with header `history,probability`; histories as `+`/`-` strings,
    /// probabilities with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "history,probability")?;
        for (h, p) in &self.entries {
            writeln!(out, "{h},{p:.16e}")?;
        }
        Ok(())
    }
}

fn check_depth(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DEPTH {
        return Err(Error::InvalidDepth {
            depth: n,
            max: MAX_DEPTH,
        });
    }
    Ok(())
}

/// Calls `visit` with each layer at depths `1..=n`.
pub fn walk_layers<F>(
    psi0: &PureState,
    u: &FloquetOperator,
    scheme: &MeasurementScheme,
    n: usize,
    prune_eps: f64,
    parallel: bool,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&BranchLayer) -> Result<()>,
{
    check_depth(n)?;
    if psi0.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: psi0.dim(),
        });
    }
    // layer buffers are reused across walks on the same thread
    thread_local! {
        static SCRATCH: RefCell<Option<(BranchLayer, BranchLayer)>> = const { RefCell::new(None) };
    }
    let (mut layer, mut next) = SCRATCH
        .with(|s| s.borrow_mut().take())
        .unwrap_or_else(|| (BranchLayer::initial(psi0), BranchLayer::initial(psi0)));
    layer.reset(psi0);
    let result = (|| {
        for _ in 0..n {
            layer.step_into(u, scheme, prune_eps, parallel, &mut next)?;
            std::mem::swap(&mut layer, &mut next);
            visit(&layer)?;
        }
        Ok(())
    })();
    SCRATCH.with(|s| *s.borrow_mut() = Some((layer, next)));
    result
}

/// Record distributions for depths `1..=n`.
pub fn history_distribution(
    psi0: &PureState,
    u: &FloquetOperator,
    scheme: &MeasurementScheme,
    n: usize,
    prune_eps: f64,
) -> Result<Vec<HistoryDistribution>> {
    history_distribution_with(psi0, u, scheme, n, prune_eps, false)
}

pub fn history_distribution_with(
    psi0: &PureState,
    u: &FloquetOperator,
    scheme: &MeasurementScheme,
    n: usize,
    prune_eps: f64,
    parallel: bool,
) -> Result<Vec<HistoryDistribution>> {
    let mut out = Vec::with_capacity(n);
    walk_layers(psi0, u, scheme, n, prune_eps, parallel, |layer| {
        out.push(layer.distribution());
        Ok(())
    })?;
    Ok(out)
}

/// `|| P_{Z_n} U ... P_{Z_1} U psi0 ||^2` for one history.
pub fn single_history_probability(
    psi0: &PureState,
    u: &FloquetOperator,
    scheme: &MeasurementScheme,
    history: &History,
) -> Result<f64> {
    let mut v = psi0.amplitudes().clone();
    for outcome in history.outcomes() {
        v = scheme.project(outcome, &u.apply(&v)?)?;
    }
    Ok(v.norm_squared())
}
