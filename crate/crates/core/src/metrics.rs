//! Shannon entropy of measurement records and information-rate estimates.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kicked_top::FloquetOperator;
use crate::record::{walk_layers, HistoryDistribution, MeasurementScheme};
use crate::spin::PureState;

/// Probabilities this far below zero are treated as roundoff.
pub const NEGATIVE_TOL: f64 = 1e-12;
/// Allowed excess of total probability over 1.
pub const MASS_TOL: f64 = 1e-9;

/// `-sum p log2 p` in bits, with `0 log 0 = 0`.
pub fn entropy_bits<I>(probabilities: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut h = 0.0;
    let mut total = 0.0;
    for p in probabilities {
        if p < -NEGATIVE_TOL || p.is_nan() {
            return Err(Error::NegativeProbability(p));
        }
        if p > 0.0 {
            h -= p * p.log2();
            total += p;
        }
    }
    if total > 1.0 + MASS_TOL {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, more than 1"
        )));
    }
    Ok(h.max(0.0))
}

/// Entropy of a record distribution. When branches were pruned the
/// surviving mass is renormalized first.
pub fn shannon_entropy(dist: &HistoryDistribution) -> Result<f64> {
    if dist.pruned_mass() > 0.0 {
        let total = dist.total();
        if total.is_nan() || total <= 0.0 {
            return Ok(0.0);
        }
        entropy_bits(dist.probabilities().map(|p| p / total))
    } else {
        entropy_bits(dist.probabilities())
    }
}

/// `sum_h P(h) H(next outcome | h)`: the entropy added by the last
/// measurement, computed by grouping the depth-`n` histories on their
/// length-`n-1` prefix.
pub fn conditional_entropy_of_last(dist: &HistoryDistribution) -> Result<f64> {
    if dist.depth() == 0 {
        return Ok(0.0);
    }
    let entries = dist.entries();
    let mut total = 0.0;
    let mut i = 0;
    while i < entries.len() {
        let prefix = entries[i].0.prefix(dist.depth() - 1);
        let mut end = i;
        while end < entries.len() && entries[end].0.prefix(dist.depth() - 1) == prefix {
            end += 1;
        }
        let group = &entries[i..end];
        let parent: f64 = group.iter().map(|&(_, p)| p.max(0.0)).sum();
        if parent > 0.0 {
            total += parent * entropy_bits(group.iter().map(|&(_, p)| p.max(0.0) / parent))?;
        }
        i = end;
    }
    Ok(total)
}

/// `H_1 .. H_N` in bits, with the probability pruned by each depth.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropySeries {
    pub values: Vec<f64>,
    pub pruned_mass: Vec<f64>,
}

impl EntropySeries {
    pub fn new(values: Vec<f64>) -> Self {
        let pruned_mass = vec![0.0; values.len()];
        Self { values, pruned_mass }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `H_n` for `n` counted from 1.
    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn total_pruned(&self) -> f64 {
        self.pruned_mass.last().copied().unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,H_n_bits,pruned_mass")?;
        for (i, (h, m)) in self.values.iter().zip(&self.pruned_mass).enumerate() {
            writeln!(out, "{},{h:.16e},{m:.16e}", i + 1)?;
        }
        Ok(())
    }
}

/// Record entropies for depths `1..=n`.
pub fn entropy_series(
    psi0: &PureState,
    u: &FloquetOperator,
    scheme: &MeasurementScheme,
    n: usize,
    prune_eps: f64,
    parallel: bool,
) -> Result<EntropySeries> {
    let mut values = Vec::with_capacity(n);
    let mut pruned_mass = Vec::with_capacity(n);
    walk_layers(psi0, u, scheme, n, prune_eps, parallel, |layer| {
        values.push(shannon_entropy(&layer.distribution())?);
        pruned_mass.push(layer.pruned_mass());
        Ok(())
    })?;
    Ok(EntropySeries { values, pruned_mass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateMethod {
    /// `H_N / N`.
    Endpoint,
    /// Least-squares slope of `H_n` against `n` over the second half of the
    /// series. Diagnostic only.
    Slope,
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateMethod::Endpoint => "endpoint",
            RateMethod::Slope => "slope",
        })
    }
}

/// Information production rate in bits per measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub r_tilde: f64,
    pub n_used: usize,
    pub method: RateMethod,
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when `y` has no variance.
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("a line fit needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|&b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// The `(n, H_n)` points in the second half of the series: the last
/// `ceil(N/2)` values, but at least two.
pub(crate) fn second_half(series: &EntropySeries) -> (Vec<f64>, Vec<f64>) {
    let len = series.len();
    let take = len.div_ceil(2).max(2).min(len);
    let start = len - take;
    let xs = (start + 1..=len).map(|n| n as f64).collect();
    let ys = series.values[start..].to_vec();
    (xs, ys)
}

pub fn rate_estimate(series: &EntropySeries, method: RateMethod) -> Result<RateEstimate> {
    let len = series.len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty entropy series".into()));
    }
    let r_tilde = match method {
        RateMethod::Endpoint => series.values[len - 1] / len as f64,
        RateMethod::Slope => {
            let (xs, ys) = second_half(series);
            fit_line(&xs, &ys)?.slope
        }
    };
    Ok(RateEstimate {
        r_tilde,
        n_used: len,
        method,
    })
}

/// The lower bound on the mean algorithmic information rate implied by a
/// Shannon rate estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub lower_bound: f64,
    pub n_used: usize,
}

impl BoundReport {
    /// A zero bound says nothing.
    pub fn is_degenerate(&self) -> bool {
        self.lower_bound <= 0.0
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R̄ ≥ {} bits/measurement", self.lower_bound)?;
        if self.is_degenerate() {
            write!(f, " (degenerate bound)")?;
        }
        Ok(())
    }
}

pub fn rate_lower_bound_report(r: &RateEstimate) -> BoundReport {
    BoundReport {
        lower_bound: r.r_tilde,
        n_used: r.n_used,
    }
}
