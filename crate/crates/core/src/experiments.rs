//! The two kicked-top experiments: entropy growth for a regular and a
//! chaotic initial state, and a seeded sweep of the information rate over an
//! octant of the sphere.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kicked_top::{FloquetOperator, TopParameters};
use crate::metrics::{
    entropy_series, fit_line, rate_estimate, rate_lower_bound_report, second_half, BoundReport, EntropySeries,
    RateMethod,
};
use crate::record::MeasurementScheme;
use crate::spin::{angular_distance, coherent_mean, coherent_state, point_to_angles, BlochPoint, SpinSystem};

/// `(theta, phi)` of the coherent state centred in the regular island.
pub const REGULAR_STATE: (f64, f64) = (2.25, 0.63);
/// `(theta, phi)` of the coherent state in the chaotic sea.
pub const CHAOTIC_STATE: (f64, f64) = (1.64, 1.50);
/// The elliptic fixed point of the classical map, as coherent-state angles.
pub const FIXED_POINT: (f64, f64) = REGULAR_STATE;

pub const DEFAULT_DEPTH: usize = 15;
pub const DEFAULT_POINTS: usize = 500;

/// Generator used by [`sample_octant`].
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64)";

/// Runs `f` serially when `workers == 1`, otherwise on a dedicated rayon pool
/// of that many threads (`0` lets rayon choose). `f` receives whether it may
/// parallelize.
pub fn with_workers<R, F>(workers: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce(bool) -> R + Send,
{
    if workers == 1 {
        return Ok(f(false));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| f(true)))
}

/// Shared pieces for running many initial states under one top.
pub struct Top {
    pub sys: SpinSystem,
    pub floquet: FloquetOperator,
    pub scheme: MeasurementScheme,
}

impl Top {
    pub fn new(params: TopParameters) -> Result<Self> {
        let sys = SpinSystem::new(params.spin);
        let floquet = FloquetOperator::new(&sys, params)?;
        let scheme = MeasurementScheme::new(&sys);
        Ok(Self { sys, floquet, scheme })
    }

    pub fn params(&self) -> &TopParameters {
        self.floquet.params()
    }

    pub fn series(&self, theta: f64, phi: f64, depth: usize, prune_eps: f64, parallel: bool) -> Result<EntropySeries> {
        let psi = coherent_state(&self.sys, theta, phi)?;
        entropy_series(&psi, &self.floquet, &self.scheme, depth, prune_eps, parallel)
    }
}

#[derive(Clone, Debug)]
pub struct Fig1Result {
    pub series_regular: EntropySeries,
    pub series_chaotic: EntropySeries,
    pub params: TopParameters,
    pub depth: usize,
}

impl Fig1Result {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,H_n_R,H_n_C")?;
        for (i, (r, c)) in self
            .series_regular
            .values
            .iter()
            .zip(&self.series_chaotic.values)
            .enumerate()
        {
            writeln!(out, "{},{r:.16e},{c:.16e}", i + 1)?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (label, series) in [("R", &self.series_regular), ("C", &self.series_chaotic)] {
            let endpoint = rate_estimate(series, RateMethod::Endpoint).map_err(to_io)?;
            let slope = rate_estimate(series, RateMethod::Slope).map_err(to_io)?;
            writeln!(out, "state {label}: r_tilde {:.16e}", endpoint.r_tilde)?;
            writeln!(out, "state {label}: slope {:.16e}", slope.r_tilde)?;
            if series.len() >= 6 {
                let r2 = linearity_diagnostic(series).map_err(to_io)?;
                writeln!(out, "state {label}: linearity_r2 {r2:.16e}")?;
            }
            writeln!(out, "state {label}: pruned_mass {:.16e}", series.total_pruned())?;
            writeln!(out, "state {label}: {}", rate_lower_bound_report(&endpoint))?;
        }
        Ok(())
    }
}

fn to_io(e: Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Entropy series for the regular and chaotic reference states.
pub fn run_fig1(params: TopParameters, depth: usize, prune_eps: f64, parallel: bool) -> Result<Fig1Result> {
    let top = Top::new(params)?;
    let series_regular = top.series(REGULAR_STATE.0, REGULAR_STATE.1, depth, prune_eps, parallel)?;
    let series_chaotic = top.series(CHAOTIC_STATE.0, CHAOTIC_STATE.1, depth, prune_eps, parallel)?;
    Ok(Fig1Result {
        series_regular,
        series_chaotic,
        params,
        depth,
    })
}

/// Points uniform in area on the open octant `x > 0, y > 0, z < 0`: `z`
/// uniform on `(-1, 0)` and azimuth uniform on `(0, pi/2)`.
pub fn sample_octant(n_points: usize, seed: u64) -> Result<Vec<BlochPoint>> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("need at least one sample point".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..n_points)
        .map(|_| {
            let z = -rng.sample::<f64, _>(Open01);
            let azimuth = FRAC_PI_2 * rng.sample::<f64, _>(Open01);
            let rho = (1.0 - z * z).sqrt();
            BlochPoint {
                x: rho * azimuth.cos(),
                y: rho * azimuth.sin(),
                z,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    pub index: usize,
    pub point: BlochPoint,
    pub theta: f64,
    pub phi: f64,
    pub angle_from_fixed_point: f64,
    pub r_tilde: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub seed: u64,
    pub n_points: usize,
    pub depth: usize,
    pub params: TopParameters,
    /// Mean `r_tilde` in each quarter of the records ordered by angle,
    /// nearest first. Empty quarters are NaN.
    pub quartile_means: [f64; 4],
    /// Spearman correlation between angle and `r_tilde`.
    pub rank_correlation: f64,
    pub pruned_mass: f64,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,x,y,z,theta,phi,angle,r_tilde")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.index, r.point.x, r.point.y, r.point.z, r.theta, r.phi, r.angle_from_fixed_point, r.r_tilde
            )?;
        }
        Ok(())
    }

    /// The weakest of the per-state lower bounds.
    pub fn weakest_bound(&self) -> BoundReport {
        let lowest = self.records.iter().map(|r| r.r_tilde).fold(f64::INFINITY, f64::min);
        BoundReport {
            lower_bound: lowest,
            n_used: self.depth,
        }
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n_points {}", self.n_points)?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(out, "rng {RNG_ALGORITHM}")?;
        for (i, m) in self.quartile_means.iter().enumerate() {
            writeln!(out, "quartile_{} mean_r_tilde {m:.16e}", i + 1)?;
        }
        writeln!(out, "rank_correlation {:.16e}", self.rank_correlation)?;
        let positive = self.records.iter().filter(|r| r.r_tilde > 0.0).count();
        writeln!(out, "positive_bounds {positive}/{}", self.records.len())?;
        writeln!(out, "weakest_bound {}", self.weakest_bound())?;
        writeln!(out, "pruned_mass {:.16e}", self.pruned_mass)?;
        Ok(())
    }
}

/// Sweeps `n_points` random coherent states over the octant and records the
/// endpoint rate against the angle to the fixed point.
pub fn run_fig2(
    params: TopParameters,
    depth: usize,
    n_points: usize,
    seed: u64,
    prune_eps: f64,
    parallel: bool,
) -> Result<SweepResult> {
    let points = sample_octant(n_points, seed)?;
    let top = Top::new(params)?;
    let fixed = coherent_mean(&top.sys, &coherent_state(&top.sys, FIXED_POINT.0, FIXED_POINT.1)?)?;

    let evaluate = |(index, point): (usize, &BlochPoint)| -> Result<(SweepRecord, f64)> {
        let (theta, phi) = point_to_angles(point);
        let series = top.series(theta, phi, depth, prune_eps, false)?;
        let rate = rate_estimate(&series, RateMethod::Endpoint)?;
        let record = SweepRecord {
            index,
            point: *point,
            theta,
            phi,
            angle_from_fixed_point: angular_distance(point, &fixed),
            r_tilde: rate.r_tilde,
        };
        Ok((record, series.total_pruned()))
    };
    let evaluated: Vec<(SweepRecord, f64)> = if parallel {
        points.par_iter().enumerate().map(evaluate).collect::<Result<_>>()?
    } else {
        points.iter().enumerate().map(evaluate).collect::<Result<_>>()?
    };
    let pruned_mass = evaluated.iter().map(|&(_, m)| m).sum();
    let records: Vec<SweepRecord> = evaluated.into_iter().map(|(r, _)| r).collect();

    let angles: Vec<f64> = records.iter().map(|r| r.angle_from_fixed_point).collect();
    let rates: Vec<f64> = records.iter().map(|r| r.r_tilde).collect();
    Ok(SweepResult {
        quartile_means: quartile_means(&angles, &rates),
        rank_correlation: spearman(&angles, &rates),
        records,
        seed,
        n_points,
        depth,
        params,
        pruned_mass,
    })
}

/// Means of `values` over the four quarters of the data sorted by `keys`.
pub fn quartile_means(keys: &[f64], values: &[f64]) -> [f64; 4] {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    std::array::from_fn(|q| {
        let bin = &order[q * n / 4..(q + 1) * n / 4];
        bin.iter().map(|&i| values[i]).sum::<f64>() / bin.len() as f64
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut end = i + 1;
        while end < order.len() && values[order[end]] == values[order[i]] {
            end += 1;
        }
        let rank = (i + end + 1) as f64 / 2.0;
        for &k in &order[i..end] {
            out[k] = rank;
        }
        i = end;
    }
    out
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// `R^2` of a straight-line fit to the second half of the series. Needs at
/// least six values.
pub fn linearity_diagnostic(series: &EntropySeries) -> Result<f64> {
    if series.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "linearity diagnostic needs at least 6 values, got {}",
            series.len()
        )));
    }
    let (xs, ys) = second_half(series);
    Ok(fit_line(&xs, &ys)?.r_squared)
}
