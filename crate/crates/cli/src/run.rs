use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use kicktop::experiments::{run_fig1, run_fig2, with_workers, Top, RNG_ALGORITHM};
use kicktop::metrics::{rate_lower_bound_report, RateMethod};
use kicktop::record::history_distribution_with;
use kicktop::{coherent_state, rate_estimate, single_history_probability};
use thiserror::Error;

use crate::config::{Command, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Compute(#[from] kicktop::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Files written and lines for the terminal.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

fn write_file<F>(path: PathBuf, outcome: &mut RunOutcome, body: F) -> Result<(), RunError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let io_err = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    let file = File::create(&path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(io_err)?;
    outcome.files.push(path);
    Ok(())
}

/// Runs one command and writes its outputs plus `manifest.txt` into the
/// configured directory.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut outcome = RunOutcome::default();
    let pruned = with_workers(config.workers, |parallel| dispatch(config, dir, parallel, &mut outcome))??;

    let elapsed = started.elapsed().as_secs_f64();
    write_file(dir.join("manifest.txt"), &mut outcome, |out| {
        writeln!(out, "# kicktop {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# rng {RNG_ALGORITHM}")?;
        writeln!(out, "# wall_clock_seconds {elapsed:.3}")?;
        writeln!(out, "# pruned_mass_total {pruned:.16e}")?;
        out.write_all(config.to_config_text().as_bytes())
    })?;
    Ok(outcome)
}

/// Returns the total pruned probability mass.
fn dispatch(config: &RunConfig, dir: &Path, parallel: bool, outcome: &mut RunOutcome) -> Result<f64, RunError> {
    let params = config.params();
    match config.command {
        Command::Fig1 => {
            let result = run_fig1(params, config.depth, config.prune_eps, parallel)?;
            write_file(dir.join("fig1.csv"), outcome, |out| result.write_csv(out))?;
            write_file(dir.join("summary.txt"), outcome, |out| result.write_summary(out))?;
            let rate = |s| rate_estimate(s, RateMethod::Endpoint).map(|r| r.r_tilde);
            outcome.messages.push(format!(
                "r_tilde R = {:.6}, C = {:.6}",
                rate(&result.series_regular)?,
                rate(&result.series_chaotic)?
            ));
            Ok(result.series_regular.total_pruned() + result.series_chaotic.total_pruned())
        }
        Command::Fig2 => {
            let result = run_fig2(
                params,
                config.depth,
                config.n_points,
                config.seed,
                config.prune_eps,
                parallel,
            )?;
            write_file(dir.join("fig2.csv"), outcome, |out| result.write_csv(out))?;
            write_file(dir.join("summary.txt"), outcome, |out| result.write_summary(out))?;
            outcome.messages.push(format!(
                "quartile means {:.6?}, rank correlation {:.6}",
                result.quartile_means, result.rank_correlation
            ));
            Ok(result.pruned_mass)
        }
        Command::Entropy => {
            let top = Top::new(params)?;
            let series = top.series(config.theta, config.phi, config.depth, config.prune_eps, parallel)?;
            write_file(dir.join("entropy.csv"), outcome, |out| series.write_csv(out))?;
            let endpoint = rate_estimate(&series, RateMethod::Endpoint)?;
            let slope = rate_estimate(&series, RateMethod::Slope)?;
            write_file(dir.join("summary.txt"), outcome, |out| {
                writeln!(out, "r_tilde {:.16e}", endpoint.r_tilde)?;
                writeln!(out, "slope {:.16e}", slope.r_tilde)?;
                writeln!(out, "pruned_mass {:.16e}", series.total_pruned())?;
                writeln!(out, "{}", rate_lower_bound_report(&endpoint))
            })?;
            if config.dump_histories {
                let psi = coherent_state(&top.sys, config.theta, config.phi)?;
                let dists = history_distribution_with(
                    &psi,
                    &top.floquet,
                    &top.scheme,
                    config.depth,
                    config.prune_eps,
                    parallel,
                )?;
                let last = dists.last().expect("depth >= 1");
                write_file(dir.join("histories.csv"), outcome, |out| last.write_csv(out))?;
            }
            outcome.messages.push(format!("r_tilde = {:.6}", endpoint.r_tilde));
            Ok(series.total_pruned())
        }
        Command::Probe => {
            let history = config.history.expect("probe config carries a history");
            let top = Top::new(params)?;
            let psi = coherent_state(&top.sys, config.theta, config.phi)?;
            let p = single_history_probability(&psi, &top.floquet, &top.scheme, &history)?;
            write_file(dir.join("probe.csv"), outcome, |out| {
                writeln!(out, "history,probability")?;
                writeln!(out, "{history},{p:.16e}")
            })?;
            outcome.messages.push(format!("P({history}) = {p:.16e}"));
            Ok(0.0)
        }
    }
}
