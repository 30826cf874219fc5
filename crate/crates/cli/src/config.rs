//! Run configuration: defaults, then a `key = value` config file, then the
//! output-directory environment variable, then command-line flags.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use kicktop::experiments::{CHAOTIC_STATE, DEFAULT_DEPTH, DEFAULT_POINTS};
use kicktop::record::MAX_DEPTH;
use kicktop::{History, Spin, TopParameters};
use thiserror::Error;

/// Overrides the output directory from the config file.
pub const OUTPUT_DIR_ENV: &str = "KICKTOP_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fig1,
    Fig2,
    Entropy,
    Probe,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig1" => Ok(Command::Fig1),
            "fig2" => Ok(Command::Fig2),
            "entropy" => Ok(Command::Entropy),
            "probe" => Ok(Command::Probe),
            other => Err(format!(
                "unknown command {other:?} (expected fig1, fig2, entropy or probe)"
            )),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Entropy => "entropy",
            Command::Probe => "probe",
        })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(String),

    #[error("no command given (expected fig1, fig2, entropy or probe)")]
    MissingCommand,

    #[error("invalid j {0:?}: must be a positive half-integer such as 18, 2.5 or 5/2")]
    InvalidSpin(String),

    #[error("invalid record depth {0}: must be between 1 and {MAX_DEPTH}")]
    InvalidDepth(i64),

    #[error("invalid n_points {0}: must be at least 1")]
    InvalidPoints(i64),

    #[error("cannot read config file {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: unknown key {key:?}")]
    UnknownKey { path: PathBuf, line: usize, key: String },

    #[error("{path}:{line}: expected `key = value`")]
    MalformedLine { path: PathBuf, line: usize },

    #[error("invalid value {value:?} for {key}: {reason}")]
    BadValue {
        key: &'static str,
        value: String,
        reason: String,
    },

    #[error("the probe command needs a history such as --history +-+")]
    MissingHistory,
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::Usage(_) => 2,
            ConfigError::MissingCommand => 3,
            ConfigError::InvalidSpin(_) => 4,
            ConfigError::InvalidDepth(_) => 5,
            ConfigError::InvalidPoints(_) => 6,
            ConfigError::ConfigRead { .. } => 7,
            ConfigError::UnknownKey { .. } | ConfigError::MalformedLine { .. } => 8,
            ConfigError::BadValue { .. } => 9,
            ConfigError::MissingHistory => 10,
        }
    }
}

/// Kicked-top measurement-record entropy experiments.
#[derive(Parser, Debug)]
#[command(name = "kicktop", version)]
struct Cli {
    /// fig1, fig2, entropy or probe
    command: Option<String>,

    /// Flat `key = value` config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Spin quantum number (half-integer)
    #[arg(long)]
    j: Option<String>,

    /// Kick strength k (default 3)
    #[arg(long)]
    kick_strength: Option<String>,

    /// Rotation angle about J_y, in radians
    #[arg(long)]
    rotation_angle: Option<String>,

    /// Number of kick-measure periods
    #[arg(short = 'N', long, alias = "N")]
    depth: Option<String>,

    /// Coherent-state polar angle for entropy/probe
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,

    /// Coherent-state azimuth for entropy/probe
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,

    /// Sweep size for fig2
    #[arg(long)]
    n_points: Option<String>,

    /// Sampling seed for fig2
    #[arg(long)]
    seed: Option<String>,

    /// Drop branches with probability below this (0 keeps every branch)
    #[arg(long)]
    prune_eps: Option<String>,

    /// Output directory (overrides KICKTOP_OUTPUT_DIR)
    #[arg(long)]
    output_dir: Option<String>,

    /// Worker threads; 1 is serial and bitwise reproducible, 0 uses all cores
    #[arg(long)]
    workers: Option<String>,

    /// Record to probe, e.g. +-+
    #[arg(long, allow_hyphen_values = true)]
    history: Option<String>,

    /// Also write the depth-N history distribution (entropy command)
    #[arg(long)]
    dump_histories: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub spin: Spin,
    pub kick_strength: f64,
    pub rotation_angle: f64,
    pub depth: usize,
    pub theta: f64,
    pub phi: f64,
    pub n_points: usize,
    pub seed: u64,
    pub prune_eps: f64,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub history: Option<History>,
    pub dump_histories: bool,
}

const KEYS: &[&str] = &[
    "command",
    "j",
    "kick_strength",
    "rotation_angle",
    "depth",
    "theta",
    "phi",
    "n_points",
    "seed",
    "prune_eps",
    "output_dir",
    "workers",
    "history",
    "dump_histories",
];

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            spin: Spin::from_twice(36).expect("j = 18"),
            kick_strength: TopParameters::DEFAULT_KICK_STRENGTH,
            rotation_angle: TopParameters::DEFAULT_ROTATION_ANGLE,
            depth: DEFAULT_DEPTH,
            theta: CHAOTIC_STATE.0,
            phi: CHAOTIC_STATE.1,
            n_points: DEFAULT_POINTS,
            seed: 0,
            prune_eps: 0.0,
            output_dir: PathBuf::from("."),
            workers: 1,
            history: None,
            dump_histories: false,
        }
    }

    pub fn params(&self) -> TopParameters {
        TopParameters {
            spin: self.spin,
            kick_strength: self.kick_strength,
            rotation_angle: self.rotation_angle,
        }
    }

    /// The configuration as config-file text; feeding it back through
    /// `--config` reproduces this run.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("command", self.command.to_string());
        line("j", self.spin.value().to_string());
        line("kick_strength", self.kick_strength.to_string());
        line("rotation_angle", self.rotation_angle.to_string());
        line("depth", self.depth.to_string());
        line("theta", self.theta.to_string());
        line("phi", self.phi.to_string());
        line("n_points", self.n_points.to_string());
        line("seed", self.seed.to_string());
        line("prune_eps", self.prune_eps.to_string());
        line("output_dir", self.output_dir.display().to_string());
        line("workers", self.workers.to_string());
        if let Some(h) = &self.history {
            line("history", h.to_string());
        }
        line("dump_histories", self.dump_histories.to_string());
        s
    }
}

/// Reads a flat `key = value` file. Blank lines and `#` comments are
/// skipped; keys outside the known set are errors.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text, path)
}

fn parse_config_text(text: &str, path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                path: path.to_path_buf(),
                line: i + 1,
                key: key.to_string(),
            });
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key,
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_finite(key: &'static str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_value(key, value)?;
    if !x.is_finite() {
        return Err(ConfigError::BadValue {
            key,
            value: value.into(),
            reason: "not finite".into(),
        });
    }
    Ok(x)
}

/// Builds a [`RunConfig`] from command-line arguments (including the program
/// name) and the value of [`OUTPUT_DIR_ENV`], if set.
pub fn parse_config<I, T>(args: I, env_output_dir: Option<OsString>) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| ConfigError::Usage(e.to_string()))?;
    resolve(cli, env_output_dir)
}

/// Like [`parse_config`] but lets clap print help/version and exit.
pub fn parse_config_or_exit(env_output_dir: Option<OsString>) -> Result<RunConfig, ConfigError> {
    resolve(Cli::parse(), env_output_dir)
}

fn resolve(cli: Cli, env_output_dir: Option<OsString>) -> Result<RunConfig, ConfigError> {
    let mut values = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    if let Some(dir) = env_output_dir {
        values.insert("output_dir".into(), dir.to_string_lossy().into_owned());
    }
    let flags = [
        ("command", &cli.command),
        ("j", &cli.j),
        ("kick_strength", &cli.kick_strength),
        ("rotation_angle", &cli.rotation_angle),
        ("depth", &cli.depth),
        ("theta", &cli.theta),
        ("phi", &cli.phi),
        ("n_points", &cli.n_points),
        ("seed", &cli.seed),
        ("prune_eps", &cli.prune_eps),
        ("output_dir", &cli.output_dir),
        ("workers", &cli.workers),
        ("history", &cli.history),
    ];
    for (key, flag) in flags {
        if let Some(v) = flag {
            values.insert(key.into(), v.clone());
        }
    }
    if cli.dump_histories {
        values.insert("dump_histories".into(), "true".into());
    }

    let command: Command = match values.get("command") {
        Some(v) => v.parse().map_err(ConfigError::Usage)?,
        None => return Err(ConfigError::MissingCommand),
    };
    let mut config = RunConfig::defaults(command);

    if let Some(v) = values.get("j") {
        config.spin = parse_spin(v).ok_or_else(|| ConfigError::InvalidSpin(v.clone()))?;
    }
    if let Some(v) = values.get("kick_strength") {
        config.kick_strength = parse_finite("kick_strength", v)?;
    }
    if let Some(v) = values.get("rotation_angle") {
        config.rotation_angle = parse_finite("rotation_angle", v)?;
    }
    if let Some(v) = values.get("depth") {
        let depth: i64 = parse_value("depth", v)?;
        if depth < 1 || depth > MAX_DEPTH as i64 {
            return Err(ConfigError::InvalidDepth(depth));
        }
        config.depth = depth as usize;
    }
    if let Some(v) = values.get("theta") {
        config.theta = parse_finite("theta", v)?;
    }
    if let Some(v) = values.get("phi") {
        config.phi = parse_finite("phi", v)?;
    }
    if let Some(v) = values.get("n_points") {
        let n: i64 = parse_value("n_points", v)?;
        if n < 1 {
            return Err(ConfigError::InvalidPoints(n));
        }
        config.n_points = n as usize;
    }
    if let Some(v) = values.get("seed") {
        config.seed = parse_value("seed", v)?;
    }
    if let Some(v) = values.get("prune_eps") {
        let eps = parse_finite("prune_eps", v)?;
        if eps < 0.0 {
            return Err(ConfigError::BadValue {
                key: "prune_eps",
                value: v.clone(),
                reason: "must be non-negative".into(),
            });
        }
        config.prune_eps = eps;
    }
    if let Some(v) = values.get("output_dir") {
        config.output_dir = PathBuf::from(v);
    }
    if let Some(v) = values.get("workers") {
        config.workers = parse_value("workers", v)?;
    }
    if let Some(v) = values.get("history") {
        config.history = Some(parse_value("history", v)?);
    }
    if let Some(v) = values.get("dump_histories") {
        config.dump_histories = parse_value("dump_histories", v)?;
    }
    if config.command == Command::Probe && config.history.is_none() {
        return Err(ConfigError::MissingHistory);
    }
    Ok(config)
}

/// Accepts `18`, `2.5` or `5/2`.
fn parse_spin(v: &str) -> Option<Spin> {
    match v.split_once('/') {
        Some((num, "2")) => Spin::from_twice(num.trim().parse().ok()?).ok(),
        Some(_) => None,
        None => Spin::new(v.parse().ok()?).ok(),
    }
}
