//! Run configuration from command-line flags and an optional `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cahn_hilliard::presets::Preset;
use cahn_hilliard::scheme::{InitMode, InitialGuess, SchemeParams};
use clap::Parser;

/// Environment variable that overrides the output directory of config files.
pub const OUTPUT_DIR_ENV: &str = "CHSOLVE_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("missing required setting `{0}`")]
    MissingRequired(&'static str),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    CertifySpectrum,
    ConvergenceStudy,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "certify-spectrum" => Ok(Mode::CertifySpectrum),
            "convergence-study" => Ok(Mode::ConvergenceStudy),
            _ => Err("expected simulate, certify-spectrum or convergence-study".into()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::CertifySpectrum => "certify-spectrum",
            Mode::ConvergenceStudy => "convergence-study",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Finest level; `h = 2^-levels`.
    pub levels: usize,
    pub eps: f64,
    pub tau: f64,
    pub final_time: f64,
    pub preset: Preset,
    pub init: InitMode,
    pub output_dir: PathBuf,
    pub newton_linf_tol: f64,
    pub newton_residual_tol: f64,
    pub minres_tol: f64,
    pub minres_maxit: usize,
    pub max_newton: usize,
    pub initial_guess: InitialGuess,
    /// Steps at which fields are exported; step 0 and the last step always are.
    pub snapshot_steps: Vec<usize>,
    pub spectral_levels: Vec<usize>,
    pub spectral_taus: Vec<f64>,
    pub spectral_eps: Vec<f64>,
    pub spectral_dense: bool,
    pub study_levels: Vec<usize>,
    pub reference_level: usize,
    pub tau_per_h: f64,
}

impl RunConfig {
    pub fn scheme_params(&self) -> SchemeParams {
        SchemeParams {
            eps: self.eps,
            tau: self.tau,
            final_time: self.final_time,
            newton_linf_tol: self.newton_linf_tol,
            newton_residual_tol: self.newton_residual_tol,
            minres_tol: self.minres_tol,
            minres_maxit: self.minres_maxit,
            max_newton: self.max_newton,
            initial_guess: self.initial_guess,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chsolve", about = "Second-order mixed FEM solver for the Cahn-Hilliard equation")]
struct Flags {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// simulate | certify-spectrum | convergence-study
    #[arg(long)]
    mode: Option<String>,
    /// Finest mesh level (h = 2^-levels).
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "final-time")]
    final_time: Option<String>,
    /// cosine | oval | cross | constant:<value>
    #[arg(long)]
    preset: Option<String>,
    /// interpolate | ritz
    #[arg(long)]
    init: Option<String>,
    #[arg(long = "output-dir")]
    output_dir: Option<String>,
    #[arg(long = "newton-linf-tol")]
    newton_linf_tol: Option<String>,
    #[arg(long = "newton-residual-tol")]
    newton_residual_tol: Option<String>,
    #[arg(long = "minres-tol")]
    minres_tol: Option<String>,
    #[arg(long = "minres-maxit")]
    minres_maxit: Option<String>,
    #[arg(long = "max-newton")]
    max_newton: Option<String>,
    /// previous | extrapolated
    #[arg(long = "initial-guess")]
    initial_guess: Option<String>,
    /// Comma-separated step indices.
    #[arg(long = "snapshot-steps")]
    snapshot_steps: Option<String>,
    #[arg(long = "spectral-levels")]
    spectral_levels: Option<String>,
    #[arg(long = "spectral-taus")]
    spectral_taus: Option<String>,
    #[arg(long = "spectral-eps")]
    spectral_eps: Option<String>,
    #[arg(long = "spectral-dense")]
    spectral_dense: Option<String>,
    #[arg(long = "study-levels")]
    study_levels: Option<String>,
    #[arg(long = "reference-level")]
    reference_level: Option<String>,
    #[arg(long = "tau-per-h")]
    tau_per_h: Option<String>,
}

const KEYS: &[&str] = &[
    "mode",
    "levels",
    "eps",
    "tau",
    "final_time",
    "preset",
    "init",
    "output_dir",
    "newton_linf_tol",
    "newton_residual_tol",
    "minres_tol",
    "minres_maxit",
    "max_newton",
    "initial_guess",
    "snapshot_steps",
    "spectral_levels",
    "spectral_taus",
    "spectral_eps",
    "spectral_dense",
    "study_levels",
    "reference_level",
    "tau_per_h",
];

impl Flags {
    fn into_pairs(self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("mode", self.mode),
            ("levels", self.levels),
            ("eps", self.eps),
            ("tau", self.tau),
            ("final_time", self.final_time),
            ("preset", self.preset),
            ("init", self.init),
            ("output_dir", self.output_dir),
            ("newton_linf_tol", self.newton_linf_tol),
            ("newton_residual_tol", self.newton_residual_tol),
            ("minres_tol", self.minres_tol),
            ("minres_maxit", self.minres_maxit),
            ("max_newton", self.max_newton),
            ("initial_guess", self.initial_guess),
            ("snapshot_steps", self.snapshot_steps),
            ("spectral_levels", self.spectral_levels),
            ("spectral_taus", self.spectral_taus),
            ("spectral_eps", self.spectral_eps),
            ("spectral_dense", self.spectral_dense),
            ("study_levels", self.study_levels),
            ("reference_level", self.reference_level),
            ("tau_per_h", self.tau_per_h),
        ]
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadValue {
            key: line.to_string(),
            value: String::new(),
            reason: "expected `key = value`".into(),
        })?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| bad(key, v, e.to_string())),
        }
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?.ok_or(ConfigError::MissingRequired(key))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse::<T>().map_err(|e| bad(key, t.trim(), e.to_string())))
                .collect(),
        }
    }
}

fn unit_interval(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(bad(key, &v.to_string(), "must lie in (0, 1]"))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, &v.to_string(), "must be positive"))
    }
}

/// Builds a [`RunConfig`] from command-line arguments (without the program
/// name). Flags override values read from `--config`.
pub fn parse_config<I, S>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("chsolve")).chain(args.into_iter().map(Into::into));
    let flags = Flags::try_parse_from(argv).map_err(|e| ConfigError::Usage(e.to_string()))?;
    let mut map = match &flags.config {
        Some(path) => load_file(path)?,
        None => BTreeMap::new(),
    };
    let mut flag_output = false;
    for (key, value) in flags.into_pairs() {
        if let Some(v) = value {
            flag_output |= key == "output_dir";
            map.insert(key.to_string(), v);
        }
    }
    if !flag_output {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                map.insert("output_dir".into(), dir);
            }
        }
    }
    build(Values(map))
}

fn load_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

fn build(v: Values) -> Result<RunConfig, ConfigError> {
    let mode: Mode = v.or("mode", Mode::Simulate)?;
    let needs_run = mode != Mode::CertifySpectrum;
    let preset: Preset = match v.raw("preset") {
        Some(s) => s.parse().map_err(|e: cahn_hilliard::Error| bad("preset", s, e.to_string()))?,
        None if needs_run => return Err(ConfigError::MissingRequired("preset")),
        None => Preset::Cosine,
    };
    let eps_given = v.parse::<f64>("eps")?.map(|e| unit_interval("eps", e)).transpose()?;
    let tau_given = v.parse::<f64>("tau")?.map(|t| unit_interval("tau", t)).transpose()?;
    let (eps, tau, final_time, levels) = if mode == Mode::Simulate {
        (
            eps_given.ok_or(ConfigError::MissingRequired("eps"))?,
            tau_given.ok_or(ConfigError::MissingRequired("tau"))?,
            v.required::<f64>("final_time")?,
            v.required::<usize>("levels")?,
        )
    } else {
        (
            eps_given.unwrap_or(0.03),
            tau_given.unwrap_or(0.07 / 16.0),
            v.or("final_time", 0.0875)?,
            v.or("levels", 4usize)?,
        )
    };
    if !(final_time >= 0.0 && final_time.is_finite()) {
        return Err(bad("final_time", &final_time.to_string(), "must be non-negative"));
    }
    let init = match v.raw("init").unwrap_or("interpolate") {
        "interpolate" => InitMode::Interpolate,
        "ritz" => InitMode::Ritz,
        other => return Err(bad("init", other, "expected interpolate or ritz")),
    };
    let initial_guess = match v.raw("initial_guess").unwrap_or("extrapolated") {
        "extrapolated" => InitialGuess::Extrapolated,
        "previous" => InitialGuess::Previous,
        other => return Err(bad("initial_guess", other, "expected extrapolated or previous")),
    };
    let spectral_dense = match v.raw("spectral_dense").unwrap_or("true") {
        "true" | "yes" | "1" => true,
        "false" | "no" | "0" => false,
        other => return Err(bad("spectral_dense", other, "expected true or false")),
    };
    let grid = vec![1.0, 0.1, 0.01, 0.001];
    let spectral_taus: Vec<f64> = v.list("spectral_taus", grid.clone())?;
    let spectral_eps: Vec<f64> = v.list("spectral_eps", grid)?;
    for &t in &spectral_taus {
        unit_interval("spectral_taus", t)?;
    }
    for &e in &spectral_eps {
        unit_interval("spectral_eps", e)?;
    }
    let minres_maxit: usize = v.or("minres_maxit", 1000)?;
    let max_newton: usize = v.or("max_newton", 20)?;
    if minres_maxit == 0 {
        return Err(bad("minres_maxit", "0", "must be positive"));
    }
    if max_newton == 0 {
        return Err(bad("max_newton", "0", "must be positive"));
    }
    let study_levels: Vec<usize> = v.list("study_levels", vec![4, 5, 6])?;
    let reference_level: usize = v.or("reference_level", 7)?;
    if mode == Mode::ConvergenceStudy && study_levels.iter().any(|&l| l >= reference_level) {
        return Err(bad(
            "study_levels",
            v.raw("study_levels").unwrap_or("4,5,6"),
            "every level must be coarser than reference_level",
        ));
    }
    Ok(RunConfig {
        mode,
        levels,
        eps,
        tau,
        final_time,
        preset,
        init,
        output_dir: PathBuf::from(v.raw("output_dir").unwrap_or("output")),
        newton_linf_tol: positive("newton_linf_tol", v.or("newton_linf_tol", 1e-15)?)?,
        newton_residual_tol: positive("newton_residual_tol", v.or("newton_residual_tol", 1e-7)?)?,
        minres_tol: positive("minres_tol", v.or("minres_tol", 1e-7)?)?,
        minres_maxit,
        max_newton,
        initial_guess,
        snapshot_steps: v.list("snapshot_steps", Vec::new())?,
        spectral_levels: v.list("spectral_levels", vec![1, 2, 3])?,
        spectral_taus,
        spectral_eps,
        spectral_dense,
        study_levels,
        reference_level,
        tau_per_h: positive("tau_per_h", v.or("tau_per_h", 0.07)?)?,
    })
}
