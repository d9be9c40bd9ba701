//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! points = [32, 32]          # required; one entry per axis (1D or 2D)
//! extents = [1.0, 1.0]       # default 1.0 per axis
//!
//! [params]                   # every key optional
//! d = [0.1, 0.1, 0.1]
//! a = 3.0
//! b = 1.0
//! alpha = 1.0
//! beta = 5.0
//! q = 0.01
//! r = 0.006
//! j = 2.0
//! c = -1.6
//! kappa = 1.0
//! profiles = [{ modes = [1, 0], amplitude = 0.5 }, ...]   # exactly 3
//!
//! [noise]
//! seed = 7                   # required
//! t_min = -40.0
//! t_max = 10.0
//! dt = 0.01
//! file = "path.bin"          # load the path instead of sampling it
//!
//! [solve]
//! t_start = 0.0
//! t_end = 1.0
//! dt = 0.01                  # defaults to noise.dt; must divide it
//! stepper = "imex1"          # or "explicit-rk2"
//! snapshot_stride = 10
//!
//! [initial]
//! kind = "constant"          # "constant" | "ball" | "file"
//! values = [0.0, 0.0, 0.0]
//!
//! [experiment]
//! horizons = [1.0, 2.0, 4.0]
//! cloud = 16
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use stochhr::{GridSpec, NoiseProfile, Params, Stepper, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub modes: Vec<u32>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub d: [f64; 3],
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub r: f64,
    pub j: f64,
    pub c: f64,
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<ProfileConfig>>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = Params::demo(2);
        Self {
            d: p.d,
            a: p.a,
            b: p.b,
            alpha: p.alpha,
            beta: p.beta,
            q: p.q,
            r: p.r,
            j: p.j,
            c: p.c,
            kappa: p.kappa,
            profiles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_t_min() -> f64 {
    -40.0
}

fn default_t_max() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub stepper: String,
    pub snapshot_stride: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 1.0,
            dt: None,
            stepper: "imex1".into(),
            snapshot_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: String,
    pub values: [f64; 3],
    pub radius: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            values: [0.0; 3],
            radius: 1.0,
            seed: 0,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Pullback horizons.
    pub horizons: Vec<f64>,
    /// Cloud size.
    pub cloud: usize,
    /// Cloud radius as a multiple of `R_H(ω)` (ignored if `cloud_radius` is set).
    pub cloud_radius_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cloud_radius: Option<f64>,
    pub cloud_seed: u64,
    /// Truncation of the absorbing-radius integral; defaults to `-noise.t_min`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_horizon: Option<f64>,
    /// Write every pullback state to `fields/`.
    pub dump_states: bool,
    /// Write every k-th snapshot to `fields/` (0: only the last).
    pub field_stride: usize,
    /// Solver steps compared by `convergence`, coarse to fine.
    pub convergence_dts: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            horizons: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            cloud: 32,
            cloud_radius_factor: 10.0,
            cloud_radius: None,
            cloud_seed: 0,
            quadrature_horizon: None,
            dump_states: false,
            field_stride: 0,
            convergence_dts: vec![0.01, 0.005, 0.0025],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UnknownKey,
    MissingKey,
    Constraint,
}

/// Config error with the offending key and 1-based line, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub kind: ErrorKind,
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = match self.line {
            Some(l) => format!(" (line {l})"),
            None => String::new(),
        };
        match self.kind {
            ErrorKind::Syntax => write!(f, "config syntax error{at}: {}", self.message),
            ErrorKind::UnknownKey => write!(f, "unknown config key `{}`{at}", self.key),
            ErrorKind::MissingKey => {
                write!(f, "missing required config key `{}`{at}", self.key)
            }
            ErrorKind::Constraint => write!(
                f,
                "constraint violated for `{}`{at}: {}",
                self.key, self.message
            ),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    Some(msg[start..end].to_string())
}

/// Line of `key` inside `[section]`, else of the section header.
fn find_line(text: &str, key: &str) -> Option<usize> {
    let (section, field) = key.split_once('.').unwrap_or(("", key));
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(field) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

fn constraint(text: &str, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        kind: ErrorKind::Constraint,
        key: key.to_string(),
        line: find_line(text, key),
        message: message.into(),
    }
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        let msg = e.message().to_string();
        if msg.starts_with("unknown field") {
            ConfigError {
                kind: ErrorKind::UnknownKey,
                key: backticked(&msg).unwrap_or_default(),
                line,
                message: msg,
            }
        } else if msg.starts_with("missing field") {
            ConfigError {
                kind: ErrorKind::MissingKey,
                key: backticked(&msg).unwrap_or_default(),
                line,
                message: msg,
            }
        } else {
            ConfigError {
                kind: ErrorKind::Syntax,
                key: String::new(),
                line,
                message: msg,
            }
        }
    })?;
    cfg.validate(text)?;
    Ok(cfg)
}

impl RunConfig {
    pub fn dimension(&self) -> usize {
        self.grid.points.len()
    }

    pub fn grid_spec(&self) -> GridSpec {
        let extents = self
            .grid
            .extents
            .clone()
            .unwrap_or_else(|| vec![1.0; self.dimension()]);
        GridSpec {
            extents,
            points: self.grid.points.clone(),
        }
    }

    pub fn params(&self) -> Params {
        let p = &self.params;
        let dim = self.dimension();
        let profiles = match &p.profiles {
            Some(list) if list.len() == 3 => {
                std::array::from_fn(|i| NoiseProfile::new(list[i].modes.clone(), list[i].amplitude))
            }
            _ => Params::demo(dim).profiles,
        };
        Params {
            d: p.d,
            a: p.a,
            b: p.b,
            alpha: p.alpha,
            beta: p.beta,
            q: p.q,
            r: p.r,
            j: p.j,
            c: p.c,
            kappa: p.kappa,
            profiles,
        }
    }

    pub fn time_grid(&self) -> stochhr::Result<TimeGrid> {
        TimeGrid::new(self.noise.t_min, self.noise.t_max, self.noise.dt)
    }

    pub fn solver_dt(&self) -> f64 {
        self.solve.dt.unwrap_or(self.noise.dt)
    }

    pub fn stepper(&self) -> Stepper {
        self.solve.stepper.parse().unwrap_or(Stepper::Imex1)
    }

    pub fn quadrature_horizon(&self) -> f64 {
        self.experiment
            .quadrature_horizon
            .unwrap_or(-self.noise.t_min)
    }

    /// Fills every defaulted value so the echo is self-contained.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        out.grid.extents = Some(self.grid_spec().extents);
        out.solve.dt = Some(self.solver_dt());
        let profiles = self.params().profiles;
        out.params.profiles = Some(
            profiles
                .iter()
                .map(|p| ProfileConfig {
                    modes: p.modes.clone(),
                    amplitude: p.amplitude,
                })
                .collect(),
        );
        out.experiment.quadrature_horizon = Some(self.quadrature_horizon());
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let dim = self.dimension();
        if dim != 1 && dim != 2 {
            return Err(constraint(
                text,
                "grid.points",
                format!(
                    "domain dimension {dim} is not supported; the analysis requires \
                     dimension 1 or 2 (n ≤ 2)"
                ),
            ));
        }
        if let Some(ext) = &self.grid.extents {
            if ext.len() != dim {
                return Err(constraint(
                    text,
                    "grid.extents",
                    format!("{} extents for {dim} axes", ext.len()),
                ));
            }
        }
        if let Err(e) = stochhr::Grid::new(&self.grid_spec()) {
            let key = match e {
                stochhr::Error::TooFewPoints { .. } => "grid.points",
                _ => "grid.extents",
            };
            return Err(constraint(text, key, e.to_string()));
        }
        if let Some(list) = &self.params.profiles {
            if list.len() != 3 {
                return Err(constraint(
                    text,
                    "params.profiles",
                    format!("exactly 3 profiles required, got {}", list.len()),
                ));
            }
        }
        let params = self.params();
        let grid = stochhr::Grid::new(&self.grid_spec()).expect("checked above");
        if let Err(e) = params.validate_for(&grid) {
            let key = match &e {
                stochhr::Error::InvalidParameter { name, .. } => match *name {
                    "d1" | "d2" | "d3" => "params.d".to_string(),
                    "J" => "params.j".to_string(),
                    n if n.starts_with("profile") => "params.profiles".to_string(),
                    n => format!("params.{n}"),
                },
                _ => "params".to_string(),
            };
            return Err(constraint(text, &key, e.to_string()));
        }
        let tg = self
            .time_grid()
            .map_err(|e| constraint(text, "noise.dt", e.to_string()))?;
        let sdt = self.solver_dt();
        let ratio = self.noise.dt / sdt;
        if !(sdt > 0.0) || ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(constraint(
                text,
                "solve.dt",
                format!("solver dt {sdt} must divide noise dt {}", self.noise.dt),
            ));
        }
        if self.solve.stepper.parse::<Stepper>().is_err() {
            return Err(constraint(
                text,
                "solve.stepper",
                format!(
                    "unknown stepper `{}` (expected imex1 or explicit-rk2)",
                    self.solve.stepper
                ),
            ));
        }
        for (key, t) in [
            ("solve.t_start", self.solve.t_start),
            ("solve.t_end", self.solve.t_end),
        ] {
            if tg.index_of(t).is_err() {
                return Err(constraint(
                    text,
                    key,
                    format!(
                        "time {t} is not a grid point of the noise window [{}, {}]",
                        tg.t_min(),
                        tg.t_max()
                    ),
                ));
            }
        }
        if self.solve.t_end < self.solve.t_start {
            return Err(constraint(
                text,
                "solve.t_end",
                "end time precedes start time",
            ));
        }
        if self.solve.snapshot_stride == 0 {
            return Err(constraint(
                text,
                "solve.snapshot_stride",
                "must be at least 1",
            ));
        }
        match self.initial.kind.as_str() {
            "constant" => {}
            "ball" => {
                if !(self.initial.radius >= 0.0) {
                    return Err(constraint(text, "initial.radius", "must be nonnegative"));
                }
            }
            "file" => {
                if self.initial.file.is_none() {
                    return Err(constraint(
                        text,
                        "initial.file",
                        "kind = \"file\" needs a file path",
                    ));
                }
            }
            other => {
                return Err(constraint(
                    text,
                    "initial.kind",
                    format!("unknown initial kind `{other}` (constant, ball or file)"),
                ))
            }
        }
        if let Some(kind) = &self.experiment.kind {
            if !["simulate", "pullback", "diagnose", "convergence"].contains(&kind.as_str()) {
                return Err(constraint(
                    text,
                    "experiment.kind",
                    format!("unknown experiment `{kind}`"),
                ));
            }
        }
        validate_horizons(&self.experiment.horizons, &tg)
            .map_err(|m| constraint(text, "experiment.horizons", m))?;
        if self.experiment.cloud < 2 {
            return Err(constraint(
                text,
                "experiment.cloud",
                "cloud needs at least 2 members",
            ));
        }
        if !(self.experiment.cloud_radius_factor > 0.0) {
            return Err(constraint(
                text,
                "experiment.cloud_radius_factor",
                "must be positive",
            ));
        }
        if let Some(r) = self.experiment.cloud_radius {
            if !(r >= 0.0) {
                return Err(constraint(
                    text,
                    "experiment.cloud_radius",
                    "must be nonnegative",
                ));
            }
        }
        if let Some(h) = self.experiment.quadrature_horizon {
            if !(h > 1.0) || tg.index_of(-h).is_err() {
                return Err(constraint(
                    text,
                    "experiment.quadrature_horizon",
                    format!("horizon {h} must exceed 1 and lie on the noise window"),
                ));
            }
        }
        let dts = &self.experiment.convergence_dts;
        if dts.len() < 3 || dts.iter().any(|d| !(*d > 0.0)) {
            return Err(constraint(
                text,
                "experiment.convergence_dts",
                "at least three positive steps required",
            ));
        }
        Ok(())
    }
}

/// Horizons must be increasing, nonnegative and inside the noise window.
pub fn validate_horizons(horizons: &[f64], tg: &TimeGrid) -> Result<(), String> {
    if horizons.is_empty() {
        return Err("at least one horizon required".into());
    }
    for w in horizons.windows(2) {
        if !(w[1] > w[0]) {
            return Err(format!(
                "horizons must increase, got {} then {}",
                w[0], w[1]
            ));
        }
    }
    for &h in horizons {
        if !(h >= 0.0) || tg.index_of(-h).is_err() {
            return Err(format!(
                "horizon {h} is outside the noise window [{}, {}] or off its grid",
                tg.t_min(),
                tg.t_max()
            ));
        }
    }
    Ok(())
}

/// `key=value` lines to a map (used to compare summaries).
pub fn parse_summary(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
