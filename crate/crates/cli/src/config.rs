//! Flat key = value run configuration.
//!
//! A config file is a sequence of `key = value` lines; `#` starts a comment
//! and blank lines are ignored. Keys may appear at most once in a file.
//! `--set key=value` arguments are applied after the file, so they win over
//! it; a key repeated across several `--set` arguments keeps the last value.

use crate::experiments::Experiment;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

/// Where an entry came from, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    File(usize),
    Set,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::File(line) => write!(f, "line {line}"),
            Place::Set => write!(f, "--set"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{place}: expected key = value, got '{text}'")]
    BadLine { place: Place, text: String },
    #[error("{place}: unknown key '{key}'")]
    UnknownKey { place: Place, key: String },
    #[error("line {line}: duplicate key '{key}' (already set on line {first})")]
    DuplicateKey {
        key: String,
        line: usize,
        first: usize,
    },
    #[error("{place}: bad value '{value}' for '{key}': {reason}")]
    BadValue {
        place: Place,
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key 'experiment'")]
    MissingExperiment,
    #[error("unknown experiment '{name}' (see list-experiments)")]
    UnknownExperiment { name: String },
    #[error("{name}: min {min} exceeds max {max}")]
    UnorderedRange {
        name: &'static str,
        min: f64,
        max: f64,
    },
    #[error("{name}: {reason}")]
    BadBound { name: &'static str, reason: String },
    #[error("no output path: pass --out or set 'out' in the config")]
    MissingOut,
    #[error("cannot read '{path}': {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
}

/// Inclusive sweep range. `steps` counts grid points; one step pins the
/// value to `min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn fixed(value: f64) -> Self {
        Self::new(value, value, 1)
    }

    pub fn is_fixed(&self) -> bool {
        self.steps == 1
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let denom = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.min + span * k as f64 / denom)
            .collect()
    }

    fn check_ordered(&self, name: &'static str) -> Result<(), ConfigError> {
        if self.steps == 0 {
            return Err(ConfigError::BadBound {
                name,
                reason: "steps must be at least 1".into(),
            });
        }
        if self.min > self.max {
            return Err(ConfigError::UnorderedRange {
                name,
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }

    fn check_within(
        &self,
        name: &'static str,
        lo: f64,
        lo_open: bool,
        hi: f64,
    ) -> Result<(), ConfigError> {
        let below = if lo_open {
            self.min <= lo
        } else {
            self.min < lo
        };
        if below || self.max > hi {
            let bracket = if lo_open { "(" } else { "[" };
            return Err(ConfigError::BadBound {
                name,
                reason: format!("values must lie in {bracket}{lo}, {hi}]"),
            });
        }
        Ok(())
    }
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: Experiment,
    pub gamma: Range,
    pub eta: Range,
    pub c: Range,
    pub alpha: Range,
    pub t: Range,
    pub dim: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub place: Place,
}

const KEYS: [&str; 18] = [
    "experiment",
    "out",
    "dim",
    "gamma_min",
    "gamma_max",
    "gamma_steps",
    "eta_min",
    "eta_max",
    "eta_steps",
    "c_min",
    "c_max",
    "c_steps",
    "alpha_min",
    "alpha_max",
    "alpha_steps",
    "t_min",
    "t_max",
    "t_steps",
];

fn split_entry(text: &str, place: Place) -> Result<Option<Entry>, ConfigError> {
    let bare = match text.find('#') {
        Some(pos) => &text[..pos],
        None => text,
    };
    let bare = bare.trim();
    if bare.is_empty() {
        return Ok(None);
    }
    let Some((key, value)) = bare.split_once('=') else {
        return Err(ConfigError::BadLine {
            place,
            text: bare.to_string(),
        });
    };
    let key = key.trim().to_string();
    let value = value.trim().to_string();
    if key.is_empty() || value.is_empty() {
        return Err(ConfigError::BadLine {
            place,
            text: bare.to_string(),
        });
    }
    if !KEYS.contains(&key.as_str()) {
        return Err(ConfigError::UnknownKey { place, key });
    }
    Ok(Some(Entry { key, value, place }))
}

/// Parses file text into entries, rejecting repeated keys.
pub fn parse_file_text(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let place = Place::File(idx + 1);
        let Some(entry) = split_entry(line, place)? else {
            continue;
        };
        if let Some(first) = entries.iter().find(|e| e.key == entry.key) {
            let Place::File(first_line) = first.place else {
                unreachable!("file entries carry file places");
            };
            return Err(ConfigError::DuplicateKey {
                key: entry.key,
                line: idx + 1,
                first: first_line,
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Parses `--set key=value` arguments; later repeats of a key win.
pub fn parse_set_args(args: &[String]) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for arg in args {
        let Some(entry) = split_entry(arg, Place::Set)? else {
            return Err(ConfigError::BadLine {
                place: Place::Set,
                text: arg.clone(),
            });
        };
        entries.retain(|e| e.key != entry.key);
        entries.push(entry);
    }
    Ok(entries)
}

fn parse_f64(entry: &Entry) -> Result<f64, ConfigError> {
    match entry.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::BadValue {
            place: entry.place,
            key: entry.key.clone(),
            value: entry.value.clone(),
            reason: "expected a finite number".into(),
        }),
    }
}

fn parse_steps(entry: &Entry) -> Result<usize, ConfigError> {
    match entry.value.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(ConfigError::BadValue {
            place: entry.place,
            key: entry.key.clone(),
            value: entry.value.clone(),
            reason: "expected an integer of at least 1".into(),
        }),
    }
}

fn parse_dim(entry: &Entry) -> Result<usize, ConfigError> {
    match entry.value.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(ConfigError::BadValue {
            place: entry.place,
            key: entry.key.clone(),
            value: entry.value.clone(),
            reason: "expected an integer of at least 2".into(),
        }),
    }
}

/// Merges file and `--set` entries over the experiment's defaults and
/// validates the result.
pub fn build(entries: &[Entry]) -> Result<Config, ConfigError> {
    let experiment = entries
        .iter()
        .rev()
        .find(|e| e.key == "experiment")
        .ok_or(ConfigError::MissingExperiment)?;
    let experiment =
        Experiment::parse(&experiment.value).ok_or_else(|| ConfigError::UnknownExperiment {
            name: experiment.value.clone(),
        })?;
    let mut cfg = experiment.default_config();
    for entry in entries {
        match entry.key.as_str() {
            "experiment" => {}
            "out" => cfg.out = Some(PathBuf::from(&entry.value)),
            "dim" => cfg.dim = Some(parse_dim(entry)?),
            "gamma_min" => cfg.gamma.min = parse_f64(entry)?,
            "gamma_max" => cfg.gamma.max = parse_f64(entry)?,
            "gamma_steps" => cfg.gamma.steps = parse_steps(entry)?,
            "eta_min" => cfg.eta.min = parse_f64(entry)?,
            "eta_max" => cfg.eta.max = parse_f64(entry)?,
            "eta_steps" => cfg.eta.steps = parse_steps(entry)?,
            "c_min" => cfg.c.min = parse_f64(entry)?,
            "c_max" => cfg.c.max = parse_f64(entry)?,
            "c_steps" => cfg.c.steps = parse_steps(entry)?,
            "alpha_min" => cfg.alpha.min = parse_f64(entry)?,
            "alpha_max" => cfg.alpha.max = parse_f64(entry)?,
            "alpha_steps" => cfg.alpha.steps = parse_steps(entry)?,
            "t_min" => cfg.t.min = parse_f64(entry)?,
            "t_max" => cfg.t.max = parse_f64(entry)?,
            "t_steps" => cfg.t.steps = parse_steps(entry)?,
            other => unreachable!("key '{other}' passed the known-key filter"),
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &Config) -> Result<(), ConfigError> {
    cfg.gamma.check_ordered("gamma")?;
    cfg.eta.check_ordered("eta")?;
    cfg.c.check_ordered("c")?;
    cfg.alpha.check_ordered("alpha")?;
    cfg.t.check_ordered("t")?;
    if cfg.gamma.min < 0.0 {
        return Err(ConfigError::BadBound {
            name: "gamma",
            reason: "values must be non-negative".into(),
        });
    }
    cfg.eta.check_within("eta", 0.0, true, 1.0)?;
    cfg.c.check_within("c", -1.0, false, 1.0)?;
    cfg.t.check_within("t", 0.0, true, 1.0)?;
    Ok(())
}

/// One-call path from raw sources to a validated config.
pub fn from_sources(file_text: &str, set_args: &[String]) -> Result<Config, ConfigError> {
    let mut entries = parse_file_text(file_text)?;
    entries.extend(parse_set_args(set_args)?);
    build(&entries)
}

/// The output path wins in the order: command line, config file.
pub fn resolve_out(cfg: &Config, cli_out: Option<PathBuf>) -> Result<PathBuf, ConfigError> {
    cli_out
        .or_else(|| cfg.out.clone())
        .ok_or(ConfigError::MissingOut)
}
