//! Experiment configuration: a flat `key = value` file with optional repeated
//! `[run]` sections, overridden by command-line flags.
//!
//! ```text
//! env = cliffwalking
//! seeds = 0,1,2,3,4
//! episodes = 200
//!
//! [run]
//! variant = loro
//!
//! [run]
//! variant = on_policy
//! ```
//!
//! Top-level keys apply to every run; keys inside a `[run]` section apply to
//! that run only. Without any `[run]` section the top level describes a single
//! run. A comma list in `variant` expands into one run per variant.

use std::path::PathBuf;

use thiserror::Error;

use crate::agents::Hyperparams;
use crate::env::{EnvKind, MdpSpec};
use crate::policy::{CollectorKind, HistoryMode};
use crate::runner::{RunConfig, Variant};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("no environment given (set env = ... or pass --env)")]
    MissingEnv,
    #[error("no seeds given")]
    NoSeeds,
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

/// Keys understood in config files; flags use the same names with dashes.
pub const KEYS: &[&str] = &[
    "env",
    "variant",
    "collector",
    "tau",
    "pretrain_steps",
    "episodes",
    "seeds",
    "gamma",
    "epsilon",
    "learning_rate",
    "batch_size",
    "buffer_capacity",
    "target_update_interval",
    "hidden",
    "updates_per_step",
    "slippery",
    "horizon",
    "out",
    "smoothing",
    "y_min",
    "y_max",
    "jobs",
    "llm_parallel",
    "endpoint",
    "model",
    "history",
    "history_window",
    "save_dataset",
    "load_dataset",
    "audit",
];

fn canonical_key(key: &str) -> String {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    match k.as_str() {
        "lr" => "learning_rate".into(),
        "batch" => "batch_size".into(),
        "buffer" | "buffer_size" => "buffer_capacity".into(),
        "target_interval" => "target_update_interval".into(),
        "t" | "total_episodes" => "episodes".into(),
        _ => k,
    }
}

/// Parsed but not yet interpreted file contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub global: Vec<(String, String)>,
    pub runs: Vec<Vec<(String, String)>>,
}

pub fn parse_config_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut in_run = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line.eq_ignore_ascii_case("[run]") {
                raw.runs.push(Vec::new());
                in_run = true;
                continue;
            }
            return Err(ConfigError::Syntax {
                line: line_no,
                reason: format!("unknown section {line}"),
            });
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            reason: "expected key = value".into(),
        })?;
        let key = canonical_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(k.trim().to_string()));
        }
        let entry = (key, v.trim().trim_matches('"').to_string());
        if in_run {
            raw.runs.last_mut().expect("section opened").push(entry);
        } else {
            raw.global.push(entry);
        }
    }
    Ok(raw)
}

/// Everything needed to execute and plot one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Run templates; each is executed once per seed (its own seed field is
    /// replaced).
    pub runs: Vec<RunConfig>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub smoothing: usize,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub jobs: usize,
    pub llm_parallel: bool,
    pub endpoint: Option<String>,
    pub model: String,
    pub history: HistoryMode,
    pub history_window: Option<usize>,
    pub save_dataset: Option<PathBuf>,
    pub load_dataset: Option<PathBuf>,
}

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_MODEL: &str = "Qwen/Qwen2.5-7B-Instruct";

/// Task length T used when none is given.
pub fn default_episodes(kind: EnvKind) -> usize {
    match kind {
        EnvKind::CartPole | EnvKind::FrozenLake => 150,
        EnvKind::CliffWalking | EnvKind::Pendulum => 200,
        EnvKind::MountainCar => 300,
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| invalid(key, value, e.to_string()))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

/// Seeds as a comma list, with `a..b` ranges (end exclusive).
fn seeds(key: &str, value: &str) -> Result<Vec<u64>, ConfigError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (num(key, a)?, num(key, b)?);
            out.extend(a..b);
        } else {
            out.push(num(key, part)?);
        }
    }
    Ok(out)
}

/// Per-run settings before defaults are filled in.
#[derive(Debug, Clone, Default)]
struct RunDraft {
    env: Option<EnvKind>,
    variants: Option<Vec<Variant>>,
    collector: Option<CollectorKind>,
    tau: Option<usize>,
    pretrain_steps: Option<usize>,
    episodes: Option<usize>,
    slippery: Option<bool>,
    horizon: Option<usize>,
    audit: Option<bool>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    buffer_capacity: Option<usize>,
    target_update_interval: Option<u64>,
    hidden: Option<Vec<usize>>,
    updates_per_step: Option<usize>,
}

impl RunDraft {
    /// Apply a run-level key. Returns false for experiment-level keys.
    fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "env" => {
                self.env = Some(
                    value
                        .parse()
                        .map_err(|e: crate::env::EnvError| invalid(key, value, e.to_string()))?,
                )
            }
            "variant" => {
                let vs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Variant>().map_err(|e| invalid(key, value, e)))
                    .collect::<Result<Vec<_>, _>>()?;
                if vs.is_empty() {
                    return Err(invalid(key, value, "empty variant list"));
                }
                self.variants = Some(vs);
            }
            "collector" => {
                self.collector = Some(value.parse().map_err(|e: String| invalid(key, value, e))?)
            }
            "tau" => self.tau = Some(num(key, value)?),
            "pretrain_steps" => self.pretrain_steps = Some(num(key, value)?),
            "episodes" => self.episodes = Some(num(key, value)?),
            "slippery" => self.slippery = Some(boolean(key, value)?),
            "horizon" => self.horizon = Some(num(key, value)?),
            "audit" => self.audit = Some(boolean(key, value)?),
            "gamma" => self.gamma = Some(num(key, value)?),
            "epsilon" => self.epsilon = Some(num(key, value)?),
            "learning_rate" => self.learning_rate = Some(num(key, value)?),
            "batch_size" => self.batch_size = Some(num(key, value)?),
            "buffer_capacity" => self.buffer_capacity = Some(num(key, value)?),
            "target_update_interval" => self.target_update_interval = Some(num(key, value)?),
            "hidden" => self.hidden = Some(list(key, value)?),
            "updates_per_step" => self.updates_per_step = Some(num(key, value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn overlay(&mut self, other: &RunDraft) {
        macro_rules! take {
            ($($f:ident),*) => {$(if other.$f.is_some() { self.$f = other.$f.clone(); })*};
        }
        take!(
            env,
            variants,
            collector,
            tau,
            pretrain_steps,
            episodes,
            slippery,
            horizon,
            audit,
            gamma,
            epsilon,
            learning_rate,
            batch_size,
            buffer_capacity,
            target_update_interval,
            hidden,
            updates_per_step
        );
    }

    fn build(&self) -> Result<Vec<RunConfig>, ConfigError> {
        let kind = self.env.ok_or(ConfigError::MissingEnv)?;
        let mut spec = MdpSpec::new(kind);
        if let Some(s) = self.slippery {
            spec = spec.with_slippery(s);
        }
        if let Some(h) = self.horizon {
            spec = spec.with_horizon(h);
        }
        let d = Hyperparams::default();
        let hp = Hyperparams {
            gamma: self.gamma.unwrap_or(d.gamma),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            buffer_capacity: self.buffer_capacity.unwrap_or(d.buffer_capacity),
            target_update_interval: self
                .target_update_interval
                .unwrap_or(d.target_update_interval),
            hidden: self.hidden.clone().unwrap_or(d.hidden),
            updates_per_step: self.updates_per_step.unwrap_or(d.updates_per_step),
            ..d
        };
        let variants = self.variants.clone().unwrap_or_else(|| vec![Variant::Loro]);
        let mut out = Vec::new();
        for variant in variants {
            let mut c = RunConfig::new(
                spec.clone(),
                variant,
                self.episodes.unwrap_or(default_episodes(kind)),
                0,
            );
            c.hp = hp.clone();
            c.tau = self.tau.unwrap_or(RunConfig::DEFAULT_TAU);
            c.pretrain_steps = self
                .pretrain_steps
                .unwrap_or(RunConfig::DEFAULT_PRETRAIN_STEPS);
            c.audit = self.audit.unwrap_or(false);
            c.collector = match (variant, self.collector) {
                (Variant::PretrainRandom, _) => CollectorKind::Random,
                (_, Some(k)) => k,
                (_, None) => CollectorKind::Scripted,
            };
            c.validate()
                .map_err(|e| ConfigError::Invalid(format!("{variant} on {kind}: {e}")))?;
            out.push(c);
        }
        Ok(out)
    }
}

impl ExperimentConfig {
    /// Interpret file contents (possibly empty) with `flags` applied on top.
    /// Flags are `(key, value)` pairs using config-file key names.
    pub fn from_parts(raw: &RawConfig, flags: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut exp = ExperimentConfig {
            runs: Vec::new(),
            seeds: DEFAULT_SEEDS.to_vec(),
            out_dir: PathBuf::from("results"),
            smoothing: 1,
            y_min: None,
            y_max: None,
            jobs: 1,
            llm_parallel: false,
            endpoint: None,
            model: DEFAULT_MODEL.to_string(),
            history: HistoryMode::Summary,
            history_window: None,
            save_dataset: None,
            load_dataset: None,
        };
        let mut global = RunDraft::default();
        let mut flag_draft = RunDraft::default();
        let flags: Vec<(String, String)> = flags
            .iter()
            .map(|(k, v)| (canonical_key(k), v.clone()))
            .collect();
        for (k, v) in raw.global.iter().chain(flags.iter()) {
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
            if !global.set(k, v)? {
                exp.set(k, v)?;
            }
        }
        for (k, v) in &flags {
            flag_draft.set(k, v)?;
        }
        let mut drafts = Vec::new();
        if raw.runs.is_empty() {
            drafts.push(global.clone());
        }
        for section in &raw.runs {
            let mut d = global.clone();
            for (k, v) in section {
                if !d.set(k, v)? {
                    return Err(ConfigError::Invalid(format!(
                        "{k} is an experiment-wide key and cannot appear in [run]"
                    )));
                }
            }
            // Flags beat both the top level and the section.
            d.overlay(&flag_draft);
            drafts.push(d);
        }
        for d in &drafts {
            exp.runs.extend(d.build()?);
        }
        if exp.seeds.is_empty() {
            return Err(ConfigError::NoSeeds);
        }
        if exp.runs.iter().any(|r| r.collector == CollectorKind::Llm) && !exp.llm_parallel {
            exp.jobs = 1;
        }
        Ok(exp)
    }

    pub fn from_text(text: &str, flags: &[(String, String)]) -> Result<Self, ConfigError> {
        Self::from_parts(&parse_config_text(text)?, flags)
    }

    pub fn load(
        path: Option<&std::path::Path>,
        flags: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_text(&text, flags)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seeds" => self.seeds = seeds(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "smoothing" => {
                self.smoothing = num(key, value)?;
                if self.smoothing == 0 {
                    return Err(invalid(key, value, "window must be at least 1"));
                }
            }
            "y_min" => self.y_min = Some(num(key, value)?),
            "y_max" => self.y_max = Some(num(key, value)?),
            "jobs" => {
                self.jobs = num(key, value)?;
                if self.jobs == 0 {
                    return Err(invalid(key, value, "need at least one job"));
                }
            }
            "llm_parallel" => self.llm_parallel = boolean(key, value)?,
            "endpoint" => self.endpoint = Some(value.to_string()),
            "model" => self.model = value.to_string(),
            "history" => {
                self.history = value.parse().map_err(|e: String| invalid(key, value, e))?
            }
            "history_window" => self.history_window = Some(num(key, value)?),
            "save_dataset" => self.save_dataset = Some(PathBuf::from(value)),
            "load_dataset" => self.load_dataset = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Number of (template, seed) runs.
    pub fn run_count(&self) -> usize {
        self.runs.len() * self.seeds.len()
    }
}
