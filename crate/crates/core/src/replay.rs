//! Experience storage: the unbounded warm-start [`Dataset`] and the bounded
//! FIFO [`ReplayBuffer`] used online.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{Action, EnvKind, Observation};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot sample from an empty buffer")]
    Empty,
    #[error("cannot merge datasets from {0} and {1}")]
    ProvenanceMismatch(EnvKind, EnvKind),
    #[error("sampled a {found} transition from a buffer restricted to {required}")]
    ForeignSource {
        found: SourceTag,
        required: SourceTag,
    },
    #[error("dataset line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceTag {
    Llm,
    Scripted,
    Random,
    OnPolicy,
    Online,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::Llm => "llm",
            SourceTag::Scripted => "scripted",
            SourceTag::Random => "random",
            SourceTag::OnPolicy => "on_policy",
            SourceTag::Online => "online",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Observation,
    pub terminated: bool,
    pub truncated: bool,
    pub source: SourceTag,
    pub episode: usize,
    pub step: usize,
}

/// Ordered transitions from a single environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    env: EnvKind,
    source: SourceTag,
    transitions: Vec<Transition>,
}

impl Dataset {
    pub fn new(env: EnvKind, source: SourceTag) -> Self {
        Dataset {
            env,
            source,
            transitions: Vec::new(),
        }
    }

    pub fn env(&self) -> EnvKind {
        self.env
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    /// Concatenate `a` then `b`. The result keeps `a`'s source tag; each
    /// transition keeps its own.
    pub fn merge(a: &Dataset, b: &Dataset) -> Result<Dataset, ReplayError> {
        if a.env != b.env {
            return Err(ReplayError::ProvenanceMismatch(a.env, b.env));
        }
        let mut transitions = Vec::with_capacity(a.len() + b.len());
        transitions.extend_from_slice(&a.transitions);
        transitions.extend_from_slice(&b.transitions);
        Ok(Dataset {
            env: a.env,
            source: a.source,
            transitions,
        })
    }

    /// Tab-separated records: env, episode, step, obs, action, reward,
    /// next_obs, terminated, truncated.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<(), ReplayError> {
        for t in &self.transitions {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.env,
                t.episode,
                t.step,
                join_floats(&t.obs.values),
                t.action,
                t.reward,
                join_floats(&t.next_obs.values),
                u8::from(t.terminated),
                u8::from(t.truncated),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse records written by [`Dataset::write_tsv`]. Every record must
    /// belong to `env`; transitions are tagged with `source`.
    pub fn read_tsv<R: BufRead>(
        r: R,
        env: EnvKind,
        source: SourceTag,
    ) -> Result<Dataset, ReplayError> {
        let continuous = env == EnvKind::Pendulum;
        let mut ds = Dataset::new(env, source);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| ReplayError::Parse {
                line: lineno,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 9 {
                return Err(err(format!("expected 9 fields, found {}", fields.len())));
            }
            let kind = EnvKind::from_str(fields[0]).map_err(|e| err(e.to_string()))?;
            if kind != env {
                return Err(ReplayError::ProvenanceMismatch(env, kind));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(format!("bad flag {s:?}"))),
            };
            let floats = |s: &str| parse_floats(s).map_err(|e| err(e));
            let action = if continuous {
                Action::Continuous(floats(fields[4])?)
            } else {
                Action::Discrete(int(fields[4])?)
            };
            ds.push(Transition {
                episode: int(fields[1])?,
                step: int(fields[2])?,
                obs: Observation::from_values(env, floats(fields[3])?),
                action,
                reward: fields[5]
                    .parse()
                    .map_err(|e| err(format!("reward {:?}: {e}", fields[5])))?,
                next_obs: Observation::from_values(env, floats(fields[6])?),
                terminated: flag(fields[7])?,
                truncated: flag(fields[8])?,
                source,
            });
        }
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ReplayError> {
        let file = std::fs::File::create(path)?;
        self.write_tsv(std::io::BufWriter::new(file))
    }

    pub fn load(
        path: impl AsRef<Path>,
        env: EnvKind,
        source: SourceTag,
    ) -> Result<Dataset, ReplayError> {
        let file = std::fs::File::open(path)?;
        Dataset::read_tsv(std::io::BufReader::new(file), env, source)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

/// Capacity-bounded FIFO ring with seeded uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
    rng: ChaCha8Rng,
    required_source: Option<SourceTag>,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 100_000;

    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
            rng: ChaCha8Rng::seed_from_u64(seed),
            required_source: None,
        }
    }

    /// A buffer holding exactly `dataset`, sized to fit it.
    pub fn from_dataset(dataset: &Dataset, seed: u64) -> Self {
        let mut buf = ReplayBuffer::new(dataset.len().max(1), seed);
        buf.extend(dataset.iter().cloned());
        buf
    }

    /// Make every later [`ReplayBuffer::sample`] fail if it draws a
    /// transition whose source differs from `source`.
    pub fn require_source(&mut self, source: SourceTag) {
        self.required_source = Some(source);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    pub fn extend<I: IntoIterator<Item = Transition>>(&mut self, items: I) {
        for t in items {
            self.push(t);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    pub fn sample(&mut self, batch: usize) -> Result<Vec<&Transition>, ReplayError> {
        if self.storage.is_empty() {
            return Err(ReplayError::Empty);
        }
        let n = self.storage.len();
        let picks: Vec<usize> = (0..batch).map(|_| self.rng.random_range(0..n)).collect();
        let out: Vec<&Transition> = picks.into_iter().map(|i| &self.storage[i]).collect();
        if let Some(required) = self.required_source {
            if let Some(bad) = out.iter().find(|t| t.source != required) {
                return Err(ReplayError::ForeignSource {
                    found: bad.source,
                    required,
                });
            }
        }
        Ok(out)
    }
}
