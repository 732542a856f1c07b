//! `runs.csv`: one row per (run, episode).

use std::io::{Read, Write};

use crate::env::EnvKind;
use crate::runner::{Phase, RunResult, Variant};

use super::ExperimentError;

pub const HEADER: [&str; 7] = [
    "seed",
    "variant",
    "env",
    "episode",
    "episode_reward",
    "cumulative_env_steps",
    "phase",
];

/// The per-episode part of a run, which is what the table stores.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub env: EnvKind,
    pub variant: Variant,
    pub seed: u64,
    pub episode_rewards: Vec<f64>,
    pub episode_lengths: Vec<usize>,
    pub phases: Vec<Phase>,
}

impl RunRecord {
    pub fn from_result(env: EnvKind, r: &RunResult) -> Self {
        RunRecord {
            env,
            variant: r.variant,
            seed: r.seed,
            episode_rewards: r.episode_rewards.clone(),
            episode_lengths: r.episode_lengths.clone(),
            phases: r.phases.clone(),
        }
    }

    pub fn cumulative_steps(&self) -> Vec<u64> {
        let mut acc = 0u64;
        self.episode_lengths
            .iter()
            .map(|&n| {
                acc += n as u64;
                acc
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Csv(e.to_string())
}

/// Writes row-groups to a sink, header first.
pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TableWriter<W> {
    pub fn new(sink: W) -> Result<Self, ExperimentError> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(HEADER).map_err(csv_err)?;
        inner.flush()?;
        Ok(TableWriter { inner })
    }

    /// Append all rows of one run and flush.
    pub fn write_run(&mut self, rec: &RunRecord) -> Result<(), ExperimentError> {
        let env = rec.env.to_string();
        let steps = rec.cumulative_steps();
        for (i, &reward) in rec.episode_rewards.iter().enumerate() {
            // `{}` on f64 prints the shortest string that parses back exactly.
            self.inner
                .write_record([
                    rec.seed.to_string(),
                    rec.variant.name().to_string(),
                    env.clone(),
                    (i + 1).to_string(),
                    format!("{reward}"),
                    steps[i].to_string(),
                    rec.phases[i].name().to_string(),
                ])
                .map_err(csv_err)?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, ExperimentError> {
        self.inner
            .into_inner()
            .map_err(|e| ExperimentError::Csv(e.to_string()))
    }
}

pub fn write_table<W: Write>(sink: W, records: &[RunRecord]) -> Result<W, ExperimentError> {
    let mut w = TableWriter::new(sink)?;
    for r in records {
        w.write_run(r)?;
    }
    w.into_inner()
}

/// Parse a table back into runs, in order of first appearance.
pub fn read_table<R: Read>(source: R) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(source);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(ExperimentError::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out: Vec<RunRecord> = Vec::new();
    let mut last_steps = 0u64;
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        let bad = |what: &str| ExperimentError::Csv(format!("line {line}: bad {what}"));
        let seed: u64 = row[0].parse().map_err(|_| bad("seed"))?;
        let variant: Variant = row[1].parse().map_err(|_| bad("variant"))?;
        let env: EnvKind = row[2].parse().map_err(|_| bad("env"))?;
        let episode: usize = row[3].parse().map_err(|_| bad("episode"))?;
        let reward: f64 = row[4].parse().map_err(|_| bad("episode_reward"))?;
        let steps: u64 = row[5].parse().map_err(|_| bad("cumulative_env_steps"))?;
        let phase: Phase = row[6].parse().map_err(|_| bad("phase"))?;
        let same_run = out.last().is_some_and(|r| {
            r.seed == seed
                && r.variant == variant
                && r.env == env
                && r.episode_rewards.len() + 1 == episode
        });
        if !same_run {
            if episode != 1 {
                return Err(bad("episode numbering"));
            }
            out.push(RunRecord {
                env,
                variant,
                seed,
                episode_rewards: Vec::new(),
                episode_lengths: Vec::new(),
                phases: Vec::new(),
            });
            last_steps = 0;
        }
        let rec = out.last_mut().expect("pushed above");
        let len = steps
            .checked_sub(last_steps)
            .ok_or_else(|| bad("cumulative_env_steps (decreasing)"))?;
        last_steps = steps;
        rec.episode_rewards.push(reward);
        rec.episode_lengths.push(len as usize);
        rec.phases.push(phase);
    }
    Ok(out)
}
