//! Experiment harness: fan out (template × seed) runs, stream `runs.csv`,
//! aggregate across seeds and draw the learning curves.

pub mod aggregate;
pub mod config;
pub mod svg;
pub mod table;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use thiserror::Error;

use crate::env::EnvKind;
use crate::policy::chat::{ChatError, ChatTransport};
use crate::policy::{CollectorKind, LlmPolicy, PolicySource, TranscriptLog};
use crate::replay::{Dataset, ReplayError};
use crate::runner::{
    offline_source, run_variant_with_source, RunConfig, RunError, RunResult, Variant,
};

pub use aggregate::{
    aggregate, flat_references, mean_se, plotted, smooth, AggregateCurve, FlatReference,
};
pub use config::{default_episodes, parse_config_text, ConfigError, ExperimentConfig};
pub use svg::{render_svg, PlotOptions};
pub use table::{read_table, write_table, RunRecord, TableWriter, HEADER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{env} {variant} seed {seed}: {source}")]
    Run {
        env: EnvKind,
        variant: Variant,
        seed: u64,
        #[source]
        source: RunError,
    },
    #[error("chat endpoint for {env} {variant} seed {seed}: {source}")]
    Chat {
        env: EnvKind,
        variant: Variant,
        seed: u64,
        #[source]
        source: ChatError,
    },
    #[error("dataset {path}: {source}")]
    Dataset {
        path: PathBuf,
        #[source]
        source: ReplayError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("curves of unequal length: {expected} vs {found} episodes")]
    Ragged { expected: usize, found: usize },
    #[error("{label}: curves of unequal length ({expected} vs {found} episodes)")]
    RaggedGroup {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("no runs to aggregate")]
    EmptyGroup,
    #[error("nothing to plot")]
    NothingToPlot,
    #[error("{0}")]
    Plot(String),
}

/// Builds the chat transport for one LLM-collector run.
pub type TransportFactory<'a> =
    dyn Fn(&RunConfig) -> Result<Box<dyn ChatTransport>, ChatError> + Sync + 'a;

/// HTTP transport to `endpoint`, or to the endpoint named by the environment.
#[cfg(feature = "http")]
pub fn http_transport(endpoint: Option<&str>) -> Result<Box<dyn ChatTransport>, ChatError> {
    use crate::policy::chat::{HttpChatClient, API_KEY_ENV};
    let client = match endpoint {
        Some(e) => {
            HttpChatClient::new(e, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
        }
        None => HttpChatClient::from_env()?,
    };
    Ok(Box::new(client))
}

#[cfg(not(feature = "http"))]
pub fn http_transport(_endpoint: Option<&str>) -> Result<Box<dyn ChatTransport>, ChatError> {
    Err(ChatError::NotConfigured("the http feature"))
}

/// One (template, seed) pair, in job order.
#[derive(Debug, Clone)]
struct Job {
    template: usize,
    config: RunConfig,
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::with_capacity(cfg.run_count());
    for (i, t) in cfg.runs.iter().enumerate() {
        for &seed in &cfg.seeds {
            let mut c = t.clone();
            c.seed = seed;
            out.push(Job {
                template: i,
                config: c,
            });
        }
    }
    out
}

/// Variants whose warm start uses the configured collector and so can be
/// replayed from a saved dataset.
fn uses_collector_data(v: Variant) -> bool {
    matches!(v, Variant::Loro | Variant::Mix | Variant::CollectorOnly)
}

pub fn transcript_path(out_dir: &Path, c: &RunConfig) -> PathBuf {
    out_dir.join("transcripts").join(format!(
        "{}-{}-seed{}.txt",
        c.env.kind,
        c.variant.name().to_ascii_lowercase(),
        c.seed
    ))
}

fn execute(
    cfg: &ExperimentConfig,
    c: &RunConfig,
    factory: &TransportFactory<'_>,
    preloaded: Option<&Dataset>,
) -> Result<RunResult, ExperimentError> {
    let run_err = |source| ExperimentError::Run {
        env: c.env.kind,
        variant: c.variant,
        seed: c.seed,
        source,
    };
    let preloaded = preloaded
        .filter(|_| uses_collector_data(c.variant))
        .cloned();
    let mut source = if preloaded.is_some() || !c.variant.needs_warm_start() {
        // The collector is never queried.
        PolicySource::Random
    } else if c.collector == CollectorKind::Llm {
        let transport = factory(c).map_err(|source| ExperimentError::Chat {
            env: c.env.kind,
            variant: c.variant,
            seed: c.seed,
            source,
        })?;
        let path = transcript_path(&cfg.out_dir, c);
        let log = TranscriptLog::new(Box::new(BufWriter::new(File::create(path)?)));
        let policy = LlmPolicy::new(c.env.clone(), cfg.model.clone(), transport)
            .with_history(cfg.history, cfg.history_window)
            .with_transcript(log);
        PolicySource::Llm(Box::new(policy))
    } else {
        offline_source(c.collector).map_err(run_err)?
    };
    run_variant_with_source(c, &mut source, preloaded).map_err(run_err)
}

/// Where the dataset of run `i` of `n` is saved.
pub fn dataset_path(base: &Path, n: usize, c: &RunConfig) -> PathBuf {
    if n <= 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!(
            "{stem}-{}-seed{}.{ext}",
            c.variant.name().to_ascii_lowercase(),
            c.seed
        ),
        None => format!(
            "{stem}-{}-seed{}",
            c.variant.name().to_ascii_lowercase(),
            c.seed
        ),
    };
    base.with_file_name(name)
}

/// Run everything in `cfg` with HTTP chat transports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>, ExperimentError> {
    let endpoint = cfg.endpoint.clone();
    run_experiment_with(cfg, &move |_: &RunConfig| {
        http_transport(endpoint.as_deref())
    })
}

/// Run every (template × seed) pair, up to `cfg.jobs` at a time. Rows of
/// `runs.csv` are appended in job order as soon as the completed prefix grows,
/// so the file is deterministic and always holds whole row-groups. Afterwards
/// the figure(s) are written next to it.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    factory: &TransportFactory<'_>,
) -> Result<Vec<RunResult>, ExperimentError> {
    if cfg.runs.is_empty() {
        return Err(ConfigError::Invalid("no runs configured".into()).into());
    }
    if cfg.seeds.is_empty() {
        return Err(ConfigError::NoSeeds.into());
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    if cfg.runs.iter().any(|r| r.collector == CollectorKind::Llm) {
        std::fs::create_dir_all(cfg.out_dir.join("transcripts"))?;
    }

    let mut preloaded: Vec<Option<Dataset>> = vec![None; cfg.runs.len()];
    if let Some(path) = &cfg.load_dataset {
        for (i, t) in cfg.runs.iter().enumerate() {
            if uses_collector_data(t.variant) {
                let d = Dataset::load(path, t.env.kind, t.collector.source_tag()).map_err(
                    |source| ExperimentError::Dataset {
                        path: path.clone(),
                        source,
                    },
                )?;
                preloaded[i] = Some(d);
            }
        }
    }

    let all = jobs(cfg);
    let n = all.len();
    let mut table = TableWriter::new(BufWriter::new(File::create(cfg.out_dir.join("runs.csv"))?))?;
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = cfg.jobs.clamp(1, n);
    let mut slots: Vec<Option<Result<RunResult, ExperimentError>>> = (0..n).map(|_| None).collect();
    let mut written = 0;
    let mut first_error: Option<ExperimentError> = None;

    std::thread::scope(|scope| -> Result<(), ExperimentError> {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, all, preloaded) = (&next, &stop, &all, &preloaded);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= all.len() {
                    break;
                }
                let job = &all[i];
                let r = execute(cfg, &job.config, factory, preloaded[job.template].as_ref());
                if tx.send((i, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            if r.is_err() {
                stop.store(true, Ordering::SeqCst);
            }
            slots[i] = Some(r);
            // Flush the completed prefix.
            while written < n && first_error.is_none() {
                match &slots[written] {
                    Some(Ok(res)) => {
                        let job = &all[written];
                        table.write_run(&RunRecord::from_result(job.config.env.kind, res))?;
                        written += 1;
                    }
                    Some(Err(_)) => {
                        if let Some(Err(e)) = slots[written].take() {
                            first_error = Some(e);
                        }
                    }
                    None => break,
                }
            }
        }
        Ok(())
    })?;
    table.into_inner()?;
    if let Some(e) = first_error {
        return Err(e);
    }
    // A worker may have stopped early after an error in a later slot.
    let mut results = Vec::with_capacity(n);
    for slot in slots.into_iter() {
        match slot {
            Some(Ok(r)) => results.push(r),
            Some(Err(e)) => return Err(e),
            None => {}
        }
    }
    if results.len() != n {
        return Err(ExperimentError::Plot(
            "runs stopped before completion".into(),
        ));
    }

    if let Some(base) = &cfg.save_dataset {
        let with_data: Vec<(&Job, &Dataset)> = all
            .iter()
            .zip(&results)
            .filter(|(j, _)| uses_collector_data(j.config.variant))
            .filter_map(|(j, r)| r.dataset.as_ref().map(|d| (j, d)))
            .collect();
        for (j, d) in &with_data {
            let path = dataset_path(base, with_data.len(), &j.config);
            d.save(&path)
                .map_err(|source| ExperimentError::Dataset { path, source })?;
        }
    }

    let records: Vec<RunRecord> = all
        .iter()
        .zip(&results)
        .map(|(j, r)| RunRecord::from_result(j.config.env.kind, r))
        .collect();
    write_figures(
        &records,
        &cfg.out_dir,
        cfg.smoothing,
        &PlotOptions {
            title: None,
            y_min: cfg.y_min,
            y_max: cfg.y_max,
        },
    )?;
    Ok(results)
}

/// Envs present in `records`, in order of first appearance.
pub fn envs_in(records: &[RunRecord]) -> Vec<EnvKind> {
    let mut out = Vec::new();
    for r in records {
        if !out.contains(&r.env) {
            out.push(r.env);
        }
    }
    out
}

/// SVG for one env of a table. COLLECTOR_ONLY and random-policy levels become
/// flat references.
pub fn figure_for(
    records: &[RunRecord],
    env: EnvKind,
    smoothing: usize,
    opts: &PlotOptions,
) -> Result<String, ExperimentError> {
    let curves = aggregate(records, smoothing)?;
    let lines = plotted(&curves, env);
    let refs = flat_references(records, env);
    let mut opts = opts.clone();
    if opts.title.is_none() {
        opts.title = Some(env.to_string());
    }
    if lines.is_empty() {
        // Only references: draw the collector as a curve so the figure is not empty.
        let only = curves
            .into_iter()
            .filter(|c| c.env == env)
            .collect::<Vec<_>>();
        return render_svg(&only, &[], &opts);
    }
    render_svg(&lines, &refs, &opts)
}

/// `curves.svg` for a single env, `curves-<env>.svg` for each env otherwise.
pub fn write_figures(
    records: &[RunRecord],
    dir: &Path,
    smoothing: usize,
    opts: &PlotOptions,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let envs = envs_in(records);
    let mut written = Vec::new();
    for &env in &envs {
        let path = if envs.len() == 1 {
            dir.join("curves.svg")
        } else {
            dir.join(format!("curves-{env}.svg"))
        };
        std::fs::write(&path, figure_for(records, env, smoothing, opts)?)?;
        written.push(path);
    }
    Ok(written)
}

/// `loro plot`: read `runs.csv` from `dir` and render one env to `out`.
pub fn plot_dir(
    dir: &Path,
    out: &Path,
    env: Option<EnvKind>,
    smoothing: usize,
    opts: &PlotOptions,
) -> Result<(), ExperimentError> {
    let file = File::open(dir.join("runs.csv"))?;
    let records = read_table(std::io::BufReader::new(file))?;
    let envs = envs_in(&records);
    let env = match (env, envs.as_slice()) {
        (Some(e), _) if envs.contains(&e) => e,
        (Some(e), _) => {
            return Err(ExperimentError::Plot(format!(
                "no {e} runs in {}",
                dir.display()
            )))
        }
        (None, [only]) => *only,
        (None, []) => return Err(ExperimentError::NothingToPlot),
        (None, _) => {
            return Err(ExperimentError::Plot(format!(
                "{} holds several environments; pick one with --env",
                dir.display()
            )))
        }
    };
    std::fs::write(out, figure_for(&records, env, smoothing, opts)?)?;
    Ok(())
}
