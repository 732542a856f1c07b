use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loro_core::env::EnvKind;
use loro_core::experiment::{
    plot_dir, run_experiment, ExperimentConfig, ExperimentError, PlotOptions,
};
use loro_core::selfcheck;

#[derive(Parser)]
#[command(
    name = "loro",
    version,
    about = "Warm-started off-policy RL experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (variant, seed) pair of an experiment.
    Run(RunArgs),
    /// Draw learning curves from a results directory.
    Plot(PlotArgs),
    /// Run the built-in oracle checks.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (key = value lines, optional [run] sections).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    /// One variant or a comma list.
    #[arg(long)]
    variant: Option<String>,
    /// llm, scripted or random.
    #[arg(long)]
    collector: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    pretrain_steps: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    /// Comma list, `a..b` ranges allowed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    save_dataset: Option<String>,
    #[arg(long)]
    load_dataset: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// Allow parallel runs with the LLM collector.
    #[arg(long)]
    llm_parallel: bool,
    /// Any other config key, e.g. `--set gamma=0.95`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn flags(&self) -> Result<Vec<(String, String)>, String> {
        let named = [
            ("env", &self.env),
            ("variant", &self.variant),
            ("collector", &self.collector),
            ("tau", &self.tau),
            ("pretrain_steps", &self.pretrain_steps),
            ("episodes", &self.episodes),
            ("seeds", &self.seeds),
            ("endpoint", &self.endpoint),
            ("model", &self.model),
            ("out", &self.out),
            ("save_dataset", &self.save_dataset),
            ("load_dataset", &self.load_dataset),
            ("jobs", &self.jobs),
        ];
        let mut out: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        // Named flags win over --set.
        for (k, v) in named {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        if self.llm_parallel {
            out.push(("llm_parallel".into(), "true".into()));
        }
        Ok(out)
    }
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding runs.csv.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Which environment to draw when the table holds several.
    #[arg(long)]
    env: Option<String>,
    /// Moving-average window applied to the mean curve.
    #[arg(long, default_value_t = 1)]
    smoothing: usize,
    #[arg(long, allow_hyphen_values = true)]
    y_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_max: Option<f64>,
    #[arg(long)]
    title: Option<String>,
}

fn run(args: RunArgs) -> Result<(), String> {
    let flags = args.flags()?;
    let cfg = ExperimentConfig::load(args.config.as_deref(), &flags).map_err(|e| e.to_string())?;
    eprintln!(
        "{} run(s): {} template(s) x {} seed(s), {} job(s), writing to {}",
        cfg.run_count(),
        cfg.runs.len(),
        cfg.seeds.len(),
        cfg.jobs,
        cfg.out_dir.display()
    );
    let results = run_experiment(&cfg).map_err(|e| e.to_string())?;
    for (i, r) in results.iter().enumerate() {
        let env = cfg.runs[i / cfg.seeds.len()].env.kind;
        let r_avg = r
            .r_avg_first_tau
            .map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{env} {} seed {}: total {:.1}, last {:.1}, r_avg {r_avg}, env steps {}, extraction failures {}, {:.1}s",
            r.variant,
            r.seed,
            r.total_reward(),
            r.episode_rewards.last().copied().unwrap_or(f64::NAN),
            r.env_steps,
            r.extraction_failures,
            r.wall_time.as_secs_f64()
        );
    }
    println!("wrote {}", cfg.out_dir.join("runs.csv").display());
    Ok(())
}

fn plot(args: PlotArgs) -> Result<(), String> {
    if args.smoothing == 0 {
        return Err("--smoothing must be at least 1".into());
    }
    let env = args
        .env
        .as_deref()
        .map(str::parse::<EnvKind>)
        .transpose()
        .map_err(|e| e.to_string())?;
    let opts = PlotOptions {
        title: args.title,
        y_min: args.y_min,
        y_max: args.y_max,
    };
    plot_dir(&args.input, &args.out, env, args.smoothing, &opts)
        .map_err(|e: ExperimentError| e.to_string())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn verify() -> Result<(), String> {
    let outcomes = selfcheck::run_all();
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(format!("{failed} of {} checks failed", outcomes.len()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Plot(a) => plot(a),
        Command::Verify => verify(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
