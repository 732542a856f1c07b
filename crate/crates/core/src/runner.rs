//! One seeded run of a variant: warm-start collection, off-policy
//! pre-training, online fine-tuning.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agents::{Agent, AgentError, Hyperparams};
use crate::env::{Env, EnvError, MdpSpec};
use crate::policy::{CollectorKind, PolicyError, PolicySource};
use crate::replay::{Dataset, ReplayBuffer, ReplayError, SourceTag, Transition};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("pre-training needs a non-empty dataset")]
    EmptyDataset,
    #[error("average over the first episodes needs tau >= 1 and at least tau episodes")]
    BadTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Loro,
    Mix,
    OnPolicy,
    PretrainRandom,
    PretrainOnPolicy,
    CollectorOnly,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Loro,
        Variant::Mix,
        Variant::OnPolicy,
        Variant::PretrainRandom,
        Variant::PretrainOnPolicy,
        Variant::CollectorOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Loro => "LORO",
            Variant::Mix => "MIX",
            Variant::OnPolicy => "ON_POLICY",
            Variant::PretrainRandom => "PRETRAIN_RANDOM",
            Variant::PretrainOnPolicy => "PRETRAIN_ONPOLICY",
            Variant::CollectorOnly => "COLLECTOR_ONLY",
        }
    }

    /// Whether the variant starts with τ warm-start episodes.
    pub fn needs_warm_start(self) -> bool {
        !matches!(self, Variant::OnPolicy)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name().replace('_', "").to_ascii_lowercase() == key)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Collect,
    Online,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Collect => "collect",
            Phase::Online => "online",
        }
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "collect" => Ok(Phase::Collect),
            "online" => Ok(Phase::Online),
            _ => Err(format!("unknown phase {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: MdpSpec,
    pub variant: Variant,
    pub collector: CollectorKind,
    /// Warm-start episodes.
    pub tau: usize,
    pub pretrain_steps: usize,
    /// Total episodes T, warm-start episodes included.
    pub episodes: usize,
    pub seed: u64,
    pub hp: Hyperparams,
    /// Fail if the online learner of a LORO-style run ever samples a
    /// warm-start transition.
    pub audit: bool,
}

impl RunConfig {
    pub const DEFAULT_TAU: usize = 10;
    pub const DEFAULT_PRETRAIN_STEPS: usize = 1000;

    pub fn new(env: MdpSpec, variant: Variant, episodes: usize, seed: u64) -> Self {
        RunConfig {
            env,
            variant,
            collector: CollectorKind::Scripted,
            tau: Self::DEFAULT_TAU,
            pretrain_steps: Self::DEFAULT_PRETRAIN_STEPS,
            episodes,
            seed,
            hp: Hyperparams::default(),
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::InvalidConfig(m));
        self.env
            .validate()
            .map_err(|e| RunError::InvalidConfig(e.to_string()))?;
        self.hp.validate()?;
        if self.episodes == 0 {
            return bad("total episodes must be positive".into());
        }
        if self.tau > self.episodes {
            return bad(format!(
                "tau {} exceeds total episodes {}",
                self.tau, self.episodes
            ));
        }
        if self.variant.needs_warm_start() && self.tau == 0 {
            return bad(format!("{} requires tau >= 1", self.variant));
        }
        if self.variant == Variant::PretrainRandom && self.collector != CollectorKind::Random {
            return bad(
                "PRETRAIN_RANDOM collects with the random policy; set collector = random".into(),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub variant: Variant,
    pub seed: u64,
    pub episode_rewards: Vec<f64>,
    pub episode_lengths: Vec<usize>,
    pub phases: Vec<Phase>,
    /// Per-step average reward of the warm-start episodes (or of the first τ
    /// online episodes for ON_POLICY); `None` when τ = 0.
    pub r_avg_first_tau: Option<f64>,
    pub extraction_failures: u64,
    pub env_steps: u64,
    /// Environment steps taken while pre-training (always 0).
    pub pretrain_env_steps: u64,
    /// Learner updates performed while collecting (always 0).
    pub collect_updates: u64,
    pub dataset: Option<Dataset>,
    pub wall_time: Duration,
}

impl RunResult {
    pub fn total_reward(&self) -> f64 {
        self.episode_rewards.iter().sum()
    }

    pub fn cumulative_steps(&self) -> Vec<u64> {
        self.episode_lengths
            .iter()
            .scan(0u64, |acc, &n| {
                *acc += n as u64;
                Some(*acc)
            })
            .collect()
    }
}

/// Independent seed for one named stream of a run.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream ids passed to [`sub_seed`].
pub mod stream {
    pub const ENV: u64 = 1;
    pub const COLLECTOR: u64 = 2;
    pub const AGENT: u64 = 3;
    pub const PRETRAIN_BUFFER: u64 = 4;
    pub const ONLINE_BUFFER: u64 = 5;
    pub const ACT: u64 = 6;
    pub const SCOUT_AGENT: u64 = 7;
    pub const SCOUT_BUFFER: u64 = 8;
}

/// One finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStat {
    pub reward: f64,
    pub length: usize,
}

/// Run `tau` episodes with `collector`; every transition goes into the
/// returned dataset in order.
pub fn collect_episodes(
    env: &mut Env,
    collector: &mut PolicySource,
    tau: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, Vec<EpisodeStat>), RunError> {
    let spec = env.spec().clone();
    let tag = collector.source_tag();
    let mut data = Dataset::new(spec.kind, tag);
    let mut stats = Vec::with_capacity(tau);
    for episode in 0..tau {
        collector.start_episode();
        let mut obs = env.reset();
        let mut total = 0.0;
        let mut step = 0;
        loop {
            let action = collector.act(&spec, &obs, rng)?;
            let r = env.step(&action)?;
            collector.observe(&obs, &action, &r.next_obs, r.reward, r.terminated);
            total += r.reward;
            let done = r.done();
            data.push(Transition {
                obs,
                action,
                reward: r.reward,
                next_obs: r.next_obs.clone(),
                terminated: r.terminated,
                truncated: r.truncated,
                source: tag,
                episode,
                step,
            });
            obs = r.next_obs;
            step += 1;
            if done {
                break;
            }
        }
        stats.push(EpisodeStat {
            reward: total,
            length: step,
        });
    }
    Ok((data, stats))
}

/// `steps` gradient updates on a throwaway buffer holding `dataset`.
pub fn pretrain(
    agent: &mut Agent,
    dataset: &Dataset,
    steps: usize,
    seed: u64,
) -> Result<(), RunError> {
    if steps == 0 {
        return Ok(());
    }
    if dataset.is_empty() {
        return Err(RunError::EmptyDataset);
    }
    let mut pool = ReplayBuffer::from_dataset(dataset, seed);
    for _ in 0..steps {
        agent.update(&mut pool)?;
    }
    Ok(())
}

/// Learn online for `episodes` episodes: act, step, store, update.
pub fn online_learn(
    agent: &mut Agent,
    env: &mut Env,
    buffer: &mut ReplayBuffer,
    episodes: usize,
    updates_per_step: usize,
    tag: SourceTag,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<EpisodeStat>, RunError> {
    let mut stats = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut obs = env.reset();
        let mut total = 0.0;
        let mut step = 0;
        loop {
            let action = agent.act(&obs, rng, true)?;
            let r = env.step(&action)?;
            total += r.reward;
            let done = r.done();
            buffer.push(Transition {
                obs,
                action,
                reward: r.reward,
                next_obs: r.next_obs.clone(),
                terminated: r.terminated,
                truncated: r.truncated,
                source: tag,
                episode,
                step,
            });
            for _ in 0..updates_per_step {
                agent.update(buffer)?;
            }
            obs = r.next_obs;
            step += 1;
            if done {
                break;
            }
        }
        stats.push(EpisodeStat {
            reward: total,
            length: step,
        });
    }
    Ok(stats)
}

/// Sum of the step rewards of the first `tau` episodes divided by `H * tau`.
/// Episodes that ended early simply contribute fewer terms.
pub fn avg_first_tau_reward(
    step_rewards: &[Vec<f64>],
    tau: usize,
    horizon: usize,
) -> Result<f64, RunError> {
    if tau == 0 || step_rewards.len() < tau || horizon == 0 {
        return Err(RunError::BadTau);
    }
    let total: f64 = step_rewards[..tau].iter().flatten().sum();
    Ok(total / (horizon * tau) as f64)
}

/// Step rewards grouped by episode, in dataset order.
pub fn step_rewards_by_episode(dataset: &Dataset) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut current = None;
    for t in dataset.iter() {
        if current != Some(t.episode) {
            out.push(Vec::new());
            current = Some(t.episode);
        }
        out.last_mut().expect("pushed above").push(t.reward);
    }
    out
}

/// Online buffer for MIX: the dataset first, in order, then room for online
/// transitions.
pub fn mix_buffer(dataset: &Dataset, capacity: usize, seed: u64) -> ReplayBuffer {
    let mut buf = ReplayBuffer::new(capacity, seed);
    buf.extend(dataset.iter().cloned());
    buf
}

/// Build the collector named in `config` for offline use. LLM collectors need
/// a transport and go through [`run_variant_with_source`].
pub fn offline_source(kind: CollectorKind) -> Result<PolicySource, RunError> {
    match kind {
        CollectorKind::Scripted => Ok(PolicySource::Scripted),
        CollectorKind::Random => Ok(PolicySource::Random),
        CollectorKind::Llm => Err(RunError::InvalidConfig(
            "the llm collector needs a chat endpoint".into(),
        )),
    }
}

/// Run with a scripted or random collector.
pub fn run_variant(config: &RunConfig) -> Result<RunResult, RunError> {
    let mut source = offline_source(config.collector)?;
    run_variant_with_source(config, &mut source, None)
}

fn now() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

/// Run `config` with `source` as the collector. A `preloaded` dataset replaces
/// collection (its episodes still count toward T).
pub fn run_variant_with_source(
    config: &RunConfig,
    source: &mut PolicySource,
    preloaded: Option<Dataset>,
) -> Result<RunResult, RunError> {
    config.validate()?;
    let started = now();
    let seed = config.seed;
    let spec = &config.env;
    let hp = &config.hp;
    let mut env = Env::new(spec.clone(), sub_seed(seed, stream::ENV));
    let mut collect_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, stream::COLLECTOR));
    let mut act_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, stream::ACT));
    let mut agent = Agent::for_spec(spec, hp, sub_seed(seed, stream::AGENT))?;

    let mut stats: Vec<EpisodeStat> = Vec::new();
    let mut phases = Vec::new();
    let mut dataset = None;
    let mut pretrain_env_steps = 0;
    let mut collect_updates = 0;
    // Steps of warm-start episodes read from a file rather than simulated.
    let mut file_steps = 0;

    // Warm start.
    if config.variant.needs_warm_start() {
        let data = match (config.variant, preloaded) {
            (Variant::PretrainOnPolicy, _) => {
                let mut scout = Agent::for_spec(spec, hp, sub_seed(seed, stream::SCOUT_AGENT))?;
                let mut buf =
                    ReplayBuffer::new(hp.buffer_capacity, sub_seed(seed, stream::SCOUT_BUFFER));
                let s = online_learn(
                    &mut scout,
                    &mut env,
                    &mut buf,
                    config.tau,
                    hp.updates_per_step,
                    SourceTag::OnPolicy,
                    &mut act_rng,
                )?;
                stats.extend(s);
                let mut data = Dataset::new(spec.kind, SourceTag::OnPolicy);
                for t in buf.iter() {
                    data.push(t.clone());
                }
                data
            }
            (_, Some(data)) => {
                if data.env() != spec.kind {
                    return Err(RunError::InvalidConfig(format!(
                        "dataset is for {}, run is on {}",
                        data.env(),
                        spec.kind
                    )));
                }
                let episodes = step_rewards_by_episode(&data);
                if episodes.len() < config.tau {
                    return Err(RunError::InvalidConfig(format!(
                        "dataset holds {} episodes, tau is {}",
                        episodes.len(),
                        config.tau
                    )));
                }
                stats.extend(episodes.iter().take(config.tau).map(|r| EpisodeStat {
                    reward: r.iter().sum(),
                    length: r.len(),
                }));
                file_steps = stats.iter().map(|s| s.length as u64).sum();
                data
            }
            (_, None) => {
                let before = agent.update_count();
                let (data, s) = collect_episodes(&mut env, source, config.tau, &mut collect_rng)?;
                collect_updates = agent.update_count() - before;
                stats.extend(s);
                data
            }
        };
        phases.extend(std::iter::repeat_n(Phase::Collect, stats.len()));
        dataset = Some(data);
    }

    let r_avg_first_tau = if config.tau >= 1 && !stats.is_empty() {
        let sums: Vec<Vec<f64>> = stats.iter().map(|s| vec![s.reward]).collect();
        avg_first_tau_reward(&sums, config.tau.min(sums.len()), spec.horizon).ok()
    } else {
        None
    };

    let online_episodes = config.episodes - stats.len().min(config.episodes);
    let online_seed = sub_seed(seed, stream::ONLINE_BUFFER);
    match config.variant {
        Variant::CollectorOnly => {
            // Flat reference: the collector's mean episode reward over T.
            let level = stats.iter().map(|s| s.reward).sum::<f64>() / stats.len() as f64;
            let collected = stats.clone();
            stats = (0..config.episodes)
                .map(|i| EpisodeStat {
                    reward: level,
                    length: collected.get(i).map_or(0, |s| s.length),
                })
                .collect();
            phases = vec![Phase::Collect; config.episodes];
        }
        Variant::Mix => {
            let data = dataset.as_ref().expect("warm start ran");
            let mut buf = mix_buffer(data, hp.buffer_capacity, online_seed);
            let s = online_learn(
                &mut agent,
                &mut env,
                &mut buf,
                online_episodes,
                hp.updates_per_step,
                SourceTag::Online,
                &mut act_rng,
            )?;
            phases.extend(std::iter::repeat_n(Phase::Online, s.len()));
            stats.extend(s);
        }
        Variant::OnPolicy => {
            let mut buf = ReplayBuffer::new(hp.buffer_capacity, online_seed);
            let s = online_learn(
                &mut agent,
                &mut env,
                &mut buf,
                config.episodes,
                hp.updates_per_step,
                SourceTag::Online,
                &mut act_rng,
            )?;
            phases.extend(std::iter::repeat_n(Phase::Online, s.len()));
            stats.extend(s);
        }
        Variant::Loro | Variant::PretrainRandom | Variant::PretrainOnPolicy => {
            let data = dataset.as_ref().expect("warm start ran");
            let steps_before = env.total_steps();
            pretrain(
                &mut agent,
                data,
                config.pretrain_steps,
                sub_seed(seed, stream::PRETRAIN_BUFFER),
            )?;
            pretrain_env_steps = env.total_steps() - steps_before;
            let mut buf = ReplayBuffer::new(hp.buffer_capacity, online_seed);
            if config.audit {
                buf.require_source(SourceTag::Online);
            }
            let s = online_learn(
                &mut agent,
                &mut env,
                &mut buf,
                online_episodes,
                hp.updates_per_step,
                SourceTag::Online,
                &mut act_rng,
            )?;
            phases.extend(std::iter::repeat_n(Phase::Online, s.len()));
            stats.extend(s);
        }
    }

    let r_avg_first_tau = match config.variant {
        Variant::OnPolicy if config.tau >= 1 => {
            let sums: Vec<Vec<f64>> = stats.iter().map(|s| vec![s.reward]).collect();
            avg_first_tau_reward(&sums, config.tau, spec.horizon).ok()
        }
        _ => r_avg_first_tau,
    };

    let env_steps = env.total_steps() + file_steps;
    Ok(RunResult {
        variant: config.variant,
        seed,
        episode_rewards: stats.iter().map(|s| s.reward).collect(),
        episode_lengths: stats.iter().map(|s| s.length).collect(),
        phases,
        r_avg_first_tau,
        extraction_failures: source.extraction_failures(),
        env_steps,
        pretrain_env_steps,
        collect_updates,
        dataset,
        wall_time: started.map(|t| t.elapsed()).unwrap_or_default(),
    })
}
