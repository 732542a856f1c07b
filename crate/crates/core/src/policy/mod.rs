//! Warm-start action sources: a chat model, a scripted stand-in, or uniform
//! random actions.

pub mod chat;
pub mod extract;
pub mod history;
pub mod prompt;
pub mod scripted;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

pub use chat::{
    ChatError, ChatTransport, HttpChatClient, HttpPost, HttpResponse, RetryPolicy, ScriptedChat,
};
pub use extract::{extract_discrete_action, extract_torque, ExtractError};
pub use history::{render_history, EnvHistory, HistoryMode};
pub use prompt::{build_prompt, ChatRequest};
pub use scripted::scripted_act;

use crate::env::{Action, ActionSpace, EnvKind, MdpSpec, Observation};
use crate::replay::SourceTag;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("observation does not match {0}")]
    InvalidObservation(EnvKind),
    #[error("transcript log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectorKind {
    Llm,
    Scripted,
    Random,
}

impl CollectorKind {
    pub fn name(self) -> &'static str {
        match self {
            CollectorKind::Llm => "llm",
            CollectorKind::Scripted => "scripted",
            CollectorKind::Random => "random",
        }
    }

    pub fn source_tag(self) -> SourceTag {
        match self {
            CollectorKind::Llm => SourceTag::Llm,
            CollectorKind::Scripted => SourceTag::Scripted,
            CollectorKind::Random => SourceTag::Random,
        }
    }
}

impl fmt::Display for CollectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "llm" => Ok(CollectorKind::Llm),
            "scripted" => Ok(CollectorKind::Scripted),
            "random" => Ok(CollectorKind::Random),
            _ => Err(format!(
                "unknown collector {s:?} (expected llm, scripted or random)"
            )),
        }
    }
}

/// Uniform action from the action space.
pub fn random_act<R: Rng + ?Sized>(space: &ActionSpace, rng: &mut R) -> Action {
    match space {
        ActionSpace::Discrete(n) => Action::Discrete(rng.random_range(0..*n)),
        ActionSpace::Continuous { low, high } => Action::Continuous(
            low.iter()
                .zip(high)
                .map(|(&l, &h)| l + (h - l) * rng.random::<f64>())
                .collect(),
        ),
    }
}

/// Append-only record of every prompt, completion and extracted action.
pub struct TranscriptLog {
    out: Box<dyn Write + Send>,
    pub entries: u64,
}

impl TranscriptLog {
    pub fn new(out: Box<dyn Write + Send>) -> Self {
        TranscriptLog { out, entries: 0 }
    }

    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        Ok(TranscriptLog::new(Box::new(std::io::BufWriter::new(f))))
    }

    pub fn record(
        &mut self,
        request: &ChatRequest,
        completion: &str,
        action: Option<&Action>,
    ) -> std::io::Result<()> {
        self.entries += 1;
        writeln!(self.out, "=== query {}", self.entries)?;
        writeln!(self.out, "[system]\n{}", request.system())?;
        writeln!(self.out, "[user]\n{}", request.user())?;
        writeln!(self.out, "[assistant]\n{completion}")?;
        match action {
            Some(a) => writeln!(self.out, "[action] {}\n", external_action(a))?,
            None => writeln!(self.out, "[action] extraction failed\n")?,
        }
        self.out.flush()
    }
}

impl fmt::Debug for TranscriptLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TranscriptLog")
            .field("entries", &self.entries)
            .finish()
    }
}

/// How an action is written for the model: 1-based numbers, raw torques.
pub fn external_action(a: &Action) -> String {
    match a {
        Action::Discrete(i) => (i + 1).to_string(),
        Action::Continuous(v) => v
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(", "),
    }
}

/// A chat model acting in one environment, with the grid-world history
/// threaded through its prompts.
pub struct LlmPolicy {
    pub spec: MdpSpec,
    pub model: String,
    transport: Box<dyn ChatTransport>,
    history: Option<EnvHistory>,
    pub transcript: Option<TranscriptLog>,
    /// Steps where both queries failed to yield an action.
    pub extraction_failures: u64,
    pub queries: u64,
}

impl fmt::Debug for LlmPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmPolicy")
            .field("env", &self.spec.kind)
            .field("model", &self.model)
            .field("extraction_failures", &self.extraction_failures)
            .field("queries", &self.queries)
            .finish()
    }
}

impl LlmPolicy {
    pub fn new(spec: MdpSpec, model: impl Into<String>, transport: Box<dyn ChatTransport>) -> Self {
        let history = spec
            .kind
            .is_grid()
            .then(|| EnvHistory::new(spec.kind, HistoryMode::Summary));
        LlmPolicy {
            spec,
            model: model.into(),
            transport,
            history,
            transcript: None,
            extraction_failures: 0,
            queries: 0,
        }
    }

    /// Switch the history rendering (grid worlds only).
    pub fn with_history(mut self, mode: HistoryMode, window: Option<usize>) -> Self {
        if let Some(mut h) = self.history.take() {
            h.mode = mode;
            if let Some(w) = window {
                h = h.with_window(w);
            }
            self.history = Some(h);
        }
        self
    }

    pub fn with_transcript(mut self, log: TranscriptLog) -> Self {
        self.transcript = Some(log);
        self
    }

    pub fn history(&self) -> Option<&EnvHistory> {
        self.history.as_ref()
    }

    pub fn start_episode(&mut self) {
        if let Some(h) = &mut self.history {
            h.start_episode();
        }
    }

    /// Fold one environment step into the history.
    pub fn observe(
        &mut self,
        obs: &Observation,
        action: &Action,
        next_obs: &Observation,
        reward: f64,
        terminated: bool,
    ) {
        if let (Some(h), Some(from), Some(to), Some(a)) = (
            &mut self.history,
            obs.cell,
            next_obs.cell,
            action.as_discrete(),
        ) {
            h.record_step(from, a + 1, to, reward, terminated);
        }
    }

    fn extract(&self, text: &str) -> Result<Action, ExtractError> {
        match &self.spec.action_space {
            ActionSpace::Discrete(n) => {
                let valid: Vec<i64> = (1..=*n as i64).collect();
                let k = extract_discrete_action(text, &valid)?;
                Ok(Action::Discrete(k as usize - 1))
            }
            ActionSpace::Continuous { .. } => Ok(Action::Continuous(vec![extract_torque(text)?])),
        }
    }

    /// Query the model for an action. A completion without a usable action is
    /// retried once; after a second failure a uniform random action is
    /// returned and the failure counted.
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation,
        rng: &mut R,
    ) -> Result<Action, PolicyError> {
        let request = build_prompt(self.spec.kind, obs, self.history.as_ref(), &self.model)?;
        for _ in 0..2 {
            self.queries += 1;
            let text = self.transport.complete(&request)?;
            let action = self.extract(&text).ok();
            if let Some(log) = &mut self.transcript {
                log.record(&request, &text, action.as_ref())?;
            }
            if let Some(a) = action {
                return Ok(a);
            }
        }
        self.extraction_failures += 1;
        Ok(random_act(&self.spec.action_space, rng))
    }
}

/// `policy.act` under the name used by the rest of the crate.
pub fn llm_act<R: Rng + ?Sized>(
    policy: &mut LlmPolicy,
    obs: &Observation,
    rng: &mut R,
) -> Result<Action, PolicyError> {
    policy.act(obs, rng)
}

/// Where warm-start actions come from.
#[derive(Debug)]
pub enum PolicySource {
    Llm(Box<LlmPolicy>),
    Scripted,
    Random,
}

impl PolicySource {
    pub fn kind(&self) -> CollectorKind {
        match self {
            PolicySource::Llm(_) => CollectorKind::Llm,
            PolicySource::Scripted => CollectorKind::Scripted,
            PolicySource::Random => CollectorKind::Random,
        }
    }

    pub fn source_tag(&self) -> SourceTag {
        self.kind().source_tag()
    }

    pub fn start_episode(&mut self) {
        if let PolicySource::Llm(p) = self {
            p.start_episode();
        }
    }

    pub fn act<R: Rng + ?Sized>(
        &mut self,
        spec: &MdpSpec,
        obs: &Observation,
        rng: &mut R,
    ) -> Result<Action, PolicyError> {
        match self {
            PolicySource::Llm(p) => p.act(obs, rng),
            PolicySource::Scripted => scripted_act(spec.kind, obs),
            PolicySource::Random => Ok(random_act(&spec.action_space, rng)),
        }
    }

    pub fn observe(
        &mut self,
        obs: &Observation,
        action: &Action,
        next_obs: &Observation,
        reward: f64,
        terminated: bool,
    ) {
        if let PolicySource::Llm(p) = self {
            p.observe(obs, action, next_obs, reward, terminated);
        }
    }

    pub fn extraction_failures(&self) -> u64 {
        match self {
            PolicySource::Llm(p) => p.extraction_failures,
            _ => 0,
        }
    }
}
