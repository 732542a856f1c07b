//! Grid-world visit history rendered into prompts.
//!
//! The history persists across episodes (it is how the model learns where the
//! holes and the cliff are); the previous-step line resets every episode.

use std::fmt::Write as _;

use crate::env::{EnvKind, GridCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    /// Group visited locations by observed outcome.
    Summary,
    /// One sentence per visit, limited to a trailing window.
    Concatenation,
    None,
}

impl std::str::FromStr for HistoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "summary" => Ok(HistoryMode::Summary),
            "concatenation" | "concat" => Ok(HistoryMode::Concatenation),
            "none" => Ok(HistoryMode::None),
            _ => Err(format!("unknown history mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visit {
    pub cell: GridCell,
    pub reward: f64,
    /// Hole (frozen lake) or cliff (cliff walking).
    pub hazard: bool,
}

/// Grouping key of the distilled view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Hazard,
    Reward(f64),
}

impl Outcome {
    fn of(v: &Visit) -> Outcome {
        if v.hazard {
            Outcome::Hazard
        } else {
            Outcome::Reward(v.reward)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreviousStep {
    pub cell: GridCell,
    /// 1-based, as shown to the model.
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvHistory {
    pub kind: EnvKind,
    pub mode: HistoryMode,
    pub window: Option<usize>,
    visited: Vec<Visit>,
    /// Outcome groups in display order (hazard first, then first appearance),
    /// each with distinct cells in first-appearance order.
    distilled: Vec<(Outcome, Vec<GridCell>)>,
    previous: Option<PreviousStep>,
}

impl EnvHistory {
    pub fn new(kind: EnvKind, mode: HistoryMode) -> Self {
        EnvHistory {
            kind,
            mode,
            window: None,
            visited: Vec::new(),
            distilled: Vec::new(),
            previous: None,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = Some(window.max(1));
        self
    }

    pub fn visited(&self) -> &[Visit] {
        &self.visited
    }

    pub fn distilled(&self) -> &[(Outcome, Vec<GridCell>)] {
        &self.distilled
    }

    pub fn previous(&self) -> Option<PreviousStep> {
        self.previous
    }

    pub fn is_empty(&self) -> bool {
        self.visited.is_empty()
    }

    /// Forget the previous-step line; the visit history is kept.
    pub fn start_episode(&mut self) {
        self.previous = None;
    }

    /// Record the outcome of taking `action` (1-based) at `from`, landing on
    /// `to` with `reward`.
    pub fn record_step(
        &mut self,
        from: GridCell,
        action: usize,
        to: GridCell,
        reward: f64,
        terminated: bool,
    ) {
        let hazard = match self.kind {
            EnvKind::FrozenLake => terminated && reward == 0.0,
            EnvKind::CliffWalking => reward <= crate::env::cliffwalking::CLIFF_REWARD,
            _ => false,
        };
        self.push_visit(Visit {
            cell: to,
            reward,
            hazard,
        });
        self.previous = Some(PreviousStep {
            cell: from,
            action,
            reward,
        });
    }

    pub fn push_visit(&mut self, visit: Visit) {
        self.visited.push(visit);
        insert_distilled(&mut self.distilled, &visit);
    }

    pub fn set_previous(&mut self, previous: Option<PreviousStep>) {
        self.previous = previous;
    }

    /// The distilled view rebuilt from scratch out of the visit list.
    pub fn recompute_distilled(&self) -> Vec<(Outcome, Vec<GridCell>)> {
        let mut out = Vec::new();
        for v in &self.visited {
            insert_distilled(&mut out, v);
        }
        out
    }

    pub fn render(&self) -> String {
        render_history(self)
    }
}

fn insert_distilled(groups: &mut Vec<(Outcome, Vec<GridCell>)>, v: &Visit) {
    let key = Outcome::of(v);
    let pos = match groups.iter().position(|(k, _)| *k == key) {
        Some(p) => p,
        None => {
            if key == Outcome::Hazard {
                groups.insert(0, (key, Vec::new()));
                0
            } else {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        }
    };
    let cells = &mut groups[pos].1;
    if !cells.contains(&v.cell) {
        cells.push(v.cell);
    }
}

fn join_cells(cells: &[GridCell]) -> String {
    cells
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Rewards as words where the grid worlds use them ("zero", "one").
fn reward_word(r: f64) -> String {
    if r == 0.0 {
        "zero".into()
    } else if r == 1.0 {
        "one".into()
    } else {
        format_reward(EnvKind::CliffWalking, r)
    }
}

/// Reward as printed in grid prompts: integers for cliff walking, one decimal
/// for the frozen lake.
pub fn format_reward(kind: EnvKind, r: f64) -> String {
    match kind {
        EnvKind::FrozenLake => format!("{r:.1}"),
        _ if r.fract() == 0.0 => format!("{}", r as i64),
        _ => format!("{r}"),
    }
}

pub fn render_history(h: &EnvHistory) -> String {
    if h.visited.is_empty() {
        return String::new();
    }
    match h.mode {
        HistoryMode::None => String::new(),
        HistoryMode::Summary => {
            let mut parts = Vec::new();
            for (outcome, cells) in &h.distilled {
                let cells = join_cells(cells);
                let sentence = match (h.kind, outcome) {
                    (EnvKind::FrozenLake, Outcome::Hazard) => {
                        format!("The holes are in locations: {cells}.")
                    }
                    (EnvKind::FrozenLake, Outcome::Reward(r)) => {
                        format!(
                            "You receive {} reward at locations: {cells}.",
                            reward_word(*r)
                        )
                    }
                    (_, Outcome::Hazard) => format!(
                        "Cliff: Reward {} at locations: {cells}.",
                        format_reward(h.kind, crate::env::cliffwalking::CLIFF_REWARD)
                    ),
                    (_, Outcome::Reward(r)) => {
                        format!(
                            "Reward {} at locations: {cells}.",
                            format_reward(h.kind, *r)
                        )
                    }
                };
                parts.push(sentence);
            }
            parts.join(" ")
        }
        HistoryMode::Concatenation => {
            let window = h.window.unwrap_or(h.visited.len());
            let start = h.visited.len().saturating_sub(window);
            let mut out = String::new();
            for v in &h.visited[start..] {
                if !out.is_empty() {
                    out.push(' ');
                }
                let _ = write!(
                    out,
                    "You visit location {} and receive {} reward.",
                    v.cell,
                    reward_word(v.reward)
                );
            }
            out
        }
    }
}
