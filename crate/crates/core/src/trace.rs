//! Episode traces and their line-delimited JSON encoding.
//!
//! A trace file holds one header line, one line per step and one end line,
//! each a single-key object: `{"header": …}`, `{"step": …}`, `{"end": …}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitor::{CheckKind, CheckStatus, Phase};
use crate::shield::DeadlockCandidate;

pub const TRACE_FORMAT: &str = "ldtl-shield-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShieldMode {
    Off,
    #[default]
    Literal,
    Conservative,
}

impl std::str::FromStr for ShieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(ShieldMode::Off),
            "literal" => Ok(ShieldMode::Literal),
            "conservative" => Ok(ShieldMode::Conservative),
            other => Err(format!("unknown shield mode `{other}` (expected off, literal or conservative)")),
        }
    }
}

impl std::fmt::Display for ShieldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShieldMode::Off => "off",
            ShieldMode::Literal => "literal",
            ShieldMode::Conservative => "conservative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationInfo {
    pub id: usize,
    pub kind: CheckKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub horizon: u64,
    pub shield: ShieldMode,
    pub states: Vec<String>,
    pub obligations: Vec<ObligationInfo>,
    pub initial_state: usize,
    pub initial_belief: Vec<f64>,
    pub initial_barriers: Vec<f64>,
}

/// Transition from step `step` to `step + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    /// Hidden state before the step.
    pub state: usize,
    pub nominal: usize,
    pub executed: usize,
    pub overridden: bool,
    /// Observation handed to the shield (sampled under the nominal action).
    pub shield_observation: usize,
    /// Observation used for the belief update.
    pub observation: usize,
    pub next_state: usize,
    /// Belief after the step.
    pub belief: Vec<f64>,
    /// Primary barrier value of every obligation at `belief`.
    pub barriers: Vec<f64>,
    pub statuses: Vec<CheckStatus>,
    pub passed: bool,
    pub nominal_reward: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub candidate_rewards: BTreeMap<usize, f64>,
    /// The shield observation was impossible after the override, so the
    /// observation was redrawn under the executed action.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub observation_redrawn: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    SafetyDeadlock { step: u64, candidates: Vec<DeadlockCandidate> },
    ZeroLikelihood { step: u64 },
    AbortedOnViolation { step: u64 },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::SafetyDeadlock { .. } => "safety_deadlock",
            Termination::ZeroLikelihood { .. } => "zero_likelihood",
            Termination::AbortedOnViolation { .. } => "aborted_on_violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationOutcome {
    pub id: usize,
    pub phase: Phase,
    pub deadline: Option<u64>,
    pub discharged_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub termination: Termination,
    pub steps: u64,
    pub violations: u64,
    pub overrides: u64,
    pub obligations: Vec<ObligationOutcome>,
    pub all_discharged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub end: TraceEnd,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Step(StepRecord),
    End(TraceEnd),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: expected {expected}")]
    Structure { line: usize, expected: &'static str },
    #[error("unsupported trace format `{format}` version {version}")]
    Version { format: String, version: u32 },
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            let text = serde_json::to_string(line).expect("trace records serialize");
            writeln!(out, "{text}").expect("write to string");
        };
        push(&Line::Header(self.header.clone()));
        for s in &self.steps {
            push(&Line::Step(s.clone()));
        }
        push(&Line::End(self.end.clone()));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut end = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(raw).map_err(|source| TraceError::Json { line, source })?;
            match (parsed, header.is_some(), end.is_some()) {
                (Line::Header(h), false, false) => {
                    if h.format != TRACE_FORMAT || h.version != TRACE_VERSION {
                        return Err(TraceError::Version { format: h.format, version: h.version });
                    }
                    header = Some(h);
                }
                (Line::Step(s), true, false) => steps.push(s),
                (Line::End(e), true, false) => end = Some(e),
                (_, false, _) => return Err(TraceError::Structure { line, expected: "header" }),
                (_, true, true) => return Err(TraceError::Structure { line, expected: "end of file" }),
                (Line::Header(_), true, false) => return Err(TraceError::Structure { line, expected: "step or end" }),
            }
        }
        let line = text.lines().count() + 1;
        Ok(Trace {
            header: header.ok_or(TraceError::Structure { line, expected: "header" })?,
            steps,
            end: end.ok_or(TraceError::Structure { line, expected: "end" })?,
        })
    }

    /// Beliefs `b^0 … b^T`.
    pub fn beliefs(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.header.initial_belief.as_slice()).chain(self.steps.iter().map(|s| s.belief.as_slice()))
    }

    /// Hidden states `q^0 … q^T`.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.header.initial_state).chain(self.steps.iter().map(|s| s.next_state))
    }

    pub fn completed(&self) -> bool {
        self.end.termination == Termination::Horizon
    }

    pub fn all_passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }
}
