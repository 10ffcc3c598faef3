//! Compilation of formulas into barrier-function obligations and their
//! step-by-step evaluation.
//!
//! Atoms translate to barriers whose zero-superlevel set is the atom's set
//! of beliefs:
//!
//! | atom          | barrier                       |
//! |---------------|-------------------------------|
//! | `in(A)`       | `Σ_{q∈A} b(q) - 1`            |
//! | `!in(A)`      | `Σ_{q∉A} b(q) - 1`            |
//! | `f`           | `-f - δ`                      |
//! | `!f`          | `f`                           |
//! | `φ1 & φ2`     | `min(h1, h2)`                 |
//! | `φ1 \| φ2`    | `max(h1, h2)`                 |
//!
//! A formula must be a conjunction of `G ψ`, `F ψ`, `ψ1 U ψ2`, `X ψ` and bare
//! `ψ`, with every `ψ` propositional. Each conjunct becomes one obligation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barrier::{dtbf_check, ft_dtbf_check, ft_time_bound, AlphaFn, BarrierError, FtParams};
use crate::ldtl::{BeliefExpr, Formula};
use crate::model::{Belief, Mpomdp};

pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("unsupported temporal nesting in `{0}`")]
    UnsupportedNesting(String),
    #[error("formula references state index {index}, model has {states} states")]
    StateOutOfRange { index: usize, states: usize },
    #[error("delta must be positive and finite, got {0}")]
    Delta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub delta: f64,
    pub alpha: AlphaFn,
    pub ft: FtParams,
}

impl MonitorConfig {
    pub fn new(delta: f64, gamma: f64, rho: f64, eps: f64) -> Result<Self, MonitorConfigError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MonitorConfigError::Delta(delta));
        }
        Ok(MonitorConfig {
            delta,
            alpha: AlphaFn::linear(gamma)?,
            ft: FtParams::new(rho, eps)?,
        })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MonitorConfigError {
    #[error("delta must be positive and finite, got {0}")]
    Delta(f64),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            delta: DEFAULT_DELTA,
            alpha: AlphaFn::default(),
            ft: FtParams::new(0.99, 0.1).expect("valid defaults"),
        }
    }
}

/// Barrier tree mirroring the propositional skeleton of a formula.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledBarrier {
    Leaf(BeliefExpr),
    Min(Box<CompiledBarrier>, Box<CompiledBarrier>),
    Max(Box<CompiledBarrier>, Box<CompiledBarrier>),
}

impl CompiledBarrier {
    /// `None` if `phi` is not propositional.
    pub fn translate(phi: &Formula, num_states: usize, delta: f64) -> Option<Self> {
        use BeliefExpr::{Constant, Difference};
        let leaf = |e| Some(CompiledBarrier::Leaf(e));
        match phi {
            Formula::StateSet(a) => leaf(Difference(
                Box::new(BeliefExpr::mass(a.iter().copied())),
                Box::new(Constant(1.0)),
            )),
            Formula::NegStateSet(a) => leaf(Difference(
                Box::new(BeliefExpr::mass((0..num_states).filter(|q| !a.contains(q)))),
                Box::new(Constant(1.0)),
            )),
            Formula::BeliefPred(p) => leaf(Difference(Box::new(Constant(-delta)), Box::new(p.expr.clone()))),
            Formula::NegBeliefPred(p) => leaf(p.expr.clone()),
            Formula::And(l, r) => Some(CompiledBarrier::Min(
                Box::new(Self::translate(l, num_states, delta)?),
                Box::new(Self::translate(r, num_states, delta)?),
            )),
            Formula::Or(l, r) => Some(CompiledBarrier::Max(
                Box::new(Self::translate(l, num_states, delta)?),
                Box::new(Self::translate(r, num_states, delta)?),
            )),
            _ => None,
        }
    }

    pub fn evaluate(&self, b: &Belief) -> f64 {
        match self {
            CompiledBarrier::Leaf(e) => e.evaluate(b),
            CompiledBarrier::Min(l, r) => l.evaluate(b).min(r.evaluate(b)),
            CompiledBarrier::Max(l, r) => l.evaluate(b).max(r.evaluate(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `G ψ`: membership at activation, then the invariance condition.
    Invariance,
    /// `F ψ`: finite-time condition until the barrier is non-negative.
    FiniteTime,
    /// `ψ1 U ψ2`: invariance on `ψ1` while `ψ2`'s barrier is negative.
    Until,
    /// `X ψ`: membership of the next belief, checked once.
    Next,
    /// bare `ψ`: membership of the initial belief, checked once.
    Holds,
}

#[derive(Debug, Clone, PartialEq)]
enum ObligationBody {
    Invariance { barrier: Arc<CompiledBarrier>, alpha: AlphaFn },
    FiniteTime { barrier: Arc<CompiledBarrier>, params: FtParams },
    Until { hold: Arc<CompiledBarrier>, goal: Arc<CompiledBarrier>, alpha: AlphaFn },
    Next { barrier: Arc<CompiledBarrier> },
    Holds { barrier: Arc<CompiledBarrier> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pending,
    Active,
    Discharged,
    /// Terminally failed (missed deadline or failed one-shot check).
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    pub id: usize,
    pub label: String,
    body: ObligationBody,
    pub phase: Phase,
    /// Absolute step index by which a finite-time obligation must discharge.
    pub deadline: Option<u64>,
    /// Index of the belief at which the obligation discharged.
    pub discharged_at: Option<u64>,
    pub last_value: Option<f64>,
}

impl Obligation {
    pub fn kind(&self) -> CheckKind {
        match self.body {
            ObligationBody::Invariance { .. } => CheckKind::Invariance,
            ObligationBody::FiniteTime { .. } => CheckKind::FiniteTime,
            ObligationBody::Until { .. } => CheckKind::Until,
            ObligationBody::Next { .. } => CheckKind::Next,
            ObligationBody::Holds { .. } => CheckKind::Holds,
        }
    }

    /// The obligation's primary barrier (`ψ2`'s for `U`).
    pub fn barrier(&self) -> &CompiledBarrier {
        match &self.body {
            ObligationBody::Invariance { barrier, .. }
            | ObligationBody::FiniteTime { barrier, .. }
            | ObligationBody::Next { barrier }
            | ObligationBody::Holds { barrier } => barrier,
            ObligationBody::Until { goal, .. } => goal,
        }
    }

    /// `ψ1`'s barrier for `U` obligations.
    pub fn hold_barrier(&self) -> Option<&CompiledBarrier> {
        match &self.body {
            ObligationBody::Until { hold, .. } => Some(hold),
            _ => None,
        }
    }

    /// Whether the obligation still needs a discharge to be met.
    pub fn needs_discharge(&self) -> bool {
        !matches!(self.body, ObligationBody::Invariance { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Discharged,
    /// Not checked: already discharged or violated.
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationRecord {
    pub id: usize,
    pub kind: CheckKind,
    /// Primary barrier at the next belief.
    pub value: f64,
    /// `ψ1`'s barrier at the next belief, for `U`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_value: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Pass,
    Fail(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub records: Vec<ObligationRecord>,
    pub overall: Overall,
}

impl StepVerdict {
    pub fn passed(&self) -> bool {
        self.overall == Overall::Pass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    obligations: Vec<Obligation>,
    step_count: u64,
}

/// Builds a monitor for `phi` against `model`'s state space.
pub fn compile(phi: &Formula, model: &Mpomdp, cfg: &MonitorConfig) -> Result<Monitor, CompileError> {
    Monitor::compile(phi, model.state_names(), cfg)
}

impl Monitor {
    pub fn compile(phi: &Formula, states: &[String], cfg: &MonitorConfig) -> Result<Self, CompileError> {
        if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
            return Err(CompileError::Delta(cfg.delta));
        }
        let n = states.len();
        if let Some(index) = phi.max_state().filter(|&q| q >= n) {
            return Err(CompileError::StateOutOfRange { index, states: n });
        }
        let translate = |f: &Formula| -> Result<Arc<CompiledBarrier>, CompileError> {
            CompiledBarrier::translate(f, n, cfg.delta)
                .map(Arc::new)
                .ok_or_else(|| CompileError::UnsupportedNesting(f.pretty(states)))
        };
        let mut obligations = Vec::new();
        for (id, conjunct) in phi.conjuncts().into_iter().enumerate() {
            let body = match conjunct {
                Formula::Always(f) => ObligationBody::Invariance { barrier: translate(f)?, alpha: cfg.alpha },
                Formula::Eventually(f) => ObligationBody::FiniteTime { barrier: translate(f)?, params: cfg.ft },
                Formula::Until(l, r) => ObligationBody::Until { hold: translate(l)?, goal: translate(r)?, alpha: cfg.alpha },
                Formula::Next(f) => ObligationBody::Next { barrier: translate(f)? },
                f if f.is_propositional() => ObligationBody::Holds { barrier: translate(f)? },
                f => return Err(CompileError::UnsupportedNesting(f.pretty(states))),
            };
            obligations.push(Obligation {
                id,
                label: conjunct.pretty(states),
                body,
                phase: Phase::Pending,
                deadline: None,
                discharged_at: None,
                last_value: None,
            });
        }
        Ok(Monitor { obligations, step_count: 0 })
    }

    pub fn obligations(&self) -> &[Obligation] {
        &self.obligations
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// True once every finite-time, until, next and one-shot obligation has
    /// discharged.
    pub fn all_discharged(&self) -> bool {
        self.obligations
            .iter()
            .filter(|o| o.needs_discharge())
            .all(|o| o.phase == Phase::Discharged)
    }

    /// Primary barrier value of every obligation at `b`.
    pub fn barrier_values(&self, b: &Belief) -> Vec<f64> {
        self.obligations.iter().map(|o| o.barrier().evaluate(b)).collect()
    }

    /// Checks the transition `b_prev -> b_next`. Returns the verdict and the
    /// monitor state after the step; `self` is left untouched.
    pub fn step(&self, b_prev: &Belief, b_next: &Belief) -> (StepVerdict, Monitor) {
        let t = self.step_count;
        let mut next = self.clone();
        next.step_count += 1;
        let mut records = Vec::with_capacity(self.obligations.len());
        let mut failed = Vec::new();
        for ob in next.obligations.iter_mut() {
            let rec = step_obligation(ob, t, b_prev, b_next);
            if rec.status == CheckStatus::Fail {
                failed.push(rec.id);
            }
            records.push(rec);
        }
        let overall = if failed.is_empty() { Overall::Pass } else { Overall::Fail(failed) };
        (StepVerdict { records, overall }, next)
    }
}

/// `monitor_step` as a free function.
pub fn monitor_step(mon: &Monitor, b_prev: &Belief, b_next: &Belief) -> (StepVerdict, Monitor) {
    mon.step(b_prev, b_next)
}

fn step_obligation(ob: &mut Obligation, t: u64, b_prev: &Belief, b_next: &Belief) -> ObligationRecord {
    let first = ob.phase == Phase::Pending;
    let value = ob.barrier().evaluate(b_next);
    let hold_value = ob.hold_barrier().map(|h| h.evaluate(b_next));
    ob.last_value = Some(value);
    let (id, kind) = (ob.id, ob.kind());
    let record = |status| ObligationRecord { id, kind, value, hold_value, status };

    if matches!(ob.phase, Phase::Discharged | Phase::Violated) {
        return record(CheckStatus::Idle);
    }
    let body = ob.body.clone();
    let status = match &body {
        ObligationBody::Invariance { barrier, alpha } => {
            ob.phase = Phase::Active;
            let h_prev = barrier.evaluate(b_prev);
            let entry_ok = !first || h_prev >= 0.0;
            if entry_ok && dtbf_check(h_prev, value, *alpha) {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            }
        }
        ObligationBody::FiniteTime { barrier, params } => {
            let h_prev = barrier.evaluate(b_prev);
            if first {
                if h_prev >= 0.0 {
                    ob.phase = Phase::Discharged;
                    ob.discharged_at = Some(t);
                    return record(CheckStatus::Discharged);
                }
                let bound = ft_time_bound(h_prev, *params).expect("start is outside the set");
                ob.deadline = Some(t.saturating_add(bound));
                ob.phase = Phase::Active;
            }
            if value >= 0.0 {
                ob.phase = Phase::Discharged;
                ob.discharged_at = Some(t + 1);
                CheckStatus::Discharged
            } else if ob.deadline.is_some_and(|d| t + 1 >= d) {
                ob.phase = Phase::Violated;
                CheckStatus::Fail
            } else if ft_dtbf_check(h_prev, value, *params) {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            }
        }
        ObligationBody::Until { hold, goal, alpha } => {
            let h1_prev = hold.evaluate(b_prev);
            if first {
                if goal.evaluate(b_prev) >= 0.0 {
                    ob.phase = Phase::Discharged;
                    ob.discharged_at = Some(t);
                    return record(CheckStatus::Discharged);
                }
                ob.phase = Phase::Active;
            }
            if value >= 0.0 {
                ob.phase = Phase::Discharged;
                ob.discharged_at = Some(t + 1);
                if first && h1_prev < 0.0 {
                    CheckStatus::Fail
                } else {
                    CheckStatus::Discharged
                }
            } else {
                let h1_next = hold_value.expect("until has a hold barrier");
                let entry_ok = !first || h1_prev >= 0.0;
                if entry_ok && dtbf_check(h1_prev, h1_next, *alpha) {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                }
            }
        }
        ObligationBody::Next { .. } => {
            if value >= 0.0 {
                ob.phase = Phase::Discharged;
                ob.discharged_at = Some(t + 1);
                CheckStatus::Discharged
            } else {
                ob.phase = Phase::Violated;
                CheckStatus::Fail
            }
        }
        ObligationBody::Holds { barrier } => {
            if barrier.evaluate(b_prev) >= 0.0 {
                ob.phase = Phase::Discharged;
                ob.discharged_at = Some(t);
                CheckStatus::Discharged
            } else {
                ob.phase = Phase::Violated;
                CheckStatus::Fail
            }
        }
    };
    record(status)
}
