//! Offline checking of recorded traces.
//!
//! The audit replays every belief update from the recorded actions and
//! observations, checks that hidden transitions and observations were
//! possible, and evaluates each conjunct of the formula with the reference
//! semantics on the realized word.

use serde::Serialize;
use thiserror::Error;

use crate::ldtl::{oracle_satisfies, Word};
use crate::model::{Belief, JointAction, JointObservation};
use crate::monitor::{CheckKind, CheckStatus};
use crate::sim::Scenario;
use crate::trace::Trace;

/// Largest tolerated difference between a recorded and a replayed belief.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceMismatch {
    #[error("trace header does not match the scenario: {0}")]
    Header(String),
    #[error("initial belief differs from the model prior by {diff:e}")]
    InitialBelief { diff: f64 },
    #[error("step {step}: recorded belief differs from the replayed update by {diff:e}")]
    Belief { step: u64, diff: f64 },
    #[error("step {step}: {problem}")]
    Step { step: u64, problem: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjunctReport {
    pub id: usize,
    pub label: String,
    pub kind: CheckKind,
    /// The conjunct mentions no state-set atoms.
    pub belief_only: bool,
    /// Reference verdict at position 0 of the realized word.
    pub oracle: bool,
    /// No recorded step failed this obligation.
    pub monitor_passed: bool,
    pub discharged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub steps: usize,
    pub termination: &'static str,
    pub all_passed: bool,
    pub all_discharged: bool,
    pub conjuncts: Vec<ConjunctReport>,
}

impl AuditReport {
    /// Belief-only conjuncts the oracle rejects although the monitor accepted
    /// the whole run and discharged every obligation. A trace without steps
    /// carries no verdict and yields none.
    pub fn counterexamples(&self) -> Vec<&ConjunctReport> {
        if self.steps == 0 || !(self.all_passed && self.all_discharged) {
            return Vec::new();
        }
        self.conjuncts.iter().filter(|c| c.belief_only && !c.oracle).collect()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Replays `trace` against `scenario` and evaluates the oracle.
pub fn audit(trace: &Trace, scenario: &Scenario) -> Result<AuditReport, TraceMismatch> {
    let m = scenario.model();
    let mon = scenario.monitor();
    let h = &trace.header;
    if h.states != m.state_names() {
        return Err(TraceMismatch::Header("state names differ".into()));
    }
    let labels: Vec<&str> = mon.obligations().iter().map(|o| o.label.as_str()).collect();
    if h.obligations.iter().map(|o| o.label.as_str()).collect::<Vec<_>>() != labels {
        return Err(TraceMismatch::Header("obligations differ from the compiled formula".into()));
    }
    if h.initial_state >= m.num_states() {
        return Err(TraceMismatch::Header(format!("initial state {} out of range", h.initial_state)));
    }
    let diff = max_diff(&h.initial_belief, m.initial_belief().probs());
    if diff > REPLAY_TOL || h.initial_belief.len() != m.num_states() {
        return Err(TraceMismatch::InitialBelief { diff });
    }

    let mut word = Word::default();
    let mut prev = m.initial_belief();
    let mut state = h.initial_state;
    word.push(state, prev.clone());
    for r in &trace.steps {
        let step = r.step;
        let fail = |problem: String| TraceMismatch::Step { step, problem };
        let a = JointAction(r.executed);
        let z = JointObservation(r.observation);
        m.check_action(a).map_err(|e| fail(e.to_string()))?;
        m.check_observation(z).map_err(|e| fail(e.to_string()))?;
        if r.state != state {
            return Err(fail(format!("recorded state {} does not continue from {state}", r.state)));
        }
        if r.next_state >= m.num_states() || m.transition(state, a, r.next_state) <= 0.0 {
            return Err(fail(format!("transition {state} -> {} is impossible under action {}", r.next_state, a.0)));
        }
        if m.observation(r.next_state, a, z) <= 0.0 {
            return Err(fail(format!("observation {} is impossible in state {}", z.0, r.next_state)));
        }
        let replayed = m.belief_update(&prev, a, z).map_err(|e| fail(e.to_string()))?;
        let diff = if r.belief.len() == replayed.len() { max_diff(&r.belief, replayed.probs()) } else { f64::INFINITY };
        if diff.is_nan() || diff > REPLAY_TOL {
            return Err(TraceMismatch::Belief { step, diff });
        }
        let recorded = Belief::new(r.belief.clone()).map_err(|e| fail(e.to_string()))?;
        word.push(r.next_state, recorded.clone());
        prev = recorded;
        state = r.next_state;
    }

    let formula = scenario.formula();
    let conjuncts = formula
        .conjuncts()
        .into_iter()
        .zip(mon.obligations())
        .map(|(phi, ob)| ConjunctReport {
            id: ob.id,
            label: ob.label.clone(),
            kind: ob.kind(),
            belief_only: phi.is_belief_only(),
            oracle: oracle_satisfies(phi, &word, 0),
            monitor_passed: trace.steps.iter().all(|s| s.statuses.get(ob.id) != Some(&CheckStatus::Fail)),
            discharged: trace.end.obligations.get(ob.id).is_some_and(|o| o.discharged_at.is_some()),
        })
        .collect();
    Ok(AuditReport {
        steps: trace.steps.len(),
        termination: trace.end.termination.name(),
        all_passed: trace.all_passed(),
        all_discharged: trace.end.all_discharged,
        conjuncts,
    })
}
