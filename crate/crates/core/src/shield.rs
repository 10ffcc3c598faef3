//! One-step greedy safety shield.
//!
//! The nominal joint action is kept when its belief update passes the
//! monitor. Otherwise every joint action is evaluated under the same
//! observation and the safe one whose expected reward is closest (in squared
//! deviation) to the nominal reward is executed, lowest index on ties.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Belief, FilterError, JointAction, JointObservation, ModelError, Mpomdp, LIKELIHOOD_FLOOR};
use crate::monitor::{Monitor, StepVerdict};

/// How a candidate action is checked against the monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Only under the received observation.
    #[default]
    Literal,
    /// Under the received observation and under every observation with
    /// positive predicted probability for the candidate.
    Conservative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlockCandidate {
    pub action: JointAction,
    /// Obligation barrier values at the candidate's update, or `None` when
    /// the observation is impossible under it.
    pub barriers: Option<Vec<f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShieldError {
    #[error("no joint action passes the monitor ({} candidates checked)", .candidates.len())]
    SafetyDeadlock { candidates: Vec<DeadlockCandidate> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A candidate whose update passed the monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub action: JointAction,
    pub next_belief: Belief,
    pub verdict: StepVerdict,
    pub monitor: Monitor,
    /// Expected reward of the action under its updated belief.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShieldDecision {
    pub executed: JointAction,
    pub overridden: bool,
    pub nominal_reward: f64,
    /// Rewards of the safe candidates; empty when the nominal action is kept.
    pub candidate_rewards: BTreeMap<usize, f64>,
    pub verdict: StepVerdict,
    pub next_belief: Belief,
    /// Monitor state after the executed action.
    pub monitor: Monitor,
}

enum Evaluation {
    Safe(Candidate),
    Unsafe { barriers: Option<Vec<f64>> },
}

fn evaluate(
    m: &Mpomdp,
    mon: &Monitor,
    b_prev: &Belief,
    z: JointObservation,
    a: JointAction,
    mode: CheckMode,
) -> Evaluation {
    let next_belief = match m.belief_update(b_prev, a, z) {
        Ok(b) => b,
        Err(FilterError::ZeroLikelihood { .. }) => return Evaluation::Unsafe { barriers: None },
    };
    let (verdict, monitor) = mon.step(b_prev, &next_belief);
    let mut safe = verdict.passed();
    if safe && mode == CheckMode::Conservative {
        safe = passes_every_observation(m, mon, b_prev, a);
    }
    if !safe {
        return Evaluation::Unsafe { barriers: Some(mon.barrier_values(&next_belief)) };
    }
    let reward = m.expected_reward(&next_belief, a);
    Evaluation::Safe(Candidate { action: a, next_belief, verdict, monitor, reward })
}

fn passes_every_observation(m: &Mpomdp, mon: &Monitor, b_prev: &Belief, a: JointAction) -> bool {
    (0..m.num_observations()).map(JointObservation).all(|z| {
        if m.observation_likelihood(b_prev, a, z) <= LIKELIHOOD_FLOOR {
            return true;
        }
        match m.belief_update(b_prev, a, z) {
            Ok(b) => mon.step(b_prev, &b).0.passed(),
            Err(_) => true,
        }
    })
}

fn check_inputs(m: &Mpomdp, b_prev: &Belief, z: JointObservation) -> Result<(), ModelError> {
    m.check_belief(b_prev)?;
    m.check_observation(z)
}

/// Every joint action that passes the monitor under `z`, in flat-index order.
pub fn enumerate_safe_actions(
    m: &Mpomdp,
    mon: &Monitor,
    b_prev: &Belief,
    z: JointObservation,
    mode: CheckMode,
) -> Vec<Candidate> {
    (0..m.num_actions())
        .filter_map(|i| match evaluate(m, mon, b_prev, z, JointAction(i), mode) {
            Evaluation::Safe(c) => Some(c),
            Evaluation::Unsafe { .. } => None,
        })
        .collect()
}

/// Literal shield step.
pub fn shield_step(
    m: &Mpomdp,
    mon: &Monitor,
    b_prev: &Belief,
    z: JointObservation,
    a_nominal: JointAction,
) -> Result<ShieldDecision, ShieldError> {
    shield_step_with(m, mon, b_prev, z, a_nominal, CheckMode::Literal)
}

pub fn shield_step_with(
    m: &Mpomdp,
    mon: &Monitor,
    b_prev: &Belief,
    z: JointObservation,
    a_nominal: JointAction,
    mode: CheckMode,
) -> Result<ShieldDecision, ShieldError> {
    check_inputs(m, b_prev, z)?;
    m.check_action(a_nominal)?;

    let nominal = evaluate(m, mon, b_prev, z, a_nominal, mode);
    if let Evaluation::Safe(c) = nominal {
        return Ok(ShieldDecision {
            executed: a_nominal,
            overridden: false,
            nominal_reward: c.reward,
            candidate_rewards: BTreeMap::new(),
            verdict: c.verdict,
            next_belief: c.next_belief,
            monitor: c.monitor,
        });
    }
    let nominal_reward = nominal_reward(m, b_prev, z, a_nominal);

    let mut best: Option<(f64, Candidate)> = None;
    let mut candidate_rewards = BTreeMap::new();
    let mut rejected = Vec::new();
    for i in 0..m.num_actions() {
        let a = JointAction(i);
        match evaluate(m, mon, b_prev, z, a, mode) {
            Evaluation::Safe(c) => {
                candidate_rewards.insert(i, c.reward);
                let dev = (c.reward - nominal_reward).powi(2);
                if best.as_ref().is_none_or(|(d, _)| dev < *d) {
                    best = Some((dev, c));
                }
            }
            Evaluation::Unsafe { barriers } => rejected.push(DeadlockCandidate { action: a, barriers }),
        }
    }
    match best {
        Some((_, c)) => Ok(ShieldDecision {
            executed: c.action,
            overridden: true,
            nominal_reward,
            candidate_rewards,
            verdict: c.verdict,
            next_belief: c.next_belief,
            monitor: c.monitor,
        }),
        None => Err(ShieldError::SafetyDeadlock { candidates: rejected }),
    }
}

/// `E_b[R(·, a_nominal)]` at the nominal update. If the observation is
/// impossible under the nominal action, the predicted belief is used.
pub fn nominal_reward(m: &Mpomdp, b_prev: &Belief, z: JointObservation, a_nominal: JointAction) -> f64 {
    let b = m
        .belief_update(b_prev, a_nominal, z)
        .unwrap_or_else(|_| Belief::new(m.predict(b_prev, a_nominal)).unwrap_or_else(|_| b_prev.clone()));
    m.expected_reward(&b, a_nominal)
}
