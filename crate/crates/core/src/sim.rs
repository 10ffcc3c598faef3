//! Closed-loop episode simulation.
//!
//! Each step draws the nominal action, samples the hidden successor and an
//! observation under it, and hands that observation to the shield. When the
//! shield overrides:
//!
//! * literal mode keeps the observation and the shield's belief, and draws
//!   the hidden successor from its posterior under the executed action; if
//!   the observation is impossible under that action, both are redrawn;
//! * conservative mode redraws the successor and observation under the
//!   executed action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::ft_time_bound;
use crate::ldtl::Formula;
use crate::model::{sample_categorical, Belief, JointAction, Mpomdp};
use crate::monitor::{CheckKind, CompileError, Monitor, MonitorConfig, Phase, StepVerdict};
use crate::shield::{shield_step_with, CheckMode, ShieldError};
use crate::trace::{
    ObligationInfo, ObligationOutcome, ShieldMode, StepRecord, Termination, Trace, TraceEnd, TraceHeader, TRACE_FORMAT,
    TRACE_VERSION,
};

pub const DEFAULT_HORIZON: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NominalPolicy {
    FixedAction { action: JointAction },
    /// Highest expected immediate reward under the current belief.
    GreedyReward,
    RandomUniform,
}

impl NominalPolicy {
    pub fn choose<R: Rng + ?Sized>(&self, m: &Mpomdp, b: &Belief, rng: &mut R) -> JointAction {
        match *self {
            NominalPolicy::FixedAction { action } => action,
            NominalPolicy::GreedyReward => {
                let mut best = (f64::NEG_INFINITY, 0);
                for i in 0..m.num_actions() {
                    let r = m.expected_reward(b, JointAction(i));
                    if r > best.0 {
                        best = (r, i);
                    }
                }
                JointAction(best.1)
            }
            NominalPolicy::RandomUniform => JointAction(rng.random_range(0..m.num_actions())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    model: Mpomdp,
    formula: Formula,
    monitor_config: MonitorConfig,
    monitor: Monitor,
    pub shield: ShieldMode,
    pub policy: NominalPolicy,
    pub horizon: u64,
    pub seed: u64,
    pub episodes: usize,
    pub abort_on_violation: bool,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

impl Scenario {
    pub fn new(
        model: Mpomdp,
        formula: Formula,
        monitor_config: MonitorConfig,
        policy: NominalPolicy,
    ) -> Result<Self, ScenarioError> {
        let monitor = crate::monitor::compile(&formula, &model, &monitor_config)?;
        if let NominalPolicy::FixedAction { action } = policy {
            model.check_action(action)?;
        }
        Ok(Scenario {
            model,
            formula,
            monitor_config,
            monitor,
            shield: ShieldMode::Literal,
            policy,
            horizon: DEFAULT_HORIZON,
            seed: 0,
            episodes: 1,
            abort_on_violation: false,
        })
    }

    pub fn model(&self) -> &Mpomdp {
        &self.model
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn monitor_config(&self) -> &MonitorConfig {
        &self.monitor_config
    }

    /// Freshly compiled monitor.
    pub fn monitor(&self) -> &Monitor {
        &self.monitor
    }

    pub fn with_monitor_config(mut self, cfg: MonitorConfig) -> Result<Self, ScenarioError> {
        self.monitor = crate::monitor::compile(&self.formula, &self.model, &cfg)?;
        self.monitor_config = cfg;
        Ok(self)
    }

    pub fn set_policy(&mut self, policy: NominalPolicy) -> Result<(), ScenarioError> {
        if let NominalPolicy::FixedAction { action } = policy {
            self.model.check_action(action)?;
        }
        self.policy = policy;
        Ok(())
    }

    /// Integer reach-time deadline of every finite-time obligation from `p0`,
    /// `None` for obligations already satisfied initially.
    pub fn initial_deadlines(&self) -> Vec<Option<u64>> {
        let b0 = self.model.initial_belief();
        self.monitor
            .obligations()
            .iter()
            .filter(|o| o.kind() == CheckKind::FiniteTime)
            .map(|o| ft_time_bound(o.barrier().evaluate(&b0), self.monitor_config.ft).ok())
            .collect()
    }
}

/// Seeds of a batch: `base, base + 1, …`.
pub fn episode_seeds(base: u64, episodes: usize) -> impl Iterator<Item = u64> {
    (0..episodes as u64).map(move |i| base.wrapping_add(i))
}

pub fn run_episode(s: &Scenario) -> Trace {
    run_episode_seeded(s, s.seed)
}

pub fn run_episode_seeded(s: &Scenario, seed: u64) -> Trace {
    let m = &s.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = m.sample_initial(&mut rng);
    let mut b = m.initial_belief();
    let mut mon = s.monitor.clone();

    let header = TraceHeader {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        seed,
        horizon: s.horizon,
        shield: s.shield,
        states: m.state_names().to_vec(),
        obligations: mon
            .obligations()
            .iter()
            .map(|o| ObligationInfo { id: o.id, kind: o.kind(), label: o.label.clone() })
            .collect(),
        initial_state: q,
        initial_belief: b.probs().to_vec(),
        initial_barriers: mon.barrier_values(&b),
    };

    let mut steps = Vec::new();
    let mut violations = 0;
    let mut overrides = 0;
    let mut termination = Termination::Horizon;

    for t in 0..s.horizon {
        let a_nom = s.policy.choose(m, &b, &mut rng);
        let q_nom = m.sample_transition(q, a_nom, &mut rng);
        let z_nom = m.sample_observation(q_nom, a_nom, &mut rng);

        let (executed, overridden, nominal_reward, candidate_rewards);
        let (q_next, z, b_next, verdict, mon_next): (usize, _, Belief, StepVerdict, Monitor);
        let mut redrawn = false;

        match s.shield {
            ShieldMode::Off => {
                let Ok(bn) = m.belief_update(&b, a_nom, z_nom) else {
                    termination = Termination::ZeroLikelihood { step: t };
                    break;
                };
                let (v, mn) = mon.step(&b, &bn);
                executed = a_nom;
                overridden = false;
                nominal_reward = m.expected_reward(&bn, a_nom);
                candidate_rewards = Default::default();
                (q_next, z, b_next, verdict, mon_next) = (q_nom, z_nom, bn, v, mn);
            }
            ShieldMode::Literal | ShieldMode::Conservative => {
                let mode = if s.shield == ShieldMode::Literal { CheckMode::Literal } else { CheckMode::Conservative };
                let d = match shield_step_with(m, &mon, &b, z_nom, a_nom, mode) {
                    Ok(d) => d,
                    Err(ShieldError::SafetyDeadlock { candidates }) => {
                        termination = Termination::SafetyDeadlock { step: t, candidates };
                        break;
                    }
                    Err(ShieldError::Model(e)) => unreachable!("inputs are valid by construction: {e}"),
                };
                executed = d.executed;
                overridden = d.overridden;
                nominal_reward = d.nominal_reward;
                candidate_rewards = d.candidate_rewards;
                let a = d.executed;
                let posterior: Vec<f64> = (0..m.num_states())
                    .map(|qn| m.transition(q, a, qn) * m.observation(qn, a, z_nom))
                    .collect();
                if !overridden {
                    (q_next, z, b_next, verdict, mon_next) = (q_nom, z_nom, d.next_belief, d.verdict, d.monitor);
                } else if mode == CheckMode::Literal && posterior.iter().sum::<f64>() > 0.0 {
                    let qn = sample_categorical(&posterior, &mut rng);
                    (q_next, z, b_next, verdict, mon_next) = (qn, z_nom, d.next_belief, d.verdict, d.monitor);
                } else {
                    redrawn = mode == CheckMode::Literal;
                    let qn = m.sample_transition(q, a, &mut rng);
                    let zn = m.sample_observation(qn, a, &mut rng);
                    let Ok(bn) = m.belief_update(&b, a, zn) else {
                        termination = Termination::ZeroLikelihood { step: t };
                        break;
                    };
                    let (v, mn) = mon.step(&b, &bn);
                    (q_next, z, b_next, verdict, mon_next) = (qn, zn, bn, v, mn);
                }
            }
        }

        let passed = verdict.passed();
        violations += u64::from(!passed);
        overrides += u64::from(overridden);
        steps.push(StepRecord {
            step: t,
            state: q,
            nominal: a_nom.0,
            executed: executed.0,
            overridden,
            shield_observation: z_nom.0,
            observation: z.0,
            next_state: q_next,
            belief: b_next.probs().to_vec(),
            barriers: verdict.records.iter().map(|r| r.value).collect(),
            statuses: verdict.records.iter().map(|r| r.status).collect(),
            passed,
            nominal_reward,
            candidate_rewards,
            observation_redrawn: redrawn,
        });
        q = q_next;
        b = b_next;
        mon = mon_next;
        if !passed && s.abort_on_violation {
            termination = Termination::AbortedOnViolation { step: t };
            break;
        }
    }

    let end = TraceEnd {
        termination,
        steps: steps.len() as u64,
        violations,
        overrides,
        obligations: mon
            .obligations()
            .iter()
            .map(|o| ObligationOutcome { id: o.id, phase: o.phase, deadline: o.deadline, discharged_at: o.discharged_at })
            .collect(),
        all_discharged: mon.all_discharged(),
    };
    Trace { header, steps, end }
}

/// Per-episode statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub seed: u64,
    pub steps: u64,
    pub termination: &'static str,
    /// Steps whose verdict failed.
    pub violations: u64,
    /// Steps after which some invariance barrier is negative.
    pub invariant_breaches: u64,
    pub overrides: u64,
    pub all_discharged: bool,
    /// Step by which every finite-time obligation had discharged.
    pub discharge_step: Option<u64>,
}

impl EpisodeStats {
    pub fn of(t: &Trace) -> Self {
        let invariants: Vec<usize> = t
            .header
            .obligations
            .iter()
            .filter(|o| o.kind == CheckKind::Invariance)
            .map(|o| o.id)
            .collect();
        let invariant_breaches = t
            .steps
            .iter()
            .filter(|s| invariants.iter().any(|&i| s.barriers[i] < 0.0))
            .count() as u64;
        let ft: Vec<&ObligationOutcome> = t
            .end
            .obligations
            .iter()
            .filter(|o| t.header.obligations[o.id].kind == CheckKind::FiniteTime)
            .collect();
        let discharge_step = if !ft.is_empty() && ft.iter().all(|o| o.phase == Phase::Discharged) {
            ft.iter().filter_map(|o| o.discharged_at).max()
        } else {
            None
        };
        EpisodeStats {
            seed: t.header.seed,
            steps: t.end.steps,
            termination: t.end.termination.name(),
            violations: t.end.violations,
            invariant_breaches,
            overrides: t.end.overrides,
            all_discharged: t.end.all_discharged,
            discharge_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub episodes: usize,
    pub steps: u64,
    pub violations: u64,
    pub episodes_with_violations: usize,
    pub invariant_breaches: u64,
    pub episodes_with_breaches: usize,
    pub overrides: u64,
    /// Overridden steps over all executed steps.
    pub override_rate: f64,
    pub deadlocks: usize,
    pub aborts: usize,
    pub episodes_discharged: usize,
    pub mean_discharge_step: Option<f64>,
}

impl BatchSummary {
    pub fn of(stats: &[EpisodeStats]) -> Self {
        let steps: u64 = stats.iter().map(|s| s.steps).sum();
        let overrides: u64 = stats.iter().map(|s| s.overrides).sum();
        let discharges: Vec<u64> = stats.iter().filter_map(|s| s.discharge_step).collect();
        BatchSummary {
            episodes: stats.len(),
            steps,
            violations: stats.iter().map(|s| s.violations).sum(),
            episodes_with_violations: stats.iter().filter(|s| s.violations > 0).count(),
            invariant_breaches: stats.iter().map(|s| s.invariant_breaches).sum(),
            episodes_with_breaches: stats.iter().filter(|s| s.invariant_breaches > 0).count(),
            overrides,
            override_rate: if steps == 0 { 0.0 } else { overrides as f64 / steps as f64 },
            deadlocks: stats.iter().filter(|s| s.termination == "safety_deadlock").count(),
            aborts: stats
                .iter()
                .filter(|s| matches!(s.termination, "aborted_on_violation" | "zero_likelihood"))
                .count(),
            episodes_discharged: discharges.len(),
            mean_discharge_step: if discharges.is_empty() {
                None
            } else {
                Some(discharges.iter().sum::<u64>() as f64 / discharges.len() as f64)
            },
        }
    }

    pub fn violation_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.episodes_with_violations as f64 / self.episodes as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub traces: Vec<Trace>,
    pub stats: Vec<EpisodeStats>,
    pub summary: BatchSummary,
}

/// Runs `episodes` independent episodes with seeds `s.seed, s.seed + 1, …`.
pub fn run_batch(s: &Scenario, episodes: usize) -> Batch {
    run_batch_seeded(s, episode_seeds(s.seed, episodes))
}

pub fn run_batch_seeded(s: &Scenario, seeds: impl IntoIterator<Item = u64>) -> Batch {
    let traces: Vec<Trace> = seeds.into_iter().map(|seed| run_episode_seeded(s, seed)).collect();
    let stats: Vec<EpisodeStats> = traces.iter().map(EpisodeStats::of).collect();
    let summary = BatchSummary::of(&stats);
    Batch { traces, stats, summary }
}
