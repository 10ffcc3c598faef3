//! Multi-agent POMDP model, joint action/observation indexing and the
//! joint-belief Bayes filter.
//!
//! A model is built from [`ModelTables`] (the raw nested tables as they
//! appear in a scenario file). [`validate_model`] reports every stochasticity
//! or shape violation; [`Mpomdp::new`] refuses to build from tables with a
//! non-empty report and renormalizes rows once, at construction. The filter
//! itself never renormalizes silently.
//!
//! Joint indices use mixed-radix encoding with agent 0 as the most
//! significant digit, so flat indices enumerate the cartesian product in
//! lexicographic order.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for simplex and row-sum checks.
pub const PROB_TOL: f64 = 1e-9;

/// Filter denominators at or below this value are treated as impossible
/// observations.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("belief has length {got}, model has {expected} states")]
    BeliefLength { expected: usize, got: usize },
    #[error("belief is not on the simplex: {0}")]
    BeliefNotOnSimplex(String),
    #[error("joint action index {0} out of range ({1} joint actions)")]
    ActionOutOfRange(usize, usize),
    #[error("joint observation index {0} out of range ({1} joint observations)")]
    ObservationOutOfRange(usize, usize),
    #[error("state index {0} out of range ({1} states)")]
    StateOutOfRange(usize, usize),
    #[error("per-agent tuple {0:?} does not match radices {1:?}")]
    BadTuple(Vec<usize>, Vec<usize>),
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum FilterError {
    /// The observation has (numerically) zero probability under the
    /// predicted belief.
    #[error("observation {observation} is impossible after action {action} (likelihood {likelihood:e})")]
    ZeroLikelihood {
        action: usize,
        observation: usize,
        likelihood: f64,
    },
}

/// One agent's name with its local action and observation alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
}

/// Raw model tables, indexed as `transition[q][a][q']`, `reward[q][a]` and
/// `observation[q'][a][z]` with flat joint indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTables {
    pub states: Vec<String>,
    pub agents: Vec<AgentSpec>,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub observation: Vec<Vec<Vec<f64>>>,
}

/// A single problem found by [`validate_model`], with its index path.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape { table: &'static str, path: Vec<usize>, expected: usize, got: usize },
    Range { table: &'static str, path: Vec<usize>, value: f64 },
    RowSum { table: &'static str, path: Vec<usize>, sum: f64 },
    Empty { what: &'static str },
    DuplicateName { what: &'static str, name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { table, path, expected, got } => {
                write!(f, "{table}{path:?}: expected length {expected}, got {got}")
            }
            Violation::Range { table, path, value } => {
                write!(f, "{table}{path:?}: entry {value} outside [0, 1]")
            }
            Violation::RowSum { table, path, sum } => {
                write!(f, "{table}{path:?}: row sums to {sum}, expected 1")
            }
            Violation::Empty { what } => write!(f, "{what} is empty"),
            Violation::DuplicateName { what, name } => write!(f, "duplicate {what} name `{name}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Mixed-radix codec for a cartesian product of per-agent alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    radices: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(radices: Vec<usize>) -> Self {
        let size = radices.iter().product();
        JointSpace { radices, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn encode(&self, per_agent: &[usize]) -> Result<usize, ModelError> {
        if per_agent.len() != self.radices.len()
            || per_agent.iter().zip(&self.radices).any(|(&d, &r)| d >= r)
        {
            return Err(ModelError::BadTuple(per_agent.to_vec(), self.radices.clone()));
        }
        Ok(per_agent
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (&d, &r)| acc * r + d))
    }

    /// Panics if `flat >= size()`.
    pub fn decode(&self, flat: usize) -> Vec<usize> {
        assert!(flat < self.size, "flat index {flat} out of range {}", self.size);
        let mut digits = vec![0; self.radices.len()];
        let mut rest = flat;
        for (slot, &r) in digits.iter_mut().zip(&self.radices).rev() {
            *slot = rest % r;
            rest /= r;
        }
        digits
    }
}

/// Flat index into the joint action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub usize);

/// Flat index into the joint observation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointObservation(pub usize);

/// A point on the probability simplex over the model's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        check_simplex(&probs).map_err(ModelError::BeliefNotOnSimplex)?;
        Ok(Belief(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, q: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[q] = 1.0;
        Belief(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, q: usize) -> f64 {
        self.0[q]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_simplex(probs: &[f64]) -> Result<(), String> {
    if probs.is_empty() {
        return Err("empty vector".into());
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(format!("entry {i} = {p} outside [0, 1]"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}

/// Reports every shape, range and row-sum violation in `tables`. An empty
/// report means [`Mpomdp::new`] will accept them.
pub fn validate_model(tables: &ModelTables) -> ValidationReport {
    let mut out = Vec::new();
    let n = tables.states.len();
    if n == 0 {
        out.push(Violation::Empty { what: "states" });
    }
    if tables.agents.is_empty() {
        out.push(Violation::Empty { what: "agents" });
    }
    check_unique("state", tables.states.iter(), &mut out);
    check_unique("agent", tables.agents.iter().map(|a| &a.name), &mut out);
    for agent in &tables.agents {
        if agent.actions.is_empty() {
            out.push(Violation::Empty { what: "agent action list" });
        }
        if agent.observations.is_empty() {
            out.push(Violation::Empty { what: "agent observation list" });
        }
    }
    let na: usize = tables.agents.iter().map(|a| a.actions.len()).product();
    let nz: usize = tables.agents.iter().map(|a| a.observations.len()).product();

    check_row("initial", vec![], &tables.initial, n, &mut out);

    if check_len("transition", vec![], tables.transition.len(), n, &mut out) {
        for (q, per_action) in tables.transition.iter().enumerate() {
            if check_len("transition", vec![q], per_action.len(), na, &mut out) {
                for (a, row) in per_action.iter().enumerate() {
                    check_row("transition", vec![q, a], row, n, &mut out);
                }
            }
        }
    }
    if check_len("observation", vec![], tables.observation.len(), n, &mut out) {
        for (q, per_action) in tables.observation.iter().enumerate() {
            if check_len("observation", vec![q], per_action.len(), na, &mut out) {
                for (a, row) in per_action.iter().enumerate() {
                    check_row("observation", vec![q, a], row, nz, &mut out);
                }
            }
        }
    }
    if check_len("reward", vec![], tables.reward.len(), n, &mut out) {
        for (q, row) in tables.reward.iter().enumerate() {
            if check_len("reward", vec![q], row.len(), na, &mut out) {
                for (a, r) in row.iter().enumerate() {
                    if !r.is_finite() {
                        out.push(Violation::Range { table: "reward", path: vec![q, a], value: *r });
                    }
                }
            }
        }
    }
    ValidationReport { violations: out }
}

fn check_unique<'a>(what: &'static str, names: impl Iterator<Item = &'a String>, out: &mut Vec<Violation>) {
    let mut seen = std::collections::BTreeSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            out.push(Violation::DuplicateName { what, name: name.clone() });
        }
    }
}

fn check_len(table: &'static str, path: Vec<usize>, got: usize, expected: usize, out: &mut Vec<Violation>) -> bool {
    if got != expected {
        out.push(Violation::Shape { table, path, expected, got });
        return false;
    }
    true
}

fn check_row(table: &'static str, path: Vec<usize>, row: &[f64], expected: usize, out: &mut Vec<Violation>) {
    if !check_len(table, path.clone(), row.len(), expected, out) {
        return;
    }
    let before = out.len();
    for (i, &p) in row.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            let mut at = path.clone();
            at.push(i);
            out.push(Violation::Range { table, path: at, value: p });
        }
    }
    if out.len() == before {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            out.push(Violation::RowSum { table, path, sum });
        }
    }
}

/// A validated MPOMDP with dense, row-normalized tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Mpomdp {
    tables: ModelTables,
    actions: JointSpace,
    observations: JointSpace,
    n: usize,
    // flat copies: transition[(q * na + a) * n + q'], observation[(q' * na + a) * nz + z]
    transition: Vec<f64>,
    observation: Vec<f64>,
    reward: Vec<f64>,
}

impl Mpomdp {
    pub fn new(mut tables: ModelTables) -> Result<Self, ModelError> {
        let report = validate_model(&tables);
        if !report.is_clean() {
            return Err(ModelError::Invalid(report));
        }
        normalize(&mut tables.initial);
        for row in tables.transition.iter_mut().flatten() {
            normalize(row);
        }
        for row in tables.observation.iter_mut().flatten() {
            normalize(row);
        }
        let actions = JointSpace::new(tables.agents.iter().map(|a| a.actions.len()).collect());
        let observations = JointSpace::new(tables.agents.iter().map(|a| a.observations.len()).collect());
        let n = tables.states.len();
        let transition = tables.transition.iter().flatten().flatten().copied().collect();
        let observation = tables.observation.iter().flatten().flatten().copied().collect();
        let reward = tables.reward.iter().flatten().copied().collect();
        Ok(Mpomdp { tables, actions, observations, n, transition, observation, reward })
    }

    pub fn tables(&self) -> &ModelTables {
        &self.tables
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.actions.size()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.size()
    }

    pub fn action_space(&self) -> &JointSpace {
        &self.actions
    }

    pub fn observation_space(&self) -> &JointSpace {
        &self.observations
    }

    pub fn state_names(&self) -> &[String] {
        &self.tables.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.tables.states.iter().position(|s| s == name)
    }

    pub fn initial_belief(&self) -> Belief {
        Belief(self.tables.initial.clone())
    }

    pub fn transition(&self, q: usize, a: JointAction, q_next: usize) -> f64 {
        self.transition[(q * self.num_actions() + a.0) * self.n + q_next]
    }

    pub fn transition_row(&self, q: usize, a: JointAction) -> &[f64] {
        let start = (q * self.num_actions() + a.0) * self.n;
        &self.transition[start..start + self.n]
    }

    pub fn observation(&self, q_next: usize, a: JointAction, z: JointObservation) -> f64 {
        self.observation[(q_next * self.num_actions() + a.0) * self.num_observations() + z.0]
    }

    pub fn observation_row(&self, q_next: usize, a: JointAction) -> &[f64] {
        let nz = self.num_observations();
        let start = (q_next * self.num_actions() + a.0) * nz;
        &self.observation[start..start + nz]
    }

    pub fn reward(&self, q: usize, a: JointAction) -> f64 {
        self.reward[q * self.num_actions() + a.0]
    }

    pub fn check_action(&self, a: JointAction) -> Result<(), ModelError> {
        if a.0 >= self.num_actions() {
            return Err(ModelError::ActionOutOfRange(a.0, self.num_actions()));
        }
        Ok(())
    }

    pub fn check_observation(&self, z: JointObservation) -> Result<(), ModelError> {
        if z.0 >= self.num_observations() {
            return Err(ModelError::ObservationOutOfRange(z.0, self.num_observations()));
        }
        Ok(())
    }

    pub fn check_belief(&self, b: &Belief) -> Result<(), ModelError> {
        if b.len() != self.n {
            return Err(ModelError::BeliefLength { expected: self.n, got: b.len() });
        }
        Ok(())
    }

    /// One-step prediction `Σ_q T(q, a, q') b(q)`.
    pub fn predict(&self, b: &Belief, a: JointAction) -> Vec<f64> {
        let mut predicted = vec![0.0; self.n];
        for (q, &mass) in b.probs().iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (p, &t) in predicted.iter_mut().zip(self.transition_row(q, a)) {
                *p += t * mass;
            }
        }
        predicted
    }

    /// Probability of seeing `z` after taking `a` from belief `b`.
    pub fn observation_likelihood(&self, b: &Belief, a: JointAction, z: JointObservation) -> f64 {
        self.predict(b, a)
            .iter()
            .enumerate()
            .map(|(q, p)| p * self.observation(q, a, z))
            .sum()
    }

    /// Bayes posterior after action `a` and observation `z`.
    pub fn belief_update(&self, b: &Belief, a: JointAction, z: JointObservation) -> Result<Belief, FilterError> {
        let mut post = self.predict(b, a);
        for (q, p) in post.iter_mut().enumerate() {
            *p *= self.observation(q, a, z);
        }
        let norm: f64 = post.iter().sum();
        if norm <= LIKELIHOOD_FLOOR {
            return Err(FilterError::ZeroLikelihood { action: a.0, observation: z.0, likelihood: norm });
        }
        for p in post.iter_mut() {
            *p /= norm;
        }
        Ok(Belief(post))
    }

    /// `Σ_q b(q) R(q, a)`.
    pub fn expected_reward(&self, b: &Belief, a: JointAction) -> f64 {
        b.probs()
            .iter()
            .enumerate()
            .map(|(q, p)| p * self.reward(q, a))
            .sum()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(&self.tables.initial, rng)
    }

    pub fn sample_transition<R: Rng + ?Sized>(&self, q: usize, a: JointAction, rng: &mut R) -> usize {
        sample_categorical(self.transition_row(q, a), rng)
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, q_next: usize, a: JointAction, rng: &mut R) -> JointObservation {
        JointObservation(sample_categorical(self.observation_row(q_next, a), rng))
    }
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
}

/// Draws an index from a validated probability row.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    // rows are validated at construction, so this cannot fail
    WeightedIndex::new(weights)
        .expect("validated probability row")
        .sample(rng)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn agent(name: &str, na: usize, nz: usize) -> AgentSpec {
        AgentSpec {
            name: name.into(),
            actions: (0..na).map(|i| format!("a{i}")).collect(),
            observations: (0..nz).map(|i| format!("z{i}")).collect(),
        }
    }

    /// Two states, one agent with one action and two observations.
    pub fn two_state(transition: [[f64; 2]; 2], obs: [[f64; 2]; 2]) -> ModelTables {
        ModelTables {
            states: vec!["q1".into(), "q2".into()],
            agents: vec![agent("r", 1, 2)],
            initial: vec![0.5, 0.5],
            transition: transition.iter().map(|row| vec![row.to_vec()]).collect(),
            reward: vec![vec![2.0], vec![4.0]],
            observation: obs.iter().map(|row| vec![row.to_vec()]).collect(),
        }
    }
}
