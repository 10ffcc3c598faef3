//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! formula = "G !(f1 | f2) & F f3"
//!
//! [model]
//! states = ["q0", "q1"]
//! initial = [0.5, 0.5]
//! transition = [...]      # [state][joint action][next state]
//! observation = [...]     # [next state][joint action][joint observation]
//! reward = [...]          # [state][joint action]
//! [[model.agents]]
//! name = "robot"
//! actions = ["stay", "go"]
//! observations = ["ping"]
//!
//! [labels]                # optional named state sets, usable as b(name)
//! goal = ["q1"]
//!
//! [predicates]            # name = belief expression; `p` holds when it is < 0
//! p = "0.5 - b(goal)"
//!
//! [monitor]
//! delta = 0.001
//! gamma = 0.5
//! rho = 0.99
//! eps = 0.1
//!
//! [shield]
//! mode = "literal"        # off | literal | conservative
//!
//! [sim]
//! horizon = 200
//! seed = 0
//! episodes = 100
//! abort_on_violation = false
//! [sim.policy]
//! kind = "fixed_action"   # fixed_action | greedy_reward | random_uniform
//! action = ["go"]         # one action name per agent
//! ```
//!
//! Joint actions and observations are indexed in mixed radix with the first
//! agent most significant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ldtl::{is_reserved, parse_expr, parse_formula, ParseError, Symbols};
use crate::model::{validate_model, JointAction, ModelError, ModelTables, Mpomdp, Violation};
use crate::monitor::{CompileError, MonitorConfig, MonitorConfigError, DEFAULT_DELTA};
use crate::sim::{NominalPolicy, Scenario, ScenarioError, DEFAULT_HORIZON};
use crate::trace::ShieldMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub formula: String,
    pub model: ModelTables,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub predicates: BTreeMap<String, String>,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub shield: ShieldSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub delta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        MonitorSection { delta: DEFAULT_DELTA, gamma: 0.5, rho: 0.99, eps: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldSection {
    pub mode: ShieldMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub abort_on_violation: bool,
    pub policy: PolicySection,
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

fn default_episodes() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    /// One action name per agent.
    FixedAction { action: Vec<String> },
    GreedyReward,
    RandomUniform,
}

/// One problem found while turning a config into a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    Model(Violation),
    State { name: String, problem: String },
    Label { name: String, problem: String },
    Predicate { name: String, problem: String },
    Formula(ParseError),
    Monitor(MonitorConfigError),
    Compile(CompileError),
    Sim(String),
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::Model(v) => write!(f, "model: {v}"),
            ConfigIssue::State { name, problem } => write!(f, "state `{name}`: {problem}"),
            ConfigIssue::Label { name, problem } => write!(f, "label `{name}`: {problem}"),
            ConfigIssue::Predicate { name, problem } => write!(f, "predicate `{name}`: {problem}"),
            ConfigIssue::Formula(e) => write!(f, "formula: {e}"),
            ConfigIssue::Monitor(e) => write!(f, "monitor: {e}"),
            ConfigIssue::Compile(e) => write!(f, "formula: {e}"),
            ConfigIssue::Sim(msg) => write!(f, "sim: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid scenario:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    pub fn monitor_config(&self) -> Result<MonitorConfig, MonitorConfigError> {
        let m = &self.monitor;
        MonitorConfig::new(m.delta, m.gamma, m.rho, m.eps)
    }

    /// Name resolution tables: states, labels and parsed predicates. Issues
    /// are appended to `issues`.
    pub fn symbols(&self, issues: &mut Vec<ConfigIssue>) -> Symbols {
        let states = &self.model.states;
        let mut sym = Symbols::new(states.clone());
        let state_set: BTreeSet<&str> = states.iter().map(String::as_str).collect();
        for name in states {
            if !is_identifier(name) || is_reserved(name) {
                issues.push(ConfigIssue::State {
                    name: name.clone(),
                    problem: "state names must be identifiers other than reserved words".into(),
                });
            }
        }

        let name_check = |kind: &str, name: &str| -> Option<String> {
            if !is_identifier(name) {
                Some(format!("`{name}` is not an identifier"))
            } else if is_reserved(name) {
                Some(format!("`{name}` is a reserved word"))
            } else if state_set.contains(name) {
                Some(format!("{kind} name clashes with a state"))
            } else {
                None
            }
        };

        for (name, members) in &self.labels {
            if let Some(problem) = name_check("label", name) {
                issues.push(ConfigIssue::Label { name: name.clone(), problem });
                continue;
            }
            let mut set = BTreeSet::new();
            for m in members {
                match states.iter().position(|s| s == m) {
                    Some(q) => {
                        set.insert(q);
                    }
                    None => issues.push(ConfigIssue::Label { name: name.clone(), problem: format!("unknown state `{m}`") }),
                }
            }
            sym.labels.insert(name.clone(), set);
        }

        for (name, text) in &self.predicates {
            let problem = name_check("predicate", name).or_else(|| {
                self.labels.contains_key(name).then(|| "predicate name clashes with a label".to_string())
            });
            if let Some(problem) = problem {
                issues.push(ConfigIssue::Predicate { name: name.clone(), problem });
                continue;
            }
            match parse_expr(text, &sym) {
                Ok(e) => {
                    sym.predicates.insert(name.clone(), e);
                }
                Err(e) => issues.push(ConfigIssue::Predicate { name: name.clone(), problem: e.to_string() }),
            }
        }
        sym
    }

    /// Everything wrong with the config; empty when it builds.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        match self.build() {
            Ok(_) => Vec::new(),
            Err(issues) => issues,
        }
    }

    pub fn build(&self) -> Result<Scenario, Vec<ConfigIssue>> {
        let mut issues: Vec<ConfigIssue> = validate_model(&self.model).violations.into_iter().map(ConfigIssue::Model).collect();
        let sym = self.symbols(&mut issues);
        let formula = parse_formula(&self.formula, &sym).map_err(ConfigIssue::Formula);
        let monitor = self.monitor_config().map_err(ConfigIssue::Monitor);
        if self.sim.horizon == 0 {
            issues.push(ConfigIssue::Sim("horizon must be at least 1".into()));
        }
        if self.sim.episodes == 0 {
            issues.push(ConfigIssue::Sim("episodes must be at least 1".into()));
        }
        let policy = self.policy();
        let (formula, monitor, policy) = match (formula, monitor, policy) {
            (Ok(f), Ok(m), Ok(p)) if issues.is_empty() => (f, m, p),
            (f, m, p) => {
                issues.extend(f.err());
                issues.extend(m.err());
                issues.extend(p.err());
                if !issues.is_empty() {
                    return Err(issues);
                }
                unreachable!("an error was collected above");
            }
        };
        let model = match Mpomdp::new(self.model.clone()) {
            Ok(m) => m,
            Err(ModelError::Invalid(report)) => {
                return Err(report.violations.into_iter().map(ConfigIssue::Model).collect());
            }
            Err(e) => return Err(vec![ConfigIssue::Sim(e.to_string())]),
        };
        let mut scenario = Scenario::new(model, formula, monitor, policy).map_err(|e| match e {
            ScenarioError::Compile(c) => vec![ConfigIssue::Compile(c)],
            ScenarioError::Model(m) => vec![ConfigIssue::Sim(m.to_string())],
        })?;
        scenario.shield = self.shield.mode;
        scenario.horizon = self.sim.horizon;
        scenario.seed = self.sim.seed;
        scenario.episodes = self.sim.episodes;
        scenario.abort_on_violation = self.sim.abort_on_violation;
        Ok(scenario)
    }

    fn policy(&self) -> Result<NominalPolicy, ConfigIssue> {
        match &self.sim.policy {
            PolicySection::GreedyReward => Ok(NominalPolicy::GreedyReward),
            PolicySection::RandomUniform => Ok(NominalPolicy::RandomUniform),
            PolicySection::FixedAction { action } => {
                let agents = &self.model.agents;
                if action.len() != agents.len() {
                    return Err(ConfigIssue::Sim(format!(
                        "fixed action names {} actions for {} agents",
                        action.len(),
                        agents.len()
                    )));
                }
                let mut flat = 0usize;
                for (agent, name) in agents.iter().zip(action) {
                    let Some(i) = agent.actions.iter().position(|a| a == name) else {
                        return Err(ConfigIssue::Sim(format!("agent `{}` has no action `{name}`", agent.name)));
                    };
                    flat = flat * agent.actions.len() + i;
                }
                Ok(NominalPolicy::FixedAction { action: JointAction(flat) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
formula = "G !bad & F good"

[model]
states = ["left", "right"]
initial = [0.5, 0.5]
transition = [[[1.0, 0.0], [0.2, 0.8]], [[0.0, 1.0], [0.0, 1.0]]]
observation = [[[0.9, 0.1], [0.9, 0.1]], [[0.1, 0.9], [0.1, 0.9]]]
reward = [[0.0, 1.0], [0.0, 1.0]]

[[model.agents]]
name = "robot"
actions = ["stay", "go"]
observations = ["see_left", "see_right"]

[labels]
goal = ["right"]

[predicates]
bad = "b(left) - 0.9"
good = "0.8 - b(goal)"

[monitor]
delta = 0.001
gamma = 0.5
rho = 0.9
eps = 0.1

[shield]
mode = "literal"

[sim]
horizon = 20
seed = 3
episodes = 2

[sim.policy]
kind = "fixed_action"
action = ["go"]
"#;

    #[test]
    fn small_config_builds() {
        let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
        let s = cfg.build().unwrap();
        assert_eq!(s.horizon, 20);
        assert_eq!(s.policy, NominalPolicy::FixedAction { action: JointAction(1) });
        assert_eq!(s.monitor().obligations().len(), 2);
    }

    #[test]
    fn canonical_writer_round_trips() {
        let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string(), text);
        assert_eq!(back.build().unwrap().formula(), cfg.build().unwrap().formula());
    }

    #[test]
    fn syntax_errors_are_located() {
        let broken = SMALL.replace("horizon = 20", "horizon = = 20");
        let err = ScenarioConfig::from_toml_str(&broken).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn non_stochastic_row_is_named() {
        let broken = SMALL.replace("[[1.0, 0.0], [0.2, 0.8]]", "[[1.0, 0.0], [0.2, 0.7]]");
        let issues = ScenarioConfig::from_toml_str(&broken).unwrap().issues();
        assert_eq!(issues.len(), 1);
        let text = issues[0].to_string();
        assert!(text.contains("transition[0, 1]"), "{text}");
    }

    #[test]
    fn unknown_predicate_is_reported_by_name() {
        let broken = SMALL.replace("G !bad & F good", "G !bad & F gooood");
        let issues = ScenarioConfig::from_toml_str(&broken).unwrap().issues();
        assert!(issues.iter().any(|i| i.to_string().contains("gooood")), "{issues:?}");
    }

    #[test]
    fn name_clashes_and_bad_parameters_are_collected() {
        let broken = SMALL
            .replace("goal = [\"right\"]", "goal = [\"right\", \"middle\"]\nleft = [\"left\"]")
            .replace("rho = 0.9", "rho = 1.0")
            .replace("action = [\"go\"]", "action = [\"fly\"]");
        let issues = ScenarioConfig::from_toml_str(&broken).unwrap().issues();
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("middle")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("clashes")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("rho")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("fly")), "{text:?}");
    }

    #[test]
    fn nested_temporal_formula_is_rejected() {
        let broken = SMALL.replace("G !bad & F good", "G F good");
        let issues = ScenarioConfig::from_toml_str(&broken).unwrap().issues();
        assert!(matches!(issues.as_slice(), [ConfigIssue::Compile(CompileError::UnsupportedNesting(_))]));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let broken = SMALL.replace("[shield]\nmode", "[shield]\nmood = 1\nmode");
        assert!(ScenarioConfig::from_toml_str(&broken).is_err());
    }
}
