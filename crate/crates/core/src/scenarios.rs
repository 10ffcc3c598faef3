//! Built-in scenarios.
//!
//! `sample_site` is a gridworld version of a sampling mission. A segway
//! carrying the sampling tool drives blind along a five-cell track towards
//! the sample site (cell 4). A flipper robot moves between its parking spot
//! and the site, reporting its zone through a noisy sensor. A drone surveys
//! the site for debris (none, or one of three obstacle types).
//!
//! The mission: never have the segway at the site while the flipper or
//! debris is likely there, and eventually have the segway at the site with
//! the sample confirmed:
//!
//! ```text
//! G !(f1 | f2) & F f3
//! f1 = 0.1 - b(qS)*b(qF)
//! f2 = 0.1 - min(b(qS)*b(qo1), b(qS)*b(qo2), b(qS)*b(qo3))
//! f3 = 0.5 - b(qS)*b(qG)
//! ```
//!
//! The nominal policy drives the segway forward and sends the flipper to the
//! site at every step, which collides with the mission when unshielded.

use std::collections::BTreeMap;

use crate::config::{MonitorSection, PolicySection, ScenarioConfig, ShieldSection, SimSection};
use crate::model::{AgentSpec, ModelTables};
use crate::trace::ShieldMode;

pub const TRACK: usize = 5;
pub const SITE: usize = TRACK - 1;

const SEGWAY_ACTIONS: [&str; 3] = ["stay", "forward", "back"];
const FLIPPER_ACTIONS: [&str; 3] = ["hold", "enter", "leave"];
const ZONES: [&str; 2] = ["aside", "site"];
const DEBRIS: [&str; 4] = ["none", "o1", "o2", "o3"];

const SEGWAY_PRIOR: [f64; TRACK] = [0.3, 0.2, 0.2, 0.2, 0.1];
const FLIPPER_PRIOR: [f64; 2] = [0.9, 0.1];
const DEBRIS_PRIOR: [f64; 4] = [0.7, 0.1, 0.1, 0.1];

const SEGWAY_SUCCESS: f64 = 0.3;
const FLIPPER_SUCCESS: f64 = 0.9;
const ZONE_ACCURACY: f64 = 0.9;
const SURVEY_HIT: f64 = 0.8;
const SURVEY_CLEAR_HIT: f64 = 0.94;
const SURVEY_CONFUSION: f64 = 0.02;

fn state_index(s: usize, f: usize, d: usize) -> usize {
    (s * ZONES.len() + f) * DEBRIS.len() + d
}

fn state_name(s: usize, f: usize, d: usize) -> String {
    format!("s{s}_{}_{}", ZONES[f], DEBRIS[d])
}

fn segway_step(s: usize, action: usize) -> [f64; TRACK] {
    let mut row = [0.0; TRACK];
    let target = match action {
        1 => (s + 1).min(SITE),
        2 => s.saturating_sub(1),
        _ => s,
    };
    row[target] += SEGWAY_SUCCESS;
    row[s] += 1.0 - SEGWAY_SUCCESS;
    if target == s {
        row[s] = 1.0;
    }
    row
}

fn flipper_step(f: usize, action: usize) -> [f64; 2] {
    let target = match action {
        1 => 1,
        2 => 0,
        _ => f,
    };
    let mut row = [0.0; 2];
    row[target] += FLIPPER_SUCCESS;
    row[f] += 1.0 - FLIPPER_SUCCESS;
    if target == f {
        row[f] = 1.0;
    }
    row
}

fn zone_reading(f: usize, z: usize) -> f64 {
    if f == z {
        ZONE_ACCURACY
    } else {
        1.0 - ZONE_ACCURACY
    }
}

/// Debris sensor: misses report "none", obstacle types are rarely confused.
fn survey_reading(d: usize, z: usize) -> f64 {
    let others = (DEBRIS.len() - 2) as f64;
    match (d, z) {
        (0, 0) => SURVEY_CLEAR_HIT,
        (0, _) => (1.0 - SURVEY_CLEAR_HIT) / (DEBRIS.len() - 1) as f64,
        (_, 0) => 1.0 - SURVEY_HIT - others * SURVEY_CONFUSION,
        _ if d == z => SURVEY_HIT,
        _ => SURVEY_CONFUSION,
    }
}

fn reward(s: usize, seg: usize, flip: usize) -> f64 {
    let at_site = if s == SITE { 1.0 } else { 0.0 };
    let drive = [0.0, 0.5, -0.5][seg];
    let map = [0.0, 0.2, -0.2][flip];
    at_site + drive + map
}

fn agent(name: &str, actions: &[&str], observations: &[&str]) -> AgentSpec {
    AgentSpec {
        name: name.into(),
        actions: actions.iter().map(|s| s.to_string()).collect(),
        observations: observations.iter().map(|s| s.to_string()).collect(),
    }
}

/// Model tables of the sample-site world.
pub fn sample_site_model() -> ModelTables {
    let n = TRACK * ZONES.len() * DEBRIS.len();
    let na = SEGWAY_ACTIONS.len() * FLIPPER_ACTIONS.len();
    let nz = ZONES.len() * DEBRIS.len();
    let cells = || (0..TRACK).flat_map(|s| (0..ZONES.len()).flat_map(move |f| (0..DEBRIS.len()).map(move |d| (s, f, d))));

    let mut states = Vec::with_capacity(n);
    let mut initial = Vec::with_capacity(n);
    let mut transition = vec![vec![vec![0.0; n]; na]; n];
    let mut observation = vec![vec![vec![0.0; nz]; na]; n];
    let mut rewards = vec![vec![0.0; na]; n];
    for (s, f, d) in cells() {
        let q = state_index(s, f, d);
        states.push(state_name(s, f, d));
        initial.push(SEGWAY_PRIOR[s] * FLIPPER_PRIOR[f] * DEBRIS_PRIOR[d]);
        for seg in 0..SEGWAY_ACTIONS.len() {
            for flip in 0..FLIPPER_ACTIONS.len() {
                let a = seg * FLIPPER_ACTIONS.len() + flip;
                rewards[q][a] = reward(s, seg, flip);
                let sr = segway_step(s, seg);
                let fr = flipper_step(f, flip);
                for (s2, ps) in sr.iter().enumerate() {
                    for (f2, pf) in fr.iter().enumerate() {
                        transition[q][a][state_index(s2, f2, d)] = ps * pf;
                    }
                }
                for zf in 0..ZONES.len() {
                    for zd in 0..DEBRIS.len() {
                        observation[q][a][zf * DEBRIS.len() + zd] = zone_reading(f, zf) * survey_reading(d, zd);
                    }
                }
            }
        }
    }
    ModelTables {
        states,
        agents: vec![
            agent("segway", &SEGWAY_ACTIONS, &["none"]),
            agent("flipper", &FLIPPER_ACTIONS, &ZONES),
            agent("drone", &["survey"], &DEBRIS),
        ],
        initial,
        transition,
        reward: rewards,
        observation,
    }
}

fn labels() -> BTreeMap<String, Vec<String>> {
    let pick = |keep: &dyn Fn(usize, usize, usize) -> bool| -> Vec<String> {
        (0..TRACK)
            .flat_map(|s| (0..ZONES.len()).flat_map(move |f| (0..DEBRIS.len()).map(move |d| (s, f, d))))
            .filter(|&(s, f, d)| keep(s, f, d))
            .map(|(s, f, d)| state_name(s, f, d))
            .collect()
    };
    let mut out = BTreeMap::new();
    out.insert("qS".into(), pick(&|s, _, _| s == SITE));
    out.insert("qF".into(), pick(&|_, f, _| f == 1));
    for i in 1..DEBRIS.len() {
        out.insert(format!("qo{i}"), pick(&|_, _, d| d == i));
    }
    // the sample's location is known, so its confirmation holds everywhere
    out.insert("qG".into(), pick(&|_, _, _| true));
    out
}

fn predicates() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("f1".into(), "0.1 - b(qS)*b(qF)".into()),
        ("f2".into(), "0.1 - min(b(qS)*b(qo1), b(qS)*b(qo2), b(qS)*b(qo3))".into()),
        ("f3".into(), "0.5 - b(qS)*b(qG)".into()),
    ])
}

/// The sample-site scenario with the given shield mode.
pub fn sample_site(mode: ShieldMode) -> ScenarioConfig {
    ScenarioConfig {
        formula: "G !(f1 | f2) & F f3".into(),
        model: sample_site_model(),
        labels: labels(),
        predicates: predicates(),
        monitor: MonitorSection { delta: 1e-3, gamma: 0.5, rho: 0.99, eps: 0.1 },
        shield: ShieldSection { mode },
        sim: SimSection {
            horizon: 200,
            seed: 0,
            episodes: 100,
            abort_on_violation: false,
            policy: PolicySection::FixedAction {
                action: vec!["forward".into(), "enter".into(), "survey".into()],
            },
        },
    }
}

/// Built-in scenarios by name, as shipped under `scenarios/`.
pub fn builtin() -> Vec<(&'static str, ScenarioConfig)> {
    vec![
        ("sample_site", sample_site(ShieldMode::Literal)),
        ("sample_site_unshielded", sample_site(ShieldMode::Off)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn model_is_valid() {
        let m = sample_site_model();
        assert!(validate_model(&m).is_clean(), "{:?}", validate_model(&m).violations);
        assert_eq!(m.states.len(), 40);
        assert_eq!(m.transition[0].len(), 9);
        assert_eq!(m.observation[0][0].len(), 8);
    }

    #[test]
    fn initial_finite_time_barrier_is_about_minus_point_four() {
        let s = sample_site(ShieldMode::Literal).build().unwrap();
        let b0 = s.model().initial_belief();
        let values = s.monitor().barrier_values(&b0);
        // b(qS) = 0.1, b(qG) = 1
        assert!((values[1] - (0.1 - 0.5 - 1e-3)).abs() < 1e-12);
        assert!(values[0] > 0.0);
        assert_eq!(s.initial_deadlines(), vec![Some(161)]);
    }
}
