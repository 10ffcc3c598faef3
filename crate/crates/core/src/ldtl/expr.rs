//! Real-valued belief expressions: constants, `b(q)`, `+`, `-`, `*`, `min`,
//! `max`. No division or transcendental functions, so evaluation on a valid
//! belief is always finite.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Belief;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BeliefExpr {
    Constant(f64),
    /// `b(q)` for a state index.
    BeliefVar(usize),
    Sum(Vec<BeliefExpr>),
    Difference(Box<BeliefExpr>, Box<BeliefExpr>),
    Product(Vec<BeliefExpr>),
    Min(Vec<BeliefExpr>),
    Max(Vec<BeliefExpr>),
}

impl BeliefExpr {
    pub fn evaluate(&self, b: &Belief) -> f64 {
        match self {
            BeliefExpr::Constant(c) => *c,
            BeliefExpr::BeliefVar(q) => b.get(*q),
            BeliefExpr::Sum(xs) => xs.iter().map(|x| x.evaluate(b)).sum(),
            BeliefExpr::Difference(l, r) => l.evaluate(b) - r.evaluate(b),
            BeliefExpr::Product(xs) => xs.iter().map(|x| x.evaluate(b)).product(),
            BeliefExpr::Min(xs) => xs.iter().map(|x| x.evaluate(b)).fold(f64::INFINITY, f64::min),
            BeliefExpr::Max(xs) => xs.iter().map(|x| x.evaluate(b)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Mass of a state set, `Σ_{q∈A} b(q)`.
    pub fn mass<I: IntoIterator<Item = usize>>(states: I) -> Self {
        let mut vars: Vec<_> = states.into_iter().map(BeliefExpr::BeliefVar).collect();
        match vars.len() {
            0 => BeliefExpr::Constant(0.0),
            1 => vars.pop().unwrap(),
            _ => BeliefExpr::Sum(vars),
        }
    }

    /// Largest state index referenced, if any.
    pub fn max_state(&self) -> Option<usize> {
        match self {
            BeliefExpr::Constant(_) => None,
            BeliefExpr::BeliefVar(q) => Some(*q),
            BeliefExpr::Difference(l, r) => l.max_state().max(r.max_state()),
            BeliefExpr::Sum(xs) | BeliefExpr::Product(xs) | BeliefExpr::Min(xs) | BeliefExpr::Max(xs) => {
                xs.iter().filter_map(BeliefExpr::max_state).max()
            }
        }
    }

    /// Renders in the concrete expression syntax; `states` names the
    /// `b(..)` arguments.
    pub fn pretty(&self, states: &[String]) -> String {
        let mut out = String::new();
        self.write(states, &mut out);
        out
    }

    fn is_infix(&self) -> bool {
        matches!(self, BeliefExpr::Sum(_) | BeliefExpr::Difference(..) | BeliefExpr::Product(_))
    }

    fn write_operand(&self, states: &[String], out: &mut String) {
        if self.is_infix() {
            out.push('(');
            self.write(states, out);
            out.push(')');
        } else {
            self.write(states, out);
        }
    }

    fn write(&self, states: &[String], out: &mut String) {
        match self {
            BeliefExpr::Constant(c) => {
                let _ = write!(out, "{c}");
            }
            BeliefExpr::BeliefVar(q) => {
                let _ = write!(out, "b({})", states[*q]);
            }
            BeliefExpr::Sum(xs) => join(xs, " + ", states, out),
            BeliefExpr::Product(xs) => join(xs, " * ", states, out),
            BeliefExpr::Difference(l, r) => {
                l.write_operand(states, out);
                out.push_str(" - ");
                r.write_operand(states, out);
            }
            BeliefExpr::Min(xs) | BeliefExpr::Max(xs) => {
                out.push_str(if matches!(self, BeliefExpr::Min(_)) { "min(" } else { "max(" });
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    x.write(states, out);
                }
                out.push(')');
            }
        }
    }
}

fn join(xs: &[BeliefExpr], sep: &str, states: &[String], out: &mut String) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        x.write_operand(states, out);
    }
}
