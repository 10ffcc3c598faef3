use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::expr::BeliefExpr;

/// A named belief predicate `f`, read as the proposition `f(b) < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub expr: BeliefExpr,
}

/// LDTL formula. Negation only appears on atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    StateSet(BTreeSet<usize>),
    NegStateSet(BTreeSet<usize>),
    BeliefPred(Predicate),
    NegBeliefPred(Predicate),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn until(l: Formula, r: Formula) -> Formula {
        Formula::Until(Box::new(l), Box::new(r))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::StateSet(_) | Formula::NegStateSet(_) | Formula::BeliefPred(_) | Formula::NegBeliefPred(_)
        )
    }

    /// Atoms combined with `&` and `|` only.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => l.is_propositional() && r.is_propositional(),
            f => f.is_atom(),
        }
    }

    /// True if no state-set atom occurs anywhere in the formula.
    pub fn is_belief_only(&self) -> bool {
        match self {
            Formula::StateSet(_) | Formula::NegStateSet(_) => false,
            Formula::BeliefPred(_) | Formula::NegBeliefPred(_) => true,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => l.is_belief_only() && r.is_belief_only(),
            Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => f.is_belief_only(),
        }
    }

    /// Negation pushed through `&`/`|` to the atoms. `None` if a temporal
    /// operator is in the way.
    pub fn negate_propositional(&self) -> Option<Formula> {
        Some(match self {
            Formula::StateSet(a) => Formula::NegStateSet(a.clone()),
            Formula::NegStateSet(a) => Formula::StateSet(a.clone()),
            Formula::BeliefPred(p) => Formula::NegBeliefPred(p.clone()),
            Formula::NegBeliefPred(p) => Formula::BeliefPred(p.clone()),
            Formula::And(l, r) => Formula::or(l.negate_propositional()?, r.negate_propositional()?),
            Formula::Or(l, r) => Formula::and(l.negate_propositional()?, r.negate_propositional()?),
            _ => return None,
        })
    }

    /// Top-level `&` conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(l, r) => {
                let mut out = l.conjuncts();
                out.extend(r.conjuncts());
                out
            }
            f => vec![f],
        }
    }

    pub fn max_state(&self) -> Option<usize> {
        match self {
            Formula::StateSet(a) | Formula::NegStateSet(a) => a.iter().next_back().copied(),
            Formula::BeliefPred(p) | Formula::NegBeliefPred(p) => p.expr.max_state(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(l, r) => l.max_state().max(r.max_state()),
            Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => f.max_state(),
        }
    }

    /// Concrete syntax accepted by [`super::parse_formula`].
    pub fn pretty(&self, states: &[String]) -> String {
        let mut out = String::new();
        self.write(states, Prec::Or, &mut out);
        out
    }

    fn prec(&self) -> Prec {
        match self {
            Formula::Or(..) => Prec::Or,
            Formula::And(..) => Prec::And,
            Formula::Until(..) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) => Prec::Term,
            _ => Prec::Primary,
        }
    }

    fn write(&self, states: &[String], min: Prec, out: &mut String) {
        if self.prec() < min {
            out.push('(');
            self.write(states, Prec::Or, out);
            out.push(')');
            return;
        }
        match self {
            Formula::StateSet(a) => write_set(a, states, out),
            Formula::NegStateSet(a) => {
                out.push('!');
                write_set(a, states, out);
            }
            Formula::BeliefPred(p) => out.push_str(&p.name),
            Formula::NegBeliefPred(p) => {
                out.push('!');
                out.push_str(&p.name);
            }
            Formula::Or(l, r) => {
                l.write(states, Prec::Or, out);
                out.push_str(" | ");
                r.write(states, Prec::And, out);
            }
            Formula::And(l, r) => {
                l.write(states, Prec::And, out);
                out.push_str(" & ");
                r.write(states, Prec::Term, out);
            }
            Formula::Until(l, r) => {
                l.write(states, Prec::Primary, out);
                out.push_str(" U ");
                r.write(states, Prec::Term, out);
            }
            Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => {
                out.push_str(match self {
                    Formula::Next(_) => "X ",
                    Formula::Eventually(_) => "F ",
                    _ => "G ",
                });
                f.write(states, Prec::Term, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Or,
    And,
    Term,
    Primary,
}

fn write_set(a: &BTreeSet<usize>, states: &[String], out: &mut String) {
    out.push_str("in({");
    for (i, q) in a.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&states[*q]);
    }
    out.push_str("})");
}
