//! Direct recursive satisfaction of formulas over recorded finite words.
//!
//! Finite-trace closure: `G φ` holds at `i` iff `φ` holds at every position
//! from `i` to the end of the word; `F φ` and `U` need a witness inside the
//! word; `X φ` at the last position is false.

use super::formula::Formula;
use crate::model::Belief;

/// One letter `(q^i, b^i)`: hidden state index and belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Letter {
    pub state: usize,
    pub belief: Belief,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    pub fn push(&mut self, state: usize, belief: Belief) {
        self.letters.push(Letter { state, belief });
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word { letters: self.letters[..len].to_vec() }
    }
}

/// `w^i ⊨ φ` under finite-trace closure. Panics if `i >= w.len()`.
pub fn oracle_satisfies(phi: &Formula, w: &Word, i: usize) -> bool {
    assert!(i < w.len(), "position {i} outside word of length {}", w.len());
    let letter = &w.letters[i];
    match phi {
        Formula::StateSet(a) => a.contains(&letter.state),
        Formula::NegStateSet(a) => !a.contains(&letter.state),
        Formula::BeliefPred(p) => p.expr.evaluate(&letter.belief) < 0.0,
        Formula::NegBeliefPred(p) => p.expr.evaluate(&letter.belief) >= 0.0,
        Formula::And(l, r) => oracle_satisfies(l, w, i) && oracle_satisfies(r, w, i),
        Formula::Or(l, r) => oracle_satisfies(l, w, i) || oracle_satisfies(r, w, i),
        Formula::Next(f) => i + 1 < w.len() && oracle_satisfies(f, w, i + 1),
        Formula::Until(l, r) => {
            for j in i..w.len() {
                if oracle_satisfies(r, w, j) {
                    return true;
                }
                if !oracle_satisfies(l, w, j) {
                    return false;
                }
            }
            false
        }
        Formula::Eventually(f) => (i..w.len()).any(|j| oracle_satisfies(f, w, j)),
        Formula::Always(f) => (i..w.len()).all(|j| oracle_satisfies(f, w, j)),
    }
}
