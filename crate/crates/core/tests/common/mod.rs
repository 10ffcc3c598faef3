//! Random models, predicates and formulas shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ldtl_shield::ldtl::{BeliefExpr, Formula, Predicate};
use ldtl_shield::model::{AgentSpec, Belief, ModelTables, Mpomdp};
use rand::Rng;

/// Random stochastic row of length `n`; each entry is zero with probability
/// `sparsity`, but at least one entry is positive.
pub fn random_row<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> Vec<f64> {
    let mut row: Vec<f64> =
        (0..n).map(|_| if rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>() + 1e-3 }).collect();
    if row.iter().all(|&x| x == 0.0) {
        row[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

pub fn random_belief<R: Rng>(rng: &mut R, n: usize) -> Belief {
    Belief::new(random_row(rng, n, 0.3)).expect("normalized row")
}

/// Splits `total` joint symbols into per-agent radices whose product is `total`.
fn radices<R: Rng>(rng: &mut R, total: usize) -> Vec<usize> {
    let divisors: Vec<usize> = (2..total).filter(|&d| total.is_multiple_of(d)).collect();
    if divisors.is_empty() || rng.random::<bool>() {
        vec![total]
    } else {
        let d = divisors[rng.random_range(0..divisors.len())];
        vec![d, total / d]
    }
}

/// Random valid model with the given joint sizes, split over one or two agents.
pub fn random_tables<R: Rng>(rng: &mut R, nq: usize, na: usize, nz: usize) -> ModelTables {
    let ar = radices(rng, na);
    // the second agent, if any, carries the whole observation space
    let zr = if ar.len() == 2 { vec![1, nz] } else { vec![nz] };
    let agents = ar
        .iter()
        .zip(&zr)
        .enumerate()
        .map(|(i, (&a, &z))| AgentSpec {
            name: format!("agent{i}"),
            actions: (0..a).map(|k| format!("a{i}_{k}")).collect(),
            observations: (0..z).map(|k| format!("z{i}_{k}")).collect(),
        })
        .collect();
    ModelTables {
        states: (0..nq).map(|q| format!("q{q}")).collect(),
        agents,
        initial: random_row(rng, nq, 0.3),
        transition: (0..nq).map(|_| (0..na).map(|_| random_row(rng, nq, 0.4)).collect()).collect(),
        reward: (0..nq).map(|_| (0..na).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        observation: (0..nq).map(|_| (0..na).map(|_| random_row(rng, nz, 0.3)).collect()).collect(),
    }
}

pub fn random_model<R: Rng>(rng: &mut R, max_q: usize, max_a: usize, max_z: usize) -> Mpomdp {
    let nq = rng.random_range(1..=max_q);
    let na = rng.random_range(1..=max_a);
    let nz = rng.random_range(1..=max_z);
    Mpomdp::new(random_tables(rng, nq, na, nz)).expect("generated tables are valid")
}

/// Bayes filter written out in two passes: unnormalized posterior, then
/// normalization. `None` when the observation has (near) zero likelihood.
pub fn two_pass_update(m: &Mpomdp, b: &[f64], a: usize, z: usize) -> Option<Vec<f64>> {
    let t = &m.tables().transition;
    let o = &m.tables().observation;
    let n = b.len();
    let mut unnorm = vec![0.0; n];
    for (qn, u) in unnorm.iter_mut().enumerate() {
        let mut pred = 0.0;
        for q in 0..n {
            pred += t[q][a][qn] * b[q];
        }
        *u = o[qn][a][z] * pred;
    }
    let total: f64 = unnorm.iter().sum();
    if total <= 1e-12 {
        return None;
    }
    Some(unnorm.into_iter().map(|u| u / total).collect())
}

pub fn expected_reward(m: &Mpomdp, b: &[f64], a: usize) -> f64 {
    b.iter().enumerate().map(|(q, p)| p * m.tables().reward[q][a]).sum()
}

pub fn random_subset<R: Rng>(rng: &mut R, n: usize) -> BTreeSet<usize> {
    let mut s: BTreeSet<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
    if s.is_empty() {
        s.insert(rng.random_range(0..n));
    }
    s
}

/// Random belief expression over `n` states: a threshold on a mass, on a
/// product of two masses, or a `min`/`max` of two such.
pub fn random_expr<R: Rng>(rng: &mut R, n: usize, depth: usize) -> BeliefExpr {
    let c = BeliefExpr::Constant(rng.random_range(0.05..0.95));
    match rng.random_range(0..if depth == 0 { 2 } else { 4 }) {
        0 => BeliefExpr::Difference(Box::new(c), Box::new(BeliefExpr::mass(random_subset(rng, n)))),
        1 => BeliefExpr::Difference(
            Box::new(c),
            Box::new(BeliefExpr::Product(vec![
                BeliefExpr::BeliefVar(rng.random_range(0..n)),
                BeliefExpr::BeliefVar(rng.random_range(0..n)),
            ])),
        ),
        2 => BeliefExpr::Min(vec![random_expr(rng, n, depth - 1), random_expr(rng, n, depth - 1)]),
        _ => BeliefExpr::Max(vec![random_expr(rng, n, depth - 1), random_expr(rng, n, depth - 1)]),
    }
}

pub fn random_predicates<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<Predicate> {
    (0..count).map(|i| Predicate { name: format!("p{i}"), expr: random_expr(rng, n, 1) }).collect()
}

/// Random atom; state-set atoms only when `state_sets` is set.
pub fn random_atom<R: Rng>(rng: &mut R, n: usize, preds: &[Predicate], state_sets: bool) -> Formula {
    let k = rng.random_range(0..if state_sets { 4 } else { 2 });
    match k {
        0 => Formula::BeliefPred(preds[rng.random_range(0..preds.len())].clone()),
        1 => Formula::NegBeliefPred(preds[rng.random_range(0..preds.len())].clone()),
        2 => Formula::StateSet(random_subset(rng, n)),
        _ => Formula::NegStateSet(random_subset(rng, n)),
    }
}

/// Atoms joined by `&` and `|`.
pub fn random_prop<R: Rng>(rng: &mut R, n: usize, preds: &[Predicate], depth: usize, state_sets: bool) -> Formula {
    if depth == 0 || rng.random_range(0..3) == 0 {
        return random_atom(rng, n, preds, state_sets);
    }
    let l = random_prop(rng, n, preds, depth - 1, state_sets);
    let r = random_prop(rng, n, preds, depth - 1, state_sets);
    if rng.random::<bool>() {
        Formula::and(l, r)
    } else {
        Formula::or(l, r)
    }
}

/// One conjunct of the monitorable fragment: `G p`, `F p`, `p U q`, `X p` or `p`.
pub fn random_conjunct<R: Rng>(rng: &mut R, n: usize, preds: &[Predicate], state_sets: bool) -> Formula {
    let p = |rng: &mut R| random_prop(rng, n, preds, 2, state_sets);
    match rng.random_range(0..5) {
        0 => Formula::always(p(rng)),
        1 => Formula::eventually(p(rng)),
        2 => {
            let l = p(rng);
            Formula::until(l, p(rng))
        }
        3 => Formula::next(p(rng)),
        _ => {
            let f = p(rng);
            // a bare `&` would split into separate conjuncts
            if matches!(f, Formula::And(..)) { Formula::or(f.clone(), f) } else { f }
        }
    }
}

/// Conjunction of one to three monitorable conjuncts.
pub fn random_fragment_formula<R: Rng>(rng: &mut R, n: usize, preds: &[Predicate], state_sets: bool) -> Formula {
    let k = rng.random_range(1..=3);
    let mut f = random_conjunct(rng, n, preds, state_sets);
    for _ in 1..k {
        f = Formula::and(f, random_conjunct(rng, n, preds, state_sets));
    }
    f
}
