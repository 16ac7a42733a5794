//! A small DPLL solver over semi-CNF: disjunctive clauses plus exactly-one
//! groups with native propagation. One engine, two uses: randomized model
//! sampling and complete UNSAT checks (the same search run to exhaustion).

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Literal, PropId, SemiCnf};

/// A (possibly partial) model: `None` for variables not constrained by the
/// formula. Callers apply a closed-world default.
pub type PartialModel = Vec<Option<bool>>;

pub struct Solver {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
    oneofs: Vec<Vec<Literal>>,
    assign: Vec<i8>, // -1 unknown, 0 false, 1 true
    trail: Vec<u32>,
    branch_vars: Vec<u32>,
}

struct Frame {
    var: u32,
    value: bool,
    trail_len: usize,
    flipped: bool,
}

impl Solver {
    pub fn new(cnf: &SemiCnf, num_vars: usize) -> Solver {
        let mut s = Solver {
            num_vars,
            clauses: cnf.clauses.clone(),
            oneofs: cnf.oneofs.clone(),
            assign: vec![-1; num_vars],
            trail: Vec::new(),
            branch_vars: Vec::new(),
        };
        s.rebuild_branch_vars();
        s
    }

    fn rebuild_branch_vars(&mut self) {
        let mut vars: Vec<u32> = self
            .clauses
            .iter()
            .chain(self.oneofs.iter())
            .flat_map(|c| c.iter().map(|l| l.prop.0))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        self.branch_vars = vars;
    }

    /// Add a clause between solve calls (blocking clauses, query conjuncts).
    pub fn add_clause(&mut self, clause: Vec<Literal>) {
        for l in &clause {
            if !self.branch_vars.contains(&l.prop.0) {
                self.branch_vars.push(l.prop.0);
            }
        }
        self.branch_vars.sort_unstable();
        self.clauses.push(clause);
    }

    fn value(&self, l: Literal) -> Option<bool> {
        match self.assign[l.prop.index()] {
            -1 => None,
            v => Some((v == 1) != l.negated),
        }
    }

    fn set(&mut self, l: Literal) {
        self.assign[l.prop.index()] = if l.negated { 0 } else { 1 };
        self.trail.push(l.prop.0);
    }

    fn undo_to(&mut self, trail_len: usize) {
        while self.trail.len() > trail_len {
            let v = self.trail.pop().unwrap();
            self.assign[v as usize] = -1;
        }
    }

    /// Fixpoint unit propagation over clauses and oneof groups.
    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for ci in 0..self.clauses.len() {
                let mut unit: Option<Literal> = None;
                let mut undef = 0usize;
                let mut satisfied = false;
                for i in 0..self.clauses[ci].len() {
                    let l = self.clauses[ci][i];
                    match self.value(l) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            undef += 1;
                            unit = Some(l);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match undef {
                    0 => return false,
                    1 => {
                        self.set(unit.unwrap());
                        changed = true;
                    }
                    _ => {}
                }
            }
            for gi in 0..self.oneofs.len() {
                let mut true_count = 0usize;
                let mut open: Vec<Literal> = Vec::new();
                for i in 0..self.oneofs[gi].len() {
                    let l = self.oneofs[gi][i];
                    match self.value(l) {
                        Some(true) => true_count += 1,
                        Some(false) => {}
                        None => open.push(l),
                    }
                }
                if true_count >= 2 {
                    return false;
                }
                if true_count == 1 {
                    for l in open {
                        self.set(l.complement());
                        changed = true;
                    }
                } else {
                    match open.len() {
                        0 => return false,
                        1 => {
                            self.set(open[0]);
                            changed = true;
                        }
                        _ => {}
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn pick_branch(&self, rng: &mut ChaCha8Rng) -> Option<Literal> {
        let open: Vec<u32> = self
            .branch_vars
            .iter()
            .copied()
            .filter(|&v| self.assign[v as usize] == -1)
            .collect();
        let &var = open.choose(rng)?;
        Some(Literal {
            prop: PropId(var),
            negated: rng.random::<bool>(),
        })
    }

    /// Flip the deepest unflipped decision; false when none is left.
    fn backtrack_flip(&mut self, stack: &mut Vec<Frame>) -> bool {
        loop {
            match stack.pop() {
                None => {
                    self.undo_to(0);
                    return false;
                }
                Some(f) => {
                    self.undo_to(f.trail_len);
                    if !f.flipped {
                        let lit = Literal {
                            prop: PropId(f.var),
                            negated: f.value,
                        };
                        stack.push(Frame {
                            var: f.var,
                            value: !f.value,
                            trail_len: f.trail_len,
                            flipped: true,
                        });
                        self.set(lit);
                        return true;
                    }
                }
            }
        }
    }

    fn snapshot(&self) -> PartialModel {
        self.assign
            .iter()
            .map(|&v| match v {
                -1 => None,
                v => Some(v == 1),
            })
            .collect()
    }

    /// Backtracking search. Random variable and polarity choices come from
    /// `rng`; the search is complete, so a `None` result is a proof of
    /// unsatisfiability.
    pub fn solve(&mut self, rng: &mut ChaCha8Rng) -> Option<PartialModel> {
        self.undo_to(0);
        let mut stack: Vec<Frame> = Vec::new();
        loop {
            if self.propagate() {
                match self.pick_branch(rng) {
                    None => {
                        let model = self.snapshot();
                        self.undo_to(0);
                        return Some(model);
                    }
                    Some(lit) => {
                        stack.push(Frame {
                            var: lit.prop.0,
                            value: !lit.negated,
                            trail_len: self.trail.len(),
                            flipped: false,
                        });
                        self.set(lit);
                    }
                }
            } else if !self.backtrack_flip(&mut stack) {
                return None;
            }
        }
    }

    /// Exhaustive enumeration: every full assignment of the constrained
    /// variables is visited once, backtracking past each model instead of
    /// blocking it, so the clause set never grows. Returns true when the
    /// search space was exhausted (fewer than `cap` models exist).
    pub fn solve_all(
        &mut self,
        rng: &mut ChaCha8Rng,
        cap: usize,
        mut on_model: impl FnMut(PartialModel),
    ) -> bool {
        self.undo_to(0);
        let mut stack: Vec<Frame> = Vec::new();
        let mut found = 0usize;
        loop {
            if self.propagate() {
                match self.pick_branch(rng) {
                    None => {
                        on_model(self.snapshot());
                        found += 1;
                        if found >= cap {
                            self.undo_to(0);
                            return false;
                        }
                        if !self.backtrack_flip(&mut stack) {
                            return true;
                        }
                    }
                    Some(lit) => {
                        stack.push(Frame {
                            var: lit.prop.0,
                            value: !lit.negated,
                            trail_len: self.trail.len(),
                            flipped: false,
                        });
                        self.set(lit);
                    }
                }
            } else if !self.backtrack_flip(&mut stack) {
                return true;
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }
}

/// Check satisfiability; returns one model or a definitive UNSAT.
pub fn satisfiable(cnf: &SemiCnf, num_vars: usize, seed: u64) -> Option<PartialModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Solver::new(cnf, num_vars).solve(&mut rng)
}

/// Enumerate up to `cap` models by exhaustive backtracking, projected onto
/// `vars` (assignments equal on those variables count once). The boolean is
/// true when enumeration is complete (the formula has no further models).
pub fn enumerate_models_exhaustive(
    cnf: &SemiCnf,
    num_vars: usize,
    vars: &[PropId],
    cap: usize,
    seed: u64,
) -> (Vec<PartialModel>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solver = Solver::new(cnf, num_vars);
    let mut keep = vec![false; num_vars];
    for v in vars {
        keep[v.index()] = true;
    }
    let mut projected: std::collections::BTreeSet<Vec<Option<bool>>> = Default::default();
    let complete = solver.solve_all(&mut rng, cap.max(1), |model| {
        let proj: PartialModel = (0..num_vars)
            .map(|i| if keep[i] { model[i] } else { None })
            .collect();
        projected.insert(proj);
    });
    (projected.into_iter().collect(), complete)
}

/// Enumerate up to `cap` models, blocking each found model on `block_vars`
/// only (two models equal on those variables count once). The boolean is
/// true when enumeration is complete (the formula has no further models).
pub fn enumerate_models(
    cnf: &SemiCnf,
    num_vars: usize,
    block_vars: &[PropId],
    cap: usize,
    seed: u64,
) -> (Vec<PartialModel>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solver = Solver::new(cnf, num_vars);
    let mut models = Vec::new();
    loop {
        match solver.solve(&mut rng) {
            None => return (models, true),
            Some(model) => {
                let blocking: Vec<Literal> = block_vars
                    .iter()
                    .map(|&p| Literal {
                        prop: p,
                        negated: model[p.index()].unwrap_or(false),
                    })
                    .collect();
                models.push(model);
                if models.len() >= cap {
                    return (models, false);
                }
                if blocking.is_empty() {
                    // Nothing to block on: a second solve would loop.
                    return (models, true);
                }
                solver.add_clause(blocking);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(p: u32) -> Literal {
        Literal::pos(PropId(p))
    }

    fn nl(p: u32) -> Literal {
        Literal::neg(PropId(p))
    }

    #[test]
    fn empty_formula_is_sat() {
        let model = satisfiable(&SemiCnf::default(), 4, 0).unwrap();
        assert!(model.iter().all(|v| v.is_none()));
    }

    #[test]
    fn oneof_with_both_negated_is_unsat() {
        let cnf = SemiCnf {
            clauses: vec![vec![nl(0)], vec![nl(1)]],
            oneofs: vec![vec![l(0), l(1)]],
        };
        assert!(satisfiable(&cnf, 2, 0).is_none());
    }

    #[test]
    fn oneof_forces_exactly_one() {
        let cnf = SemiCnf {
            clauses: vec![vec![l(0)]],
            oneofs: vec![vec![l(0), l(1), l(2)]],
        };
        let m = satisfiable(&cnf, 3, 7).unwrap();
        assert_eq!(m[0], Some(true));
        assert_eq!(m[1], Some(false));
        assert_eq!(m[2], Some(false));
    }

    #[test]
    fn enumeration_counts_oneof_models() {
        let cnf = SemiCnf {
            clauses: vec![],
            oneofs: vec![vec![l(0), l(1)], vec![l(2), l(3)]],
        };
        let vars: Vec<PropId> = (0..4).map(PropId).collect();
        let (models, complete) = enumerate_models(&cnf, 4, &vars, 100, 3);
        assert!(complete);
        assert_eq!(models.len(), 4);
    }

    #[test]
    fn enumeration_respects_cap() {
        let cnf = SemiCnf {
            clauses: vec![],
            oneofs: vec![vec![l(0), l(1)], vec![l(2), l(3)]],
        };
        let vars: Vec<PropId> = (0..4).map(PropId).collect();
        let (models, complete) = enumerate_models(&cnf, 4, &vars, 2, 3);
        assert!(!complete);
        assert_eq!(models.len(), 2);
    }

    #[test]
    fn exhaustive_enumeration_agrees_with_blocking() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for round in 0..200 {
            let nv = rng.random_range(2..7usize);
            let mut cnf = SemiCnf::default();
            for _ in 0..rng.random_range(0..6usize) {
                let len = rng.random_range(1..4usize);
                cnf.clauses.push(
                    (0..len)
                        .map(|_| Literal {
                            prop: PropId(rng.random_range(0..nv) as u32),
                            negated: rng.random(),
                        })
                        .collect(),
                );
            }
            if rng.random::<bool>() {
                let a = rng.random_range(0..nv) as u32;
                let b = rng.random_range(0..nv) as u32;
                if a != b {
                    cnf.oneofs.push(vec![l(a), l(b)]);
                }
            }
            let vars = cnf.props();
            let (blocked, c1) = enumerate_models(&cnf, nv, &vars, 1000, round);
            let (exhaustive, c2) = enumerate_models_exhaustive(&cnf, nv, &vars, 1000, round);
            assert_eq!(c1, c2);
            let norm = |ms: &[PartialModel]| {
                let mut v: Vec<Vec<Option<bool>>> = ms.to_vec();
                v.sort();
                v
            };
            assert_eq!(norm(&blocked), norm(&exhaustive), "round {round}: {cnf:?}");
        }
    }

    #[test]
    fn solver_agrees_with_brute_force_on_random_formulas() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..300 {
            let nv = rng.random_range(2..7usize);
            let nc = rng.random_range(0..8usize);
            let mut cnf = SemiCnf::default();
            for _ in 0..nc {
                let len = rng.random_range(1..4usize);
                let clause: Vec<Literal> = (0..len)
                    .map(|_| Literal {
                        prop: PropId(rng.random_range(0..nv) as u32),
                        negated: rng.random(),
                    })
                    .collect();
                cnf.clauses.push(clause);
            }
            if rng.random::<bool>() {
                let a = rng.random_range(0..nv) as u32;
                let b = rng.random_range(0..nv) as u32;
                if a != b {
                    cnf.oneofs.push(vec![l(a), l(b)]);
                }
            }
            let brute = (0..(1usize << nv)).any(|mask| {
                let mut s = crate::bits::BitVec::zeros(nv);
                for i in 0..nv {
                    if mask & (1 << i) != 0 {
                        s.set(i, true);
                    }
                }
                cnf.holds_in(&s)
            });
            let got = satisfiable(&cnf, nv, round).is_some();
            assert_eq!(got, brute, "disagreement on round {round}: {cnf:?}");
        }
    }
}
