//! Lazy belief tracking: keep the initial-state formula and the execution
//! history only, and answer queries about the current belief by regressing
//! conditions through the history and checking satisfiability against the
//! initial formula. Per-step caches of known literals (partially-specified
//! belief states) keep the regressed formulas small.

use thiserror::Error;

use crate::bits::BitVec;
use crate::formula::{to_cnf, Formula, Literal, PropId, SemiCnf};
use crate::model::{self, Action, Observation, PposProblem, State};
use crate::sat;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BeliefError {
    #[error("initial belief formula became unsatisfiable: {0}")]
    InconsistentBelief(String),
}

#[derive(Clone, Debug)]
pub struct HistoryStep {
    pub action: usize,
    pub observation: Option<Observation>,
}

/// Literals known to hold in every possible state at one step.
#[derive(Clone, Debug)]
pub struct Psbs {
    pub known: Vec<Option<bool>>,
    pub step_index: usize,
}

impl Psbs {
    fn new(width: usize, step_index: usize) -> Self {
        Psbs {
            known: vec![None; width],
            step_index,
        }
    }

    pub fn get(&self, p: PropId) -> Option<bool> {
        self.known[p.index()]
    }

    pub fn knows(&self, l: Literal) -> bool {
        self.known[l.prop.index()] == Some(!l.negated)
    }
}

/// Weakest condition on the pre-action state such that applying `action`
/// yields a state satisfying `cond`. Preconditions are elided: they were
/// verified before the action was applied.
pub fn regress(cond: &Formula, action: &Action) -> Formula {
    match cond {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Lit(l) => regress_literal(*l, action),
        Formula::And(kids) => Formula::conj(kids.iter().map(|k| regress(k, action)).collect()),
        Formula::Or(kids) => Formula::disj(kids.iter().map(|k| regress(k, action)).collect()),
        Formula::OneOf(lits) => {
            let expanded = Formula::disj(
                (0..lits.len())
                    .map(|i| {
                        Formula::conj(
                            lits.iter()
                                .enumerate()
                                .map(|(j, &l)| {
                                    Formula::Lit(if i == j { l } else { l.complement() })
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            );
            regress(&expanded, action)
        }
    }
}

fn regress_literal(l: Literal, action: &Action) -> Formula {
    let adds: Vec<&Vec<Literal>> = action
        .effects
        .iter()
        .filter(|e| e.effect == l)
        .map(|e| &e.condition)
        .collect();
    let dels: Vec<&Vec<Literal>> = action
        .effects
        .iter()
        .filter(|e| e.effect == l.complement())
        .map(|e| &e.condition)
        .collect();
    if dels.iter().any(|c| c.is_empty()) {
        return Formula::False;
    }
    if adds.iter().any(|c| c.is_empty()) {
        return Formula::True;
    }
    let mut survives = vec![Formula::Lit(l)];
    survives.extend(adds.iter().map(|c| Formula::lits_conj(c)));
    let mut parts = vec![Formula::disj(survives)];
    parts.extend(dels.iter().map(|c| Formula::neg_lits_conj(c)));
    Formula::conj(parts)
}

/// Right-to-left fold of [`regress`] over an action sequence, without any
/// cache lookups. `regress_history(c, []) == c`.
pub fn regress_history(cond: &Formula, history: &[&Action]) -> Formula {
    let mut f = cond.clone();
    for action in history.iter().rev() {
        if matches!(f, Formula::True | Formula::False) {
            break;
        }
        f = regress(&f, action);
    }
    f
}

// ---------------------------------------------------------------------------
// Forward propagation of known literals through one action

fn cond_status(cond: &[Literal], known: &[Option<bool>]) -> CondStatus {
    let mut all_true = true;
    for l in cond {
        match known[l.prop.index()] {
            Some(v) if v == !l.negated => {}
            Some(_) => return CondStatus::Blocked,
            None => all_true = false,
        }
    }
    if all_true {
        CondStatus::Triggered
    } else {
        CondStatus::Open
    }
}

#[derive(PartialEq, Clone, Copy)]
enum CondStatus {
    Triggered,
    Blocked,
    Open,
}

/// All literals of `cond` are known true or equal to `assumed`.
fn covered_assuming(cond: &[Literal], known: &[Option<bool>], assumed: Literal) -> bool {
    cond.iter()
        .all(|l| *l == assumed || known[l.prop.index()] == Some(!l.negated))
}

/// The condition cannot fire in a state satisfying `assumed`: some literal
/// is known false or contradicts `assumed`.
fn blocked_assuming(cond: &[Literal], known: &[Option<bool>], assumed: Literal) -> bool {
    cond.iter()
        .any(|l| *l == assumed.complement() || known[l.prop.index()] == Some(l.negated))
}

/// Propagate a known-literal set through one action. Besides triggered
/// effects and frame persistence this applies the negative-persistence rule:
/// if l is unknown, the action deletes l whenever l holds (modulo known side
/// conditions) and never adds l in a state where l is false, then l is known
/// false afterwards (and symmetrically for the complement).
fn progress_known(known: &[Option<bool>], action: &Action) -> Vec<Option<bool>> {
    let mut next = known.to_vec();
    let mut touched: Vec<u32> = action.effects.iter().map(|e| e.effect.prop.0).collect();
    touched.sort_unstable();
    touched.dedup();
    for &pv in &touched {
        let p = PropId(pv);
        let pos = Literal::pos(p);
        let adds: Vec<&Vec<Literal>> = action
            .effects
            .iter()
            .filter(|e| e.effect == pos)
            .map(|e| &e.condition)
            .collect();
        let dels: Vec<&Vec<Literal>> = action
            .effects
            .iter()
            .filter(|e| e.effect == pos.complement())
            .map(|e| &e.condition)
            .collect();
        let add_status: Vec<CondStatus> = adds.iter().map(|c| cond_status(c, known)).collect();
        let del_status: Vec<CondStatus> = dels.iter().map(|c| cond_status(c, known)).collect();
        let add_triggered = add_status.contains(&CondStatus::Triggered);
        let del_triggered = del_status.contains(&CondStatus::Triggered);
        let add_possible = add_status.iter().any(|s| *s != CondStatus::Blocked);
        let del_possible = del_status.iter().any(|s| *s != CondStatus::Blocked);
        debug_assert!(
            !(add_triggered && del_triggered),
            "consistency violated at grounding"
        );

        next[p.index()] = if add_triggered {
            Some(true)
        } else if del_triggered {
            Some(false)
        } else {
            match known[p.index()] {
                Some(true) if !del_possible => Some(true),
                Some(false) if !add_possible => Some(false),
                Some(_) => None,
                None => {
                    let neg = pos.complement();
                    let deleted_whenever_true =
                        dels.iter().any(|c| covered_assuming(c, known, pos));
                    let never_added_when_false =
                        adds.iter().all(|c| blocked_assuming(c, known, neg));
                    let added_whenever_false = adds.iter().any(|c| covered_assuming(c, known, neg));
                    let never_deleted_when_true =
                        dels.iter().all(|c| blocked_assuming(c, known, pos));
                    if deleted_whenever_true && never_added_when_false {
                        Some(false)
                    } else if added_whenever_false && never_deleted_when_true {
                        Some(true)
                    } else {
                        None
                    }
                }
            }
        };
    }
    next
}

// ---------------------------------------------------------------------------
// Shadow oracle (instrumentation)

/// Explicit-enumeration cross-check. Every surviving initial state carries
/// its full trajectory so cached literals can be validated at any step.
#[derive(Clone, Debug)]
struct Shadow {
    trajectories: Vec<Vec<State>>,
}

impl Shadow {
    fn current(&self) -> impl Iterator<Item = &State> {
        self.trajectories.iter().map(|t| t.last().unwrap())
    }
}

// ---------------------------------------------------------------------------
// BeliefContext

#[derive(Clone)]
pub struct BeliefContext<'p> {
    problem: &'p PposProblem,
    init: SemiCnf,
    num_vars: usize,
    history: Vec<HistoryStep>,
    psbs: Vec<Psbs>,
    shadow: Option<Shadow>,
}

/// Split a grounded initial formula into semi-CNF, distributing only the
/// subtrees that are not already clause- or oneof-shaped.
fn init_to_semicnf(f: &Formula, num_props: usize) -> (SemiCnf, usize) {
    let mut cnf = SemiCnf::default();
    let mut aux_next = num_props as u32;
    let push = |part: &Formula, cnf: &mut SemiCnf, aux_next: &mut u32| match part {
        Formula::True => {}
        Formula::False => cnf.clauses.push(Vec::new()),
        Formula::Lit(l) => cnf.clauses.push(vec![*l]),
        Formula::OneOf(lits) => cnf.oneofs.push(lits.clone()),
        other => {
            let res = to_cnf(other, *aux_next);
            *aux_next += res.aux_vars;
            cnf.clauses.extend(res.clauses);
        }
    };
    match f {
        Formula::And(kids) => {
            for k in kids {
                push(k, &mut cnf, &mut aux_next);
            }
        }
        other => push(other, &mut cnf, &mut aux_next),
    }
    (cnf, aux_next as usize)
}

/// Unit propagation over a semi-CNF; returns the fixed values or an
/// explanation of the conflict.
fn propagate_units(cnf: &SemiCnf, num_vars: usize) -> Result<Vec<Option<bool>>, String> {
    let mut fixed: Vec<Option<bool>> = vec![None; num_vars];
    loop {
        let mut changed = false;
        for clause in &cnf.clauses {
            let mut unit = None;
            let mut open = 0usize;
            let mut sat = false;
            for l in clause {
                match fixed[l.prop.index()] {
                    Some(v) if v != l.negated => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unit = Some(*l);
                    }
                }
            }
            if sat {
                continue;
            }
            match open {
                0 => return Err(format!("falsified clause {clause:?}")),
                1 => {
                    let l = unit.unwrap();
                    fixed[l.prop.index()] = Some(!l.negated);
                    changed = true;
                }
                _ => {}
            }
        }
        for group in &cnf.oneofs {
            let mut true_count = 0usize;
            let mut open = Vec::new();
            for l in group {
                match fixed[l.prop.index()] {
                    Some(v) if v != l.negated => true_count += 1,
                    Some(_) => {}
                    None => open.push(*l),
                }
            }
            if true_count >= 2 || (true_count == 0 && open.is_empty()) {
                return Err(format!("violated oneof {group:?}"));
            }
            if true_count == 1 && !open.is_empty() {
                for l in open {
                    fixed[l.prop.index()] = Some(l.negated);
                    changed = true;
                }
            } else if true_count == 0 && open.len() == 1 {
                fixed[open[0].prop.index()] = Some(!open[0].negated);
                changed = true;
            }
        }
        if !changed {
            return Ok(fixed);
        }
    }
}

impl<'p> BeliefContext<'p> {
    pub fn new(problem: &'p PposProblem) -> Result<Self, BeliefError> {
        Self::build(problem, None)
    }

    /// Instrumented context: every entailment answer and every cached
    /// literal is cross-checked against an explicitly enumerated belief.
    /// Panics on disagreement. `cap` bounds the enumeration.
    pub fn with_shadow(problem: &'p PposProblem, cap: usize) -> Result<Self, BeliefError> {
        let states = model::initial_belief(problem, cap);
        Self::build(
            problem,
            Some(Shadow {
                trajectories: states.into_iter().map(|s| vec![s]).collect(),
            }),
        )
    }

    fn build(problem: &'p PposProblem, shadow: Option<Shadow>) -> Result<Self, BeliefError> {
        let (init, num_vars) = init_to_semicnf(&problem.init, problem.num_props());
        let mut ctx = BeliefContext {
            problem,
            init,
            num_vars,
            history: Vec::new(),
            psbs: vec![Psbs::new(problem.num_props(), 0)],
            shadow,
        };
        if sat::satisfiable(&ctx.init, ctx.num_vars, 0).is_none() {
            return Err(BeliefError::InconsistentBelief(
                "unsatisfiable at load".into(),
            ));
        }
        let fixed =
            propagate_units(&ctx.init, ctx.num_vars).map_err(BeliefError::InconsistentBelief)?;
        for (i, v) in fixed.iter().enumerate().take(problem.num_props()) {
            if let Some(v) = *v {
                ctx.learn_at(
                    0,
                    Literal {
                        prop: PropId(i as u32),
                        negated: !v,
                    },
                )
                .map_err(BeliefError::InconsistentBelief)?;
            }
        }
        Ok(ctx)
    }

    pub fn problem(&self) -> &'p PposProblem {
        self.problem
    }

    pub fn history(&self) -> &[HistoryStep] {
        &self.history
    }

    pub fn init_formula(&self) -> &SemiCnf {
        &self.init
    }

    pub fn psbs_at(&self, step: usize) -> &Psbs {
        &self.psbs[step]
    }

    pub fn last_psbs(&self) -> &Psbs {
        self.psbs.last().unwrap()
    }

    fn action(&self, idx: usize) -> &'p Action {
        &self.problem.actions[idx]
    }

    /// Append an executed action to the history and progress the caches.
    pub fn push_step(&mut self, action: usize) {
        let next = progress_known(&self.psbs.last().unwrap().known, self.action(action));
        self.history.push(HistoryStep {
            action,
            observation: None,
        });
        self.psbs.push(Psbs {
            known: next,
            step_index: self.history.len(),
        });
        if let Some(shadow) = &mut self.shadow {
            let act = &self.problem.actions[self.history.last().unwrap().action];
            for t in &mut shadow.trajectories {
                let cur = t.last().unwrap();
                let next = model::apply(act, cur).expect("shadow state violates precondition");
                t.push(next);
            }
            self.check_shadow_psbs(self.history.len());
        }
    }

    fn learn_at(&mut self, step: usize, l: Literal) -> Result<bool, String> {
        let slot = &mut self.psbs[step].known[l.prop.index()];
        match *slot {
            Some(v) if v == !l.negated => Ok(false),
            Some(_) => Err(format!(
                "learned {:?} at step {step} but its complement is already known",
                l
            )),
            None => {
                *slot = Some(!l.negated);
                if let Some(shadow) = &self.shadow {
                    for t in &shadow.trajectories {
                        assert!(
                            l.holds_in(&t[step]),
                            "PSBS cache unsound: {} at step {step} fails in shadow state",
                            self.problem.literal_name(l)
                        );
                    }
                }
                self.refresh_forward(step);
                Ok(true)
            }
        }
    }

    /// Re-run forward progression after step `from` gained information.
    fn refresh_forward(&mut self, from: usize) {
        for i in from..self.history.len() {
            let prog = progress_known(&self.psbs[i].known, self.action(self.history[i].action));
            let mut changed = false;
            for (idx, v) in prog.into_iter().enumerate() {
                if let Some(v) = v {
                    let slot = &mut self.psbs[i + 1].known[idx];
                    if slot.is_none() {
                        *slot = Some(v);
                        changed = true;
                        if let Some(shadow) = &self.shadow {
                            for t in &shadow.trajectories {
                                assert!(
                                    t[i + 1].get(idx) == v,
                                    "PSBS cache unsound at step {} for {}",
                                    i + 1,
                                    self.problem.prop_names[idx]
                                );
                            }
                        }
                    }
                    debug_assert_ne!(self.psbs[i + 1].known[idx], Some(!v), "PSBS conflict");
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn check_shadow_psbs(&self, step: usize) {
        if let Some(shadow) = &self.shadow {
            for (idx, v) in self.psbs[step].known.iter().enumerate() {
                if let Some(v) = *v {
                    for t in &shadow.trajectories {
                        assert!(
                            t[step].get(idx) == v,
                            "PSBS progression unsound at step {step} for {}",
                            self.problem.prop_names[idx]
                        );
                    }
                }
            }
        }
    }

    /// Regress a formula from step `upto` back to the initial state, using
    /// the per-step caches to simplify. When `cache_facts` is set the
    /// formula is a known fact (an observation) and any literal conjunct
    /// uncovered along the way is cached at its step.
    fn regress_with_cache(&mut self, cond: Formula, cache_facts: bool) -> Formula {
        let mut f = cond;
        let mut step = self.history.len();
        loop {
            let known = self.psbs[step].known.clone();
            f = f.simplify_with(&|p| known[p.index()]);
            if cache_facts {
                let units = f.unit_literals();
                for l in units {
                    // A fact regressed to this step holds in every possible
                    // state here.
                    let _ = self.learn_at(step, l);
                }
            }
            if step == 0 || matches!(f, Formula::True | Formula::False) {
                return f;
            }
            step -= 1;
            f = regress(&f, self.action(self.history[step].action));
        }
    }

    /// Public query-path regression through the whole history.
    pub fn regress_query(&mut self, cond: &Formula) -> Formula {
        self.regress_with_cache(cond.clone(), false)
    }

    /// Does every currently possible state satisfy all of `lits`?
    pub fn entails(&mut self, lits: &[Literal]) -> bool {
        self.entails_with_witness(lits).0
    }

    /// Like [`Self::entails`]; on a negative answer also returns an initial
    /// state witnessing the violation.
    pub fn entails_with_witness(&mut self, lits: &[Literal]) -> (bool, Option<State>) {
        let result = self.entails_inner(lits);
        if let Some(shadow) = &self.shadow {
            let oracle = shadow.current().all(|s| lits.iter().all(|l| l.holds_in(s)));
            assert_eq!(
                result.0,
                oracle,
                "entails disagrees with the explicit belief on {:?}",
                lits.iter()
                    .map(|&l| self.problem.literal_name(l))
                    .collect::<Vec<_>>()
            );
        }
        result
    }

    fn entails_inner(&mut self, lits: &[Literal]) -> (bool, Option<State>) {
        let last = self.psbs.last().unwrap();
        if lits.iter().all(|&l| last.knows(l)) {
            return (true, None);
        }
        if lits.iter().any(|&l| last.knows(l.complement())) {
            // Some literal is known false everywhere, so every model of the
            // initial formula is a witness.
            return (false, self.model_of(&Formula::True));
        }
        let query = Formula::neg_lits_conj(lits);
        let regressed = self.regress_with_cache(query, false);
        match regressed {
            Formula::False => {
                for &l in lits {
                    let _ = self.learn_at(self.history.len(), l);
                }
                (true, None)
            }
            ref f => match self.model_of(f) {
                None => {
                    for &l in lits {
                        let _ = self.learn_at(self.history.len(), l);
                    }
                    (true, None)
                }
                Some(state) => (false, Some(state)),
            },
        }
    }

    /// A model of current-init ∧ extra, projected to an initial state.
    pub fn model_of(&self, extra: &Formula) -> Option<State> {
        let mut cnf = self.init.clone();
        let res = to_cnf(extra, self.num_vars as u32);
        cnf.clauses.extend(res.clauses);
        let total = self.num_vars + res.aux_vars as usize;
        let model = sat::satisfiable(&cnf, total, 0)?;
        Some(self.project(&model))
    }

    fn project(&self, model: &sat::PartialModel) -> State {
        let mut s = BitVec::zeros(self.problem.num_props());
        for (i, v) in model.iter().enumerate().take(self.problem.num_props()) {
            if *v == Some(true) {
                s.set(i, true);
            }
        }
        s
    }

    /// Record the observation of the action last pushed: regress each
    /// observed literal to the initial state, strengthen the initial
    /// formula, and propagate newly fixed literals through the history.
    pub fn assimilate_observation(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        let step = self.history.len();
        assert!(step > 0, "assimilate requires a pushed action");
        self.history.last_mut().unwrap().observation = Some(obs.clone());
        if let Some(shadow) = &mut self.shadow {
            let act = &self.problem.actions[self.history.last().unwrap().action];
            shadow.trajectories.retain(|t| {
                // The observation reflects the state before the action.
                model::observe(act, &t[t.len() - 2]) == *obs
            });
            assert!(
                !shadow.trajectories.is_empty(),
                "shadow belief emptied by observation"
            );
        }
        if obs.is_null() {
            return Ok(());
        }
        for o in obs.literals() {
            let psi = self.regress_with_cache(Formula::Lit(o), true);
            match psi {
                Formula::True => {}
                Formula::False => {
                    return Err(BeliefError::InconsistentBelief(format!(
                        "observation {} is impossible",
                        self.problem.literal_name(o)
                    )))
                }
                other => {
                    let res = to_cnf(&other, self.num_vars as u32);
                    self.num_vars += res.aux_vars as usize;
                    self.init.clauses.extend(res.clauses);
                }
            }
        }
        self.init.clauses =
            crate::formula::normalize_clauses(std::mem::take(&mut self.init.clauses));
        // Unit propagation may fix fresh initial literals; progress them.
        let fixed =
            propagate_units(&self.init, self.num_vars).map_err(BeliefError::InconsistentBelief)?;
        for (i, v) in fixed.iter().enumerate().take(self.problem.num_props()) {
            if let Some(v) = *v {
                if self.psbs[0].known[i].is_none() {
                    self.learn_at(
                        0,
                        Literal {
                            prop: PropId(i as u32),
                            negated: !v,
                        },
                    )
                    .map_err(BeliefError::InconsistentBelief)?;
                }
            }
        }
        if sat::satisfiable(&self.init, self.num_vars, 0).is_none() {
            return Err(BeliefError::InconsistentBelief(
                "belief update produced an unsatisfiable formula".into(),
            ));
        }
        Ok(())
    }

    /// Up to `n` distinct states satisfying the current initial formula,
    /// found by randomized backtracking search. Deterministic given `seed`;
    /// fewer than `n` states are returned only if fewer models exist.
    pub fn sample_initial_states(&self, n: usize, seed: u64) -> Result<Vec<State>, BeliefError> {
        let block: Vec<PropId> = self
            .init
            .props()
            .into_iter()
            .filter(|p| p.index() < self.problem.num_props())
            .collect();
        let (models, _) = sat::enumerate_models(&self.init, self.num_vars, &block, n, seed);
        if models.is_empty() {
            return Err(BeliefError::InconsistentBelief(
                "no models while sampling".into(),
            ));
        }
        Ok(models.iter().map(|m| self.project(m)).collect())
    }

    /// All models of the current initial formula (up to `cap`), sorted.
    /// The boolean is true when the enumeration is complete. Exhaustive
    /// backtracking, so large model counts stay cheap to bail out of.
    pub fn enumerate_initial_models(&self, cap: usize, seed: u64) -> (Vec<State>, bool) {
        let vars: Vec<PropId> = self
            .init
            .props()
            .into_iter()
            .filter(|p| p.index() < self.problem.num_props())
            .collect();
        let (models, complete) =
            sat::enumerate_models_exhaustive(&self.init, self.num_vars, &vars, cap, seed);
        let mut states: Vec<State> = models.iter().map(|m| self.project(m)).collect();
        states.sort();
        states.dedup();
        (states, complete)
    }

    /// Does this state satisfy the current initial formula? Closed-world:
    /// auxiliary encoding variables are existentially checked.
    pub fn init_admits(&self, state: &State) -> bool {
        let mut cnf = self.init.clone();
        for i in 0..self.problem.num_props() {
            cnf.clauses.push(vec![Literal {
                prop: PropId(i as u32),
                negated: !state.get(i),
            }]);
        }
        sat::satisfiable(&cnf, self.num_vars, 0).is_some()
    }

    /// Apply the executed history to an initial state.
    pub fn progress_state(&self, init: &State) -> Result<State, model::ModelError> {
        let mut s = init.clone();
        for step in &self.history {
            s = model::apply(&self.problem.actions[step.action], &s)?;
        }
        Ok(s)
    }
}

/// Satisfiability of a bare semi-CNF formula (exactly-one groups handled
/// natively by the engine).
pub fn satisfiable(cnf: &SemiCnf, num_vars: usize) -> Option<sat::PartialModel> {
    sat::satisfiable(cnf, num_vars, 0)
}
