//! Grounded problem representation and its executable world and belief
//! semantics, including the brute-force belief oracle used by tests.

use thiserror::Error;

use crate::bits::BitVec;
use crate::formula::{Formula, Literal, PropId};

/// A world state: one truth value per proposition, closed-world.
pub type State = BitVec;

/// The values sensed for the observed propositions of an action, total over
/// `obs(a)` and sorted by proposition. Empty means the null observation.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Observation(pub Vec<(PropId, bool)>);

impl Observation {
    pub fn null() -> Self {
        Observation(Vec::new())
    }

    pub fn is_null(&self) -> bool {
        self.0.is_empty()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.0.iter().map(|&(p, v)| Literal {
            prop: p,
            negated: !v,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondEffect {
    pub condition: Vec<Literal>,
    pub effect: Literal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub name: String,
    pub pre: Vec<Literal>,
    pub effects: Vec<CondEffect>,
    pub obs: Vec<PropId>,
}

impl Action {
    pub fn is_sensing(&self) -> bool {
        !self.obs.is_empty()
    }

    pub fn is_pure_sensing(&self) -> bool {
        self.effects.is_empty() && !self.obs.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct PposProblem {
    pub prop_names: Vec<String>,
    pub actions: Vec<Action>,
    pub init: Formula,
    pub goal: Vec<Literal>,
}

impl PposProblem {
    pub fn num_props(&self) -> usize {
        self.prop_names.len()
    }

    pub fn prop_name(&self, p: PropId) -> &str {
        &self.prop_names[p.index()]
    }

    pub fn find_prop(&self, name: &str) -> Option<PropId> {
        self.prop_names
            .iter()
            .position(|n| n == name)
            .map(|i| PropId(i as u32))
    }

    pub fn find_action(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn literal_name(&self, l: Literal) -> String {
        if l.negated {
            format!("!{}", self.prop_name(l.prop))
        } else {
            self.prop_name(l.prop).to_string()
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("precondition of `{action}` violated: {literal} does not hold")]
    PreconditionViolated { action: String, literal: String },
    #[error("action `{action}` is not applicable in every state of the belief")]
    UnsafeAction { action: String },
    #[error("observation is impossible under the given belief")]
    ImpossibleObservation,
}

/// Deterministic transition: each proposition keeps its value unless a
/// triggered conditional effect flips it.
pub fn apply(action: &Action, state: &State) -> Result<State, ModelError> {
    if let Some(l) = action.pre.iter().find(|l| !l.holds_in(state)) {
        return Err(ModelError::PreconditionViolated {
            action: action.name.clone(),
            literal: format!("{l:?}"),
        });
    }
    let mut next = state.clone();
    for ce in &action.effects {
        if ce.condition.iter().all(|c| c.holds_in(state)) {
            next.set(ce.effect.prop.index(), !ce.effect.negated);
        }
    }
    Ok(next)
}

/// The values of `obs(action)` in `state`, evaluated before effects apply.
pub fn observe(action: &Action, state: &State) -> Observation {
    let mut vals: Vec<(PropId, bool)> = action
        .obs
        .iter()
        .map(|&p| (p, state.get(p.index())))
        .collect();
    vals.sort_by_key(|&(p, _)| p);
    Observation(vals)
}

/// Explicit belief progression: progress every state whose observation
/// matches `obs`, per the belief-update equation.
pub fn progress_belief(
    belief: &[State],
    action: &Action,
    obs: &Observation,
) -> Result<Vec<State>, ModelError> {
    if belief
        .iter()
        .any(|s| action.pre.iter().any(|l| !l.holds_in(s)))
    {
        return Err(ModelError::UnsafeAction {
            action: action.name.clone(),
        });
    }
    let mut out = Vec::new();
    for s in belief {
        if observe(action, s) == *obs {
            let next = apply(action, s).expect("preconditions checked above");
            if !out.contains(&next) {
                out.push(next);
            }
        }
    }
    if out.is_empty() {
        return Err(ModelError::ImpossibleObservation);
    }
    Ok(out)
}

/// Enumerate the states satisfying `formula` by exhaustive assignment of
/// the propositions that appear in it; all others stay false (closed
/// world). Branches are pruned with three-valued evaluation, which keeps
/// this independent of the SAT engine: it is the oracle.
pub fn enumerate_states(formula: &Formula, num_props: usize, cap: usize) -> Vec<State> {
    let mut vars = Vec::new();
    formula.collect_props(&mut vars);
    vars.sort();
    vars.dedup();
    let mut out = Vec::new();
    let mut assigned: Vec<Option<bool>> = vec![Some(false); num_props];
    for &v in &vars {
        assigned[v.index()] = None;
    }
    fn rec(
        formula: &Formula,
        vars: &[PropId],
        depth: usize,
        assigned: &mut Vec<Option<bool>>,
        out: &mut Vec<State>,
        cap: usize,
    ) {
        match formula.eval_partial(&|p| assigned[p.index()]) {
            Some(false) => (),
            Some(true) | None if depth == vars.len() => {
                debug_assert!(formula.eval_partial(&|p| assigned[p.index()]) == Some(true));
                let mut s = BitVec::zeros(assigned.len());
                for (i, v) in assigned.iter().enumerate() {
                    if *v == Some(true) {
                        s.set(i, true);
                    }
                }
                out.push(s);
                assert!(out.len() <= cap, "enumerate_states: more than {cap} models");
            }
            _ => {
                let var = vars[depth].index();
                for value in [false, true] {
                    assigned[var] = Some(value);
                    rec(formula, vars, depth + 1, assigned, out, cap);
                }
                assigned[var] = None;
            }
        }
    }
    rec(formula, &vars, 0, &mut assigned, &mut out, cap);
    out.sort();
    out.dedup();
    out
}

/// The initial belief of a problem, explicitly enumerated.
pub fn initial_belief(problem: &PposProblem, cap: usize) -> Vec<State> {
    enumerate_states(&problem.init, problem.num_props(), cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::literals_consistent;

    fn lit(p: u32) -> Literal {
        Literal::pos(PropId(p))
    }

    fn nlit(p: u32) -> Literal {
        Literal::neg(PropId(p))
    }

    fn state(width: usize, ones: &[u32]) -> State {
        let mut s = BitVec::zeros(width);
        for &i in ones {
            s.set(i as usize, true);
        }
        s
    }

    /// Example-style diseases problem built by hand: props disease_1..n and
    /// test-passed at index n.
    fn diseases(n: u32) -> PposProblem {
        let mut prop_names: Vec<String> = (1..=n).map(|i| format!("disease-{i}")).collect();
        prop_names.push("test-passed".into());
        let tp = PropId(n);
        let mut actions = Vec::new();
        for i in 0..n {
            actions.push(Action {
                name: format!("test-{}", i + 1),
                pre: vec![],
                effects: vec![
                    CondEffect {
                        condition: vec![lit(i)],
                        effect: Literal::pos(tp),
                    },
                    CondEffect {
                        condition: vec![nlit(i)],
                        effect: Literal::neg(tp),
                    },
                ],
                obs: vec![],
            });
        }
        for i in 0..n {
            actions.push(Action {
                name: format!("treat-{}", i + 1),
                pre: vec![lit(i)],
                effects: vec![CondEffect {
                    condition: vec![],
                    effect: nlit(i),
                }],
                obs: vec![],
            });
        }
        actions.push(Action {
            name: "observe-test-result".into(),
            pre: vec![],
            effects: vec![],
            obs: vec![tp],
        });
        let init = Formula::conj(vec![
            Formula::OneOf((0..n).map(lit).collect()),
            Formula::Lit(Literal::neg(tp)),
        ]);
        let goal = (0..n).map(nlit).collect();
        PposProblem {
            prop_names,
            actions,
            init,
            goal,
        }
    }

    #[test]
    fn apply_is_identity_when_no_condition_fires() {
        let p = diseases(3);
        let test_1 = &p.actions[0];
        let s = state(4, &[1]); // disease_2 only
                                // test_1 sets test-passed only under disease_1; here the negative
                                // branch fires, leaving test-passed false.
        let next = apply(test_1, &s).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn treat_clears_the_disease() {
        let p = diseases(3);
        let treat_2 = &p.actions[4];
        let s = state(4, &[1]);
        let next = apply(treat_2, &s).unwrap();
        assert_eq!(next, state(4, &[]));
    }

    #[test]
    fn apply_rejects_violated_precondition() {
        let p = diseases(2);
        let treat_1 = &p.actions[2];
        let s = state(3, &[1]);
        assert!(matches!(
            apply(treat_1, &s),
            Err(ModelError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn observe_is_pre_effect_and_null_when_no_obs() {
        let p = diseases(3);
        let s = state(4, &[1, 3]); // disease_2, test-passed
        assert_eq!(observe(&p.actions[0], &s), Observation::null());
        let obs = observe(&p.actions[6], &s);
        assert_eq!(obs, Observation(vec![(PropId(3), true)]));
    }

    #[test]
    fn progress_singleton_belief() {
        let p = diseases(2);
        let s = state(3, &[0]);
        let a = &p.actions[0];
        let obs = observe(a, &s);
        let next = progress_belief(std::slice::from_ref(&s), a, &obs).unwrap();
        assert_eq!(next, vec![apply(a, &s).unwrap()]);
    }

    #[test]
    fn progress_belief_filters_by_observation() {
        // diseases n=3: after test_2 and observing test-passed, only the
        // disease_2 world remains.
        let p = diseases(3);
        let b0 = initial_belief(&p, 64);
        assert_eq!(b0.len(), 3);
        let test_2 = &p.actions[1];
        let b1 = progress_belief(&b0, test_2, &Observation::null()).unwrap();
        assert_eq!(b1.len(), 3);
        let sense = &p.actions[6];
        let obs = Observation(vec![(PropId(3), true)]);
        let b2 = progress_belief(&b1, sense, &obs).unwrap();
        assert_eq!(b2, vec![state(4, &[1, 3])]);
    }

    #[test]
    fn progress_belief_rejects_unsafe_and_impossible() {
        let p = diseases(2);
        let b0 = initial_belief(&p, 64);
        let treat_1 = &p.actions[2];
        assert!(matches!(
            progress_belief(&b0, treat_1, &Observation::null()),
            Err(ModelError::UnsafeAction { .. })
        ));
        let sense = &p.actions[4];
        let obs = Observation(vec![(PropId(2), true)]);
        assert!(matches!(
            progress_belief(&b0, sense, &obs),
            Err(ModelError::ImpossibleObservation)
        ));
    }

    #[test]
    fn initial_belief_of_diseases_has_n_states() {
        for n in 2..=5 {
            assert_eq!(initial_belief(&diseases(n), 64).len(), n as usize);
        }
    }

    #[test]
    fn consistency_helper() {
        assert!(literals_consistent(&[lit(0), lit(1), nlit(2)]));
        assert!(!literals_consistent(&[lit(0), nlit(0)]));
    }
}
