//! Shared test support: random problem generation and explicit-belief
//! reference semantics used as oracles.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sdr::formula::{literals_consistent, Formula, Literal, PropId};
use sdr::model::{self, Action, CondEffect, Observation, PposProblem, State};

pub struct GenOptions {
    pub max_props: usize,
    pub max_belief: usize,
    pub max_effect_actions: usize,
    pub max_sense_actions: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_props: 8,
            max_belief: 16,
            max_effect_actions: 5,
            max_sense_actions: 3,
        }
    }
}

fn random_literal(rng: &mut ChaCha8Rng, nprops: usize) -> Literal {
    Literal {
        prop: PropId(rng.random_range(0..nprops) as u32),
        negated: rng.random(),
    }
}

fn random_cond(rng: &mut ChaCha8Rng, nprops: usize, max_len: usize) -> Vec<Literal> {
    let len = rng.random_range(0..=max_len);
    let mut lits: Vec<Literal> = (0..len).map(|_| random_literal(rng, nprops)).collect();
    lits.sort();
    lits.dedup();
    if literals_consistent(&lits) {
        lits
    } else {
        Vec::new()
    }
}

/// A random normalized problem: the initial formula partitions propositions
/// into oneof groups and units, actions either change the world or sense,
/// and every action passes the pairwise effect-consistency test.
pub fn random_ppos(rng: &mut ChaCha8Rng, opts: &GenOptions) -> PposProblem {
    let nprops = rng.random_range(3..=opts.max_props);
    let prop_names: Vec<String> = (0..nprops).map(|i| format!("p{i}")).collect();

    // Initial formula: oneof groups while the budget lasts, units for the rest.
    let mut init_parts: Vec<Formula> = Vec::new();
    let mut pool: Vec<u32> = (0..nprops as u32).collect();
    let mut belief_budget = opts.max_belief;
    while pool.len() >= 2 && belief_budget >= 2 && rng.random::<f64>() < 0.7 {
        let size = rng.random_range(2..=pool.len().min(3).min(belief_budget));
        let mut group = Vec::new();
        for _ in 0..size {
            let idx = rng.random_range(0..pool.len());
            group.push(Literal::pos(PropId(pool.swap_remove(idx))));
        }
        belief_budget /= group.len();
        init_parts.push(Formula::OneOf(group));
    }
    for p in pool {
        init_parts.push(Formula::Lit(Literal {
            prop: PropId(p),
            negated: rng.random(),
        }));
    }
    let init = Formula::conj(init_parts);

    let mut actions = Vec::new();
    for i in 0..rng.random_range(2..=opts.max_effect_actions) {
        let pre = random_cond(rng, nprops, 1);
        let mut effects: Vec<CondEffect> = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let candidate = CondEffect {
                condition: random_cond(rng, nprops, 2),
                effect: random_literal(rng, nprops),
            };
            // Keep the action consistent: conflicting effects must have
            // jointly unsatisfiable conditions.
            let clashes = effects.iter().any(|e| {
                e.effect.prop == candidate.effect.prop
                    && e.effect.negated != candidate.effect.negated
                    && {
                        let mut joint = e.condition.clone();
                        joint.extend(candidate.condition.iter().copied());
                        joint.extend(pre.iter().copied());
                        literals_consistent(&joint)
                    }
            });
            let contradicts_pre = {
                let mut joint = candidate.condition.clone();
                joint.extend(pre.iter().copied());
                !literals_consistent(&joint)
            };
            if !clashes && !contradicts_pre && !effects.contains(&candidate) {
                effects.push(candidate);
            }
        }
        if effects.is_empty() {
            continue;
        }
        actions.push(Action {
            name: format!("act{i}"),
            pre,
            effects,
            obs: vec![],
        });
    }
    for i in 0..rng.random_range(1..=opts.max_sense_actions) {
        let mut obs: Vec<PropId> = (0..rng.random_range(1..=2usize))
            .map(|_| PropId(rng.random_range(0..nprops) as u32))
            .collect();
        obs.sort();
        obs.dedup();
        actions.push(Action {
            name: format!("sense{i}"),
            pre: random_cond(rng, nprops, 1),
            effects: vec![],
            obs,
        });
    }

    let goal = vec![random_literal(rng, nprops)];
    PposProblem {
        prop_names,
        actions,
        init,
        goal,
    }
}

/// Actions applicable in every state of the belief, by index.
pub fn belief_applicable(problem: &PposProblem, belief: &[State]) -> Vec<usize> {
    problem
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| belief.iter().all(|s| a.pre.iter().all(|l| l.holds_in(s))))
        .map(|(i, _)| i)
        .collect()
}

/// The belief-update definition applied literally: progress every state
/// whose (pre-effect) observation matches that of the true state.
pub fn oracle_progress(
    problem: &PposProblem,
    belief: &[State],
    action_idx: usize,
    true_state: &State,
) -> (Vec<State>, Observation) {
    let action = &problem.actions[action_idx];
    let obs = model::observe(action, true_state);
    let next = model::progress_belief(belief, action, &obs).expect("oracle progression");
    (next, obs)
}
