//! Compilation of a grounded problem plus a sampled state set into a
//! deterministic classical planning problem.
//!
//! For a sample S' with distinguished state s', the classical state space
//! tracks: the world as it evolves if s' was the true initial state (base
//! propositions), what the agent knows outright (`K-p` / `KN-p`), the value
//! of each proposition under every sampled state (`p--s<i>`), and which
//! sampled states have been refuted by observations (`KN-s<i>`).

use crate::bits::BitVec;
use crate::formula::{Formula, Literal, PropId};
use crate::model::{PposProblem, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KPropKind {
    /// Original proposition, tracking the s'-determinized world.
    Base,
    /// The agent knows the base proposition is true.
    Know,
    /// The agent knows the base proposition is false.
    KnowNot,
    /// Value of the base proposition given that sample state i was true.
    CondOnState(usize),
    /// Sample state i has been refuted.
    StateRefuted(usize),
}

#[derive(Clone, Debug)]
pub struct KProp {
    pub kind: KPropKind,
    pub base: Option<PropId>,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalEffect {
    /// Conjunction of literals.
    pub cond: Vec<Literal>,
    /// Additional CNF conjuncts (used only by merge-as-effect actions).
    pub cond_clauses: Vec<Vec<Literal>>,
    pub effect: Literal,
}

#[derive(Clone, Debug)]
pub struct ClassicalAction {
    pub name: String,
    pub pre: Vec<Literal>,
    /// Disjunctive precondition clauses (merge actions).
    pub pre_clauses: Vec<Vec<Literal>>,
    pub effects: Vec<ClassicalEffect>,
    /// Index of the originating action in the source problem; `None` for
    /// merge and refutation bookkeeping actions.
    pub origin: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ClassicalProblem {
    pub props: Vec<KProp>,
    pub actions: Vec<ClassicalAction>,
    pub init: BitVec,
    pub goal: Vec<Literal>,
    pub num_base: usize,
    pub num_states: usize,
    pub distinguished: usize,
}

impl ClassicalProblem {
    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn prop_name(&self, i: usize) -> &str {
        &self.props[i].name
    }

    pub fn find_prop(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p.name == name)
    }

    pub fn find_action(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefutationStyle {
    /// Refutation compiled as standalone actions gated on knowledge: the
    /// agent must have sensed the proposition before ruling a state out.
    StandaloneActions,
    /// Refutation as conditional effects of the sensing actions themselves.
    InlineEffects,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeStyle {
    /// Merge actions with disjunctive preconditions (internal planner).
    DisjunctivePrecondition,
    /// Precondition-free merges whose condition moves into the conditional
    /// effect; inserting them can never make a plan undefined.
    ConditionalEffect,
}

#[derive(Clone, Copy, Debug)]
pub struct TranslationOptions {
    pub refutation: RefutationStyle,
    pub merge_style: MergeStyle,
}

impl Default for TranslationOptions {
    fn default() -> Self {
        TranslationOptions {
            refutation: RefutationStyle::StandaloneActions,
            merge_style: MergeStyle::DisjunctivePrecondition,
        }
    }
}

/// Propositions whose value is fixed by the unit literals of the initial
/// formula and never written under an uncertain condition. These keep only
/// their base proposition in the translation and need no merges.
pub fn detect_always_known(problem: &PposProblem) -> Vec<bool> {
    let n = problem.num_props();
    let mut known = vec![true; n];
    // Mentioned in a non-unit position of the initial formula => uncertain.
    fn scan(f: &Formula, known: &mut [bool], top: bool) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => {
                if !top {
                    known[l.prop.index()] = false;
                }
            }
            Formula::And(kids) => {
                for k in kids {
                    scan(k, known, top);
                }
            }
            Formula::Or(kids) => {
                for k in kids {
                    scan(k, known, false);
                }
            }
            Formula::OneOf(lits) => {
                for l in lits {
                    known[l.prop.index()] = false;
                }
            }
        }
    }
    scan(&problem.init, &mut known, true);
    // Greatest fixpoint: drop anything written under an uncertain condition.
    loop {
        let mut changed = false;
        for a in &problem.actions {
            for e in &a.effects {
                if known[e.effect.prop.index()]
                    && e.condition.iter().any(|c| !known[c.prop.index()])
                {
                    known[e.effect.prop.index()] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return known;
        }
    }
}

struct Layout {
    always: Vec<bool>,
    /// Dense index among uncertain props, per base prop.
    uncertain_idx: Vec<Option<usize>>,
    uncertain: Vec<PropId>,
    num_base: usize,
    num_states: usize,
}

impl Layout {
    fn new(problem: &PposProblem, num_states: usize) -> Layout {
        let always = detect_always_known(problem);
        let mut uncertain = Vec::new();
        let mut uncertain_idx = vec![None; problem.num_props()];
        for i in 0..problem.num_props() {
            if !always[i] {
                uncertain_idx[i] = Some(uncertain.len());
                uncertain.push(PropId(i as u32));
            }
        }
        Layout {
            always,
            uncertain_idx,
            uncertain,
            num_base: problem.num_props(),
            num_states,
        }
    }

    fn know(&self, p: PropId) -> usize {
        self.num_base + 2 * self.uncertain_idx[p.index()].expect("always-known prop has no K")
    }

    fn know_not(&self, p: PropId) -> usize {
        self.know(p) + 1
    }

    fn cond(&self, p: PropId, state: usize) -> usize {
        self.num_base
            + 2 * self.uncertain.len()
            + state * self.uncertain.len()
            + self.uncertain_idx[p.index()].expect("always-known prop has no p/s")
    }

    fn refuted(&self, state: usize) -> usize {
        self.num_base + (2 + self.num_states) * self.uncertain.len() + state
    }

    fn total(&self) -> usize {
        self.num_base + (2 + self.num_states) * self.uncertain.len() + self.num_states
    }

    fn is_uncertain(&self, p: PropId) -> bool {
        !self.always[p.index()]
    }

    /// The literal stating that l is known to hold.
    fn know_lit(&self, l: Literal) -> Literal {
        if !self.is_uncertain(l.prop) {
            return Literal {
                prop: l.prop,
                negated: l.negated,
            };
        }
        let idx = if l.negated {
            self.know_not(l.prop)
        } else {
            self.know(l.prop)
        };
        Literal::pos(PropId(idx as u32))
    }

    /// The literal stating that l is not known to be false.
    fn not_know_not_lit(&self, l: Literal) -> Literal {
        if !self.is_uncertain(l.prop) {
            return Literal {
                prop: l.prop,
                negated: l.negated,
            };
        }
        let idx = if l.negated {
            self.know(l.prop)
        } else {
            self.know_not(l.prop)
        };
        Literal::neg(PropId(idx as u32))
    }

    /// The value of l conditional on sample state `state`.
    fn cond_lit(&self, l: Literal, state: usize) -> Literal {
        if !self.is_uncertain(l.prop) {
            return Literal {
                prop: l.prop,
                negated: l.negated,
            };
        }
        Literal {
            prop: PropId(self.cond(l.prop, state) as u32),
            negated: l.negated,
        }
    }

    fn refuted_lit(&self, state: usize) -> Literal {
        Literal::pos(PropId(self.refuted(state) as u32))
    }
}

/// Compile `problem` for the sampled states, assuming observations follow
/// `states[distinguished]`. Every state is expected to satisfy the current
/// initial belief; that is the caller's responsibility.
pub fn translate(
    problem: &PposProblem,
    states: &[State],
    distinguished: usize,
    opts: TranslationOptions,
) -> ClassicalProblem {
    assert!(
        distinguished < states.len(),
        "distinguished state must be in the sample"
    );
    let layout = Layout::new(problem, states.len());

    let mut props: Vec<KProp> = Vec::with_capacity(layout.total());
    for (i, name) in problem.prop_names.iter().enumerate() {
        props.push(KProp {
            kind: KPropKind::Base,
            base: Some(PropId(i as u32)),
            name: name.clone(),
        });
    }
    for &p in &layout.uncertain {
        props.push(KProp {
            kind: KPropKind::Know,
            base: Some(p),
            name: format!("K-{}", problem.prop_name(p)),
        });
        props.push(KProp {
            kind: KPropKind::KnowNot,
            base: Some(p),
            name: format!("KN-{}", problem.prop_name(p)),
        });
    }
    for si in 0..states.len() {
        for &p in &layout.uncertain {
            props.push(KProp {
                kind: KPropKind::CondOnState(si),
                base: Some(p),
                name: format!("{}--s{si}", problem.prop_name(p)),
            });
        }
    }
    for si in 0..states.len() {
        props.push(KProp {
            kind: KPropKind::StateRefuted(si),
            base: None,
            name: format!("KN-s{si}"),
        });
    }
    debug_assert_eq!(props.len(), layout.total());

    let mut init = BitVec::zeros(layout.total());
    for i in 0..problem.num_props() {
        if states[distinguished].get(i) {
            init.set(i, true);
        }
    }
    for (si, s) in states.iter().enumerate() {
        for &p in &layout.uncertain {
            if s.get(p.index()) {
                init.set(layout.cond(p, si), true);
            }
        }
    }

    let mut actions: Vec<ClassicalAction> = Vec::new();
    let observable: Vec<PropId> = {
        let mut v: Vec<PropId> = problem
            .actions
            .iter()
            .flat_map(|a| a.obs.iter().copied())
            .collect();
        v.sort();
        v.dedup();
        v.retain(|&p| layout.is_uncertain(p));
        v
    };

    for (ai, a) in problem.actions.iter().enumerate() {
        let mut pre: Vec<Literal> = a.pre.clone();
        for &l in &a.pre {
            if layout.is_uncertain(l.prop) {
                pre.push(layout.know_lit(l));
            }
        }
        let mut effects: Vec<ClassicalEffect> = Vec::new();
        for ce in &a.effects {
            let cond = ce.condition.clone();
            // 1. The original effect, tracking the determinized world.
            effects.push(ClassicalEffect {
                cond: cond.clone(),
                cond_clauses: vec![],
                effect: ce.effect,
            });
            if layout.is_uncertain(ce.effect.prop) {
                // 2. The effect conditional on each sampled state.
                for si in 0..states.len() {
                    effects.push(ClassicalEffect {
                        cond: cond.iter().map(|&l| layout.cond_lit(l, si)).collect(),
                        cond_clauses: vec![],
                        effect: layout.cond_lit(ce.effect, si),
                    });
                }
                // 3. Knowledge of the condition carries to the effect.
                effects.push(ClassicalEffect {
                    cond: cond.iter().map(|&l| layout.know_lit(l)).collect(),
                    cond_clauses: vec![],
                    effect: layout.know_lit(ce.effect),
                });
                // 4. If the condition is not known false, the effect is not
                //    known false afterwards (clears the opposing K prop).
                effects.push(ClassicalEffect {
                    cond: cond.iter().map(|&l| layout.not_know_not_lit(l)).collect(),
                    cond_clauses: vec![],
                    effect: layout.not_know_not_lit(ce.effect),
                });
            }
        }
        // 5. Sensing grants knowledge of the observed value.
        for &p in &a.obs {
            if !layout.is_uncertain(p) {
                continue;
            }
            let pos = Literal::pos(p);
            let neg = Literal::neg(p);
            effects.push(ClassicalEffect {
                cond: vec![pos],
                cond_clauses: vec![],
                effect: layout.know_lit(pos),
            });
            effects.push(ClassicalEffect {
                cond: vec![neg],
                cond_clauses: vec![],
                effect: layout.know_lit(neg),
            });
            if opts.refutation == RefutationStyle::InlineEffects {
                // 6. Rule out sampled states that disagree with the value.
                for si in 0..states.len() {
                    effects.push(ClassicalEffect {
                        cond: vec![pos, layout.cond_lit(neg, si)],
                        cond_clauses: vec![],
                        effect: layout.refuted_lit(si),
                    });
                    effects.push(ClassicalEffect {
                        cond: vec![neg, layout.cond_lit(pos, si)],
                        cond_clauses: vec![],
                        effect: layout.refuted_lit(si),
                    });
                }
            }
        }
        actions.push(ClassicalAction {
            name: a.name.clone(),
            pre,
            pre_clauses: vec![],
            effects,
            origin: Some(ai),
        });
    }

    if opts.refutation == RefutationStyle::StandaloneActions {
        for &p in &observable {
            for si in 0..states.len() {
                let pos = Literal::pos(p);
                let neg = Literal::neg(p);
                actions.push(ClassicalAction {
                    name: format!("refute-{}-true-s{si}", problem.prop_name(p)),
                    pre: vec![layout.know_lit(pos), layout.cond_lit(neg, si)],
                    pre_clauses: vec![],
                    effects: vec![ClassicalEffect {
                        cond: vec![],
                        cond_clauses: vec![],
                        effect: layout.refuted_lit(si),
                    }],
                    origin: None,
                });
                actions.push(ClassicalAction {
                    name: format!("refute-{}-false-s{si}", problem.prop_name(p)),
                    pre: vec![layout.know_lit(neg), layout.cond_lit(pos, si)],
                    pre_clauses: vec![],
                    effects: vec![ClassicalEffect {
                        cond: vec![],
                        cond_clauses: vec![],
                        effect: layout.refuted_lit(si),
                    }],
                    origin: None,
                });
            }
        }
    }

    for &p in &layout.uncertain {
        for polarity in [false, true] {
            let l = Literal {
                prop: p,
                negated: polarity,
            };
            let clauses: Vec<Vec<Literal>> = (0..states.len())
                .map(|si| vec![layout.cond_lit(l, si), layout.refuted_lit(si)])
                .collect();
            let name = if polarity {
                format!("merge-not-{}", problem.prop_name(p))
            } else {
                format!("merge-{}", problem.prop_name(p))
            };
            let action = match opts.merge_style {
                MergeStyle::DisjunctivePrecondition => ClassicalAction {
                    name,
                    pre: vec![],
                    pre_clauses: clauses,
                    effects: vec![ClassicalEffect {
                        cond: vec![],
                        cond_clauses: vec![],
                        effect: layout.know_lit(l),
                    }],
                    origin: None,
                },
                MergeStyle::ConditionalEffect => ClassicalAction {
                    name,
                    pre: vec![],
                    pre_clauses: vec![],
                    effects: vec![ClassicalEffect {
                        cond: vec![],
                        cond_clauses: clauses,
                        effect: layout.know_lit(l),
                    }],
                    origin: None,
                },
            };
            actions.push(action);
        }
    }

    let goal: Vec<Literal> = problem.goal.iter().map(|&g| layout.know_lit(g)).collect();

    ClassicalProblem {
        props,
        actions,
        init,
        goal,
        num_base: layout.num_base,
        num_states: states.len(),
        distinguished,
    }
}

/// Extend the goal so the plan must refute every non-distinguished sampled
/// state, biasing the planner toward differentiating observations.
pub fn augment_state_refutation(mut cp: ClassicalProblem) -> ClassicalProblem {
    let base = cp.num_props() - cp.num_states;
    for si in 0..cp.num_states {
        if si != cp.distinguished {
            cp.goal.push(Literal::pos(PropId((base + si) as u32)));
        }
    }
    cp
}

// ---------------------------------------------------------------------------
// Emission

fn emit_lit(out: &mut String, cp: &ClassicalProblem, l: Literal) {
    if l.negated {
        out.push_str("(not (");
        out.push_str(cp.prop_name(l.prop.index()));
        out.push_str("))");
    } else {
        out.push('(');
        out.push_str(cp.prop_name(l.prop.index()));
        out.push(')');
    }
}

fn emit_cond(out: &mut String, cp: &ClassicalProblem, lits: &[Literal]) {
    out.push_str("(and");
    for &l in lits {
        out.push(' ');
        emit_lit(out, cp, l);
    }
    out.push(')');
}

/// Expand a CNF over literals into its DNF choice set (one conjunction per
/// pick of a literal from each clause).
fn cnf_choices(clauses: &[Vec<Literal>]) -> Vec<Vec<Literal>> {
    let mut out: Vec<Vec<Literal>> = vec![Vec::new()];
    for clause in clauses {
        let mut next = Vec::with_capacity(out.len() * clause.len());
        for combo in &out {
            for &l in clause {
                let mut c = combo.clone();
                c.push(l);
                next.push(c);
            }
        }
        out = next;
    }
    out
}

pub const CLASSICAL_DOMAIN_NAME: &str = "classical";

pub fn emit_classical_domain(cp: &ClassicalProblem) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "(define (domain {CLASSICAL_DOMAIN_NAME})\n  (:predicates"
    ));
    for p in &cp.props {
        out.push_str("\n    (");
        out.push_str(&p.name);
        out.push(')');
    }
    out.push_str(")\n");
    for a in &cp.actions {
        out.push_str(&format!(
            "  (:action {}\n    :parameters ()\n    :precondition ",
            a.name
        ));
        emit_cond(&mut out, cp, &a.pre);
        out.push_str("\n    :effect (and");
        for e in &a.effects {
            // Disjunctive parts are compiled away: preconditions clauses and
            // effect-condition clauses become one conditional case per pick.
            let mut cnf: Vec<Vec<Literal>> = a.pre_clauses.clone();
            cnf.extend(e.cond_clauses.iter().cloned());
            for choice in cnf_choices(&cnf) {
                out.push(' ');
                let mut cond = e.cond.clone();
                cond.extend(choice);
                cond.sort();
                cond.dedup();
                if cond.is_empty() {
                    emit_lit(&mut out, cp, e.effect);
                } else {
                    out.push_str("(when ");
                    emit_cond(&mut out, cp, &cond);
                    out.push(' ');
                    emit_lit(&mut out, cp, e.effect);
                    out.push(')');
                }
            }
        }
        out.push_str("))\n");
    }
    out.push_str(")\n");
    out
}

pub fn emit_classical_problem(cp: &ClassicalProblem) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "(define (problem {CLASSICAL_DOMAIN_NAME}-1)\n  (:domain {CLASSICAL_DOMAIN_NAME})\n  (:objects)\n  (:init (and"
    ));
    for i in cp.init.iter_ones() {
        out.push_str("\n    (");
        out.push_str(cp.prop_name(i));
        out.push(')');
    }
    out.push_str("))\n  (:goal (and");
    for &g in &cp.goal {
        out.push(' ');
        emit_lit(&mut out, cp, g);
    }
    out.push_str("))\n)\n");
    out
}

/// Grounded classical text: the domain form followed by the problem form.
pub fn emit_classical(cp: &ClassicalProblem) -> String {
    let mut out = emit_classical_domain(cp);
    out.push('\n');
    out.push_str(&emit_classical_problem(cp));
    out
}

/// Rebuild a classical problem from a grounded, sensing-free problem whose
/// initial formula is a plain conjunction of literals. Used to check that
/// emitted text round-trips.
pub fn classical_from_ppos(problem: &PposProblem) -> Result<ClassicalProblem, String> {
    let mut init = BitVec::zeros(problem.num_props());
    match &problem.init {
        Formula::And(kids) => {
            for k in kids {
                match k {
                    Formula::Lit(l) if !l.negated => init.set(l.prop.index(), true),
                    Formula::Lit(_) => {}
                    _ => return Err("init is not a conjunction of literals".into()),
                }
            }
        }
        Formula::Lit(l) if !l.negated => init.set(l.prop.index(), true),
        Formula::Lit(_) | Formula::True => {}
        _ => return Err("init is not a conjunction of literals".into()),
    }
    let mut actions = Vec::new();
    for a in &problem.actions {
        if !a.obs.is_empty() {
            return Err(format!("action `{}` has observations", a.name));
        }
        actions.push(ClassicalAction {
            name: a.name.clone(),
            pre: a.pre.clone(),
            pre_clauses: vec![],
            effects: a
                .effects
                .iter()
                .map(|e| ClassicalEffect {
                    cond: e.condition.clone(),
                    cond_clauses: vec![],
                    effect: e.effect,
                })
                .collect(),
            origin: None,
        });
    }
    Ok(ClassicalProblem {
        props: problem
            .prop_names
            .iter()
            .map(|n| KProp {
                kind: KPropKind::Base,
                base: None,
                name: n.clone(),
            })
            .collect(),
        actions,
        init,
        goal: problem.goal.clone(),
        num_base: problem.num_props(),
        num_states: 0,
        distinguished: 0,
    })
}
