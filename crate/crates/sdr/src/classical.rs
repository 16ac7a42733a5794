//! Classical problem solving: greedy best-first search with an additive
//! delete-relaxation heuristic over literals, plan validation, and an
//! adapter for driving an external planner executable.

use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bits::BitVec;
use crate::formula::Literal;
use crate::translator::{
    emit_classical_domain, emit_classical_problem, ClassicalAction, ClassicalProblem,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub max_expansions: usize,
    pub wall_clock: Duration,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_expansions: 2_000_000,
            wall_clock: Duration::from_secs(120),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Plan(Plan),
    /// Complete exploration found no plan.
    Unsolvable,
    /// Inconclusive: the search ran out of budget.
    BudgetExhausted,
}

#[derive(Error, Debug)]
pub enum ExternalPlannerError {
    #[error("external planner failed to run: {0}")]
    Spawn(#[from] std::io::Error),
    #[error("external planner exited with {0}")]
    Crashed(String),
    #[error("could not parse external plan: {0}")]
    Unparseable(String),
    #[error("external plan does not validate: {0}")]
    InvalidPlan(String),
}

// ---------------------------------------------------------------------------
// State transition

pub fn satisfies_precondition(a: &ClassicalAction, s: &BitVec) -> bool {
    a.pre.iter().all(|l| l.holds_in(s))
        && a.pre_clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds_in(s)))
}

fn effect_triggers(e: &crate::translator::ClassicalEffect, s: &BitVec) -> bool {
    e.cond.iter().all(|l| l.holds_in(s))
        && e.cond_clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds_in(s)))
}

/// Apply a classical action; all effect conditions are evaluated against the
/// pre-action state. Returns `None` when the precondition fails.
pub fn apply_classical(a: &ClassicalAction, s: &BitVec) -> Option<BitVec> {
    if !satisfies_precondition(a, s) {
        return None;
    }
    let mut next = s.clone();
    for e in &a.effects {
        if effect_triggers(e, s) {
            next.set(e.effect.prop.index(), !e.effect.negated);
        }
    }
    Some(next)
}

pub fn goal_satisfied(cp: &ClassicalProblem, s: &BitVec) -> bool {
    cp.goal.iter().all(|l| l.holds_in(s))
}

/// Sequential execution from the initial state: every precondition must hold
/// and the final state must satisfy the goal.
pub fn validate_plan(cp: &ClassicalProblem, plan: &Plan) -> bool {
    let mut s = cp.init.clone();
    for &ai in &plan.actions {
        match cp.actions.get(ai).and_then(|a| apply_classical(a, &s)) {
            Some(next) => s = next,
            None => return false,
        }
    }
    goal_satisfied(cp, &s)
}

// ---------------------------------------------------------------------------
// Additive delete-relaxation heuristic

pub const INFINITY: u32 = u32::MAX;

/// Relaxed-reachability estimate: cost 0 iff the goal already holds, and
/// infinity iff the goal is unreachable even ignoring delete interactions.
/// Each conditional effect is treated as an independent relaxed action with
/// precondition `pre ∪ cond`; costs are additive over conjunctions and the
/// minimum over clause members. The fixpoint runs as a Dijkstra sweep over
/// literals with preprocessed consumer lists, so one estimate costs roughly
/// the relaxed-problem size.
pub struct Heuristic<'a> {
    cp: &'a ClassicalProblem,
    /// One entry per (action, effect): number of conjuncts and the effect.
    conj_counts: Vec<u32>,
    effect_lits: Vec<u32>,
    /// Literal -> relaxed actions consuming it directly (duplicates kept:
    /// a literal appearing twice contributes its cost twice).
    lit_consumers: Vec<Vec<u32>>,
    /// Literal -> clauses it appears in; clause -> consuming relaxed action.
    lit_clauses: Vec<Vec<u32>>,
    clause_consumers: Vec<u32>,
    // Scratch, reset per call.
    cost: Vec<u32>,
    accum: Vec<u32>,
    remaining: Vec<u32>,
    clause_done: Vec<bool>,
}

impl<'a> Heuristic<'a> {
    pub fn new(cp: &'a ClassicalProblem) -> Self {
        let nlits = 2 * cp.num_props();
        let mut h = Heuristic {
            cp,
            conj_counts: Vec::new(),
            effect_lits: Vec::new(),
            lit_consumers: vec![Vec::new(); nlits],
            lit_clauses: vec![Vec::new(); nlits],
            clause_consumers: Vec::new(),
            cost: vec![INFINITY; nlits],
            accum: Vec::new(),
            remaining: Vec::new(),
            clause_done: Vec::new(),
        };
        for a in &cp.actions {
            for e in &a.effects {
                let ra = h.conj_counts.len() as u32;
                let mut count = 0u32;
                for &l in a.pre.iter().chain(e.cond.iter()) {
                    h.lit_consumers[Self::lit_index(l)].push(ra);
                    count += 1;
                }
                for clause in a.pre_clauses.iter().chain(e.cond_clauses.iter()) {
                    let ci = h.clause_consumers.len() as u32;
                    h.clause_consumers.push(ra);
                    for &l in clause {
                        h.lit_clauses[Self::lit_index(l)].push(ci);
                    }
                    count += 1;
                }
                h.conj_counts.push(count);
                h.effect_lits.push(Self::lit_index(e.effect) as u32);
            }
        }
        h.accum = vec![0; h.conj_counts.len()];
        h.remaining = vec![0; h.conj_counts.len()];
        h.clause_done = vec![false; h.clause_consumers.len()];
        h
    }

    #[inline]
    fn lit_index(l: Literal) -> usize {
        l.prop.index() * 2 + l.negated as usize
    }

    pub fn estimate(&mut self, s: &BitVec) -> u32 {
        self.cost.fill(INFINITY);
        self.remaining.copy_from_slice(&self.conj_counts);
        self.accum.fill(0);
        self.clause_done.fill(false);
        let mut heap: BinaryHeap<std::cmp::Reverse<(u32, u32)>> = BinaryHeap::new();
        let mut triggered: Vec<u32> = Vec::new();
        for (ra, &count) in self.conj_counts.iter().enumerate() {
            if count == 0 {
                let eff = self.effect_lits[ra] as usize;
                if self.cost[eff] > 1 {
                    self.cost[eff] = 1;
                    heap.push(std::cmp::Reverse((1, eff as u32)));
                }
            }
        }
        for i in 0..self.cp.num_props() {
            let li = i * 2 + (!s.get(i)) as usize;
            self.cost[li] = 0;
            heap.push(std::cmp::Reverse((0, li as u32)));
        }
        while let Some(std::cmp::Reverse((c, li))) = heap.pop() {
            if c > self.cost[li as usize] {
                continue;
            }
            triggered.clear();
            for &ra in &self.lit_consumers[li as usize] {
                self.accum[ra as usize] = self.accum[ra as usize].saturating_add(c);
                self.remaining[ra as usize] -= 1;
                if self.remaining[ra as usize] == 0 {
                    triggered.push(ra);
                }
            }
            for k in 0..self.lit_clauses[li as usize].len() {
                let ci = self.lit_clauses[li as usize][k];
                if !self.clause_done[ci as usize] {
                    self.clause_done[ci as usize] = true;
                    let ra = self.clause_consumers[ci as usize];
                    self.accum[ra as usize] = self.accum[ra as usize].saturating_add(c);
                    self.remaining[ra as usize] -= 1;
                    if self.remaining[ra as usize] == 0 {
                        triggered.push(ra);
                    }
                }
            }
            for &ra in &triggered {
                let eff = self.effect_lits[ra as usize] as usize;
                let new = self.accum[ra as usize].saturating_add(1);
                if new < self.cost[eff] {
                    self.cost[eff] = new;
                    heap.push(std::cmp::Reverse((new, eff as u32)));
                }
            }
        }
        let mut sum = 0u32;
        for &g in &self.cp.goal {
            let c = self.cost[Self::lit_index(g)];
            if c == INFINITY {
                return INFINITY;
            }
            sum = sum.saturating_add(c);
        }
        sum
    }
}

// ---------------------------------------------------------------------------
// Greedy best-first search

struct Node {
    state: BitVec,
    parent: usize,
    action: usize,
    /// Bookkeeping actions fired by saturation after `action`.
    bookkeeping: Vec<usize>,
}

struct QueueEntry {
    h: u32,
    seq: u64,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.seq == other.seq
    }
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap on h, FIFO on ties.
        other.h.cmp(&self.h).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Apply every applicable knowledge-bookkeeping action (merges and
/// standalone refutations: the ones with no originating action) to fixpoint,
/// in index order, recording the ones that fired. Their effects only ever
/// add `K` facts, so saturating can never invalidate a plan; it mirrors the
/// insert-all-merges execution model the translation is proven against.
pub fn saturate_bookkeeping(
    cp: &ClassicalProblem,
    state: &BitVec,
    fired: &mut Vec<usize>,
) -> BitVec {
    let mut s = state.clone();
    loop {
        let mut changed = false;
        for (ai, a) in cp.actions.iter().enumerate() {
            if a.origin.is_some() {
                continue;
            }
            if let Some(next) = apply_classical(a, &s) {
                if next != s {
                    fired.push(ai);
                    s = next;
                    changed = true;
                }
            }
        }
        if !changed {
            return s;
        }
    }
}

/// Greedy best-first search on the relaxation estimate, FIFO tie-breaking,
/// hashed duplicate detection. Knowledge bookkeeping is saturated inside
/// successor generation, so the search branches over world actions only;
/// the fired bookkeeping steps are spliced back into the returned plan.
/// States whose goal is relaxed-unreachable are pruned; `Unsolvable` is
/// returned only once the remaining reachable space is exhausted.
pub fn solve(cp: &ClassicalProblem, budget: &SearchBudget) -> SolveOutcome {
    let start = Instant::now();
    let mut h = Heuristic::new(cp);
    let mut prefix = Vec::new();
    let root = saturate_bookkeeping(cp, &cp.init, &mut prefix);
    let h0 = h.estimate(&root);
    let mut nodes: Vec<Node> = vec![Node {
        state: root,
        parent: 0,
        action: usize::MAX,
        bookkeeping: prefix,
    }];
    let mut open: BinaryHeap<QueueEntry> = BinaryHeap::new();
    let mut closed: HashSet<BitVec> = HashSet::new();
    let mut seq = 0u64;
    if h0 != INFINITY {
        open.push(QueueEntry {
            h: h0,
            seq,
            node: 0,
        });
    }
    let mut expansions = 0usize;

    while let Some(entry) = open.pop() {
        let node = entry.node;
        if !closed.insert(nodes[node].state.clone()) {
            continue;
        }
        if goal_satisfied(cp, &nodes[node].state) {
            return SolveOutcome::Plan(prune_bookkeeping(cp, extract_plan(&nodes, node)));
        }
        expansions += 1;
        if expansions > budget.max_expansions || start.elapsed() > budget.wall_clock {
            return SolveOutcome::BudgetExhausted;
        }
        for (ai, a) in cp.actions.iter().enumerate() {
            if a.origin.is_none() {
                continue;
            }
            if let Some(next) = apply_classical(a, &nodes[node].state) {
                let mut fired = Vec::new();
                let next = saturate_bookkeeping(cp, &next, &mut fired);
                if next == nodes[node].state || closed.contains(&next) {
                    continue;
                }
                let est = h.estimate(&next);
                if est == INFINITY {
                    continue; // goal relaxed-unreachable: prune
                }
                nodes.push(Node {
                    state: next,
                    parent: node,
                    action: ai,
                    bookkeeping: fired,
                });
                seq += 1;
                open.push(QueueEntry {
                    h: est,
                    seq,
                    node: nodes.len() - 1,
                });
            }
        }
    }
    SolveOutcome::Unsolvable
}

/// Saturation fires every applicable bookkeeping action; most are not
/// needed by the plan. Drop the ones whose removal keeps the plan valid.
fn prune_bookkeeping(cp: &ClassicalProblem, plan: Plan) -> Plan {
    let mut actions = plan.actions;
    let mut i = actions.len();
    while i > 0 {
        i -= 1;
        if cp.actions[actions[i]].origin.is_none() {
            let mut trimmed = actions.clone();
            trimmed.remove(i);
            if validate_plan(
                cp,
                &Plan {
                    actions: trimmed.clone(),
                },
            ) {
                actions = trimmed;
            }
        }
    }
    Plan { actions }
}

fn extract_plan(nodes: &[Node], mut node: usize) -> Plan {
    let mut actions = Vec::new();
    loop {
        for &b in nodes[node].bookkeeping.iter().rev() {
            actions.push(b);
        }
        if node == 0 {
            break;
        }
        actions.push(nodes[node].action);
        node = nodes[node].parent;
    }
    actions.reverse();
    Plan { actions }
}

// ---------------------------------------------------------------------------
// External planner adapter

/// Run an external planner: `argv = <domain file> <problem file>`, plan read
/// from `<problem file>.plan`, one action name per line (case-insensitive,
/// optional step numbers and parentheses). A line containing the word
/// `unsolvable` reports unsolvability.
pub fn solve_external(
    cp: &ClassicalProblem,
    exec_path: &str,
    budget: &SearchBudget,
) -> Result<SolveOutcome, ExternalPlannerError> {
    let dir = std::env::temp_dir();
    let tag = format!(
        "sdr-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    );
    let domain_path = dir.join(format!("{tag}-domain.cls.pddlish"));
    let problem_path = dir.join(format!("{tag}-problem.cls.pddlish"));
    let plan_path = dir.join(format!("{tag}-problem.cls.pddlish.plan"));
    std::fs::write(&domain_path, emit_classical_domain(cp))?;
    std::fs::write(&problem_path, emit_classical_problem(cp))?;

    let mut child = std::process::Command::new(exec_path)
        .arg(&domain_path)
        .arg(&problem_path)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()?;
    let start = Instant::now();
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None => {
                if start.elapsed() > budget.wall_clock {
                    let _ = child.kill();
                    let _ = child.wait();
                    cleanup(&[&domain_path, &problem_path, &plan_path]);
                    return Ok(SolveOutcome::BudgetExhausted);
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
    };
    if !status.success() {
        cleanup(&[&domain_path, &problem_path, &plan_path]);
        return Err(ExternalPlannerError::Crashed(status.to_string()));
    }
    let text = std::fs::read_to_string(&plan_path).map_err(|e| {
        cleanup(&[&domain_path, &problem_path]);
        ExternalPlannerError::Unparseable(format!("missing plan file: {e}"))
    })?;
    cleanup(&[&domain_path, &problem_path, &plan_path]);

    let outcome = parse_external_plan(cp, &text)?;
    if let SolveOutcome::Plan(plan) = &outcome {
        if !validate_plan(cp, plan) {
            return Err(ExternalPlannerError::InvalidPlan(
                "plan does not reach the goal".into(),
            ));
        }
    }
    Ok(outcome)
}

fn cleanup(paths: &[&std::path::Path]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

pub fn parse_external_plan(
    cp: &ClassicalProblem,
    text: &str,
) -> Result<SolveOutcome, ExternalPlannerError> {
    let lower_names: Vec<String> = cp.actions.iter().map(|a| a.name.to_lowercase()).collect();
    let mut actions = Vec::new();
    for raw in text.lines() {
        let mut line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if line.to_lowercase().contains("unsolvable") {
            return Ok(SolveOutcome::Unsolvable);
        }
        if let Some(colon) = line.find(':') {
            let (head, rest) = line.split_at(colon);
            if head.trim().chars().all(|c| c.is_ascii_digit()) {
                line = rest[1..].trim();
            }
        }
        let name = line
            .trim_matches(|c| c == '(' || c == ')')
            .trim()
            .to_lowercase();
        if name.is_empty() {
            continue;
        }
        match lower_names.iter().position(|n| *n == name) {
            Some(idx) => actions.push(idx),
            None => {
                return Err(ExternalPlannerError::Unparseable(format!(
                    "unknown action name `{name}`"
                )))
            }
        }
    }
    Ok(SolveOutcome::Plan(Plan { actions }))
}
