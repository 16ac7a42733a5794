//! The online plan-execute-monitor loop: sample initial states, determinize,
//! plan classically, execute while the plan stays safe and the observations
//! match the distinguished state, and replan otherwise.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::{BeliefContext, BeliefError};
use crate::classical::{solve, SearchBudget, SolveOutcome};
use crate::model::{self, Action, ModelError, Observation, PposProblem, State};
use crate::translator::{
    augment_state_refutation, translate, MergeStyle, RefutationStyle, TranslationOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Plain,
    ObsBias,
    StateRefutation,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "plain" => Mode::Plain,
            "obs" => Mode::ObsBias,
            "sr" => Mode::StateRefutation,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::ObsBias => "obs",
            Mode::StateRefutation => "sr",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdrConfig {
    pub sample_size: usize,
    pub mode: Mode,
    pub seed: u64,
    pub budget: SearchBudget,
    pub max_total_actions: usize,
    /// Escalate to the complete translation when the sampled problem stays
    /// unsolvable and the model count is at most this.
    pub complete_translation_cap: usize,
    pub refutation: RefutationStyle,
    /// Solve the translated problems with this executable instead of the
    /// built-in planner.
    pub external_planner: Option<String>,
    /// Cross-check every belief query against an explicit enumeration.
    pub shadow: bool,
    pub shadow_cap: usize,
}

impl Default for SdrConfig {
    fn default() -> Self {
        SdrConfig {
            sample_size: 2,
            mode: Mode::Plain,
            seed: 0,
            budget: SearchBudget::default(),
            max_total_actions: 400,
            complete_translation_cap: 64,
            refutation: RefutationStyle::StandaloneActions,
            external_planner: None,
            shadow: false,
            shadow_cap: 4096,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trigger {
    Planned,
    EagerSense,
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub action: String,
    pub observation: Vec<(String, bool)>,
    pub trigger: Trigger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplanCause {
    ObsContradictsDistinguished,
    UnsafePrecondition,
    PlanExhausted,
}

impl ReplanCause {
    fn name(&self) -> &'static str {
        match self {
            ReplanCause::ObsContradictsDistinguished => "obs-contradicts-s'",
            ReplanCause::UnsafePrecondition => "unsafe-precondition",
            ReplanCause::PlanExhausted => "plan-exhausted",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReplanEvent {
    pub step_index: usize,
    pub cause: ReplanCause,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    GoalReached,
    Failure,
    ActionLimit,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::GoalReached => "GoalReached",
            Outcome::Failure => "Failure",
            Outcome::ActionLimit => "ActionLimit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub replan_events: Vec<ReplanEvent>,
    /// Steps at which the complete-translation fallback kicked in (an
    /// extension beyond the sampled algorithm).
    pub escalations: Vec<usize>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let trig = match s.trigger {
                Trigger::Planned => "planned",
                Trigger::EagerSense => "eager-sense",
            };
            out.push_str(&format!("step {i} [{trig}] {}", s.action));
            if !s.observation.is_empty() {
                out.push_str(" obs");
                for (name, v) in &s.observation {
                    out.push_str(&format!(" {name}={v}"));
                }
            }
            out.push('\n');
        }
        for e in &self.replan_events {
            out.push_str(&format!(
                "replan at action {}: {}\n",
                e.step_index,
                e.cause.name()
            ));
        }
        for e in &self.escalations {
            out.push_str(&format!("complete-translation escalation at action {e}\n"));
        }
        out.push_str(&format!("outcome: {}\n", self.outcome.name()));
        out.push_str(&format!("actions: {}\n", self.steps.len()));
        out.push_str(&format!("replans: {}\n", self.replan_events.len()));
        out
    }
}

#[derive(Error, Debug)]
pub enum RunError {
    #[error("simulator fault: {0}")]
    SimulatorFault(ModelError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    External(#[from] crate::classical::ExternalPlannerError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// The hidden true world state, advanced only through action application.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub hidden_state: State,
}

/// Observe (pre-effect), then apply. A violated precondition here means the
/// executive let an unsafe action through and the run must abort.
pub fn simulate_step(sim: &mut Simulator, action: &Action) -> Result<Observation, RunError> {
    let obs = model::observe(action, &sim.hidden_state);
    sim.hidden_state = model::apply(action, &sim.hidden_state).map_err(RunError::SimulatorFault)?;
    Ok(obs)
}

/// Safe iff the preconditions are entailed by the current belief; when not,
/// also yields an initial state witnessing the violation.
pub fn check_safe(ctx: &mut BeliefContext, action: &Action) -> (bool, Option<State>) {
    if action.pre.is_empty() {
        return (true, None);
    }
    ctx.entails_with_witness(&action.pre)
}

/// All applicable pure-sensing actions observing at least one proposition
/// whose value is currently unknown, in action order.
pub fn eager_sense(ctx: &mut BeliefContext, problem: &PposProblem) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, a) in problem.actions.iter().enumerate() {
        if !a.is_pure_sensing() {
            continue;
        }
        let unknown = a.obs.iter().any(|&p| {
            let pos = crate::formula::Literal::pos(p);
            !ctx.entails(&[pos]) && !ctx.entails(&[pos.complement()])
        });
        if unknown && ctx.entails(&a.pre) {
            out.push(i);
        }
    }
    out
}

struct Episode {
    plan: Vec<usize>,
    classical: crate::translator::ClassicalProblem,
    s_prime_current: State,
    s_prime_initial: State,
}

enum PlanResult {
    Found(Box<Episode>),
    ProvenUnsolvable,
}

fn plan_episode(
    ctx: &mut BeliefContext,
    problem: &PposProblem,
    cfg: &SdrConfig,
    witnesses: &[State],
    rng: &mut ChaCha8Rng,
    escalated: &mut bool,
) -> Result<PlanResult, RunError> {
    let opts = TranslationOptions {
        refutation: cfg.refutation,
        merge_style: MergeStyle::DisjunctivePrecondition,
    };
    let attempt = |ctx: &mut BeliefContext,
                   sample: Vec<State>,
                   rng: &mut ChaCha8Rng|
     -> Result<Result<Box<Episode>, ()>, RunError> {
        let distinguished = (rng.next_u64() % sample.len() as u64) as usize;
        let progressed: Vec<State> = sample
            .iter()
            .map(|s| ctx.progress_state(s))
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::Internal(format!("sampled state not executable: {e}")))?;
        let base = translate(problem, &progressed, distinguished, opts);
        let mut candidates = Vec::new();
        if cfg.mode == Mode::StateRefutation {
            // The refutation-augmented goal can be unreachable even when
            // the real goal is not (states whose trajectories have
            // converged can never be told apart), so it must not decide
            // solvability: fall back to the plain goal.
            candidates.push(augment_state_refutation(base.clone()));
        }
        candidates.push(base);
        for cp in candidates {
            let outcome = match &cfg.external_planner {
                None => solve(&cp, &cfg.budget),
                Some(path) => crate::classical::solve_external(&cp, path, &cfg.budget)?,
            };
            if let SolveOutcome::Plan(plan) = outcome {
                return Ok(Ok(Box::new(Episode {
                    plan: plan.actions,
                    classical: cp,
                    s_prime_current: progressed[distinguished].clone(),
                    s_prime_initial: sample[distinguished].clone(),
                })));
            }
        }
        Ok(Err(()))
    };

    // Witnesses are force-included while they remain possible.
    let live_witnesses: Vec<State> = witnesses
        .iter()
        .filter(|w| ctx.init_admits(w))
        .cloned()
        .collect();
    for _ in 0..2 {
        let fresh = ctx.sample_initial_states(cfg.sample_size, rng.next_u64())?;
        let mut sample = live_witnesses.clone();
        for s in fresh {
            if !sample.contains(&s) {
                sample.push(s);
            }
        }
        if let Ok(episode) = attempt(ctx, sample, rng)? {
            return Ok(PlanResult::Found(episode));
        }
    }
    // Two sampled attempts failed: fall back to the complete translation
    // when the belief is small enough to enumerate.
    let (models, complete) =
        ctx.enumerate_initial_models(cfg.complete_translation_cap + 1, rng.next_u64());
    if complete && models.len() <= cfg.complete_translation_cap {
        *escalated = true;
        if let Ok(episode) = attempt(ctx, models, rng)? {
            return Ok(PlanResult::Found(episode));
        }
    }
    Ok(PlanResult::ProvenUnsolvable)
}

/// Run the full online loop from a concrete hidden initial state.
pub fn run_sdr(
    problem: &PposProblem,
    true_init: &State,
    cfg: &SdrConfig,
) -> Result<ExecutionTrace, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ctx = if cfg.shadow {
        BeliefContext::with_shadow(problem, cfg.shadow_cap)?
    } else {
        BeliefContext::new(problem)?
    };
    let mut sim = Simulator {
        hidden_state: true_init.clone(),
    };
    let mut trace = ExecutionTrace {
        steps: Vec::new(),
        replan_events: Vec::new(),
        escalations: Vec::new(),
        outcome: Outcome::Failure,
    };
    let mut witnesses: Vec<State> = Vec::new();

    let obs_names = |problem: &PposProblem, obs: &Observation| -> Vec<(String, bool)> {
        obs.0
            .iter()
            .map(|&(p, v)| (problem.prop_name(p).to_string(), v))
            .collect()
    };

    'outer: loop {
        if ctx.entails(&problem.goal) {
            trace.outcome = Outcome::GoalReached;
            return Ok(trace);
        }
        if trace.steps.len() >= cfg.max_total_actions {
            trace.outcome = Outcome::ActionLimit;
            return Ok(trace);
        }

        let mut escalated = false;
        let episode =
            match plan_episode(&mut ctx, problem, cfg, &witnesses, &mut rng, &mut escalated)? {
                PlanResult::Found(e) => e,
                PlanResult::ProvenUnsolvable => {
                    trace.outcome = Outcome::Failure;
                    return Ok(trace);
                }
            };
        if escalated {
            trace.escalations.push(trace.steps.len());
        }
        let Episode {
            plan,
            classical,
            mut s_prime_current,
            s_prime_initial,
        } = *episode;

        for step in plan {
            let origin = match classical.actions[step].origin {
                Some(o) => o,
                None => continue, // merge/refutation bookkeeping
            };
            if cfg.mode == Mode::ObsBias {
                // Sense anything unknown that costs no state change.
                for sense_idx in eager_sense(&mut ctx, problem) {
                    let a = &problem.actions[sense_idx];
                    let obs = simulate_step(&mut sim, a)?;
                    ctx.push_step(sense_idx);
                    ctx.assimilate_observation(&obs)?;
                    trace.steps.push(TraceStep {
                        action: a.name.clone(),
                        observation: obs_names(problem, &obs),
                        trigger: Trigger::EagerSense,
                    });
                    let expected = model::observe(a, &s_prime_current);
                    // Pure sensing: s' itself is unchanged.
                    if trace.steps.len() >= cfg.max_total_actions {
                        continue 'outer;
                    }
                    if expected != obs {
                        trace.replan_events.push(ReplanEvent {
                            step_index: trace.steps.len(),
                            cause: ReplanCause::ObsContradictsDistinguished,
                        });
                        debug_assert!(
                            !ctx.init_admits(&s_prime_initial),
                            "refuted distinguished state still satisfies the initial formula"
                        );
                        continue 'outer;
                    }
                }
            }

            let action = &problem.actions[origin];
            let (safe, witness) = check_safe(&mut ctx, action);
            if !safe {
                if let Some(w) = witness {
                    if !witnesses.contains(&w) {
                        witnesses.push(w);
                    }
                }
                trace.replan_events.push(ReplanEvent {
                    step_index: trace.steps.len(),
                    cause: ReplanCause::UnsafePrecondition,
                });
                continue 'outer;
            }

            let obs = simulate_step(&mut sim, action)?;
            ctx.push_step(origin);
            ctx.assimilate_observation(&obs)?;
            trace.steps.push(TraceStep {
                action: action.name.clone(),
                observation: obs_names(problem, &obs),
                trigger: Trigger::Planned,
            });

            let expected = model::observe(action, &s_prime_current);
            s_prime_current = model::apply(action, &s_prime_current).map_err(|e| {
                RunError::Internal(format!("distinguished state diverged from plan: {e}"))
            })?;
            if trace.steps.len() >= cfg.max_total_actions {
                continue 'outer;
            }
            if expected != obs {
                trace.replan_events.push(ReplanEvent {
                    step_index: trace.steps.len(),
                    cause: ReplanCause::ObsContradictsDistinguished,
                });
                debug_assert!(
                    !ctx.init_admits(&s_prime_initial),
                    "refuted distinguished state still satisfies the initial formula"
                );
                continue 'outer;
            }
        }

        if !ctx.entails(&problem.goal) {
            trace.replan_events.push(ReplanEvent {
                step_index: trace.steps.len(),
                cause: ReplanCause::PlanExhausted,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{generate, DomainSpec, Family};
    use crate::formula::{Formula, Literal, PropId};
    use crate::model::initial_belief;
    use crate::parser;

    fn build(family: Family, params: &[u32], seed: u64) -> PposProblem {
        let spec = DomainSpec {
            family,
            params: params.to_vec(),
            seed,
        };
        let (d, p) = generate(&spec).unwrap();
        let (dom, prob) = parser::parse(&d, &p).unwrap();
        parser::ground(&dom, &prob).unwrap()
    }

    fn shadow_cfg(seed: u64) -> SdrConfig {
        SdrConfig {
            seed,
            shadow: true,
            ..Default::default()
        }
    }

    #[test]
    fn goal_entailed_initially_gives_empty_trace() {
        let problem = PposProblem {
            prop_names: vec!["a".into()],
            actions: vec![],
            init: Formula::Lit(Literal::pos(PropId(0))),
            goal: vec![Literal::pos(PropId(0))],
        };
        let init = initial_belief(&problem, 4).pop().unwrap();
        let trace = run_sdr(&problem, &init, &SdrConfig::default()).unwrap();
        assert_eq!(trace.outcome, Outcome::GoalReached);
        assert!(trace.steps.is_empty());
        assert!(trace.replan_events.is_empty());
    }

    #[test]
    fn diseases_reaches_goal_from_every_initial_state() {
        let problem = build(Family::Diseases, &[3], 0);
        for (i, init) in initial_belief(&problem, 16).iter().enumerate() {
            let trace = run_sdr(&problem, init, &shadow_cfg(i as u64)).unwrap();
            assert_eq!(trace.outcome, Outcome::GoalReached, "init {i}");
            assert!(
                trace.steps.len() <= 12,
                "too many actions: {}",
                trace.steps.len()
            );
        }
    }

    #[test]
    fn diseases_replan_is_observation_driven() {
        let problem = build(Family::Diseases, &[2], 0);
        let inits = initial_belief(&problem, 16);
        // Across seeds the first distinguished guess sometimes misses the
        // true state; the resulting replan must be observation-driven.
        let mut saw_contradiction = false;
        for seed in 0..8u64 {
            for init in &inits {
                let trace = run_sdr(&problem, init, &shadow_cfg(seed)).unwrap();
                assert_eq!(trace.outcome, Outcome::GoalReached);
                for e in &trace.replan_events {
                    assert_ne!(e.cause, ReplanCause::UnsafePrecondition);
                    if e.cause == ReplanCause::ObsContradictsDistinguished {
                        saw_contradiction = true;
                    }
                }
            }
        }
        assert!(saw_contradiction, "no seed ever guessed wrong");
    }

    #[test]
    fn wumpus_four_all_initial_states_reach_goal() {
        let problem = build(Family::Wumpus, &[4], 0);
        let inits = initial_belief(&problem, 64);
        assert_eq!(inits.len(), 4);
        for (i, init) in inits.iter().enumerate() {
            let cfg = SdrConfig {
                seed: 17 + i as u64,
                max_total_actions: 200,
                shadow: true,
                ..Default::default()
            };
            let trace = run_sdr(&problem, init, &cfg).unwrap();
            assert_eq!(
                trace.outcome,
                Outcome::GoalReached,
                "init {i}:\n{}",
                trace.render()
            );
        }
    }

    #[test]
    fn wumpus_replan_causes_are_the_algorithmic_three() {
        let problem = build(Family::Wumpus, &[4], 0);
        let inits = initial_belief(&problem, 64);
        for mode in [Mode::Plain, Mode::ObsBias, Mode::StateRefutation] {
            let cfg = SdrConfig {
                mode,
                seed: 5,
                shadow: true,
                ..Default::default()
            };
            let trace = run_sdr(&problem, &inits[2], &cfg).unwrap();
            assert_eq!(trace.outcome, Outcome::GoalReached, "{}", mode.name());
        }
    }

    #[test]
    fn eager_sense_lists_pure_sensors_with_unknown_values() {
        let problem = build(Family::Wumpus, &[4], 0);
        let mut ctx = BeliefContext::with_shadow(&problem, 64).unwrap();
        // At 1-1 no reachable stench is uncertain. Note 2-2 and 3-3 smell in
        // every world (both members of a oneof pair are adjacent), so the
        // first genuinely unknown stench sits at 1-3.
        assert!(eager_sense(&mut ctx, &problem).is_empty());
        for mv in ["move-from-1-1-to-1-2", "move-from-1-2-to-1-3"] {
            ctx.push_step(problem.find_action(mv).unwrap());
            ctx.assimilate_observation(&Observation::null()).unwrap();
        }
        let senses = eager_sense(&mut ctx, &problem);
        assert_eq!(
            senses,
            vec![problem.find_action("smell-stench-at-1-3").unwrap()]
        );
    }

    #[test]
    fn check_safe_blocks_possible_wumpus_and_yields_witness() {
        let problem = build(Family::Wumpus, &[4], 0);
        let mut ctx = BeliefContext::with_shadow(&problem, 64).unwrap();
        let move_into = &problem.actions[problem.find_action("move-from-2-2-to-2-3").unwrap()];
        let (safe, witness) = check_safe(&mut ctx, move_into);
        assert!(!safe);
        let w = witness.unwrap();
        let w23 = problem.find_prop("wumpus-at-2-3").unwrap();
        assert!(w.get(w23.index()), "witness must place the wumpus at 2-3");
        // Empty preconditions are trivially safe.
        let smell = &problem.actions[problem.find_action("check-bump").unwrap_or(0)];
        let _ = smell;
        let free = Action {
            name: "free".into(),
            pre: vec![],
            effects: vec![],
            obs: vec![],
        };
        assert!(check_safe(&mut ctx, &free).0);
    }

    #[test]
    fn simulator_rejects_violated_preconditions() {
        let problem = build(Family::Diseases, &[2], 0);
        let inits = initial_belief(&problem, 16);
        let treat_1 = problem.find_action("treat-d1").unwrap();
        let with_d2 = inits
            .iter()
            .find(|s| s.get(problem.find_prop("infected-d2").unwrap().index()))
            .unwrap();
        let mut sim = Simulator {
            hidden_state: with_d2.clone(),
        };
        assert!(matches!(
            simulate_step(&mut sim, &problem.actions[treat_1]),
            Err(RunError::SimulatorFault(_))
        ));
    }

    #[test]
    fn pure_sensing_leaves_hidden_state_unchanged() {
        let problem = build(Family::Diseases, &[2], 0);
        let init = initial_belief(&problem, 16).remove(0);
        let mut sim = Simulator {
            hidden_state: init.clone(),
        };
        let sense = problem.find_action("observe-test-result").unwrap();
        let obs = simulate_step(&mut sim, &problem.actions[sense]).unwrap();
        assert_eq!(sim.hidden_state, init);
        assert_eq!(obs.0.len(), 1);
    }

    #[test]
    fn action_limit_is_reported() {
        let problem = build(Family::Wumpus, &[4], 0);
        let init = initial_belief(&problem, 64).remove(0);
        let cfg = SdrConfig {
            max_total_actions: 2,
            ..Default::default()
        };
        let trace = run_sdr(&problem, &init, &cfg).unwrap();
        assert_eq!(trace.outcome, Outcome::ActionLimit);
        assert!(trace.steps.len() <= 2);
    }

    #[test]
    fn trace_render_is_deterministic() {
        let problem = build(Family::Wumpus, &[4], 0);
        let init = initial_belief(&problem, 64).remove(1);
        let cfg = SdrConfig {
            seed: 3,
            ..Default::default()
        };
        let a = run_sdr(&problem, &init, &cfg).unwrap().render();
        let b = run_sdr(&problem, &init, &cfg).unwrap().render();
        assert_eq!(a, b);
    }
}
