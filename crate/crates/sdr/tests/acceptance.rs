//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them).

mod common;

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{belief_applicable, oracle_progress, random_ppos, GenOptions};
use sdr::belief::{regress, BeliefContext};
use sdr::bench::{bench_instance, BenchConfig};
use sdr::bits::BitVec;
use sdr::classical::apply_classical;
use sdr::domains::{generate, DomainSpec, Family};
use sdr::executive::{run_sdr, Mode, Outcome, SdrConfig};
use sdr::formula::{Formula, Literal, PropId};
use sdr::model::{self, initial_belief, PposProblem, State};
use sdr::parser;
use sdr::translator::{
    augment_state_refutation, detect_always_known, translate, KPropKind, MergeStyle,
    RefutationStyle, TranslationOptions,
};

fn criterion<F: FnOnce() + UnwindSafe>(id: u32, name: &str, body: F) {
    let result = catch_unwind(body);
    match &result {
        Ok(()) => println!("ACCEPTANCE {id} ({name}): PASS"),
        Err(_) => println!("ACCEPTANCE {id} ({name}): FAIL"),
    }
    if let Err(e) = result {
        resume_unwind(e);
    }
}

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

/// Criterion 1: over random instances and random applicable action
/// sequences, explicit-belief entailment of every literal coincides with
/// the K proposition in the translated execution with all merges inserted.
#[test]
fn acceptance_1_translation_equivalence() {
    criterion(1, "translation equivalence", || {
        let started = Instant::now();
        let opts = TranslationOptions {
            refutation: RefutationStyle::InlineEffects,
            merge_style: MergeStyle::ConditionalEffect,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE11);
        let mut instances = 0usize;
        while instances < 200 {
            let problem = random_ppos(&mut rng, &GenOptions::default());
            let b0 = initial_belief(&problem, 16);
            if b0.is_empty() || b0.len() > 16 {
                continue;
            }
            instances += 1;
            let true_idx = rng.random_range(0..b0.len());
            let cp = translate(&problem, &b0, true_idx, opts);
            let always = detect_always_known(&problem);
            let know_index: Vec<Option<usize>> = (0..problem.num_props())
                .map(|p| cp.find_prop(&format!("K-{}", problem.prop_names[p])))
                .collect();
            let know_not_index: Vec<Option<usize>> = (0..problem.num_props())
                .map(|p| cp.find_prop(&format!("KN-{}", problem.prop_names[p])))
                .collect();

            let merge_all = |s: &BitVec| -> BitVec {
                let mut s = s.clone();
                for a in &cp.actions {
                    if a.origin.is_none() {
                        s = apply_classical(a, &s).expect("merges have no preconditions");
                    }
                }
                s
            };

            let mut belief = b0.clone();
            let mut true_state = b0[true_idx].clone();
            let mut cstate = merge_all(&cp.init);

            for _step in 0..=8 {
                // Condition 4 of the equivalence: belief |= l  <=>  Kl.
                for p in 0..problem.num_props() {
                    for negated in [false, true] {
                        let lit = Literal {
                            prop: PropId(p as u32),
                            negated,
                        };
                        let entailed = belief.iter().all(|s| lit.holds_in(s));
                        let knows = if always[p] {
                            lit.holds_in(&cstate)
                        } else {
                            let idx = if negated {
                                know_not_index[p]
                            } else {
                                know_index[p]
                            };
                            cstate.get(idx.unwrap())
                        };
                        assert_eq!(
                            entailed, knows,
                            "literal {:?} of {} diverges after history",
                            lit, problem.prop_names[p]
                        );
                    }
                }
                let applicable = belief_applicable(&problem, &belief);
                // Condition 1: classical applicability must agree.
                for (ai, ca) in cp.actions.iter().enumerate() {
                    if let Some(orig) = ca.origin {
                        let in_belief = applicable.contains(&orig);
                        let classical =
                            sdr::classical::satisfies_precondition(&cp.actions[ai], &cstate);
                        assert_eq!(in_belief, classical, "applicability diverges");
                    }
                }
                if applicable.is_empty() {
                    break;
                }
                let action_idx = applicable[rng.random_range(0..applicable.len())];
                let (next_belief, _obs) =
                    oracle_progress(&problem, &belief, action_idx, &true_state);
                belief = next_belief;
                true_state = model::apply(&problem.actions[action_idx], &true_state).unwrap();
                let ca = cp
                    .actions
                    .iter()
                    .position(|a| a.origin == Some(action_idx))
                    .expect("translated action");
                cstate =
                    apply_classical(&cp.actions[ca], &cstate).expect("applicable per condition 1");
                cstate = merge_all(&cstate);
            }
        }
        assert!(
            started.elapsed().as_secs() < 120,
            "equivalence suite exceeded its runtime bound"
        );
    });
}

/// Criterion 2: the lazy belief agrees with explicit enumeration on every
/// query issued during full runs (instrumented shadow; disagreement panics).
#[test]
fn acceptance_2_belief_oracle_agreement() {
    criterion(2, "belief oracle agreement", || {
        let mut configs: Vec<(PposProblem, &str)> = Vec::new();
        for n in 2..=6u32 {
            configs.push((build(Family::Diseases, &[n], 0), "diseases"));
        }
        configs.push((build(Family::Wumpus, &[4], 0), "wumpus-4"));
        configs.push((build(Family::Wumpus, &[5], 0), "wumpus-5"));
        configs.push((build(Family::Doors, &[5], 0), "doors-5"));
        for (problem, name) in &configs {
            let inits = initial_belief(problem, 4096);
            let step = (inits.len() / 5).max(1);
            for (i, init) in inits.iter().step_by(step).enumerate() {
                let cfg = SdrConfig {
                    seed: i as u64,
                    shadow: true,
                    ..Default::default()
                };
                let trace = run_sdr(problem, init, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(trace.outcome, Outcome::GoalReached, "{name} init {i}");
            }
        }
    });
}

/// Criterion 3: apply(a, s) |= c  <=>  s |= regress(c, a) for every action,
/// applicable state and literal of 100 random problems.
#[test]
fn acceptance_3_regression_soundness() {
    criterion(3, "regression soundness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE33);
        for _ in 0..100 {
            let problem = random_ppos(&mut rng, &GenOptions::default());
            let n = problem.num_props();
            for a in &problem.actions {
                for mask in 0..(1u32 << n) {
                    let mut s = BitVec::zeros(n);
                    for i in 0..n {
                        if mask & (1 << i) != 0 {
                            s.set(i, true);
                        }
                    }
                    if a.pre.iter().any(|l| !l.holds_in(&s)) {
                        continue;
                    }
                    let next = model::apply(a, &s).unwrap();
                    for p in 0..n {
                        for negated in [false, true] {
                            let c = Formula::Lit(Literal {
                                prop: PropId(p as u32),
                                negated,
                            });
                            assert_eq!(
                                c.eval(&next),
                                regress(&c, a).eval(&s),
                                "regression of {c:?} through {} unsound",
                                a.name
                            );
                        }
                    }
                }
            }
        }
    });
}

/// Criterion 4: shadowed 25-run benches never hit a precondition violation,
/// a simulator fault, or an unsafe execution.
#[test]
fn acceptance_4_safety() {
    criterion(4, "safety under shadow oracle", || {
        let instances: Vec<(PposProblem, &str)> = vec![
            (build(Family::Wumpus, &[5], 0), "wumpus-5"),
            (build(Family::Doors, &[5], 0), "doors-5"),
            (build(Family::Diseases, &[4], 0), "diseases-4"),
        ];
        for (problem, name) in &instances {
            for mode in [Mode::Plain, Mode::ObsBias, Mode::StateRefutation] {
                let cfg = BenchConfig {
                    runs: 25,
                    base: SdrConfig {
                        mode,
                        seed: 42,
                        shadow: true,
                        ..Default::default()
                    },
                    measure_time: false,
                };
                // Any violation panics (shadow) or errors (simulator).
                let (row, _) = bench_instance(problem, name, &cfg)
                    .unwrap_or_else(|e| panic!("{name} {}: {e}", mode.name()));
                assert_eq!(row.runs, 25);
            }
        }
    });
}

/// Criterion 5: success envelopes on the benchmark instances.
#[test]
fn acceptance_5_success_envelopes() {
    criterion(5, "success envelopes", || {
        let started = Instant::now();
        let wumpus = build(Family::Wumpus, &[5], 0);
        let doors = build(Family::Doors, &[5], 0);
        for mode in [Mode::Plain, Mode::ObsBias, Mode::StateRefutation] {
            let cfg = BenchConfig {
                runs: 25,
                base: SdrConfig {
                    mode,
                    seed: 7,
                    ..Default::default()
                },
                measure_time: false,
            };
            let (row, _) = bench_instance(&wumpus, "wumpus-5", &cfg).unwrap();
            assert_eq!(row.failures, 0, "wumpus-5 {} failures", mode.name());
            assert!(
                row.mean_actions <= 60.0,
                "wumpus-5 {} mean {} > 60",
                mode.name(),
                row.mean_actions
            );
            let (row, _) = bench_instance(&doors, "doors-5", &cfg).unwrap();
            assert_eq!(row.failures, 0, "doors-5 {} failures", mode.name());
            assert!(
                row.mean_actions <= 45.0,
                "doors-5 {} mean {} > 45",
                mode.name(),
                row.mean_actions
            );
        }
        let diseases = build(Family::Diseases, &[10], 0);
        let inits = initial_belief(&diseases, 16);
        assert_eq!(inits.len(), 10);
        for (i, init) in inits.iter().enumerate() {
            let cfg = SdrConfig {
                seed: i as u64,
                ..Default::default()
            };
            let trace = run_sdr(&diseases, init, &cfg).unwrap();
            assert_eq!(trace.outcome, Outcome::GoalReached, "diseases-10 init {i}");
            assert!(
                trace.steps.len() <= 40,
                "diseases-10 init {i}: {} actions > 4n",
                trace.steps.len()
            );
        }
        assert!(
            started.elapsed().as_secs() < 600,
            "benches exceeded ten minutes"
        );
    });
}

/// Criterion 6: the dead-end variant defeats the planner for at least one
/// true initial state in every mode.
#[test]
fn acceptance_6_deadend_reproduction() {
    criterion(6, "dead-end failure reproduction", || {
        let problem = build(Family::WumpusDeadend, &[4], 0);
        let inits = initial_belief(&problem, 64);
        assert_eq!(inits.len(), 4);
        for mode in [Mode::Plain, Mode::ObsBias, Mode::StateRefutation] {
            let mut failures = 0usize;
            for (i, init) in inits.iter().enumerate() {
                let cfg = SdrConfig {
                    mode,
                    seed: i as u64,
                    sample_size: 2,
                    max_total_actions: 120,
                    ..Default::default()
                };
                let trace = run_sdr(&problem, init, &cfg).unwrap();
                if trace.outcome != Outcome::GoalReached {
                    failures += 1;
                }
            }
            assert!(failures >= 1, "{}: no initial state failed", mode.name());
        }
    });
}

/// Criterion 7: the state-refutation goal contains exactly one refutation
/// term per non-distinguished sampled state (structure only; effects on
/// replan counts are deliberately not asserted).
#[test]
fn acceptance_7_state_refutation_structure() {
    criterion(7, "state-refutation goal structure", || {
        let problem = build(Family::Wumpus, &[5], 0);
        let ctx = BeliefContext::new(&problem).unwrap();
        let states = ctx.sample_initial_states(2, 11).unwrap();
        assert_eq!(states.len(), 2);
        for distinguished in 0..2 {
            let cp = translate(
                &problem,
                &states,
                distinguished,
                TranslationOptions::default(),
            );
            let plain_goal = cp.goal.clone();
            let cp = augment_state_refutation(cp);
            let added: Vec<_> = cp.goal[plain_goal.len()..].to_vec();
            assert_eq!(added.len(), states.len() - 1);
            for lit in &added {
                assert!(!lit.negated);
                match cp.props[lit.prop.index()].kind {
                    KPropKind::StateRefuted(si) => assert_ne!(si, distinguished),
                    other => panic!("unexpected goal term {other:?}"),
                }
            }
            // No other refutation terms appear in the goal.
            let refuted_terms = cp
                .goal
                .iter()
                .filter(|l| matches!(cp.props[l.prop.index()].kind, KPropKind::StateRefuted(_)))
                .count();
            assert_eq!(refuted_terms, states.len() - 1);
        }
    });
}

/// Criterion 8: the proposition count matches the closed form
/// k + 2k' + k'|S'| + |S'| and grows exactly linearly in |S'|.
#[test]
fn acceptance_8_size_law() {
    criterion(8, "translation size law", || {
        for (problem, name) in [
            (build(Family::Wumpus, &[5], 0), "wumpus-5"),
            (build(Family::Diseases, &[8], 0), "diseases-8"),
        ] {
            let k = problem.num_props();
            let kp = detect_always_known(&problem)
                .iter()
                .filter(|a| !**a)
                .count();
            let models = initial_belief(&problem, 4096);
            let mut counts = Vec::new();
            for sample in [1usize, 2, 4, 8] {
                let states: Vec<State> = (0..sample)
                    .map(|i| models[i % models.len()].clone())
                    .collect();
                let cp = translate(&problem, &states, 0, TranslationOptions::default());
                assert_eq!(
                    cp.num_props(),
                    k + 2 * kp + kp * sample + sample,
                    "{name} |S'|={sample}"
                );
                counts.push((sample as i64, cp.num_props() as i64));
            }
            // Exact linearity: count(s) = count(1) + (s-1) * slope.
            let slope = (counts[1].1 - counts[0].1) / (counts[1].0 - counts[0].0);
            for &(s, c) in &counts {
                assert_eq!(c, counts[0].1 + (s - 1) * slope, "{name} nonlinear at {s}");
            }
        }
    });
}

/// Criterion 9: identical (instance, seed, config) reproduce byte-identical
/// traces and CSV rows, through the library and the installed binary.
#[test]
fn acceptance_9_determinism() {
    criterion(9, "determinism", || {
        let problem = build(Family::Wumpus, &[4], 0);
        let init = initial_belief(&problem, 64).remove(2);
        let cfg = SdrConfig {
            seed: 23,
            mode: Mode::ObsBias,
            ..Default::default()
        };
        let t1 = run_sdr(&problem, &init, &cfg).unwrap().render();
        let t2 = run_sdr(&problem, &init, &cfg).unwrap().render();
        assert_eq!(t1, t2, "trace text must be reproducible");
        assert!(!t1.is_empty());

        let bench_cfg = BenchConfig {
            runs: 8,
            base: SdrConfig {
                seed: 5,
                ..Default::default()
            },
            measure_time: false,
        };
        let (r1, _) = bench_instance(&problem, "wumpus-4", &bench_cfg).unwrap();
        let (r2, _) = bench_instance(&problem, "wumpus-4", &bench_cfg).unwrap();
        assert_eq!(
            r1.csv_line(),
            r2.csv_line(),
            "CSV rows must be reproducible"
        );

        // End to end through the CLI.
        let exe = env!("CARGO_BIN_EXE_sdr");
        let run_cli = |args: &[&str]| -> std::process::Output {
            std::process::Command::new(exe)
                .args(args)
                .output()
                .expect("spawn sdr")
        };
        let args = [
            "run", "--family", "wumpus", "--param", "4", "--seed", "23", "--mode", "obs",
        ];
        let o1 = run_cli(&args);
        let o2 = run_cli(&args);
        assert!(o1.status.success());
        assert_eq!(
            o1.stdout, o2.stdout,
            "CLI trace output must be byte-identical"
        );
        let bench_args = [
            "bench",
            "--family",
            "diseases",
            "--param",
            "3",
            "--runs",
            "5",
            "--seed",
            "9",
            "--no-timing",
        ];
        let b1 = run_cli(&bench_args);
        let b2 = run_cli(&bench_args);
        assert!(b1.status.success());
        assert_eq!(
            b1.stdout, b2.stdout,
            "CLI bench output must be byte-identical"
        );
    });
}
