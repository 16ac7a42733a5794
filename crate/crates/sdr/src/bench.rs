//! Benchmark driver: repeated runs with uniformly sampled true initial
//! states, aggregated into mean/standard-error rows. Iterations are
//! independent, so with the `parallel` feature they fan out across a rayon
//! pool; results merge deterministically by run index either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::BeliefContext;
use crate::executive::{run_sdr, Outcome, RunError, SdrConfig};
use crate::model::{PposProblem, State};

/// Exact-uniform initial-state choice is used when the model count fits
/// this; beyond it the randomized sampler approximates uniformity.
pub const EXACT_UNIFORM_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub runs: usize,
    pub base: SdrConfig,
    /// When false the seconds columns are written as zero, making rows
    /// byte-comparable across invocations.
    pub measure_time: bool,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub run_index: usize,
    pub actions: usize,
    pub seconds: f64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub instance: String,
    pub mode: String,
    pub runs: usize,
    pub mean_actions: f64,
    pub se_actions: f64,
    pub mean_seconds: f64,
    pub se_seconds: f64,
    pub failures: usize,
}

pub const CSV_HEADER: &str =
    "instance,mode,runs,mean_actions,se_actions,mean_seconds,se_seconds,failures";

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            self.instance,
            self.mode,
            self.runs,
            self.mean_actions,
            self.se_actions,
            self.mean_seconds,
            self.se_seconds,
            self.failures
        )
    }
}

fn run_seed(base: u64, idx: usize) -> u64 {
    base.wrapping_add((idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Choose the true initial state for one run: uniform over the enumerated
/// models when they fit the cap, sampler-based otherwise.
pub fn pick_true_init(
    problem: &PposProblem,
    run_idx: usize,
    base_seed: u64,
) -> Result<State, RunError> {
    let ctx = BeliefContext::new(problem)?;
    let seed = run_seed(base_seed, run_idx);
    let (models, complete) = ctx.enumerate_initial_models(EXACT_UNIFORM_CAP, base_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if complete {
        Ok(models[(rng.next_u64() % models.len() as u64) as usize].clone())
    } else {
        Ok(ctx.sample_initial_states(1, seed)?.remove(0))
    }
}

fn run_one(
    problem: &PposProblem,
    cfg: &BenchConfig,
    run_idx: usize,
) -> Result<RunRecord, RunError> {
    let true_init = pick_true_init(problem, run_idx, cfg.base.seed)?;
    let mut run_cfg = cfg.base.clone();
    run_cfg.seed = run_seed(cfg.base.seed, run_idx) ^ 0x5bd1_e995;
    let started = std::time::Instant::now();
    let trace = run_sdr(problem, &true_init, &run_cfg)?;
    let seconds = if cfg.measure_time {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(RunRecord {
        run_index: run_idx,
        actions: trace.steps.len(),
        seconds,
        outcome: trace.outcome,
    })
}

#[cfg(feature = "parallel")]
pub fn run_many(problem: &PposProblem, cfg: &BenchConfig) -> Result<Vec<RunRecord>, RunError> {
    let mut records = (0..cfg.runs)
        .into_par_iter()
        .map(|i| run_one(problem, cfg, i))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| r.run_index);
    Ok(records)
}

#[cfg(not(feature = "parallel"))]
pub fn run_many(problem: &PposProblem, cfg: &BenchConfig) -> Result<Vec<RunRecord>, RunError> {
    run_many_sequential(problem, cfg)
}

/// Single-threaded driver; the parallel one must match it record for record.
pub fn run_many_sequential(
    problem: &PposProblem,
    cfg: &BenchConfig,
) -> Result<Vec<RunRecord>, RunError> {
    (0..cfg.runs).map(|i| run_one(problem, cfg, i)).collect()
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate(instance: &str, mode: &str, records: &[RunRecord]) -> BenchRow {
    let actions: Vec<f64> = records.iter().map(|r| r.actions as f64).collect();
    let seconds: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    let (mean_actions, se_actions) = mean_se(&actions);
    let (mean_seconds, se_seconds) = mean_se(&seconds);
    BenchRow {
        instance: instance.to_string(),
        mode: mode.to_string(),
        runs: records.len(),
        mean_actions,
        se_actions,
        mean_seconds,
        se_seconds,
        failures: records
            .iter()
            .filter(|r| r.outcome != Outcome::GoalReached)
            .count(),
    }
}

/// Convenience wrapper: run and aggregate one instance.
pub fn bench_instance(
    problem: &PposProblem,
    instance: &str,
    cfg: &BenchConfig,
) -> Result<(BenchRow, Vec<RunRecord>), RunError> {
    let records = run_many(problem, cfg)?;
    let row = aggregate(instance, cfg.base.mode.name(), &records);
    Ok((row, records))
}
