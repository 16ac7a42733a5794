use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use sdr::belief::BeliefContext;
use sdr::bench::{bench_instance, BenchConfig, CSV_HEADER};
use sdr::classical::SearchBudget;
use sdr::domains::{generate, instance_name, DomainSpec, Family};
use sdr::executive::{run_sdr, Mode, Outcome, SdrConfig};
use sdr::model::PposProblem;
use sdr::parser;
use sdr::translator::{augment_state_refutation, emit_classical, translate, TranslationOptions};

#[derive(Parser)]
#[command(
    name = "sdr",
    about = "Online contingent planner for partially observable domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a benchmark domain/problem pair.
    Gen {
        #[arg(long)]
        family: String,
        /// Family-specific size parameters (repeatable).
        #[arg(long = "param")]
        params: Vec<u32>,
        #[arg(long, default_value_t = 0)]
        gen_seed: u64,
        /// Directory for <instance>-domain.ppos and <instance>-problem.ppos.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Translate the initial belief sample into a classical problem.
    Translate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// One online planning run against a simulated hidden state.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Index of the true initial state among the enumerated models;
        /// sampled uniformly from the seed when absent.
        #[arg(long)]
        true_init: Option<usize>,
        /// Cross-check belief queries against explicit enumeration (slow).
        #[arg(long)]
        shadow: bool,
    },
    /// Repeated runs with uniformly sampled true initial states; CSV report.
    Bench {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long, default_value_t = 25)]
        runs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write zeros in the seconds columns (byte-stable output).
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Domain file (requires --problem).
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Problem file (requires --domain).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Generate the instance in memory instead of reading files.
    #[arg(long)]
    family: Option<String>,
    #[arg(long = "param")]
    params: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
}

#[derive(Args)]
struct PlannerArgs {
    #[arg(long, default_value = "plain", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 2)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2_000_000)]
    budget_expansions: usize,
    #[arg(long, default_value_t = 120.0)]
    budget_seconds: f64,
    #[arg(long, default_value_t = 400)]
    max_actions: usize,
    #[arg(long)]
    external_planner: Option<String>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (expected plain, obs or sr)"))
}

impl PlannerArgs {
    fn to_config(&self) -> SdrConfig {
        SdrConfig {
            sample_size: self.sample_size.max(1),
            mode: self.mode,
            seed: self.seed,
            budget: SearchBudget {
                max_expansions: self.budget_expansions,
                wall_clock: Duration::from_secs_f64(self.budget_seconds),
            },
            max_total_actions: self.max_actions,
            external_planner: self.external_planner.clone(),
            ..Default::default()
        }
    }
}

#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn parse_family(name: &str) -> Result<Family, CliError> {
    Family::parse(name).ok_or_else(|| CliError(format!("unknown family `{name}`")))
}

impl Source {
    fn load(&self) -> Result<(PposProblem, String), CliError> {
        match (&self.domain, &self.problem, &self.family) {
            (Some(d), Some(p), None) => {
                let domain_text = std::fs::read_to_string(d)?;
                let problem_text = std::fs::read_to_string(p)?;
                let (dom, prob) = parser::parse(&domain_text, &problem_text)?;
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "problem".into());
                Ok((parser::ground(&dom, &prob)?, name))
            }
            (None, None, Some(family)) => {
                let spec = DomainSpec {
                    family: parse_family(family)?,
                    params: self.params.clone(),
                    seed: self.gen_seed,
                };
                let (d, p) = generate(&spec)?;
                let (dom, prob) = parser::parse(&d, &p)?;
                Ok((parser::ground(&dom, &prob)?, instance_name(&spec)))
            }
            _ => Err(CliError(
                "specify either --domain and --problem, or --family with --param".into(),
            )),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage problems exit 1; --help/--version are successes.
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Gen {
            family,
            params,
            gen_seed,
            out_dir,
        } => {
            let spec = DomainSpec {
                family: parse_family(&family)?,
                params,
                seed: gen_seed,
            };
            let (d, p) = generate(&spec)?;
            let name = instance_name(&spec);
            std::fs::create_dir_all(&out_dir)?;
            let dpath = out_dir.join(format!("{name}-domain.ppos"));
            let ppath = out_dir.join(format!("{name}-problem.ppos"));
            std::fs::write(&dpath, d)?;
            std::fs::write(&ppath, p)?;
            println!("wrote {} and {}", dpath.display(), ppath.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Translate {
            source,
            planner,
            out,
        } => {
            let (problem, _) = source.load()?;
            let ctx = BeliefContext::new(&problem)?;
            let requested = planner.sample_size.max(1);
            let states = ctx.sample_initial_states(requested, planner.seed)?;
            if states.len() < requested {
                eprintln!(
                    "warning: only {} initial states exist; using all of them",
                    states.len()
                );
            }
            let mut cp = translate(&problem, &states, 0, TranslationOptions::default());
            if planner.mode == Mode::StateRefutation {
                cp = augment_state_refutation(cp);
            }
            std::fs::write(&out, emit_classical(&cp))?;
            println!(
                "wrote {} ({} propositions, {} actions)",
                out.display(),
                cp.num_props(),
                cp.actions.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            source,
            planner,
            true_init,
            shadow,
        } => {
            let (problem, instance) = source.load()?;
            let mut cfg = planner.to_config();
            cfg.shadow = shadow;
            let init = match true_init {
                Some(idx) => {
                    let ctx = BeliefContext::new(&problem)?;
                    let (models, _) =
                        ctx.enumerate_initial_models(sdr::bench::EXACT_UNIFORM_CAP, cfg.seed);
                    models.get(idx).cloned().ok_or_else(|| {
                        CliError(format!(
                            "--true-init {idx} out of range ({} models)",
                            models.len()
                        ))
                    })?
                }
                None => sdr::bench::pick_true_init(&problem, 0, cfg.seed)?,
            };
            let trace = run_sdr(&problem, &init, &cfg)?;
            print!(
                "instance: {instance}\nmode: {}\n{}",
                cfg.mode.name(),
                trace.render()
            );
            Ok(match trace.outcome {
                Outcome::GoalReached => ExitCode::SUCCESS,
                Outcome::Failure | Outcome::ActionLimit => ExitCode::from(3),
            })
        }
        Cmd::Bench {
            source,
            planner,
            runs,
            out,
            no_timing,
        } => {
            let (problem, instance) = source.load()?;
            let cfg = BenchConfig {
                runs,
                base: planner.to_config(),
                measure_time: !no_timing,
            };
            let (row, _) = bench_instance(&problem, &instance, &cfg)?;
            let csv = format!("{CSV_HEADER}\n{}\n", row.csv_line());
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
