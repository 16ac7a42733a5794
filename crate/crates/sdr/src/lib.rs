//! An online planner for deterministic domains with partial observability
//! and sensing actions. The planner repeatedly samples possible initial
//! states, compiles the sampled belief into a classical planning problem,
//! executes the classical plan while it remains safe, and replans when an
//! observation contradicts the sampled assumption. Belief queries are
//! answered lazily by regressing conditions through the execution history
//! and testing satisfiability against the initial-state formula.
//!
//! Crate layout:
//! - [`model`]: grounded problem representation and world/belief semantics
//! - [`parser`]: the textual input format and grounding
//! - [`belief`]: regression-based belief tracking and state sampling
//! - [`translator`]: compilation to deterministic classical problems
//! - [`classical`]: greedy best-first planner and external-planner adapter
//! - [`executive`]: the online sample-determinize-replan loop
//! - [`domains`]: benchmark instance generators
//! - [`bench`]: repeated-run driver with CSV reporting

pub mod belief;
pub mod bench;
pub mod bits;
pub mod classical;
pub mod domains;
pub mod executive;
pub mod formula;
pub mod model;
pub mod parser;
pub mod sat;
pub mod translator;
