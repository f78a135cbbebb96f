//! Component-level evaluation of candidate optimization formulations.
//!
//! The crate takes a ground-truth formulation and a candidate (typically an
//! LLM-generated formulation), grounds both to flat linear models, and scores
//! the candidate structurally (constraint/variable precision and recall),
//! numerically (objective and constraint RMSE over sampled assignments), at
//! the solution level (optimality gap via the built-in LP/MILP solver), and
//! on efficiency (latency and token usage). Aggregation utilities produce
//! radar scores, prompt-effectiveness heatmaps, metric correlation matrices,
//! and per-problem tables.

pub mod bench;
pub mod decimal;
pub mod gateway;
pub mod ground;
pub mod ir;
pub mod matcher;
pub mod metrics;
pub mod parser;
pub mod report;
pub mod rng;
pub mod runner;
pub mod solve;

pub use decimal::Decimal;
pub use ir::{CmpOp, DataInstance, Domain, ScalarModel, Sense, SymbolicFormulation};
