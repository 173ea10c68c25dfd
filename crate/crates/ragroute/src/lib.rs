//! RAG-aware LLM routing at desk scale.
//!
//! Given per-query correctness labels for a pool of candidate LLMs —
//! recorded both with and without retrieved documents — this crate
//! trains a router that scores every (query, document) pair against
//! each model and picks the one most likely to answer correctly. A
//! score-threshold extension trades accuracy for latency, and an
//! evaluation harness measures the trade-off curve alongside classic
//! routing baselines (random, weighted, oracle single best, oracle,
//! k-NN, matrix factorization).
//!
//! The crate is organized as a library with runnable examples (see
//! `examples/`) and one thin CLI binary (`ragroute`) wired from
//! [`cli`]. Start with:
//!
//! - [`synth`] — deterministic synthetic model pool + labeled dataset
//!   with a closed-form ground-truth rule,
//! - [`data`] — dataset/registry formats, loading, splitting,
//! - [`model`] — the router forward pass and checkpointing,
//! - [`trainer`] — contrastive + classification objective and loop,
//! - [`evaluation`] — threshold routing, curve sweep, and metrics.

pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod diffmath;
pub mod embed;
pub mod evaluation;
pub mod model;
pub mod plot;
pub mod rng;
pub mod synth;
pub mod trainer;

mod error;

pub use error::{Error, Result};
