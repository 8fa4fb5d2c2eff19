//! Consensus-based energy management (CEMA) on a directed communication graph.
//!
//! Generators with quadratic costs and transmission losses `B·P²` and consumers
//! with saturating quadratic utilities agree on an incremental price `λ` by
//! consensus, while a surplus variable `ξ` mixed through a column-stochastic
//! matrix tracks the global supply/demand mismatch.
//!
//! This crate is `no_std` (it needs `alloc`) and contains only arithmetic:
//!
//! * [`model`]: agent parameters, the communication graph, weight matrices and
//!   scenario validation.
//! * [`response`]: closed-form box-constrained best responses of every agent.
//! * [`engine`]: the synchronous round engine, in both the original generator
//!   update (price times gross output) and the loss-aware update (price times
//!   net injection).
//! * [`oracle`]: a centralized price-bisection solver for the convex
//!   relaxation, a KKT certifier, implied-price diagnostics and a grid-search
//!   reference solver.
//!
//! File formats, traces and the command-line driver live in the `cema` crate.
#![no_std]

extern crate alloc;

pub mod engine;
pub mod error;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod response;

pub use engine::{run, run_with, RunOptions, RunResult, Termination, Variant};
pub use error::{EngineError, ModelError, OracleError};
pub use graph::build_uniform_weights;
pub use graph::{Digraph, Matrix, NodeKind, WeightMatrices};
pub use model::{
    check_feasibility_condition, net_injection, validate_scenario, ConsumerParams, Dispatch, GeneratorParams, Scenario,
    Violation,
};
pub use oracle::KktReport;
