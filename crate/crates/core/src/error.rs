use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("graph has no self-loop at node {0}")]
    MissingSelfLoop(usize),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("edge ({from}, {to}) references a node outside 0..{n}")]
    EdgeOutOfRange { from: usize, to: usize, n: usize },
    #[error("power {power} outside the box [{p_min}, {p_max}]")]
    OutOfBox { power: f64, p_min: f64, p_max: f64 },
    #[error("price signal is not finite: {0}")]
    NonFinitePrice(f64),
    #[error("{} scenario violation(s), first: {}", .0.len(), first_message(.0))]
    Invalid(Vec<Violation>),
}

fn first_message(violations: &[Violation]) -> String {
    violations.first().map(|v| v.message.clone()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("feasibility condition violated (slack {slack})")]
    FeasibilityCondition { slack: f64 },
    #[error("infeasible: maximal net supply {max_supply} below minimal demand {min_demand}")]
    Infeasible { max_supply: f64, min_demand: f64 },
    #[error("could not bracket the balance price (reached {lambda_hi})")]
    BracketFailure { lambda_hi: f64 },
    #[error("no feasible grid point")]
    NoFeasibleGridPoint,
    #[error("grid search supports at most {max} generators, got {got}")]
    TooManyGenerators { max: usize, got: usize },
    #[error("grid step must be positive and finite, got {0}")]
    BadGridStep(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}
